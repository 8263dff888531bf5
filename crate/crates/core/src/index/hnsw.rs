//! Hierarchical navigable small-world graph over unit vectors.
//!
//! Construction is sequential in id order with a seeded level generator, so
//! a given input and seed always yields the same graph. Search supports a
//! node predicate: filtered-out nodes are still traversed but never returned.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HnswParams {
    /// Links per node above level 0 (twice this at level 0).
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            ef_search: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scored {
    pub score: f64,
    pub id: u32,
}

impl Eq for Scored {}

impl Ord for Scored {
    /// Greater means better: higher score, then lower id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Hnsw {
    pub params: HnswParams,
    /// `links[node][level]`.
    links: Vec<Vec<Vec<u32>>>,
    entry: Option<u32>,
    max_level: usize,
}

struct Space<'a, T> {
    vectors: &'a [T],
    dim: usize,
}

impl<T: Scalar> Space<'_, T> {
    fn vec(&self, i: u32) -> &[T] {
        let s = i as usize * self.dim;
        &self.vectors[s..s + self.dim]
    }

    fn sim(&self, q: &[T], i: u32) -> f64 {
        dot(q, self.vec(i)).to_f64_lossy()
    }
}

impl Hnsw {
    pub fn build<T: Scalar>(vectors: &[T], dim: usize, params: HnswParams) -> Self {
        let n = vectors.len().checked_div(dim).unwrap_or(0);
        let mut g = Self {
            params,
            links: Vec::with_capacity(n),
            entry: None,
            max_level: 0,
        };
        let space = Space { vectors, dim };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let ml = 1.0 / (params.m.max(2) as f64).ln();
        for id in 0..n as u32 {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let level = ((-u.ln() * ml).floor() as usize).min(16);
            g.insert(&space, id, level);
        }
        g
    }

    fn cap(&self, level: usize) -> usize {
        if level == 0 {
            self.params.m * 2
        } else {
            self.params.m
        }
    }

    fn insert<T: Scalar>(&mut self, space: &Space<'_, T>, id: u32, level: usize) {
        self.links.push(vec![Vec::new(); level + 1]);
        let Some(entry) = self.entry else {
            self.entry = Some(id);
            self.max_level = level;
            return;
        };
        let q = space.vec(id);
        let mut eps = vec![Scored { score: space.sim(q, entry), id: entry }];
        for l in (level + 1..=self.max_level).rev() {
            eps = self.search_layer(space, q, &eps, 1, l, None);
        }
        for l in (0..=level.min(self.max_level)).rev() {
            let cands = self.search_layer(space, q, &eps, self.params.ef_construction, l, None);
            let chosen = select_neighbors(space, &cands, self.cap(l));
            self.links[id as usize][l] = chosen.iter().map(|s| s.id).collect();
            let cap = self.cap(l);
            for nb in &chosen {
                let list = &mut self.links[nb.id as usize][l];
                list.push(id);
                if list.len() > cap {
                    let base = space.vec(nb.id);
                    let mut scored: Vec<Scored> = list
                        .iter()
                        .map(|&x| Scored { score: space.sim(base, x), id: x })
                        .collect();
                    scored.sort_by(|a, b| b.cmp(a));
                    let kept = select_neighbors(space, &scored, cap);
                    self.links[nb.id as usize][l] = kept.iter().map(|s| s.id).collect();
                }
            }
            eps = cands;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = Some(id);
        }
    }

    /// Best-first search of one layer; returns up to `ef` allowed nodes, best first.
    fn search_layer<T: Scalar>(
        &self,
        space: &Space<'_, T>,
        q: &[T],
        eps: &[Scored],
        ef: usize,
        level: usize,
        allowed: Option<&dyn Fn(u32) -> bool>,
    ) -> Vec<Scored> {
        let ok = |id: u32| allowed.is_none_or(|f| f(id));
        let mut visited = vec![false; self.links.len()];
        let mut candidates: BinaryHeap<Scored> = BinaryHeap::new();
        let mut results: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        for &ep in eps {
            if std::mem::replace(&mut visited[ep.id as usize], true) {
                continue;
            }
            candidates.push(ep);
            if ok(ep.id) {
                results.push(Reverse(ep));
                if results.len() > ef {
                    results.pop();
                }
            }
        }
        while let Some(c) = candidates.pop() {
            if results.len() >= ef && results.peek().is_some_and(|w| c < w.0) {
                break;
            }
            let Some(neighbors) = self.links[c.id as usize].get(level) else {
                continue;
            };
            for &nb in neighbors {
                if std::mem::replace(&mut visited[nb as usize], true) {
                    continue;
                }
                let s = Scored { score: space.sim(q, nb), id: nb };
                if results.len() < ef || results.peek().is_some_and(|w| s > w.0) {
                    candidates.push(s);
                    if ok(nb) {
                        results.push(Reverse(s));
                        if results.len() > ef {
                            results.pop();
                        }
                    }
                }
            }
        }
        let mut out: Vec<Scored> = results.into_iter().map(|r| r.0).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    pub fn search<T: Scalar>(
        &self,
        vectors: &[T],
        dim: usize,
        q: &[T],
        ef: usize,
        allowed: Option<&dyn Fn(u32) -> bool>,
    ) -> Vec<Scored> {
        let Some(entry) = self.entry else {
            return Vec::new();
        };
        let space = Space { vectors, dim };
        let mut eps = vec![Scored { score: space.sim(q, entry), id: entry }];
        for l in (1..=self.max_level).rev() {
            eps = self.search_layer(&space, q, &eps, 1, l, None);
        }
        self.search_layer(&space, q, &eps, ef, 0, allowed)
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.links.len()
    }
}

/// Diversity heuristic: keep a candidate only if it is closer to the base
/// than to every neighbor kept so far; top up with the best rejects.
fn select_neighbors<T: Scalar>(space: &Space<'_, T>, cands: &[Scored], m: usize) -> Vec<Scored> {
    let mut kept: Vec<Scored> = Vec::with_capacity(m);
    let mut rejected = Vec::new();
    for &c in cands {
        if kept.len() >= m {
            break;
        }
        let cv = space.vec(c.id);
        if kept.iter().all(|r| space.sim(cv, r.id) < c.score) {
            kept.push(c);
        } else {
            rejected.push(c);
        }
    }
    for r in rejected {
        if kept.len() >= m {
            break;
        }
        kept.push(r);
    }
    kept
}
