//! InfoNCE over in-batch and hard negatives, with analytic gradients.
//!
//! For query `i` the candidate set is every distinct passage in the batch
//! (all positives and all hard negatives, deduplicated by passage id):
//!
//! `L_i = -log( exp(s(q_i, p_i)/τ) / Σ_c exp(s(q_i, c)/τ) )`, `L = mean_i L_i`.
//!
//! Gradients flow back through the L2 normalization, the projection and the
//! mean pooling into the embedding rows that were touched.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::scalar::{dot, l2_norm, Scalar};

use super::{EncoderModel, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate<'a> {
    pub id: &'a str,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveExample<'a> {
    pub query: &'a str,
    pub positive: Candidate<'a>,
    pub hard_negatives: Vec<Candidate<'a>>,
}

/// Sparse gradient over embedding rows plus a dense projection gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub embeddings: BTreeMap<u32, Vec<T>>,
    pub projection: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros(dim: usize) -> Self {
        Self {
            embeddings: BTreeMap::new(),
            projection: vec![T::zero(); dim * dim],
        }
    }

    /// Dense view of the embedding-table gradient entry `(row, col)`.
    pub fn embedding_entry(&self, row: u32, col: usize) -> T {
        self.embeddings.get(&row).map_or(T::zero(), |r| r[col])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T> {
    pub loss: T,
    pub gradients: Gradients<T>,
    /// Size of the candidate set each query is scored against.
    pub candidates: usize,
}

struct Forward<T> {
    tokens: Vec<u32>,
    pooled: Vec<T>,
    norm: T,
    z: Vec<T>,
}

fn forward<T: Scalar>(model: &EncoderModel<T>, tokens: Vec<u32>) -> Forward<T> {
    let pooled = model.pool(&tokens);
    let y = model.project(&pooled);
    let norm = l2_norm(&y);
    let z = y.iter().map(|v| *v / norm).collect();
    Forward { tokens, pooled, norm, z }
}

/// Accumulates the gradient of `dz · z(text)` into `grads`.
fn backward<T: Scalar>(model: &EncoderModel<T>, f: &Forward<T>, dz: &[T], grads: &mut Gradients<T>) {
    let d = model.dim();
    let zdz = dot(&f.z, dz);
    let dy: Vec<T> = f.z.iter().zip(dz).map(|(z, g)| (*g - *z * zdz) / f.norm).collect();
    let w = model.projection();
    let mut dm = vec![T::zero(); d];
    for i in 0..d {
        let row = &w[i * d..(i + 1) * d];
        let grow = &mut grads.projection[i * d..(i + 1) * d];
        for j in 0..d {
            grow[j] += dy[i] * f.pooled[j];
            dm[j] += row[j] * dy[i];
        }
    }
    let n = T::from_usize(f.tokens.len().max(1)).expect("token count fits");
    for &t in &f.tokens {
        let g = grads.embeddings.entry(t).or_insert_with(|| vec![T::zero(); d]);
        for (gj, dmj) in g.iter_mut().zip(&dm) {
            *gj += *dmj / n;
        }
    }
}

struct Prepared<'a> {
    candidates: Vec<&'a str>,
    positive_index: Vec<usize>,
}

fn prepare<'a>(batch: &[ContrastiveExample<'a>]) -> Prepared<'a> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut candidates = Vec::new();
    let mut add = |c: &Candidate<'a>| {
        *slot.entry(c.id).or_insert_with(|| {
            candidates.push(c.text);
            candidates.len() - 1
        })
    };
    let positive_index = batch.iter().map(|ex| add(&ex.positive)).collect();
    for ex in batch {
        for neg in &ex.hard_negatives {
            add(neg);
        }
    }
    Prepared {
        candidates,
        positive_index,
    }
}

fn check_inputs<T: Scalar>(batch: &[ContrastiveExample<'_>], temperature: T) -> Result<()> {
    if !(temperature > T::zero()) || !temperature.is_finite() {
        return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
    }
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    Ok(())
}

/// Per-query log-softmax terms; returns `(loss, softmax rows)`.
fn scores<T: Scalar>(
    queries: &[Forward<T>],
    passages: &[Forward<T>],
    positive_index: &[usize],
    temperature: T,
) -> (T, Vec<Vec<T>>) {
    let b = T::from_usize(queries.len()).expect("batch fits");
    let mut total = T::zero();
    let mut probs = Vec::with_capacity(queries.len());
    for (q, &pos) in queries.iter().zip(positive_index) {
        let logits: Vec<T> = passages.iter().map(|p| dot(&q.z, &p.z) / temperature).collect();
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = logits.iter().map(|l| (*l - max).exp()).collect();
        let sum: T = exps.iter().copied().sum();
        total += sum.ln() + max - logits[pos];
        probs.push(exps.into_iter().map(|e| e / sum).collect());
    }
    (total / b, probs)
}

/// Loss only; used by finite-difference checks.
pub fn infonce_value<T: Scalar>(
    model: &EncoderModel<T>,
    batch: &[ContrastiveExample<'_>],
    temperature: T,
) -> Result<T> {
    check_inputs(batch, temperature)?;
    let prep = prepare(batch);
    let queries: Vec<_> = batch.iter().map(|ex| forward(model, model.tokens(ex.query, Role::Query))).collect();
    let passages: Vec<_> = prep
        .candidates
        .iter()
        .map(|t| forward(model, model.tokens(t, Role::Passage)))
        .collect();
    Ok(scores(&queries, &passages, &prep.positive_index, temperature).0)
}

/// Loss and analytic gradients with respect to the embedding table and projection.
pub fn infonce_loss<T: Scalar>(
    model: &EncoderModel<T>,
    batch: &[ContrastiveExample<'_>],
    temperature: T,
) -> Result<LossOutput<T>> {
    check_inputs(batch, temperature)?;
    let prep = prepare(batch);
    let queries: Vec<_> = batch.iter().map(|ex| forward(model, model.tokens(ex.query, Role::Query))).collect();
    let passages: Vec<_> = prep
        .candidates
        .iter()
        .map(|t| forward(model, model.tokens(t, Role::Passage)))
        .collect();
    let (loss, probs) = scores(&queries, &passages, &prep.positive_index, temperature);

    let d = model.dim();
    let scale = T::one() / (T::from_usize(batch.len()).expect("batch fits") * temperature);
    let mut dq = vec![vec![T::zero(); d]; queries.len()];
    let mut dp = vec![vec![T::zero(); d]; passages.len()];
    for (i, row) in probs.iter().enumerate() {
        for (c, prob) in row.iter().enumerate() {
            let indicator = if c == prep.positive_index[i] { T::one() } else { T::zero() };
            let ds = (*prob - indicator) * scale;
            if ds == T::zero() {
                continue;
            }
            for k in 0..d {
                dq[i][k] += ds * passages[c].z[k];
                dp[c][k] += ds * queries[i].z[k];
            }
        }
    }

    let mut grads = Gradients::zeros(d);
    for (f, g) in queries.iter().zip(&dq) {
        backward(model, f, g, &mut grads);
    }
    for (f, g) in passages.iter().zip(&dp) {
        backward(model, f, g, &mut grads);
    }
    Ok(LossOutput {
        loss,
        gradients: grads,
        candidates: passages.len(),
    })
}
