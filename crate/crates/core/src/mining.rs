//! Hard-negative mining with a preliminary model.
//!
//! Every passage in the store is ranked against each query. A pair whose
//! positive is not retrieved within `top_k` is dropped; otherwise the passages
//! `rank_offset` places below the positive become its hard negatives.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderModel, Role};
use crate::error::{Error, Result};
use crate::querygen::QueryPair;
use crate::scalar::{dot, Scalar};
use crate::store::PassageStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub top_k: usize,
    pub rank_offset: usize,
    pub negatives_per_query: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            top_k: 1000,
            rank_offset: 200,
            negatives_per_query: 3,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank_offset == 0 {
            return Err(Error::Config("rank_offset must be at least 1".into()));
        }
        if self.top_k <= self.rank_offset {
            return Err(Error::Config(format!(
                "top_k ({}) must exceed rank_offset ({})",
                self.top_k, self.rank_offset
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MiningOutput {
    pub pairs: Vec<QueryPair>,
    pub dropped: Vec<String>,
}

/// Orders passage indices by descending score, ties by ascending passage id.
pub fn rank_passages<T: Scalar>(scores: &[T], ids: &[&str]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a].cmp(ids[b]))
    });
    order
}

/// Ranks (0-based) of the hard negatives for a positive at rank `r` within a
/// retrieved list of length `depth`.
///
/// Nominal ranks are `r + offset ..`; any that fall past `depth` are replaced
/// by the deepest unused ranks that still lie below the positive, so a
/// negative never outranks its positive. Fewer than `count` ranks come back
/// only when fewer than `count` ranks exist below the positive.
pub fn negative_ranks(r: usize, depth: usize, offset: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (r + offset..r + offset + count).filter(|&x| x < depth).collect();
    let mut cursor = depth;
    while out.len() < count && cursor > r + 1 {
        cursor -= 1;
        if !out.contains(&cursor) {
            out.push(cursor);
        }
    }
    out
}

/// Mines hard negatives for `pairs`. Output order follows input order; any
/// existing `hard_negative_ids` are replaced.
pub fn mine<T: Scalar>(
    model: &EncoderModel<T>,
    pairs: &[QueryPair],
    store: &PassageStore,
    cfg: &MiningConfig,
) -> Result<MiningOutput> {
    cfg.validate()?;
    for p in pairs {
        if store.get(&p.positive_passage_id).is_none() {
            return Err(Error::Data(format!(
                "positive passage {} of query {} is not in the passage store",
                p.positive_passage_id, p.query_id
            )));
        }
    }
    let passages = store.passages();
    let ids: Vec<&str> = passages.iter().map(|p| p.id.as_str()).collect();
    let texts: Vec<String> = passages.iter().map(|p| p.embedding_text()).collect();
    let embedded = model.encode_batch(&texts, Role::Passage);
    let depth = cfg.top_k.min(passages.len());

    let mined: Vec<Option<Vec<String>>> = pairs
        .par_iter()
        .map(|pair| {
            let q = model.encode(&pair.query, Role::Query);
            let scores: Vec<T> = embedded.iter().map(|p| dot(q.as_slice(), p.as_slice())).collect();
            let order = rank_passages(&scores, &ids);
            let r = order[..depth].iter().position(|&i| ids[i] == pair.positive_passage_id)?;
            Some(
                negative_ranks(r, depth, cfg.rank_offset, cfg.negatives_per_query)
                    .into_iter()
                    .map(|rank| ids[order[rank]].to_owned())
                    .collect(),
            )
        })
        .collect();

    let mut out = MiningOutput::default();
    for (pair, negs) in pairs.iter().zip(mined) {
        match negs {
            Some(hard_negative_ids) => out.pairs.push(QueryPair {
                hard_negative_ids,
                ..pair.clone()
            }),
            None => out.dropped.push(pair.query_id.clone()),
        }
    }
    log::info!(
        "mined {} pairs, dropped {} (top_k {}, offset {})",
        out.pairs.len(),
        out.dropped.len(),
        cfg.top_k,
        cfg.rank_offset
    );
    Ok(out)
}
