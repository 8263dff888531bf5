//! Retrieval backends: exact and graph-based approximate k-NN over
//! embeddings, and an Okapi BM25 inverted index. Both accept the same
//! metadata filter and return hits ordered by score, ties by passage id.

mod dump;
mod hnsw;
mod lexical;
mod vector;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::encoder::EncoderModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::store::{PassageMeta, PassageStore};

pub use dump::{embed_store, read_embedding_dump, write_embedding_dump, DumpHeader, DumpRecord};
pub use hnsw::HnswParams;
pub use lexical::{Analyzer, Bm25Params, LexicalIndex};
pub use vector::{SearchMode, VectorIndex};

/// Metadata restriction applied before ranking. `None` and empty sets both
/// mean "no constraint" on that field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchFilter {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date_from: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date_to: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tickers: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<BTreeSet<String>>,
}

impl SearchFilter {
    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(b)) = (self.date_from, self.date_to) {
            if a > b {
                return Err(Error::InvalidField {
                    field: "date_from",
                    reason: format!("{a} is after date_to {b}"),
                });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.date_from.is_none()
            && self.date_to.is_none()
            && self.tickers.as_ref().is_none_or(BTreeSet::is_empty)
            && self.tags.as_ref().is_none_or(BTreeSet::is_empty)
    }

    pub fn with_tickers<I: IntoIterator<Item = S>, S: Into<String>>(mut self, tickers: I) -> Self {
        self.tickers = Some(tickers.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_dates(mut self, from: NaiveDate, to: NaiveDate) -> Self {
        self.date_from = Some(from);
        self.date_to = Some(to);
        self
    }

    pub fn with_tags<I: IntoIterator<Item = S>, S: Into<String>>(mut self, tags: I) -> Self {
        self.tags = Some(tags.into_iter().map(Into::into).collect());
        self
    }

    /// Dates are inclusive; tickers compare case-insensitively; a passage
    /// passes the tag constraint if it carries any of the requested tags.
    pub fn matches(&self, meta: &PassageMeta) -> bool {
        if self.date_from.is_some_and(|d| meta.date < d) || self.date_to.is_some_and(|d| meta.date > d) {
            return false;
        }
        if let Some(tickers) = self.tickers.as_ref().filter(|t| !t.is_empty()) {
            match &meta.ticker {
                Some(t) if tickers.iter().any(|x| x.eq_ignore_ascii_case(t)) => {}
                _ => return false,
            }
        }
        if let Some(tags) = self.tags.as_ref().filter(|t| !t.is_empty()) {
            if tags.is_disjoint(&meta.tags) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub passage_id: String,
    pub doc_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Best `k` of `(score, index)` pairs by descending score, ties by ascending
/// id; `ids[index]` names each entry.
pub(crate) fn select_top<S: PartialOrd + Copy>(mut scored: Vec<(S, usize)>, k: usize, ids: &[String]) -> Vec<(S, usize)> {
    let cmp = |a: &(S, usize), b: &(S, usize)| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a.1].cmp(&ids[b.1]))
    };
    if scored.len() > k && k > 0 {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    scored.truncate(k);
    scored
}

pub(crate) fn to_hits(top: Vec<(f64, usize)>, ids: &[String], metas: &[PassageMeta]) -> Vec<RankedHit> {
    top.into_iter()
        .enumerate()
        .map(|(r, (score, i))| RankedHit {
            passage_id: ids[i].clone(),
            doc_id: metas[i].doc_id.clone(),
            score,
            rank: r + 1,
        })
        .collect()
}

/// Embeds every passage of `store` and indexes it; `approximate` adds an
/// HNSW graph.
pub fn build_vector_index<T: Scalar>(
    model: &EncoderModel<T>,
    store: &PassageStore,
    approximate: Option<HnswParams>,
) -> Result<VectorIndex<T>> {
    let entries = embed_store(model, store)
        .into_iter()
        .map(|(id, e)| {
            let meta = store.meta(&id).ok_or_else(|| Error::UnknownPassage(id.clone()))?;
            Ok((id, e, meta))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorIndex::build(model.dim(), entries, model.version.clone(), approximate)
}

/// Indexes the embedding text (context line and body) of every passage.
pub fn build_lexical_index(store: &PassageStore, analyzer: Analyzer) -> Result<LexicalIndex> {
    let entries = store
        .passages()
        .iter()
        .map(|p| {
            let meta = store.meta(&p.id).ok_or_else(|| Error::UnknownPassage(p.id.clone()))?;
            Ok((p.id.clone(), p.embedding_text(), meta))
        })
        .collect::<Result<Vec<_>>>()?;
    LexicalIndex::build(entries, analyzer)
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    Ok(())
}
