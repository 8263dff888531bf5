//! Recall@K evaluation, the ablation harness, the length-stratified
//! lexical-versus-vector comparison and retrieval-augmented generation inputs.

mod ablation;
mod lengths;
mod rag;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::{EncoderModel, Role};
use crate::error::{Error, Result};
use crate::index::{build_vector_index, RankedHit, SearchFilter, SearchMode, VectorIndex};
use crate::querygen::QueryPair;
use crate::scalar::Scalar;
use crate::store::PassageStore;

pub use ablation::{run_ablations, subsample_by_document, AblationConfig, AblationSettings};
pub use lengths::{
    date_window_for, length_stratified_compare, reports_to_csv, LengthBucketReport, LengthComparison, LengthConfig,
    QueryRanks, RetrievalMode,
};
pub use rag::{concise_answer_prompt, rag_context, rag_prepare, strip_instructions, REWRITE_PROMPT};

pub const DEFAULT_KS: [usize; 3] = [1, 10, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Passage,
    Document,
}

/// Gold passage of a query and the document it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub passage_id: String,
    pub doc_id: String,
}

/// Ground truth for `pairs`, resolving each positive's document in `store`.
pub fn truth_for(pairs: &[QueryPair], store: &PassageStore) -> Result<BTreeMap<String, Truth>> {
    pairs
        .iter()
        .map(|p| {
            let passage = store.require(&p.positive_passage_id)?;
            Ok((
                p.query_id.clone(),
                Truth {
                    passage_id: passage.id.clone(),
                    doc_id: passage.doc_id.clone(),
                },
            ))
        })
        .collect()
}

/// Passage level: the gold passage is among the first `k` hits. Document
/// level: any of the first `k` hits comes from the gold passage's document.
pub fn recall_at_k(
    run: &HashMap<String, Vec<RankedHit>>,
    truth: &BTreeMap<String, Truth>,
    k: usize,
    level: Level,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if truth.is_empty() {
        return Err(Error::Data("no queries to evaluate".into()));
    }
    let mut found = 0usize;
    for (qid, gold) in truth {
        let hits = run
            .get(qid)
            .ok_or_else(|| Error::Data(format!("query {qid} missing from run")))?;
        let top = &hits[..k.min(hits.len())];
        let hit = match level {
            Level::Passage => top.iter().any(|h| h.passage_id == gold.passage_id),
            Level::Document => top.iter().any(|h| h.doc_id == gold.doc_id),
        };
        found += usize::from(hit);
    }
    Ok(found as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub model_version: String,
    pub queries: usize,
    pub corpus_size: usize,
    pub passage_recall: BTreeMap<usize, f64>,
    pub document_recall: BTreeMap<usize, f64>,
    pub config_digest: String,
}

impl EvalReport {
    pub fn recall(&self, k: usize, level: Level) -> Option<f64> {
        match level {
            Level::Passage => self.passage_recall.get(&k).copied(),
            Level::Document => self.document_recall.get(&k).copied(),
        }
    }
}

pub(crate) fn digest_of<S: Serialize>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    hex::encode(Sha256::digest(bytes))[..16].to_owned()
}

/// Fails when any test positive comes from a document that also supplies a
/// training positive.
pub fn check_contamination(train: &[QueryPair], test: &[QueryPair], store: &PassageStore) -> Result<()> {
    let docs = |pairs: &[QueryPair]| -> BTreeSet<String> {
        pairs
            .iter()
            .filter_map(|p| store.get(&p.positive_passage_id).map(|x| x.doc_id.clone()))
            .collect()
    };
    let overlap = docs(train).intersection(&docs(test)).count();
    if overlap > 0 {
        return Err(Error::Contamination(overlap));
    }
    Ok(())
}

/// Exact-search hits for every query, keyed by query id.
pub fn retrieve<T: Scalar>(
    model: &EncoderModel<T>,
    index: &VectorIndex<T>,
    pairs: &[QueryPair],
    k: usize,
) -> Result<HashMap<String, Vec<RankedHit>>> {
    let queries: Vec<&str> = pairs.iter().map(|p| p.query.as_str()).collect();
    let embedded = model.encode_batch(&queries, Role::Query);
    pairs
        .par_iter()
        .zip(embedded.par_iter())
        .map(|(p, q)| Ok((p.query_id.clone(), index.knn(q, k, &SearchFilter::default(), SearchMode::Exact)?)))
        .collect()
}

/// Builds an exact index over `store` with `model`.
pub fn build_exact_index<T: Scalar>(model: &EncoderModel<T>, store: &PassageStore) -> Result<VectorIndex<T>> {
    build_vector_index(model, store, None)
}

/// Embeds the corpus and `test` queries with `model`, runs exact search and
/// reports passage- and document-level recall at each K.
pub fn run_retrieval_eval<T: Scalar>(
    model: &EncoderModel<T>,
    test: &[QueryPair],
    train: &[QueryPair],
    store: &PassageStore,
    ks: &[usize],
    label: &str,
) -> Result<EvalReport> {
    check_contamination(train, test, store)?;
    let index = build_exact_index(model, store)?;
    evaluate_with_index(model, &index, test, store, ks, label)
}

/// As [`run_retrieval_eval`] over a prebuilt index, without the guard.
pub fn evaluate_with_index<T: Scalar>(
    model: &EncoderModel<T>,
    index: &VectorIndex<T>,
    test: &[QueryPair],
    store: &PassageStore,
    ks: &[usize],
    label: &str,
) -> Result<EvalReport> {
    let max_k = ks.iter().copied().max().ok_or_else(|| Error::Config("no K values".into()))?;
    let truth = truth_for(test, store)?;
    let run = retrieve(model, index, test, max_k)?;
    let mut passage_recall = BTreeMap::new();
    let mut document_recall = BTreeMap::new();
    for &k in ks {
        passage_recall.insert(k, recall_at_k(&run, &truth, k, Level::Passage)?);
        document_recall.insert(k, recall_at_k(&run, &truth, k, Level::Document)?);
    }
    let config_digest = digest_of(&(label, &model.version, ks, test.len(), store.len(), index.version()));
    Ok(EvalReport {
        label: label.to_owned(),
        model_version: model.version.clone(),
        queries: truth.len(),
        corpus_size: store.len(),
        passage_recall,
        document_recall,
        config_digest,
    })
}
