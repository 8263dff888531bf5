use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderModel, Role};
use crate::error::{Error, Result};
use crate::index::{Bm25Params, LexicalIndex, SearchFilter, SearchMode, VectorIndex};
use crate::querygen::QueryPair;
use crate::scalar::Scalar;
use crate::store::PassageStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    Vector,
    Lexical,
}

impl RetrievalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vector => "vector",
            Self::Lexical => "lexical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LengthConfig {
    /// Query word counts to report on.
    pub buckets: Vec<usize>,
    pub per_bucket_n: usize,
    pub seed: u64,
    pub ks: Vec<usize>,
    /// Also run every sampled query with its positive's ticker and a
    /// one-year date window applied.
    pub ticker_filter: bool,
    /// Fixed date window to use instead of the positive's calendar year.
    pub date_window: Option<(NaiveDate, NaiveDate)>,
    pub bm25: Bm25Params,
}

impl Default for LengthConfig {
    fn default() -> Self {
        Self {
            buckets: (2..=6).collect(),
            per_bucket_n: 100,
            seed: 0,
            ks: super::DEFAULT_KS.to_vec(),
            ticker_filter: true,
            date_window: None,
            bm25: Bm25Params::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBucketReport {
    pub bucket: usize,
    pub mode: RetrievalMode,
    pub filtered: bool,
    pub recall: BTreeMap<usize, f64>,
    pub sample_size: usize,
}

/// Where one query's positive landed (1-based, `None` if beyond the deepest K).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRanks {
    pub query_id: String,
    pub words: usize,
    pub mode: RetrievalMode,
    pub filtered: bool,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthComparison {
    pub reports: Vec<LengthBucketReport>,
    pub ranks: Vec<QueryRanks>,
    /// Buckets with no eligible query.
    pub skipped_buckets: Vec<usize>,
}

impl LengthComparison {
    pub fn report(&self, bucket: usize, mode: RetrievalMode, filtered: bool) -> Option<&LengthBucketReport> {
        self.reports
            .iter()
            .find(|r| r.bucket == bucket && r.mode == mode && r.filtered == filtered)
    }

    /// Recall@k pooled over every bucket for one mode and filter setting.
    pub fn overall_recall(&self, k: usize, mode: RetrievalMode, filtered: bool) -> Option<f64> {
        let sel: Vec<&QueryRanks> = self.ranks.iter().filter(|r| r.mode == mode && r.filtered == filtered).collect();
        if sel.is_empty() {
            return None;
        }
        let hits = sel.iter().filter(|r| r.rank.is_some_and(|x| x <= k)).count();
        Some(hits as f64 / sel.len() as f64)
    }
}

/// The calendar year containing `date`.
pub fn date_window_for(date: NaiveDate) -> (NaiveDate, NaiveDate) {
    let y = date.year();
    (
        NaiveDate::from_ymd_opt(y, 1, 1).expect("valid year start"),
        NaiveDate::from_ymd_opt(y, 12, 31).expect("valid year end"),
    )
}

fn word_count(q: &str) -> usize {
    q.split_whitespace().count()
}

/// Compares vector and BM25 retrieval on test queries bucketed by exact
/// word count. Every sampled query runs unfiltered in both modes and, with
/// `ticker_filter`, again restricted to its positive's ticker and date window.
pub fn length_stratified_compare<T: Scalar>(
    model: &EncoderModel<T>,
    vector: &VectorIndex<T>,
    lexical: &LexicalIndex,
    test: &[QueryPair],
    store: &PassageStore,
    cfg: &LengthConfig,
) -> Result<LengthComparison> {
    let depth = cfg.ks.iter().copied().max().ok_or_else(|| Error::Config("no K values".into()))?;
    if cfg.ks.contains(&0) {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if cfg.per_bucket_n == 0 {
        return Err(Error::Config("per_bucket_n must be at least 1".into()));
    }
    cfg.bm25.validate()?;

    let mut sampled: Vec<(usize, &QueryPair)> = Vec::new();
    let mut skipped_buckets = Vec::new();
    for &bucket in &cfg.buckets {
        let mut eligible: Vec<&QueryPair> = test.iter().filter(|p| word_count(&p.query) == bucket).collect();
        if eligible.is_empty() {
            log::warn!("no test queries with {bucket} words; bucket omitted");
            skipped_buckets.push(bucket);
            continue;
        }
        eligible.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (bucket as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        eligible.shuffle(&mut rng);
        eligible.truncate(cfg.per_bucket_n);
        sampled.extend(eligible.into_iter().map(|p| (bucket, p)));
    }

    let filters: Vec<(SearchFilter, SearchFilter)> = sampled
        .iter()
        .map(|(_, p)| {
            let meta = store
                .meta(&p.positive_passage_id)
                .ok_or_else(|| Error::UnknownPassage(p.positive_passage_id.clone()))?;
            let (from, to) = cfg.date_window.unwrap_or_else(|| date_window_for(meta.date));
            if meta.date < from || meta.date > to {
                return Err(Error::Config(format!(
                    "date window {from}..{to} excludes the positive of query {} ({})",
                    p.query_id, meta.date
                )));
            }
            let mut f = SearchFilter::default().with_dates(from, to);
            if let Some(t) = meta.ticker {
                f = f.with_tickers([t]);
            }
            Ok((SearchFilter::default(), f))
        })
        .collect::<Result<_>>()?;

    let settings: &[bool] = if cfg.ticker_filter { &[false, true] } else { &[false] };
    let runs: Vec<Vec<QueryRanks>> = sampled
        .par_iter()
        .zip(filters.par_iter())
        .map(|((words, pair), (plain, narrowed))| {
            let q = model.encode(&pair.query, Role::Query);
            let mut out = Vec::with_capacity(4);
            for &filtered in settings {
                let filter = if filtered { narrowed } else { plain };
                for mode in [RetrievalMode::Vector, RetrievalMode::Lexical] {
                    let hits = match mode {
                        RetrievalMode::Vector => vector.knn(&q, depth, filter, SearchMode::Exact)?,
                        RetrievalMode::Lexical => lexical.search(&pair.query, depth, filter, cfg.bm25)?,
                    };
                    let rank = hits.iter().find(|h| h.passage_id == pair.positive_passage_id).map(|h| h.rank);
                    out.push(QueryRanks {
                        query_id: pair.query_id.clone(),
                        words: *words,
                        mode,
                        filtered,
                        rank,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let ranks: Vec<QueryRanks> = runs.into_iter().flatten().collect();

    let mut reports = Vec::new();
    for &bucket in cfg.buckets.iter().filter(|b| !skipped_buckets.contains(b)) {
        for &filtered in settings {
            for mode in [RetrievalMode::Vector, RetrievalMode::Lexical] {
                let sel: Vec<&QueryRanks> = ranks
                    .iter()
                    .filter(|r| r.words == bucket && r.mode == mode && r.filtered == filtered)
                    .collect();
                let recall = cfg
                    .ks
                    .iter()
                    .map(|&k| {
                        let hits = sel.iter().filter(|r| r.rank.is_some_and(|x| x <= k)).count();
                        (k, hits as f64 / sel.len() as f64)
                    })
                    .collect();
                reports.push(LengthBucketReport {
                    bucket,
                    mode,
                    filtered,
                    recall,
                    sample_size: sel.len(),
                });
            }
        }
    }
    Ok(LengthComparison {
        reports,
        ranks,
        skipped_buckets,
    })
}

/// One row per bucket, mode, filter setting and K: ready for plotting.
pub fn reports_to_csv(reports: &[LengthBucketReport]) -> String {
    let mut out = String::from("bucket,mode,filtered,k,recall,sample_size\n");
    for r in reports {
        for (k, v) in &r.recall {
            let _ = writeln!(out, "{},{},{},{k},{v:.6},{}", r.bucket, r.mode.as_str(), r.filtered, r.sample_size);
        }
    }
    out
}
