//! Synthetic query generation, filtering, deduplication and split assignment.

pub mod client;
pub mod prompt;
pub mod stub;

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocType, Passage};
use crate::error::{Error, Result};
use crate::store::PassageStore;
use crate::text::fnv1a;

pub use client::{FixedClient, LlmClient, StubClient};
#[cfg(feature = "http")]
pub use client::HttpChatClient;
pub use prompt::{build_prompt, sample_examples, DocTypeLabels, PROMPT_TEMPLATE};
pub use stub::{salient_terms, stub_generate, StubQuery};

/// Queries longer than this violate the generation instructions. Violations
/// are logged but kept.
pub const MAX_QUERY_WORDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub passage_text: String,
    pub query: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPair {
    pub query_id: String,
    pub query: String,
    pub positive_passage_id: String,
    #[serde(default)]
    pub split: Split,
    #[serde(default)]
    pub hard_negative_ids: Vec<String>,
}

impl QueryPair {
    pub fn new(query_id: impl Into<String>, query: impl Into<String>, positive: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            query: query.into(),
            positive_passage_id: positive.into(),
            split: Split::Train,
            hard_negative_ids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationStatus {
    Ok,
    Skipped,
    FailurePhrase,
    Empty,
    /// The client could not be reached after all retries.
    TransientError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub passage_id: String,
    pub status: GenerationStatus,
    pub raw_response: String,
    /// The accepted query; present iff `status == Ok`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    /// Response prefixes that indicate the model refused.
    pub failure_phrases: Vec<String>,
    /// Retries after a transport failure, per attempt.
    pub max_retries: usize,
    /// Concurrent requests in flight.
    pub max_in_flight: usize,
    pub labels: DocTypeLabels,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            failure_phrases: ["no query", "no question", "understood"].map(String::from).to_vec(),
            max_retries: 2,
            max_in_flight: 8,
            labels: DocTypeLabels::default(),
        }
    }
}

/// Classifies a raw model response.
pub fn classify_response(raw: &str, failure_phrases: &[String]) -> GenerationStatus {
    let norm = raw.trim().to_lowercase();
    if norm.is_empty() {
        GenerationStatus::Empty
    } else if norm.starts_with("skip") {
        GenerationStatus::Skipped
    } else if failure_phrases.iter().any(|p| norm.starts_with(&p.to_lowercase())) {
        GenerationStatus::FailurePhrase
    } else {
        GenerationStatus::Ok
    }
}

/// First non-empty line with surrounding quotes removed.
pub fn clean_query(raw: &str) -> String {
    let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    const QUOTES: &[char] = &['"', '\'', '“', '”', '‘', '’', '`'];
    line.trim_matches(QUOTES).trim().to_owned()
}

/// Lowercase and collapse whitespace; the key used by [`dedup`].
pub fn normalize_query(q: &str) -> String {
    q.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn passage_rng(seed: u64, passage_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(seed, passage_id.as_bytes()))
}

/// One generation attempt for a passage (with transport retries).
pub fn generate_query(
    client: &dyn LlmClient,
    passage: &Passage,
    doc_type: DocType,
    pool: &[FewShotExample],
    rng_seed: u64,
    cfg: &GenerationConfig,
) -> Result<GenerationOutcome> {
    let mut rng = passage_rng(rng_seed, &passage.id);
    let examples = sample_examples(pool, &mut rng)?;
    let prompt = build_prompt(&passage.embedding_text(), examples, cfg.labels.label(doc_type));

    let mut last_err = String::new();
    for attempt in 0..=cfg.max_retries {
        match client.complete(&prompt) {
            Ok(raw) => return Ok(outcome_from_response(&passage.id, raw, cfg)),
            Err(e) => {
                log::warn!("generation for {} failed (attempt {}): {e}", passage.id, attempt + 1);
                last_err = e.to_string();
            }
        }
    }
    Ok(GenerationOutcome {
        passage_id: passage.id.clone(),
        status: GenerationStatus::TransientError,
        raw_response: last_err,
        query: None,
    })
}

fn outcome_from_response(passage_id: &str, raw: String, cfg: &GenerationConfig) -> GenerationOutcome {
    let mut status = classify_response(&raw, &cfg.failure_phrases);
    let mut query = None;
    if status == GenerationStatus::Ok {
        let q = clean_query(&raw);
        if q.is_empty() {
            status = GenerationStatus::Empty;
        } else {
            let n = q.split_whitespace().count();
            if n > MAX_QUERY_WORDS {
                log::warn!("query for {passage_id} has {n} words (limit {MAX_QUERY_WORDS}): {q:?}");
            }
            query = Some(q);
        }
    }
    GenerationOutcome {
        passage_id: passage_id.to_owned(),
        status,
        raw_response: raw,
        query,
    }
}

/// Generates one query per passage with bounded parallelism. Passages whose
/// request failed at the transport level are re-queued once.
pub fn run_generation(
    client: &dyn LlmClient,
    store: &PassageStore,
    pool: &[FewShotExample],
    rng_seed: u64,
    cfg: &GenerationConfig,
) -> Result<Vec<GenerationOutcome>> {
    if pool.len() < 2 {
        return Err(Error::Config(format!(
            "few-shot pool needs at least 2 examples, found {}",
            pool.len()
        )));
    }
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_in_flight.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let attempt = |passages: Vec<&Passage>| -> Result<Vec<GenerationOutcome>> {
        threads.install(|| {
            passages
                .par_iter()
                .map(|p| {
                    let doc_type = store
                        .document(&p.doc_id)
                        .map(|d| d.doc_type)
                        .unwrap_or(DocType::Other);
                    generate_query(client, p, doc_type, pool, rng_seed, cfg)
                })
                .collect()
        })
    };

    let mut outcomes = attempt(store.passages().iter().collect())?;
    let requeue: Vec<&Passage> = outcomes
        .iter()
        .filter(|o| o.status == GenerationStatus::TransientError)
        .filter_map(|o| store.get(&o.passage_id))
        .collect();
    if !requeue.is_empty() {
        log::info!("re-queueing {} passages after transport failures", requeue.len());
        let retried: HashMap<String, GenerationOutcome> = attempt(requeue)?
            .into_iter()
            .map(|o| (o.passage_id.clone(), o))
            .collect();
        for o in &mut outcomes {
            if let Some(r) = retried.get(&o.passage_id) {
                *o = r.clone();
            }
        }
    }
    Ok(outcomes)
}

/// Removes every pair whose normalized query occurs more than once.
pub fn dedup(pairs: Vec<QueryPair>) -> Vec<QueryPair> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for p in &pairs {
        *counts.entry(normalize_query(&p.query)).or_default() += 1;
    }
    pairs
        .into_iter()
        .filter(|p| counts[&normalize_query(&p.query)] == 1)
        .collect()
}

/// Fractions of documents assigned to train/val/test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    /// Roughly 94.2% / 2.9% / 2.9%: a large training set with small held-out splits.
    fn default() -> Self {
        let total = 14.3e6 + 444e3 + 447e3;
        Self {
            train: 14.3e6 / total,
            val: 444e3 / total,
            test: 447e3 / total,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios must be non-negative and sum to 1: {parts:?}")));
        }
        Ok(())
    }
}

/// Split of a document, from a seeded hash of its id.
pub fn split_for_document(doc_id: &str, ratios: SplitRatios, seed: u64) -> Split {
    let h = fnv1a(seed, doc_id.as_bytes());
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    if u < ratios.train {
        Split::Train
    } else if u < ratios.train + ratios.val {
        Split::Val
    } else {
        Split::Test
    }
}

/// Labels every pair with the split of its positive passage's document.
pub fn assign_splits(
    pairs: &mut [QueryPair],
    store: &PassageStore,
    ratios: SplitRatios,
    seed: u64,
) -> Result<()> {
    ratios.validate()?;
    for p in pairs.iter_mut() {
        let passage = store.require(&p.positive_passage_id)?;
        p.split = split_for_document(&passage.doc_id, ratios, seed);
    }
    Ok(())
}

/// Accepted outcomes → deduplicated, split-labelled pairs.
pub fn build_dataset(
    outcomes: &[GenerationOutcome],
    store: &PassageStore,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Vec<QueryPair>> {
    let pairs: Vec<QueryPair> = outcomes
        .iter()
        .filter_map(|o| {
            let q = o.query.as_ref().filter(|_| o.status == GenerationStatus::Ok)?;
            Some(QueryPair::new(format!("q:{}", o.passage_id), q.clone(), o.passage_id.clone()))
        })
        .collect();
    let mut pairs = dedup(pairs);
    assign_splits(&mut pairs, store, ratios, seed)?;
    Ok(pairs)
}

/// Pair counts per split and status counts, for run summaries.
pub fn summarize(outcomes: &[GenerationOutcome], pairs: &[QueryPair]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for o in outcomes {
        *out.entry(format!("status.{}", serde_json::to_value(o.status).unwrap().as_str().unwrap())).or_default() += 1;
    }
    for p in pairs {
        *out.entry(format!("split.{}", serde_json::to_value(p.split).unwrap().as_str().unwrap())).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use chrono::NaiveDate;
    use std::collections::HashSet;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn phrases() -> Vec<String> {
        GenerationConfig::default().failure_phrases
    }

    #[test]
    fn classify_documented_responses() {
        assert_eq!(classify_response("SKIP", &phrases()), GenerationStatus::Skipped);
        assert_eq!(classify_response("  skip - boilerplate", &phrases()), GenerationStatus::Skipped);
        assert_eq!(classify_response("No query can be formed.", &phrases()), GenerationStatus::FailurePhrase);
        assert_eq!(classify_response("Understood! Here is", &phrases()), GenerationStatus::FailurePhrase);
        assert_eq!(classify_response("no question here", &phrases()), GenerationStatus::FailurePhrase);
        assert_eq!(classify_response(" \n ", &phrases()), GenerationStatus::Empty);
        assert_eq!(classify_response("Acme FY24 revenue guidance", &phrases()), GenerationStatus::Ok);
    }

    #[test]
    fn quote_strip_and_first_line() {
        assert_eq!(clean_query("\"Acme margins\"\nextra text"), "Acme margins");
        assert_eq!(clean_query("\n  'capex plans'  "), "capex plans");
    }

    fn pair(id: &str, q: &str) -> QueryPair {
        QueryPair::new(id, q, format!("p{id}"))
    }

    #[test]
    fn dedup_removes_all_copies() {
        let out = dedup(vec![pair("1", "Apple 2024 EPS"), pair("2", "Apple 2024 EPS"), pair("3", "Acme capex")]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].query_id, "3");
    }

    #[test]
    fn dedup_normalizes_case_and_space() {
        let out = dedup(vec![pair("1", "Acme  Revenue"), pair("2", "acme revenue")]);
        assert!(out.is_empty());
        let unique = vec![pair("1", "a b"), pair("2", "a c")];
        assert_eq!(dedup(unique.clone()), unique);
    }

    fn store_with_docs(n_docs: usize, per_doc: usize) -> PassageStore {
        let mut docs = Vec::new();
        let mut passages = Vec::new();
        for d in 0..n_docs {
            let id = format!("doc{d}");
            docs.push(Document {
                id: id.clone(),
                doc_type: DocType::Transcript,
                company_name: Some("Acme Corp".into()),
                ticker: Some("ACME".into()),
                date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
                event: Some("Q3 FY23 earnings call".into()),
                filename: format!("{id}.txt"),
                body: String::new(),
            });
            for o in 0..per_doc {
                passages.push(Passage {
                    id: Passage::passage_id(&id, o),
                    doc_id: id.clone(),
                    ordinal: o,
                    context_line: "Acme Corp (ACME) | Q3 FY23 earnings call | 2023-01-01".into(),
                    body: format!("Acme Corp reported Q3 revenue growth of {o}% on Widget Sales demand."),
                    token_count: 20,
                });
            }
        }
        PassageStore::new(passages, &docs).unwrap()
    }

    #[test]
    fn same_document_same_split() {
        let store = store_with_docs(30, 3);
        let mut pairs: Vec<QueryPair> = store
            .passages()
            .iter()
            .map(|p| QueryPair::new(format!("q{}", p.id), format!("query {}", p.id), p.id.clone()))
            .collect();
        assign_splits(&mut pairs, &store, SplitRatios::new(0.4, 0.3, 0.3).unwrap(), 11).unwrap();
        let mut by_doc: HashMap<String, HashSet<Split>> = HashMap::new();
        for p in &pairs {
            let doc = store.get(&p.positive_passage_id).unwrap().doc_id.clone();
            by_doc.entry(doc).or_default().insert(p.split);
        }
        assert!(by_doc.values().all(|s| s.len() == 1));
        assert!(by_doc.values().any(|s| s.contains(&Split::Test)));
    }

    #[test]
    fn degenerate_ratio_all_train() {
        let r = SplitRatios::new(1.0, 0.0, 0.0).unwrap();
        assert!((0..500).all(|i| split_for_document(&format!("d{i}"), r, 5) == Split::Train));
    }

    #[test]
    fn bad_ratios_rejected() {
        assert!(SplitRatios::new(0.5, 0.5, 0.5).is_err());
        assert!(SplitRatios::new(1.2, -0.1, -0.1).is_err());
    }

    #[test]
    fn split_counts_track_ratios() {
        let r = SplitRatios::new(0.8, 0.1, 0.1).unwrap();
        let mut counts = [0usize; 3];
        for i in 0..1000 {
            counts[split_for_document(&format!("document-{i}"), r, 42) as usize] += 1;
        }
        // within 3 percentage points of the 1,000 documents
        assert!((counts[0] as i64 - 800).abs() <= 30, "{counts:?}");
        assert!((counts[1] as i64 - 100).abs() <= 30, "{counts:?}");
        assert!((counts[2] as i64 - 100).abs() <= 30, "{counts:?}");
    }

    fn pool() -> Vec<FewShotExample> {
        ["Reliance CapEx", "wet wipes new products", "beazley price"]
            .iter()
            .map(|q| FewShotExample {
                passage_text: format!("passage for {q}"),
                query: q.to_string(),
            })
            .collect()
    }

    #[test]
    fn stub_generation_end_to_end() {
        let store = store_with_docs(4, 2);
        let cfg = GenerationConfig::default();
        let outcomes = run_generation(&StubClient::new(1), &store, &pool(), 7, &cfg).unwrap();
        assert_eq!(outcomes.len(), 8);
        for o in &outcomes {
            assert_eq!(o.status == GenerationStatus::Ok, o.query.is_some());
        }
        let again = run_generation(&StubClient::new(1), &store, &pool(), 7, &cfg).unwrap();
        assert_eq!(outcomes, again);
        let pairs = build_dataset(&outcomes, &store, SplitRatios::default(), 3).unwrap();
        let keys: HashSet<String> = pairs.iter().map(|p| normalize_query(&p.query)).collect();
        assert_eq!(keys.len(), pairs.len());
    }

    #[test]
    fn generation_requires_two_examples() {
        let store = store_with_docs(1, 1);
        let err = run_generation(&StubClient::new(1), &store, &pool()[..1], 7, &GenerationConfig::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    struct Flaky {
        calls: AtomicUsize,
        fail_first: usize,
    }

    impl LlmClient for Flaky {
        fn complete(&self, _prompt: &str) -> Result<String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(Error::Transport("connection reset".into()))
            } else {
                Ok("\"Acme margins\"\nextra text".into())
            }
        }
    }

    #[test]
    fn transport_failures_retry_then_requeue() {
        let store = store_with_docs(1, 1);
        let cfg = GenerationConfig {
            max_retries: 1,
            ..GenerationConfig::default()
        };
        // two failed attempts exhaust the first pass; the re-queue succeeds
        let client = Flaky {
            calls: AtomicUsize::new(0),
            fail_first: 2,
        };
        let out = run_generation(&client, &store, &pool(), 1, &cfg).unwrap();
        assert_eq!(out[0].status, GenerationStatus::Ok);
        assert_eq!(out[0].query.as_deref(), Some("Acme margins"));

        let always = Flaky {
            calls: AtomicUsize::new(0),
            fail_first: usize::MAX,
        };
        let out = run_generation(&always, &store, &pool(), 1, &cfg).unwrap();
        assert_eq!(out[0].status, GenerationStatus::TransientError);
        // 2 attempts in the first pass, 2 in the re-queue
        assert_eq!(always.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn stub_mentions_salient_term() {
        let store = store_with_docs(1, 1);
        let p = &store.passages()[0];
        let o = generate_query(&StubClient::new(2), p, DocType::Transcript, &pool(), 0, &GenerationConfig::default()).unwrap();
        let q = o.query.expect("stub should accept");
        let salient = salient_terms(&p.body).token_set();
        assert!(crate::text::words(&q).iter().all(|w| salient.contains(w)), "{q}");
    }
}
