//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use finembed::corpus::{DocType, Document, Passage};
use finembed::encoder::{EncoderModel, Role};
use finembed::eval::Truth;
use finembed::index::RankedHit;
use finembed::querygen::QueryPair;
use finembed::store::PassageStore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TICKERS: [&str; 5] = ["ACME", "GLBX", "INIT", "UMBR", "SOYL"];

/// `docs` documents of `per_doc` passages, each `words` words drawn from a
/// vocabulary of `vocab` made-up words.
pub fn random_store(docs: usize, per_doc: usize, words: usize, vocab: usize, seed: u64) -> PassageStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(docs);
    let mut passages = Vec::with_capacity(docs * per_doc);
    for d in 0..docs {
        let id = format!("doc{d:04}");
        let ticker = TICKERS[d % TICKERS.len()];
        let mut bodies = Vec::new();
        for o in 0..per_doc {
            let body: Vec<String> = (0..words).map(|_| format!("w{}", rng.random_range(0..vocab))).collect();
            let body = body.join(" ");
            passages.push(Passage {
                id: Passage::passage_id(&id, o),
                doc_id: id.clone(),
                ordinal: o,
                context_line: format!("Company {ticker} | {ticker} | FY{} call", 20 + d % 4),
                body: body.clone(),
                token_count: words + 5,
            });
            bodies.push(body);
        }
        documents.push(Document {
            id: id.clone(),
            doc_type: DocType::Transcript,
            company_name: Some(format!("Company {ticker}")),
            ticker: Some(ticker.into()),
            date: NaiveDate::from_ymd_opt(2020 + (d % 4) as i32, 1 + (d % 12) as u32, 1 + (d % 28) as u32).unwrap(),
            event: Some(format!("FY{} call", 20 + d % 4)),
            filename: format!("{id}.pdf"),
            body: bodies.join("\n\n"),
        });
    }
    PassageStore::new(passages, &documents).unwrap()
}

/// Plain-loop ranking of every passage for `query`: descending cosine, ties
/// by ascending id. Returns passage ids.
pub fn oracle_ranking(model: &EncoderModel<f64>, store: &PassageStore, query: &str) -> Vec<String> {
    let q = model.encode(query, Role::Query);
    let mut scored: Vec<(f64, String)> = store
        .passages()
        .iter()
        .map(|p| {
            let e = model.encode(&p.embedding_text(), Role::Passage);
            let mut s = 0.0;
            for (a, b) in q.as_slice().iter().zip(e.as_slice()) {
                s += a * b;
            }
            (s, p.id.clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, id)| id).collect()
}

pub struct MiningFixture {
    pub store: PassageStore,
    pub model: EncoderModel<f64>,
    pub pairs: Vec<QueryPair>,
    /// 0-based oracle rank of each pair's positive, and the full ranking.
    pub oracle: Vec<(usize, Vec<String>)>,
}

/// 2,000 passages and a random-init model. Queries are either four words
/// lifted from the positive (ranked near the top) or four random words
/// (ranked anywhere). With `avoid_tail`, queries whose positive lands in
/// ranks 798..=999 (where r+202 would run past the top 1,000) are left out.
pub fn mining_fixture(queries: usize, avoid_tail: bool) -> MiningFixture {
    let store = random_store(200, 10, 24, 400, 11);
    let model = EncoderModel::<f64>::new_random(4096, 16, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut pairs = Vec::new();
    let mut oracle = Vec::new();
    let mut attempt = 0;
    while pairs.len() < queries {
        attempt += 1;
        let positive = &store.passages()[rng.random_range(0..store.len())];
        let query = if attempt % 2 == 0 {
            let words: Vec<&str> = positive.body.split(' ').collect();
            (0..4).map(|_| words[rng.random_range(0..words.len())]).collect::<Vec<_>>().join(" ")
        } else {
            (0..4).map(|_| format!("w{}", rng.random_range(0..400))).collect::<Vec<_>>().join(" ")
        };
        let ranking = oracle_ranking(&model, &store, &query);
        let r = ranking.iter().position(|id| *id == positive.id).unwrap();
        if avoid_tail && (798..1000).contains(&r) {
            continue;
        }
        pairs.push(QueryPair::new(format!("m{attempt:04}"), query, positive.id.clone()));
        oracle.push((r, ranking));
    }
    MiningFixture {
        store,
        model,
        pairs,
        oracle,
    }
}

fn hit(passage: &str, doc: &str, rank: usize) -> RankedHit {
    RankedHit {
        passage_id: passage.into(),
        doc_id: doc.into(),
        score: 1.0 - rank as f64 / 100.0,
        rank,
    }
}

pub struct RecallFixture {
    pub run: HashMap<String, Vec<RankedHit>>,
    pub truth: BTreeMap<String, Truth>,
    /// (K, passage recall, document recall), enumerated by hand.
    pub expected: Vec<(usize, f64, f64)>,
}

/// Ten queries with ten hits each. Per query: the positive's rank (if
/// retrieved) and the rank of a sibling passage from the same document.
///
/// | query | positive | sibling |
/// |-------|----------|---------|
/// | q0    | 1        | -       |
/// | q1    | 2        | -       |
/// | q2    | 3        | -       |
/// | q3    | 1        | -       |
/// | q4    | 5        | 1       |
/// | q5    | 10       | -       |
/// | q6    | -        | 2       |
/// | q7    | 4        | -       |
/// | q8    | 7        | 3       |
/// | q9    | -        | -       |
///
/// Passage level: K=1 → q0,q3 (0.2); K=3 → +q1,q2 (0.4); K=5 → +q4,q7 (0.6);
/// K=10 → +q5,q8 (0.8).
/// Document level: K=1 → q0,q3,q4 (0.3); K=3 → +q1,q2,q6,q8 (0.7);
/// K=5 → +q7 (0.8); K=10 → +q5 (0.9).
pub fn recall_fixture() -> RecallFixture {
    let layout: [(Option<usize>, Option<usize>); 10] = [
        (Some(1), None),
        (Some(2), None),
        (Some(3), None),
        (Some(1), None),
        (Some(5), Some(1)),
        (Some(10), None),
        (None, Some(2)),
        (Some(4), None),
        (Some(7), Some(3)),
        (None, None),
    ];
    let mut run = HashMap::new();
    let mut truth = BTreeMap::new();
    for (i, (pos, sib)) in layout.iter().enumerate() {
        let q = format!("q{i}");
        let doc = format!("D{i}");
        let gold = format!("{doc}#0");
        let hits: Vec<RankedHit> = (1..=10)
            .map(|r| {
                if *pos == Some(r) {
                    hit(&gold, &doc, r)
                } else if *sib == Some(r) {
                    hit(&format!("{doc}#1"), &doc, r)
                } else {
                    hit(&format!("x{i}-{r}"), &format!("X{i}-{r}"), r)
                }
            })
            .collect();
        run.insert(q.clone(), hits);
        truth.insert(q, Truth { passage_id: gold, doc_id: doc });
    }
    RecallFixture {
        run,
        truth,
        expected: vec![(1, 0.2, 0.3), (3, 0.4, 0.7), (5, 0.6, 0.8), (10, 0.8, 0.9)],
    }
}
