use std::collections::BTreeSet;

use chrono::NaiveDate;
use finembed::encoder::Embedding;
use finembed::index::{Analyzer, Bm25Params, HnswParams, LexicalIndex, SearchFilter, SearchMode, VectorIndex};
use finembed::store::PassageMeta;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const TICKERS: [&str; 4] = ["ACME", "GLBX", "INIT", "UMBR"];

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Embedding<f64> {
    Embedding::from_unnormalized((0..d).map(|_| rng.sample(StandardNormal)).collect())
}

fn random_meta(rng: &mut ChaCha8Rng, i: usize) -> PassageMeta {
    let mut tags = BTreeSet::new();
    tags.insert(["transcript", "news", "company_report"][rng.random_range(0..3)].to_string());
    PassageMeta {
        doc_id: format!("doc{}", i / 4),
        date: NaiveDate::from_ymd_opt(2020 + rng.random_range(0..4), rng.random_range(1..13), 1).unwrap(),
        ticker: Some(TICKERS[rng.random_range(0..4)].to_string()),
        tags,
    }
}

fn corpus(n: usize, d: usize, seed: u64) -> Vec<(String, Embedding<f64>, PassageMeta)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (format!("p{i:05}"), random_unit(&mut rng, d), random_meta(&mut rng, i)))
        .collect()
}

/// Independent reference: score everything with a plain loop and sort.
fn brute_force(
    entries: &[(String, Embedding<f64>, PassageMeta)],
    q: &Embedding<f64>,
    k: usize,
    filter: &SearchFilter,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = entries
        .iter()
        .filter(|e| filter.matches(&e.2))
        .map(|(id, e, _)| {
            let mut s = 0.0;
            for j in 0..e.dim() {
                s += q.as_slice()[j] * e.as_slice()[j];
            }
            (id.clone(), s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

#[test]
fn exact_knn_equals_brute_force() {
    let entries = corpus(2000, 64, 1);
    let idx = VectorIndex::build(64, entries.clone(), "m", None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let q = random_unit(&mut rng, 64);
        let hits = idx.knn(&q, 10, &SearchFilter::default(), SearchMode::Exact).unwrap();
        let want = brute_force(&entries, &q, 10, &SearchFilter::default());
        let got: Vec<(String, f64)> = hits.iter().map(|h| (h.passage_id.clone(), h.score)).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn approximate_recall_at_10() {
    let entries = corpus(2000, 64, 3);
    let idx = VectorIndex::build(64, entries, "m", Some(HnswParams::default())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total = 0.0;
    for _ in 0..100 {
        let q = random_unit(&mut rng, 64);
        let f = SearchFilter::default();
        let exact: BTreeSet<String> =
            idx.knn(&q, 10, &f, SearchMode::Exact).unwrap().into_iter().map(|h| h.passage_id).collect();
        let approx = idx.knn(&q, 10, &f, SearchMode::Approximate).unwrap();
        total += approx.iter().filter(|h| exact.contains(&h.passage_id)).count() as f64 / 10.0;
    }
    let recall = total / 100.0;
    eprintln!("approximate recall@10 = {recall:.3}");
    assert!(recall >= 0.95, "recall {recall}");
}

#[test]
fn approximate_build_is_reproducible() {
    let entries = corpus(500, 16, 5);
    let a = VectorIndex::build(16, entries.clone(), "m", Some(HnswParams { seed: 7, ..Default::default() })).unwrap();
    let b = VectorIndex::build(16, entries, "m", Some(HnswParams { seed: 7, ..Default::default() })).unwrap();
    assert_eq!(a, b);
}

#[test]
fn filtered_exact_equals_filtered_brute_force() {
    let entries = corpus(1500, 32, 6);
    let idx = VectorIndex::build(32, entries.clone(), "m", Some(HnswParams::default())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).unwrap();
    let filters = [
        SearchFilter::default().with_tickers(["ACME"]),
        SearchFilter::default().with_dates(d(2021, 1, 1), d(2021, 12, 31)),
        SearchFilter::default().with_tags(["news"]).with_tickers(["GLBX", "INIT"]),
        SearchFilter::default().with_tickers(["NONE"]),
    ];
    for f in &filters {
        for _ in 0..20 {
            let q = random_unit(&mut rng, 32);
            let want = brute_force(&entries, &q, 25, f);
            let hits = idx.knn(&q, 25, f, SearchMode::Exact).unwrap();
            let got: Vec<(String, f64)> = hits.iter().map(|h| (h.passage_id.clone(), h.score)).collect();
            assert_eq!(got, want);
            for mode in [SearchMode::Exact, SearchMode::Approximate] {
                for h in idx.knn(&q, 25, f, mode).unwrap() {
                    let e = entries.iter().find(|e| e.0 == h.passage_id).unwrap();
                    assert!(f.matches(&e.2));
                }
            }
        }
    }
}

#[test]
fn k_larger_than_corpus_returns_all_matches() {
    let entries = corpus(30, 8, 8);
    let idx = VectorIndex::build(8, entries.clone(), "m", None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = random_unit(&mut rng, 8);
    assert_eq!(idx.knn(&q, 100, &SearchFilter::default(), SearchMode::Exact).unwrap().len(), 30);
    let f = SearchFilter::default().with_tickers(["ACME"]);
    let n = entries.iter().filter(|e| f.matches(&e.2)).count();
    assert_eq!(idx.knn(&q, 100, &f, SearchMode::Exact).unwrap().len(), n);
}

fn plain_meta(doc: &str, ticker: &str) -> PassageMeta {
    PassageMeta {
        doc_id: doc.into(),
        date: NaiveDate::from_ymd_opt(2023, 6, 1).unwrap(),
        ticker: Some(ticker.into()),
        tags: BTreeSet::new(),
    }
}

fn five_passages() -> LexicalIndex {
    let texts = [
        ("a", "acme revenue rose on strong demand", "ACME"),
        ("b", "globex margin fell", "GLBX"),
        ("c", "revenue revenue guidance for the year", "ACME"),
        ("d", "the board declared a dividend", "INIT"),
        ("e", "capex plans unchanged and revenue flat", "UMBR"),
    ];
    LexicalIndex::build(
        texts.iter().map(|(id, t, tk)| (id.to_string(), t.to_string(), plain_meta(id, tk))).collect(),
        Analyzer::default(),
    )
    .unwrap()
}

#[test]
fn bm25_matches_hand_computation() {
    let idx = five_passages();
    // lengths 6, 3, 6, 5, 6 → avg 26/5; N = 5
    let avg = 26.0 / 5.0;
    let (k1, b) = (1.2, 0.75);
    let idf = |df: f64| (1.0 + (5.0 - df + 0.5) / (df + 0.5)).ln();
    let term = |tf: f64, len: f64, df: f64| idf(df) * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));

    // single term present in exactly one passage
    let hits = idx.search("dividend", 10, &SearchFilter::default(), Bm25Params::default()).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].passage_id, "d");
    assert!((hits[0].score - term(1.0, 5.0, 1.0)).abs() < 1e-9);

    // multi-term query: scores additive over terms
    let hits = idx.search("revenue guidance", 10, &SearchFilter::default(), Bm25Params::default()).unwrap();
    let ids: Vec<_> = hits.iter().map(|h| h.passage_id.as_str()).collect();
    assert_eq!(ids, ["c", "a", "e"]);
    let c = term(2.0, 6.0, 3.0) + term(1.0, 6.0, 1.0);
    let a = term(1.0, 6.0, 3.0);
    assert!((hits[0].score - c).abs() < 1e-9);
    assert!((hits[1].score - a).abs() < 1e-9);
    assert!((hits[2].score - a).abs() < 1e-9);
    assert!(hits.iter().all(|h| h.score >= 0.0));
}

#[test]
fn bm25_filter_keeps_global_statistics() {
    let idx = five_passages();
    let f = SearchFilter::default().with_tickers(["UMBR"]);
    let hits = idx.search("revenue", 10, &f, Bm25Params::default()).unwrap();
    let unfiltered = idx.search("revenue", 10, &SearchFilter::default(), Bm25Params::default()).unwrap();
    assert_eq!(hits.len(), 1);
    let same = unfiltered.iter().find(|h| h.passage_id == "e").unwrap();
    assert_eq!(hits[0].score, same.score);
}

#[test]
fn bm25_b_zero_ignores_length() {
    let idx = LexicalIndex::build(
        vec![
            ("short".into(), "capex".into(), plain_meta("s", "A")),
            ("long".into(), "capex plus many other words in this passage".into(), plain_meta("l", "A")),
            ("other".into(), "margin".into(), plain_meta("o", "A")),
        ],
        Analyzer::default(),
    )
    .unwrap();
    let hits = idx.search("capex", 10, &SearchFilter::default(), Bm25Params { k1: 1.2, b: 0.0 }).unwrap();
    assert_eq!(hits.len(), 2);
    assert_eq!(hits[0].score, hits[1].score);
    assert_eq!(hits[0].passage_id, "long"); // tie broken by id
    let hits = idx.search("capex", 10, &SearchFilter::default(), Bm25Params::default()).unwrap();
    assert_eq!(hits[0].passage_id, "short");
    assert!(hits[0].score > hits[1].score);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bm25_is_additive_over_terms(seed in 0u64..1000) {
        let idx = five_passages();
        let vocab = ["revenue", "acme", "margin", "the", "capex", "dividend", "guidance"];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q1 = vocab[rng.random_range(0..vocab.len())];
        let q2 = vocab[rng.random_range(0..vocab.len())];
        let f = SearchFilter::default();
        let p = Bm25Params::default();
        let score = |q: &str, id: &str| idx.search(q, 10, &f, p).unwrap().into_iter().find(|h| h.passage_id == id).map_or(0.0, |h| h.score);
        for id in ["a", "b", "c", "d", "e"] {
            let joint = score(&format!("{q1} {q2}"), id);
            prop_assert!((joint - score(q1, id) - score(q2, id)).abs() < 1e-12);
        }
    }

    #[test]
    fn ranks_are_contiguous_and_scores_non_increasing(seed in 0u64..1000, k in 1usize..40) {
        let entries = corpus(120, 8, seed);
        let idx = VectorIndex::build(8, entries, "m", Some(HnswParams::default())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let q = random_unit(&mut rng, 8);
        for mode in [SearchMode::Exact, SearchMode::Approximate] {
            let hits = idx.knn(&q, k, &SearchFilter::default(), mode).unwrap();
            prop_assert!(hits.len() <= k);
            for (i, h) in hits.iter().enumerate() {
                prop_assert_eq!(h.rank, i + 1);
            }
            prop_assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }
}
