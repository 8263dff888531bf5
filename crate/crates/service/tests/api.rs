use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use finembed::index::{SearchFilter, SearchMode};
use finembed::encoder::Role;
use finembed::synth::{BenchmarkConfig, SynthBenchmark, SynthConfig};
use finembed::Encoder;
use finembed_service::api::{Health, PassageRecord};
use finembed_service::{router, AppState, Mode, RequestLog, SearchRequest, SearchResponse, Snapshot};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn benchmark() -> &'static SynthBenchmark {
    static B: OnceLock<SynthBenchmark> = OnceLock::new();
    B.get_or_init(|| {
        SynthBenchmark::build(&BenchmarkConfig {
            corpus: SynthConfig { companies: 8, documents: 40, paragraphs_per_doc: 5, ..SynthConfig::default() },
            ..BenchmarkConfig::default()
        })
        .unwrap()
    })
}

fn snapshot() -> Snapshot {
    let b = benchmark();
    Snapshot::build(Encoder::new_random(8192, 32, 5), b.store.clone(), &b.pairs).unwrap()
}

fn app() -> Router {
    router(AppState::with_snapshot(snapshot()), &[], None)
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, body)
}

fn post_json(body: &str) -> Request<Body> {
    Request::builder()
        .method(Method::POST)
        .uri("/search")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::builder().uri(uri).body(Body::empty()).unwrap()
}

async fn search(app: &Router, req: &SearchRequest) -> SearchResponse {
    let (status, body) = call(app, post_json(&serde_json::to_string(req).unwrap())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    serde_json::from_value(body).unwrap()
}

#[tokio::test]
async fn ticker_filter_restricts_every_hit() {
    let app = app();
    let b = benchmark();
    let ticker = b.corpus.companies[0].ticker.clone();
    for mode in [Mode::Vector, Mode::Lexical] {
        let mut req = SearchRequest::new("revenue guidance for the quarter", mode);
        req.k = 50;
        req.filter = SearchFilter::default().with_tickers([ticker.clone()]);
        let resp = search(&app, &req).await;
        assert!(!resp.hits.is_empty());
        for h in &resp.hits {
            assert_eq!(b.store.meta(&h.passage_id).unwrap().ticker.as_deref(), Some(ticker.as_str()));
        }
    }
}

#[tokio::test]
async fn identical_requests_give_identical_responses() {
    let app = app();
    let mut req = SearchRequest::new("operating margin outlook", Mode::Vector);
    req.highlight = true;
    let mut a = search(&app, &req).await;
    let mut b = search(&app, &req).await;
    // Wall-clock latency is the one field allowed to differ.
    a.latency_ms = 0.0;
    b.latency_ms = 0.0;
    assert_eq!(a, b);
}

#[tokio::test]
async fn hits_match_the_index_modules() {
    let snap = snapshot();
    let app = router(AppState::with_snapshot(snapshot()), &[], None);
    let q = "capital expenditure and free cash flow";

    let mut req = SearchRequest::new(q, Mode::Lexical);
    req.k = 20;
    let direct = snap.lexical.search(q, 20, &SearchFilter::default(), snap.bm25).unwrap();
    let served = search(&app, &req).await;
    let got: Vec<_> = served.hits.iter().map(|h| (h.passage_id.clone(), h.score, h.rank)).collect();
    let want: Vec<_> = direct.iter().map(|h| (h.passage_id.clone(), h.score, h.rank)).collect();
    assert_eq!(got, want);

    req.mode = Mode::Vector;
    let emb = snap.model.encode(q, Role::Query);
    let direct = snap.vector.knn(&emb, 20, &SearchFilter::default(), SearchMode::Approximate).unwrap();
    let served = search(&app, &req).await;
    let got: Vec<_> = served.hits.iter().map(|h| (h.passage_id.clone(), h.score)).collect();
    let want: Vec<_> = direct.iter().map(|h| (h.passage_id.clone(), h.score)).collect();
    assert_eq!(got, want);
}

#[tokio::test]
async fn unique_term_puts_its_passage_first() {
    let snap = snapshot();
    let app = app();
    let analyzer = snap.lexical.analyzer().clone();
    let (term, pid) = snap
        .store
        .passages()
        .iter()
        .find_map(|p| {
            analyzer
                .analyze(&p.embedding_text())
                .into_iter()
                .find(|t| snap.lexical.doc_freq(t) == 1)
                .map(|t| (t, p.id.clone()))
        })
        .expect("corpus has a term occurring in one passage");
    let resp = search(&app, &SearchRequest::new(term.clone(), Mode::Lexical)).await;
    assert_eq!(resp.hits[0].passage_id, pid);
    let direct = snap.lexical.search(&term, 10, &SearchFilter::default(), snap.bm25).unwrap();
    assert_eq!(resp.hits[0].score, direct[0].score);
}

#[tokio::test]
async fn highlights_index_into_returned_body() {
    let app = app();
    let mut req = SearchRequest::new("revenue growth and margins", Mode::Lexical);
    req.highlight = true;
    let resp = search(&app, &req).await;
    assert!(resp.hits.iter().any(|h| !h.highlights.is_empty()));
    for hit in &resp.hits {
        let chars: Vec<char> = hit.body.chars().collect();
        let mut last_end = 0;
        assert!(hit.highlights.len() <= 3);
        for s in &hit.highlights {
            assert!(s.char_start < s.char_end && s.char_end <= chars.len());
            assert!(s.char_start >= last_end, "spans overlap or are out of order");
            last_end = s.char_end;
            let text: String = chars[s.char_start..s.char_end].iter().collect();
            assert!(hit.body.contains(&text));
            assert_eq!(text.trim(), text);
        }
    }
    let plain = search(&app, &SearchRequest::new("revenue growth and margins", Mode::Lexical)).await;
    assert!(plain.hits.iter().all(|h| h.highlights.is_empty()));
}

#[tokio::test]
async fn invalid_requests_are_400() {
    let app = app();
    for body in [
        r#"{"query": ""}"#,
        r#"{"query": "   "}"#,
        r#"{"query": "x", "k": 0}"#,
        r#"{"query": "x", "k": 101}"#,
        r#"{"query": "x", "mode": "hybrid"}"#,
        r#"{"query": "x", "filter": {"date_from": "2023-02-01", "date_to": "2023-01-01"}}"#,
        r#"{"query": "x", "filter": {"date_from": "not a date"}}"#,
        r#"{"nope": 1}"#,
        "not json",
    ] {
        let (status, json) = call(&app, post_json(body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(json["error"].is_string());
    }
    let (status, _) = call(&app, post_json(r#"{"query": "x", "k": 100}"#)).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn unloaded_service_is_503() {
    let app = router(AppState::new(), &[], None);
    let (status, _) = call(&app, post_json(r#"{"query": "revenue"}"#)).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    for uri in ["/health", "/autocomplete?prefix=a", "/passages/x"] {
        assert_eq!(call(&app, get(uri)).await.0, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
    }
}

#[tokio::test]
async fn publishing_a_snapshot_makes_service_ready() {
    let state = AppState::new();
    let app = router(state.clone(), &[], None);
    assert_eq!(call(&app, get("/health")).await.0, StatusCode::SERVICE_UNAVAILABLE);
    state.publish(snapshot());
    assert_eq!(call(&app, get("/health")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn passage_lookup() {
    let app = app();
    let b = benchmark();
    let p = &b.store.passages()[3];
    let (status, json) = call(&app, get(&format!("/passages/{}", p.id.replace('#', "%23")))).await;
    assert_eq!(status, StatusCode::OK);
    let rec: PassageRecord = serde_json::from_value(json).unwrap();
    assert_eq!(&rec.passage, p);
    assert_eq!(rec.meta, b.store.meta(&p.id).unwrap());
    assert_eq!(rec.document.id, p.doc_id);

    let (status, json) = call(&app, get("/passages/no-such-passage")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(json["error"].as_str().unwrap().contains("no-such-passage"));
}

#[tokio::test]
async fn health_reports_versions() {
    let snap = snapshot();
    let app = app();
    let (status, json) = call(&app, get("/health")).await;
    assert_eq!(status, StatusCode::OK);
    let h: Health = serde_json::from_value(json).unwrap();
    assert_eq!(h.model_version, snap.model.version);
    assert_eq!(h.vector_index_version, snap.vector.version());
    assert_eq!(h.lexical_index_version, snap.lexical.version());
    assert!(!h.vector_index_version.is_empty() && !h.lexical_index_version.is_empty());
    assert_eq!(h.passages, snap.store.len());

    let resp = search(&app, &SearchRequest::new("revenue", Mode::Lexical)).await;
    assert_eq!(resp.index_version, snap.index_version());
}

#[tokio::test]
async fn autocomplete_serves_held_out_queries() {
    use finembed::querygen::Split;
    let app = app();
    let b = benchmark();
    let held_out = b.pairs.iter().find(|p| p.split != Split::Train).unwrap();
    let prefix: String = held_out.query.chars().take(4).collect();
    let (status, json) = call(&app, get(&format!("/autocomplete?prefix={}&k=100", prefix.to_uppercase().replace(' ', "%20")))).await;
    assert_eq!(status, StatusCode::OK);
    let list: Vec<String> = serde_json::from_value(json).unwrap();
    assert!(list.contains(&held_out.query));
    let held: std::collections::HashSet<_> =
        b.pairs.iter().filter(|p| p.split != Split::Train).map(|p| p.query.as_str()).collect();
    assert!(list.iter().all(|q| held.contains(q.as_str())));
    assert!(list.windows(2).all(|w| w[0].chars().count() <= w[1].chars().count()));

    let (_, json) = call(&app, get("/autocomplete?prefix=")).await;
    assert_eq!(json, serde_json::json!([]));
    let (_, json) = call(&app, get(&format!("/autocomplete?prefix={}&k=1", &prefix[..1]))).await;
    assert!(json.as_array().unwrap().len() <= 1);
}

#[tokio::test]
async fn cors_headers_present() {
    let app = app();
    let req = Request::builder()
        .uri("/health")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test]
async fn request_log_gets_one_json_line_per_request() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("requests.jsonl");
    let app = router(AppState::with_snapshot(snapshot()), &[], Some(RequestLog::open(&path).unwrap()));
    call(&app, get("/health")).await;
    call(&app, get("/passages/missing")).await;
    let lines: Vec<Value> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["path"], "/health");
    assert_eq!(lines[0]["status"], 200);
    assert_eq!(lines[1]["status"], 404);
    assert!(lines[1]["latency_ms"].is_number());
}
