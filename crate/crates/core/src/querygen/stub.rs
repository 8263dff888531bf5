//! Deterministic offline query generator.
//!
//! Picks salient terms out of a passage (capitalized multi-word names,
//! tickers and period codes, metric words) and composes a short keyword
//! query from them. Passages with fewer than two salient terms are skipped,
//! mirroring the instruction given to the real generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::text::{fnv1a, token_spans};

/// Metric vocabulary recognised as "metric words".
pub const METRIC_WORDS: &[&str] = &[
    "revenue", "revenues", "sales", "eps", "earnings", "margin", "margins", "guidance",
    "capex", "ebitda", "ebit", "dividend", "dividends", "buyback", "buybacks", "profit",
    "income", "backlog", "orders", "bookings", "demand", "pricing", "costs", "debt",
    "leverage", "inventory", "subscribers", "churn", "outlook", "growth", "cashflow",
    "liquidity", "opex", "volume", "volumes", "shipments", "utilization", "headcount",
];

const SPAN_STOPWORDS: &[&str] = &[
    "The", "This", "That", "These", "Those", "We", "Our", "In", "On", "At", "For", "And",
    "But", "Of", "To", "As", "It", "Its", "A", "An", "With", "By", "From", "Q", "A:",
];

const MAX_SPAN_WORDS: usize = 4;
const MAX_QUERY_WORDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubQuery {
    Query(String),
    Skip,
}

impl StubQuery {
    /// The raw response a model would have produced.
    pub fn as_response(&self) -> &str {
        match self {
            StubQuery::Query(q) => q,
            StubQuery::Skip => "SKIP",
        }
    }
}

/// Salient terms of a passage, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SalientTerms {
    /// Capitalized multi-word spans and codes (tickers, `FY24`, `Q3`).
    pub entities: Vec<String>,
    /// Words from [`METRIC_WORDS`] present in the passage.
    pub metrics: Vec<String>,
}

impl SalientTerms {
    pub fn len(&self) -> usize {
        self.entities.len() + self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lowercased tokens of every salient term.
    pub fn token_set(&self) -> std::collections::HashSet<String> {
        self.entities
            .iter()
            .chain(&self.metrics)
            .flat_map(|t| crate::text::words(t))
            .collect()
    }
}

fn is_capitalized(w: &str) -> bool {
    let mut chars = w.chars();
    matches!(chars.next(), Some(c) if c.is_uppercase()) && chars.all(|c| c.is_alphabetic())
}

fn is_code(w: &str) -> bool {
    let upper = w.chars().filter(|c| c.is_ascii_uppercase()).count();
    let digits = w.chars().filter(|c| c.is_ascii_digit()).count();
    let lower = w.chars().filter(|c| c.is_lowercase()).count();
    if lower > 0 {
        return false;
    }
    (upper >= 1 && digits >= 1 && w.len() <= 6) || ((2..=5).contains(&upper) && digits == 0)
}

pub fn salient_terms(text: &str) -> SalientTerms {
    let spans = token_spans(text);
    let toks: Vec<&str> = spans.iter().map(|r| &text[r.clone()]).collect();
    let mut entities: Vec<String> = Vec::new();
    let push = |list: &mut Vec<String>, term: String| {
        if !list.iter().any(|t| t.eq_ignore_ascii_case(&term)) {
            list.push(term);
        }
    };

    let mut i = 0;
    while i < toks.len() {
        // a run of capitalized words joined by single spaces only
        let mut j = i;
        while j < toks.len() && is_capitalized(toks[j]) && !is_code(toks[j]) {
            if j > i && &text[spans[j - 1].end..spans[j].start] != " " {
                break;
            }
            j += 1;
        }
        let mut run: Vec<&str> = toks[i..j].to_vec();
        while run.first().is_some_and(|w| SPAN_STOPWORDS.contains(w)) {
            run.remove(0);
        }
        if run.len() >= 2 {
            run.truncate(MAX_SPAN_WORDS);
            push(&mut entities, run.join(" "));
            i = j;
            continue;
        }
        if is_code(toks[i]) {
            push(&mut entities, toks[i].to_owned());
        }
        i = j.max(i + 1);
    }

    let mut metrics = Vec::new();
    for t in &toks {
        let lower = t.to_lowercase();
        if METRIC_WORDS.contains(&lower.as_str()) {
            push(&mut metrics, lower);
        }
    }
    // a code that is also a metric word (EPS) counts once, as a metric
    entities.retain(|e| !metrics.iter().any(|m| m.eq_ignore_ascii_case(e)));
    SalientTerms { entities, metrics }
}

/// Composes a 2–8 word query from one or two entity spans and an optional
/// metric word, or skips when fewer than two salient terms exist.
pub fn stub_generate(text: &str, seed: u64) -> StubQuery {
    let terms = salient_terms(text);
    if terms.len() < 2 {
        return StubQuery::Skip;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(0x5eed, text.as_bytes()));

    let mut parts: Vec<&str> = Vec::new();
    if let Some(first) = terms.entities.first() {
        parts.push(first);
        if terms.entities.len() > 1 && rng.random_bool(0.6) {
            let k = rng.random_range(1..terms.entities.len());
            parts.push(&terms.entities[k]);
        }
    }
    let want_metric = parts.is_empty() || rng.random_bool(0.75);
    if want_metric && !terms.metrics.is_empty() {
        let k = rng.random_range(0..terms.metrics.len());
        parts.push(&terms.metrics[k]);
    }

    let count = |p: &[&str]| p.iter().map(|s| s.split_whitespace().count()).sum::<usize>();
    if count(&parts) < 2 {
        // top up from whatever salient terms were not used yet
        let extra = terms
            .entities
            .iter()
            .chain(&terms.metrics)
            .find(|t| !parts.contains(&t.as_str()));
        if let Some(t) = extra {
            parts.push(t);
        }
    }
    while count(&parts) > MAX_QUERY_WORDS && parts.len() > 1 {
        parts.remove(1);
    }
    let words: Vec<&str> = parts
        .iter()
        .flat_map(|p| p.split_whitespace())
        .take(MAX_QUERY_WORDS)
        .collect();
    if words.len() < 2 {
        return StubQuery::Skip;
    }
    StubQuery::Query(words.join(" "))
}
