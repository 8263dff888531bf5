use std::collections::BTreeSet;

use finembed::querygen::{normalize_query, QueryPair, Split};

/// Curated query completions. Matching is a case-insensitive prefix test;
/// results are ordered shortest first, then lexicographically.
#[derive(Debug, Clone, Default)]
pub struct Autocomplete {
    /// (lowercased, original), deduplicated on the normalized form.
    entries: Vec<(String, String)>,
}

impl Autocomplete {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(queries: I) -> Self {
        let mut seen = BTreeSet::new();
        let mut entries: Vec<(String, String)> = queries
            .into_iter()
            .map(Into::into)
            .filter(|q| !q.trim().is_empty() && seen.insert(normalize_query(q)))
            .map(|q| (q.to_lowercase(), q))
            .collect();
        entries.sort_by(|a, b| a.1.chars().count().cmp(&b.1.chars().count()).then_with(|| a.1.cmp(&b.1)));
        Self { entries }
    }

    /// Queries from the held-out splits only, so completions never echo
    /// training targets.
    pub fn from_pairs(pairs: &[QueryPair]) -> Self {
        Self::new(pairs.iter().filter(|p| p.split != Split::Train).map(|p| p.query.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn complete(&self, prefix: &str, k: usize) -> Vec<String> {
        if prefix.is_empty() {
            return Vec::new();
        }
        let prefix = prefix.to_lowercase();
        self.entries
            .iter()
            .filter(|(lower, _)| lower.starts_with(&prefix))
            .take(k)
            .map(|(_, q)| q.clone())
            .collect()
    }
}
