use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::store::PassageMeta;
use crate::text::words;

use super::{check_k, select_top, to_hits, RankedHit, SearchFilter};

const FORMAT: &str = "finembed-lexical-index";
const FORMAT_VERSION: u32 = 1;

/// Lowercasing word splitter matching the encoder tokenizer before hashing,
/// with optional stopword removal (off by default).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyzer {
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
}

impl Analyzer {
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let mut terms = words(text);
        if !self.stopwords.is_empty() {
            terms.retain(|t| !self.stopwords.contains(t));
        }
        terms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("invalid BM25 parameters k1={} b={}", self.k1, self.b)));
        }
        Ok(())
    }
}

/// Inverted index with per-passage term frequencies and lengths. Passages are
/// stored sorted by id; postings are sorted by passage position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalIndex {
    analyzer: Analyzer,
    ids: Vec<String>,
    metas: Vec<PassageMeta>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    lengths: Vec<u32>,
    avg_len: f64,
    #[serde(skip)]
    version: String,
}

impl LexicalIndex {
    /// `entries` are `(passage id, indexed text, metadata)`.
    pub fn build(entries: Vec<(String, String, PassageMeta)>, analyzer: Analyzer) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateId(w[0].0.clone()));
        }
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut lengths = Vec::with_capacity(entries.len());
        let mut ids = Vec::with_capacity(entries.len());
        let mut metas = Vec::with_capacity(entries.len());
        for (pos, (id, text, meta)) in entries.into_iter().enumerate() {
            let terms = analyzer.analyze(&text);
            lengths.push(terms.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in terms {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((pos as u32, n));
            }
            ids.push(id);
            metas.push(meta);
        }
        let total: u64 = lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_len = if lengths.is_empty() { 0.0 } else { total as f64 / lengths.len() as f64 };
        let mut index = Self {
            analyzer,
            ids,
            metas,
            postings,
            lengths,
            avg_len,
            version: String::new(),
        };
        index.version = index.digest()?;
        Ok(index)
    }

    fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(format!("v{FORMAT_VERSION}-{}", &hex::encode(Sha256::digest(&bytes))[..12]))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    /// `(passage id, term frequency)` for every passage containing `term`.
    pub fn postings(&self, term: &str) -> Vec<(&str, u32)> {
        self.postings
            .get(term)
            .map(|p| p.iter().map(|&(i, tf)| (self.ids[i as usize].as_str(), tf)).collect())
            .unwrap_or_default()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn length_of(&self, passage_id: &str) -> Option<u32> {
        self.ids
            .binary_search_by(|id| id.as_str().cmp(passage_id))
            .ok()
            .map(|i| self.lengths[i])
    }

    /// Digest of the index contents; equal versions mean equal rankings.
    pub fn version(&self) -> &str {
        &self.version
    }

    /// `ln(1 + (N − df + 0.5) / (df + 0.5))` over the whole corpus.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Okapi BM25. Each query token contributes once per occurrence; passages
    /// without any query term are not returned. The filter restricts the
    /// candidates but not the collection statistics.
    pub fn search(&self, query: &str, k: usize, filter: &SearchFilter, params: Bm25Params) -> Result<Vec<RankedHit>> {
        check_k(k)?;
        filter.validate()?;
        params.validate()?;
        let allowed: Option<Vec<bool>> =
            (!filter.is_empty()).then(|| self.metas.iter().map(|m| filter.matches(m)).collect());
        let mut scores = vec![0.0f64; self.ids.len()];
        let mut touched = vec![false; self.ids.len()];
        for term in self.analyzer.analyze(query) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(&term);
            for &(i, tf) in list {
                let i = i as usize;
                if allowed.as_ref().is_some_and(|a| !a[i]) {
                    continue;
                }
                let tf = f64::from(tf);
                let norm = params.k1 * (1.0 - params.b + params.b * f64::from(self.lengths[i]) / self.avg_len);
                scores[i] += idf * tf * (params.k1 + 1.0) / (tf + norm);
                touched[i] = true;
            }
        }
        let scored: Vec<(f64, usize)> = (0..self.ids.len()).filter(|&i| touched[i]).map(|i| (scores[i], i)).collect();
        Ok(to_hits(select_top(scored, k, &self.ids), &self.ids, &self.metas))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = OnDisk {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            index: self.clone(),
        };
        fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: OnDisk = serde_json::from_slice(&fs::read(path)?)?;
        if file.format != FORMAT || file.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported index file {} v{}",
                file.format, file.format_version
            )));
        }
        let mut index = file.index;
        index.version = index.digest()?;
        Ok(index)
    }
}

#[derive(Serialize, Deserialize)]
struct OnDisk {
    format: String,
    format_version: u32,
    index: LexicalIndex,
}
