use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::Embedding;
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::store::PassageMeta;

use super::hnsw::{Hnsw, HnswParams};
use super::{check_k, select_top, to_hits, RankedHit, SearchFilter};

const FORMAT: &str = "finembed-vector-index";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Exact,
    Approximate,
}

/// Embeddings of a passage corpus plus their filterable metadata. Entries are
/// stored sorted by passage id.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex<T: Scalar> {
    dim: usize,
    ids: Vec<String>,
    metas: Vec<PassageMeta>,
    vectors: Vec<T>,
    graph: Option<Hnsw>,
    model_version: String,
    version: String,
}

impl<T: Scalar> VectorIndex<T> {
    /// `approximate` adds an HNSW graph; without it approximate queries fall
    /// back to a full scan.
    pub fn build(
        dim: usize,
        entries: Vec<(String, Embedding<T>, PassageMeta)>,
        model_version: impl Into<String>,
        approximate: Option<HnswParams>,
    ) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateId(w[0].0.clone()));
        }
        let mut vectors = Vec::with_capacity(entries.len() * dim);
        let mut ids = Vec::with_capacity(entries.len());
        let mut metas = Vec::with_capacity(entries.len());
        for (id, emb, meta) in entries {
            if emb.dim() != dim {
                return Err(Error::Dimension {
                    expected: format!("d={dim}"),
                    found: format!("d={} for passage {id}", emb.dim()),
                });
            }
            vectors.extend_from_slice(emb.as_slice());
            ids.push(id);
            metas.push(meta);
        }
        let graph = approximate.map(|p| Hnsw::build(&vectors, dim, p));
        let model_version = model_version.into();
        let version = digest(&model_version, &ids, &vectors);
        Ok(Self {
            dim,
            ids,
            metas,
            vectors,
            graph,
            model_version,
            version,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn model_version(&self) -> &str {
        &self.model_version
    }

    /// Content digest: changes whenever the model tag, ids or vectors change.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn has_graph(&self) -> bool {
        self.graph.is_some()
    }

    pub fn vector(&self, i: usize) -> &[T] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn meta(&self, i: usize) -> &PassageMeta {
        &self.metas[i]
    }

    pub fn knn(&self, query: &Embedding<T>, k: usize, filter: &SearchFilter, mode: SearchMode) -> Result<Vec<RankedHit>> {
        check_k(k)?;
        filter.validate()?;
        if query.dim() != self.dim && !self.is_empty() {
            return Err(Error::Dimension {
                expected: format!("d={}", self.dim),
                found: format!("query d={}", query.dim()),
            });
        }
        let q = query.as_slice();
        let top = match (&self.graph, mode) {
            (Some(g), SearchMode::Approximate) => self.approximate(g, q, k, filter),
            _ => self.exact(q, k, filter),
        };
        Ok(to_hits(top, &self.ids, &self.metas))
    }

    fn exact(&self, q: &[T], k: usize, filter: &SearchFilter) -> Vec<(f64, usize)> {
        let all = filter.is_empty();
        let scored: Vec<(T, usize)> = (0..self.len())
            .filter(|&i| all || filter.matches(&self.metas[i]))
            .map(|i| (dot(q, self.vector(i)), i))
            .collect();
        select_top(scored, k, &self.ids)
            .into_iter()
            .map(|(s, i)| (s.to_f64_lossy(), i))
            .collect()
    }

    fn approximate(&self, g: &Hnsw, q: &[T], k: usize, filter: &SearchFilter) -> Vec<(f64, usize)> {
        let ef = g.params.ef_search.max(k);
        if filter.is_empty() {
            let found = g.search(&self.vectors, self.dim, q, ef, None);
            return self.rescore(found.into_iter().map(|s| s.id as usize), q, k);
        }
        let allowed: Vec<bool> = self.metas.iter().map(|m| filter.matches(m)).collect();
        let n_allowed = allowed.iter().filter(|&&a| a).count();
        // A selective filter leaves the graph too sparse to navigate; scanning
        // the survivors is both exact and cheap.
        if n_allowed <= 4 * ef || n_allowed * 5 < self.len() {
            return self.exact(q, k, filter);
        }
        let pred = |id: u32| allowed[id as usize];
        let found = g.search(&self.vectors, self.dim, q, ef, Some(&pred));
        self.rescore(found.into_iter().map(|s| s.id as usize), q, k)
    }

    /// Scores with the native scalar so approximate and exact hits agree bitwise.
    fn rescore(&self, idx: impl Iterator<Item = usize>, q: &[T], k: usize) -> Vec<(f64, usize)> {
        let scored: Vec<(T, usize)> = idx.map(|i| (dot(q, self.vector(i)), i)).collect();
        select_top(scored, k, &self.ids)
            .into_iter()
            .map(|(s, i)| (s.to_f64_lossy(), i))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = OnDisk {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            scalar: T::TAG.into(),
            dim: self.dim,
            model_version: self.model_version.clone(),
            version: self.version.clone(),
            ids: self.ids.clone(),
            metas: self.metas.clone(),
            vectors: self.vectors.iter().map(|v| v.to_f64_lossy()).collect(),
            graph: self.graph.clone(),
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
        if file.scalar != T::TAG {
            return Err(Error::Dimension {
                expected: T::TAG.into(),
                found: file.scalar,
            });
        }
        if file.vectors.len() != file.ids.len() * file.dim || file.metas.len() != file.ids.len() {
            return Err(Error::Data("index file arrays disagree in length".into()));
        }
        let vectors: Vec<T> = file.vectors.iter().map(|&v| T::lit(v)).collect();
        let version = digest(&file.model_version, &file.ids, &vectors);
        if version != file.version {
            return Err(Error::Checksum(format!("index digest {version} != recorded {}", file.version)));
        }
        Ok(Self {
            dim: file.dim,
            ids: file.ids,
            metas: file.metas,
            vectors,
            graph: file.graph,
            model_version: file.model_version,
            version,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct OnDisk {
    format: String,
    format_version: u32,
    scalar: String,
    dim: usize,
    model_version: String,
    version: String,
    ids: Vec<String>,
    metas: Vec<PassageMeta>,
    vectors: Vec<f64>,
    graph: Option<Hnsw>,
}

fn digest<T: Scalar>(model_version: &str, ids: &[String], vectors: &[T]) -> String {
    let mut h = Sha256::new();
    h.update(model_version.as_bytes());
    for id in ids {
        h.update(id.as_bytes());
        h.update([0]);
    }
    let mut buf = Vec::with_capacity(vectors.len() * T::BYTES);
    for v in vectors {
        v.write_le(&mut buf);
    }
    h.update(&buf);
    format!("v{}-{}", FORMAT_VERSION, &hex::encode(h.finalize())[..12])
}
