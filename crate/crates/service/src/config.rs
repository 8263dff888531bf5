use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use finembed::corpus::Passage;
use finembed::encoder::load_checkpoint;
use finembed::index::{Bm25Params, LexicalIndex, VectorIndex};
use finembed::querygen::QueryPair;
use finembed::store::{read_jsonl, DocumentInfo, PassageStore};
use serde::{Deserialize, Serialize};

use crate::autocomplete::Autocomplete;
use crate::highlight::HighlightParams;
use crate::state::Snapshot;
use crate::{Result, ServiceError};

/// TOML service configuration. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    pub model: PathBuf,
    pub vector_index: PathBuf,
    pub lexical_index: PathBuf,
    /// JSONL of passages.
    pub passages: PathBuf,
    /// JSONL of document records (bodies optional).
    pub documents: PathBuf,
    /// JSONL of query pairs; only val/test queries are offered.
    #[serde(default)]
    pub autocomplete: Option<PathBuf>,
    /// Append-only JSONL request log.
    #[serde(default)]
    pub request_log: Option<PathBuf>,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub highlight: HighlightParams,
    /// Origins allowed by CORS; empty allows any.
    #[serde(default)]
    pub cors_origins: Vec<String>,
}

fn default_listen() -> SocketAddr {
    ([127, 0, 0, 1], 8080).into()
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&fs::read_to_string(path)?)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.model);
        fix(&mut self.vector_index);
        fix(&mut self.lexical_index);
        fix(&mut self.passages);
        fix(&mut self.documents);
        self.autocomplete.as_mut().map(fix);
        self.request_log.as_mut().map(fix);
    }

    /// Reads every artifact and checks that the vector index was built with
    /// the configured model.
    pub fn load_snapshot(&self) -> Result<Snapshot> {
        let model = load_checkpoint::<f64>(&self.model)?;
        let vector = VectorIndex::<f64>::load(&self.vector_index)?;
        if vector.model_version() != model.version {
            return Err(ServiceError::Config(format!(
                "vector index was built with model {} but the configured model is {}",
                vector.model_version(),
                model.version
            )));
        }
        let lexical = LexicalIndex::load(&self.lexical_index)?;
        let passages: Vec<Passage> = read_jsonl(&self.passages)?;
        let docs: Vec<DocumentInfo> = read_jsonl(&self.documents)?;
        let docs: HashMap<_, _> = docs.into_iter().map(|d| (d.id.clone(), d)).collect();
        let store = PassageStore::from_infos(passages, docs)?;
        let autocomplete = match &self.autocomplete {
            Some(p) => Autocomplete::from_pairs(&read_jsonl::<QueryPair>(p)?),
            None => Autocomplete::default(),
        };
        Ok(Snapshot {
            model,
            vector,
            lexical,
            store,
            autocomplete,
            bm25: self.bm25,
            highlight: self.highlight,
        })
    }
}
