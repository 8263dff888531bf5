use std::sync::{Arc, RwLock};

use finembed::index::{build_lexical_index, build_vector_index, Analyzer, Bm25Params, HnswParams, LexicalIndex, VectorIndex};
use finembed::querygen::QueryPair;
use finembed::store::PassageStore;
use finembed::Encoder;

use crate::autocomplete::Autocomplete;
use crate::highlight::HighlightParams;

/// Everything one request reads. Immutable once published.
#[derive(Debug)]
pub struct Snapshot {
    pub model: Encoder,
    pub vector: VectorIndex<f64>,
    pub lexical: LexicalIndex,
    pub store: PassageStore,
    pub autocomplete: Autocomplete,
    pub bm25: Bm25Params,
    pub highlight: HighlightParams,
}

impl Snapshot {
    /// Builds both indices in memory (the vector index with an HNSW graph)
    /// and the autocomplete list from the held-out splits of `pairs`.
    pub fn build(model: Encoder, store: PassageStore, pairs: &[QueryPair]) -> finembed::Result<Self> {
        let vector = build_vector_index(&model, &store, Some(HnswParams::default()))?;
        let lexical = build_lexical_index(&store, Analyzer::default())?;
        Ok(Self {
            model,
            vector,
            lexical,
            store,
            autocomplete: Autocomplete::from_pairs(pairs),
            bm25: Bm25Params::default(),
            highlight: HighlightParams::default(),
        })
    }

    /// Combined tag of both indices, reported with every search response.
    pub fn index_version(&self) -> String {
        format!("{}+{}", self.vector.version(), self.lexical.version())
    }
}

/// Holder of the current snapshot. Requests clone the `Arc` and never see a
/// half-published reload.
#[derive(Debug, Default, Clone)]
pub struct AppState {
    current: Arc<RwLock<Option<Arc<Snapshot>>>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_snapshot(snapshot: Snapshot) -> Self {
        let s = Self::new();
        s.publish(snapshot);
        s
    }

    pub fn publish(&self, snapshot: Snapshot) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(snapshot));
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}
