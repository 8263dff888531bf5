use serde::{Deserialize, Serialize};

use crate::encoder::{train, EncoderModel, TrainConfig, DEFAULT_HASH_SEED};
use crate::error::Result;
use crate::mining::{mine, MiningConfig};
use crate::querygen::QueryPair;
use crate::scalar::Scalar;
use crate::store::PassageStore;
use crate::text::fnv1a;

use super::{check_contamination, digest_of, run_retrieval_eval, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub hard_negatives: usize,
    pub data_fraction: f64,
}

impl AblationConfig {
    /// Every combination of {0, 1, 3} hard negatives and {0.37, 1.0} of the data.
    pub fn full_grid() -> Vec<Self> {
        let mut out = Vec::new();
        for hard_negatives in [0, 1, 3] {
            for data_fraction in [0.37, 1.0] {
                out.push(Self {
                    hard_negatives,
                    data_fraction,
                });
            }
        }
        out
    }

    pub fn label(&self) -> String {
        format!("hn={} frac={:.2}", self.hard_negatives, self.data_fraction)
    }
}

/// Settings shared by every run in an ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationSettings {
    pub train: TrainConfig,
    pub mining: MiningConfig,
    /// Document fraction used to train the preliminary (no hard negative)
    /// mining model.
    pub mining_fraction: f64,
    pub vocab_size: usize,
    pub dim: usize,
    pub seed: u64,
    pub ks: Vec<usize>,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            mining: MiningConfig::default(),
            mining_fraction: 0.37,
            vocab_size: crate::encoder::DEFAULT_VOCAB_SIZE,
            dim: crate::encoder::DEFAULT_DIM,
            seed: 0,
            ks: super::DEFAULT_KS.to_vec(),
        }
    }
}

/// Keeps the pairs whose positive document hashes below `fraction`. The
/// selection is nested: a smaller fraction keeps a subset of a larger one.
pub fn subsample_by_document(pairs: &[QueryPair], store: &PassageStore, fraction: f64, seed: u64) -> Vec<QueryPair> {
    if fraction >= 1.0 {
        return pairs.to_vec();
    }
    pairs
        .iter()
        .filter(|p| {
            let doc = store.get(&p.positive_passage_id).map_or(p.positive_passage_id.as_str(), |x| x.doc_id.as_str());
            let u = (fnv1a(seed ^ 0xab1a, doc.as_bytes()) >> 11) as f64 / (1u64 << 53) as f64;
            u < fraction
        })
        .cloned()
        .collect()
}

/// Trains and evaluates one model per configuration from the same random
/// initialization and shuffle seed.
///
/// When any configuration uses hard negatives, a preliminary model (no hard
/// negatives, `mining_fraction` of the documents) mines the training set
/// first. Mining drops pairs whose positive falls outside `top_k`, and every
/// configuration then trains on the surviving pairs, so arms differ only in
/// the negatives they use and the data fraction.
pub fn run_ablations<T: Scalar>(
    train_pairs: &[QueryPair],
    test_pairs: &[QueryPair],
    store: &PassageStore,
    configs: &[AblationConfig],
    settings: &AblationSettings,
) -> Result<Vec<EvalReport>> {
    check_contamination(train_pairs, test_pairs, store)?;
    let init = || {
        let mut m = EncoderModel::<T>::new_random_with_hash(settings.vocab_size, settings.dim, DEFAULT_HASH_SEED, settings.seed);
        m.version = format!("ablation-init-{}", settings.seed);
        m
    };
    let fit = |pairs: &[QueryPair], hn: usize| -> Result<EncoderModel<T>> {
        let mut model = init();
        let cfg = TrainConfig {
            hard_negatives_per_query: hn,
            seed: settings.seed,
            ..settings.train.clone()
        };
        train(&mut model, pairs, store, &cfg)?;
        Ok(model)
    };

    let mined = if configs.iter().any(|c| c.hard_negatives > 0) {
        let prelim_pairs = subsample_by_document(train_pairs, store, settings.mining_fraction, settings.seed);
        let prelim = fit(&prelim_pairs, 0)?;
        let out = mine(&prelim, train_pairs, store, &settings.mining)?;
        log::info!("ablation mining kept {} of {} pairs", out.pairs.len(), train_pairs.len());
        Some(out.pairs)
    } else {
        None
    };

    configs
        .iter()
        .map(|c| {
            let source = mined.as_deref().unwrap_or(train_pairs);
            let pairs = subsample_by_document(source, store, c.data_fraction, settings.seed);
            log::info!("ablation {}: {} training pairs", c.label(), pairs.len());
            let model = fit(&pairs, c.hard_negatives)?;
            let mut report = run_retrieval_eval(&model, test_pairs, train_pairs, store, &settings.ks, &c.label())?;
            report.config_digest = digest_of(&(c, settings, &report.config_digest));
            Ok(report)
        })
        .collect()
}
