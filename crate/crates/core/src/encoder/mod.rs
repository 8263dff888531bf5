//! Hashed-vocabulary embedding-bag encoder.
//!
//! `encode(text)` tokenizes `"<role prefix>" + text`, averages the embedding
//! rows of the tokens, multiplies by a square projection and L2-normalizes.
//! Because pooling is a plain mean, any contiguous token range of a passage
//! can be embedded on its own with [`EncoderModel::encode_span`].

pub mod checkpoint;
pub mod loss;
pub mod soup;
pub mod train;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, l2_norm, Scalar};
use crate::text::Tokenizer;

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint};
pub use loss::{infonce_loss, infonce_value, Candidate, ContrastiveExample, Gradients, LossOutput};
pub use soup::average_weights;
pub use train::{train, LrSchedule, TrainConfig, TrainReport, TrainedCheckpoint};

pub const DEFAULT_VOCAB_SIZE: usize = 32_768;
pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_HASH_SEED: u64 = 0x6669_6e65_6d62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Query,
    Passage,
}

impl Role {
    pub fn prefix(self) -> &'static str {
        match self {
            Role::Query => "query: ",
            Role::Passage => "passage: ",
        }
    }
}

/// Unit-length embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    vector: Vec<T>,
}

impl<T: Scalar> Embedding<T> {
    /// Normalizes `v`. A zero or non-finite vector maps to the first basis vector.
    pub fn from_unnormalized(mut v: Vec<T>) -> Self {
        let norm = l2_norm(&v);
        if norm > T::zero() && norm.is_finite() {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            v.iter_mut().for_each(|x| *x = T::zero());
            if let Some(first) = v.first_mut() {
                *first = T::one();
            }
        }
        Self { vector: v }
    }

    /// Wraps an already-normalized vector without touching its bits; rejects
    /// vectors whose norm is off by more than 1e-6.
    pub fn from_unit(v: Vec<T>) -> Result<Self> {
        let norm = l2_norm(&v).to_f64_lossy();
        if v.is_empty() || !((norm - 1.0).abs() <= 1e-6) {
            return Err(Error::Data(format!("embedding is not unit length (norm {norm})")));
        }
        Ok(Self { vector: v })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.vector
    }

    pub fn into_vec(self) -> Vec<T> {
        self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn similarity(&self, other: &Self) -> T {
        similarity(self, other)
    }

    pub fn neg(&self) -> Self {
        Self {
            vector: self.vector.iter().map(|x| -*x).collect(),
        }
    }
}

/// Cosine similarity of two unit vectors (their dot product).
pub fn similarity<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> T {
    assert_eq!(a.dim(), b.dim(), "embedding dimensions differ");
    dot(&a.vector, &b.vector)
}

/// Embedding table `vocab_size × dim` plus a `dim × dim` projection, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<T: Scalar> {
    tokenizer: Tokenizer,
    dim: usize,
    embeddings: Vec<T>,
    projection: Vec<T>,
    pub version: String,
}

impl<T: Scalar> EncoderModel<T> {
    /// Gaussian embedding rows with expected unit norm; projection is the
    /// identity plus small Gaussian noise.
    pub fn new_random(vocab_size: usize, dim: usize, seed: u64) -> Self {
        Self::new_random_with_hash(vocab_size, dim, DEFAULT_HASH_SEED, seed)
    }

    pub fn new_random_with_hash(vocab_size: usize, dim: usize, hash_seed: u64, seed: u64) -> Self {
        assert!(vocab_size > 0 && dim > 0, "model shape must be non-empty");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("valid std");
        let embeddings = (0..vocab_size * dim).map(|_| T::lit(row.sample(&mut rng))).collect();
        let noise = Normal::new(0.0, 0.1 / (dim as f64).sqrt()).expect("valid std");
        let projection = (0..dim * dim)
            .map(|k| {
                let eye = if k / dim == k % dim { 1.0 } else { 0.0 };
                T::lit(eye + noise.sample(&mut rng))
            })
            .collect();
        Self {
            tokenizer: Tokenizer::new(vocab_size, hash_seed),
            dim,
            embeddings,
            projection,
            version: format!("init-{seed}"),
        }
    }

    pub fn from_parts(
        vocab_size: usize,
        dim: usize,
        hash_seed: u64,
        embeddings: Vec<T>,
        projection: Vec<T>,
        version: impl Into<String>,
    ) -> Result<Self> {
        if vocab_size == 0 || dim == 0 {
            return Err(Error::Config("vocab_size and dim must be positive".into()));
        }
        if embeddings.len() != vocab_size * dim || projection.len() != dim * dim {
            return Err(Error::Dimension {
                expected: format!("{} + {} parameters", vocab_size * dim, dim * dim),
                found: format!("{} + {}", embeddings.len(), projection.len()),
            });
        }
        if embeddings.iter().chain(&projection).any(|x| !x.is_finite()) {
            return Err(Error::Data("model parameters must be finite".into()));
        }
        Ok(Self {
            tokenizer: Tokenizer::new(vocab_size, hash_seed),
            dim,
            embeddings,
            projection,
            version: version.into(),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokenizer.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hash_seed(&self) -> u64 {
        self.tokenizer.seed
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn embeddings(&self) -> &[T] {
        &self.embeddings
    }

    pub fn projection(&self) -> &[T] {
        &self.projection
    }

    pub fn embeddings_mut(&mut self) -> &mut [T] {
        &mut self.embeddings
    }

    pub fn projection_mut(&mut self) -> &mut [T] {
        &mut self.projection
    }

    pub fn row(&self, token: u32) -> &[T] {
        let s = token as usize * self.dim;
        &self.embeddings[s..s + self.dim]
    }

    /// Same vocabulary size, hash seed and dimension.
    pub fn is_compatible(&self, other: &Self) -> bool {
        self.tokenizer == other.tokenizer && self.dim == other.dim
    }

    pub fn tokens(&self, text: &str, role: Role) -> Vec<u32> {
        let mut t = self.tokenizer.tokenize(role.prefix());
        t.extend(self.tokenizer.tokenize(text));
        t
    }

    /// Mean of the embedding rows of `tokens`.
    pub fn pool(&self, tokens: &[u32]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.dim];
        for &t in tokens {
            for (a, x) in acc.iter_mut().zip(self.row(t)) {
                *a += *x;
            }
        }
        let n = T::from_usize(tokens.len().max(1)).expect("token count fits");
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// `projection · pooled`.
    pub fn project(&self, pooled: &[T]) -> Vec<T> {
        self.projection
            .chunks_exact(self.dim)
            .map(|row| dot(row, pooled))
            .collect()
    }

    pub fn encode_tokens(&self, tokens: &[u32]) -> Embedding<T> {
        Embedding::from_unnormalized(self.project(&self.pool(tokens)))
    }

    pub fn encode(&self, text: &str, role: Role) -> Embedding<T> {
        self.encode_tokens(&self.tokens(text, role))
    }

    /// Embeds a sub-range of the passage-role token sequence of
    /// `passage_text`. Index 0 is the `passage:` prefix token, so the range
    /// `0..len` reproduces [`encode`](Self::encode).
    pub fn encode_span(&self, passage_text: &str, range: Range<usize>) -> Result<Embedding<T>> {
        let tokens = self.tokens(passage_text, Role::Passage);
        if range.start >= range.end || range.end > tokens.len() {
            return Err(Error::Range {
                start: range.start,
                end: range.end,
                len: tokens.len(),
            });
        }
        Ok(self.encode_tokens(&tokens[range]))
    }

    /// Number of prefix tokens for a role.
    pub fn prefix_len(&self, role: Role) -> usize {
        self.tokenizer.tokenize(role.prefix()).len()
    }

    pub fn encode_batch<S: AsRef<str> + Sync>(&self, texts: &[S], role: Role) -> Vec<Embedding<T>> {
        texts.par_iter().map(|t| self.encode(t.as_ref(), role)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.embeddings.iter().chain(&self.projection).all(|x| x.is_finite())
    }
}
