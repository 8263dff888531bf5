pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod index;
pub mod mining;
pub mod querygen;
pub mod scalar;
pub mod store;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision encoder; the default used by the CLI and service.
pub type Encoder = encoder::EncoderModel<f64>;
/// Single-precision encoder for large embedding tables.
pub type Encoder32 = encoder::EncoderModel<f32>;
pub type Embedding = encoder::Embedding<f64>;
