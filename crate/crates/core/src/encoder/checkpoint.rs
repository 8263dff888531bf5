//! Binary checkpoint container.
//!
//! Layout: `b"FEMB"`, a little-endian `u32` format version, a `u32` header
//! length, the JSON header, then the embedding table followed by the
//! projection as little-endian scalars. The header carries a SHA-256 of the
//! payload, so truncation or bit rot is reported as a checksum error.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::EncoderModel;

const MAGIC: &[u8; 4] = b"FEMB";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub vocab_size: usize,
    pub dim: usize,
    pub hash_seed: u64,
    pub version: String,
    pub scalar: String,
    pub sha256: String,
}

pub fn encode_checkpoint<T: Scalar>(model: &EncoderModel<T>) -> Result<Vec<u8>> {
    let mut payload = Vec::with_capacity((model.embeddings().len() + model.projection().len()) * T::BYTES);
    for v in model.embeddings().iter().chain(model.projection()) {
        v.write_le(&mut payload);
    }
    let header = CheckpointHeader {
        vocab_size: model.vocab_size(),
        dim: model.dim(),
        hash_seed: model.hash_seed(),
        version: model.version.clone(),
        scalar: T::TAG.to_owned(),
        sha256: hex::encode(Sha256::digest(&payload)),
    };
    let header = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
}

/// Parses only the header, without touching the payload.
pub fn read_header(bytes: &[u8]) -> Result<(CheckpointHeader, usize)> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Checksum("not a checkpoint file (bad magic or too short)".into()));
    }
    let format = u32_at(bytes, 4).expect("length checked");
    if format != FORMAT_VERSION {
        return Err(Error::Data(format!("unsupported checkpoint format {format}")));
    }
    let len = u32_at(bytes, 8).expect("length checked") as usize;
    let raw = bytes
        .get(12..12 + len)
        .ok_or_else(|| Error::Checksum("checkpoint header truncated".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(raw).map_err(|e| Error::Checksum(format!("corrupt checkpoint header: {e}")))?;
    Ok((header, 12 + len))
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<EncoderModel<T>> {
    let (header, start) = read_header(bytes)?;
    let payload = &bytes[start..];
    let digest = hex::encode(Sha256::digest(payload));
    if digest != header.sha256 {
        return Err(Error::Checksum(format!(
            "payload digest {digest} does not match header {}",
            header.sha256
        )));
    }
    if header.scalar != T::TAG {
        return Err(Error::Dimension {
            expected: format!("{} parameters", T::TAG),
            found: format!("{} parameters", header.scalar),
        });
    }
    let n_embed = header.vocab_size * header.dim;
    let n_proj = header.dim * header.dim;
    if payload.len() != (n_embed + n_proj) * T::BYTES {
        return Err(Error::Dimension {
            expected: format!("{} payload bytes", (n_embed + n_proj) * T::BYTES),
            found: format!("{}", payload.len()),
        });
    }
    let mut values = payload.chunks_exact(T::BYTES).map(T::read_le);
    let embeddings: Vec<T> = values.by_ref().take(n_embed).collect();
    let projection: Vec<T> = values.collect();
    EncoderModel::from_parts(header.vocab_size, header.dim, header.hash_seed, embeddings, projection, header.version)
}

pub fn save_checkpoint<T: Scalar>(model: &EncoderModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_checkpoint(model)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<EncoderModel<T>> {
    decode_checkpoint(&fs::read(path)?)
}

/// Loads a checkpoint and checks it against the dimension the caller was
/// configured for.
pub fn load_checkpoint_expecting<T: Scalar>(path: impl AsRef<Path>, dim: usize) -> Result<EncoderModel<T>> {
    let model = load_checkpoint(path)?;
    if model.dim() != dim {
        return Err(Error::Dimension {
            expected: format!("d={dim}"),
            found: format!("d={}", model.dim()),
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Role;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = EncoderModel::<f64>::new_random(500, 16, 3);
        save_checkpoint(&m, &path).unwrap();
        let back: EncoderModel<f64> = load_checkpoint(&path).unwrap();
        assert_eq!(back, m);
        let probe = "Acme raised guidance";
        assert_eq!(back.encode(probe, Role::Query), m.encode(probe, Role::Query));
    }

    #[test]
    fn f32_round_trip() {
        let m = EncoderModel::<f32>::new_random(100, 8, 3);
        let back: EncoderModel<f32> = decode_checkpoint(&encode_checkpoint(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(matches!(
            decode_checkpoint::<f64>(&encode_checkpoint(&m).unwrap()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn truncation_is_checksum_error() {
        let bytes = encode_checkpoint(&EncoderModel::<f64>::new_random(100, 8, 1)).unwrap();
        for cut in [bytes.len() - 1, bytes.len() / 2, 20, 3] {
            assert!(
                matches!(decode_checkpoint::<f64>(&bytes[..cut]), Err(Error::Checksum(_))),
                "cut at {cut}"
            );
        }
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(decode_checkpoint::<f64>(&flipped), Err(Error::Checksum(_))));
    }

    #[test]
    fn wrong_dimension() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&EncoderModel::<f64>::new_random(64, 64, 1), &path).unwrap();
        assert!(matches!(load_checkpoint_expecting::<f64>(&path, 32), Err(Error::Dimension { .. })));
        assert!(load_checkpoint_expecting::<f64>(&path, 64).is_ok());
    }
}
