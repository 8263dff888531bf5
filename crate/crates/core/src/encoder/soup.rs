//! Parameter-wise weighted averaging of compatible models.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::EncoderModel;

/// `base_weight · base + Σ each_weight · checkpoint_i`, evaluated as
/// `base + Σ each_weight · (checkpoint_i − base)` so that averaging a model
/// with copies of itself returns it bit for bit.
pub fn average_weights<T: Scalar>(
    base: &EncoderModel<T>,
    checkpoints: &[EncoderModel<T>],
    base_weight: f64,
    each_weight: f64,
) -> Result<EncoderModel<T>> {
    let total = base_weight + checkpoints.len() as f64 * each_weight;
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "weights must sum to 1: {base_weight} + {} x {each_weight} = {total}",
            checkpoints.len()
        )));
    }
    if !base_weight.is_finite() || !each_weight.is_finite() {
        return Err(Error::Config("weights must be finite".into()));
    }
    if let Some(bad) = checkpoints.iter().find(|c| !base.is_compatible(c)) {
        return Err(Error::Dimension {
            expected: format!("V={} d={} hash={}", base.vocab_size(), base.dim(), base.hash_seed()),
            found: format!("V={} d={} hash={} ({})", bad.vocab_size(), bad.dim(), bad.hash_seed(), bad.version),
        });
    }

    let w = T::lit(each_weight);
    let mut out = base.clone();
    for ck in checkpoints {
        for (o, (c, b)) in out.embeddings_mut().iter_mut().zip(ck.embeddings().iter().zip(base.embeddings())) {
            *o += w * (*c - *b);
        }
        for (o, (c, b)) in out.projection_mut().iter_mut().zip(ck.projection().iter().zip(base.projection())) {
            *o += w * (*c - *b);
        }
    }
    out.version = format!("soup({}:{base_weight}|{}x{each_weight})", base.version, checkpoints.len());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Role;

    type M = EncoderModel<f64>;

    #[test]
    fn self_soup_is_identity() {
        let m = M::new_random(200, 8, 1);
        let copies = vec![m.clone(); 5];
        let s = average_weights(&m, &copies, 0.5, 0.1).unwrap();
        assert_eq!(s.embeddings(), m.embeddings());
        assert_eq!(s.projection(), m.projection());
        assert_eq!(s.encode("probe text", Role::Query), m.encode("probe text", Role::Query));
    }

    #[test]
    fn two_model_mean() {
        let a = M::new_random(50, 4, 1);
        let b = M::new_random(50, 4, 2);
        let s = average_weights(&a, std::slice::from_ref(&b), 0.5, 0.5).unwrap();
        for k in 0..a.embeddings().len() {
            let mean = (a.embeddings()[k] + b.embeddings()[k]) / 2.0;
            assert!((s.embeddings()[k] - mean).abs() <= 1e-15 * mean.abs().max(1.0));
        }
        for k in 0..a.projection().len() {
            let mean = (a.projection()[k] + b.projection()[k]) / 2.0;
            assert!((s.projection()[k] - mean).abs() <= 1e-15 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn weights_must_sum_to_one() {
        let m = M::new_random(20, 4, 1);
        let copies = vec![m.clone(); 5];
        assert!(matches!(average_weights(&m, &copies, 0.5, 0.2), Err(Error::Config(_))));
        assert!(average_weights(&m, &copies[..4], 0.6, 0.1).is_ok());
    }

    #[test]
    fn shape_mismatch() {
        let m = M::new_random(20, 4, 1);
        let other = M::new_random(20, 8, 1);
        assert!(matches!(average_weights(&m, &[other], 0.5, 0.5), Err(Error::Dimension { .. })));
    }
}
