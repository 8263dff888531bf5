//! Minibatch SGD over query/passage pairs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::querygen::QueryPair;
use crate::scalar::Scalar;
use crate::store::PassageStore;

use super::loss::{infonce_loss, Candidate, ContrastiveExample, Gradients};
use super::EncoderModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Decays linearly from `learning_rate` at the first step towards zero
    /// at the last.
    #[default]
    Linear,
}

impl LrSchedule {
    /// Multiplier for 1-based `step` out of `total`.
    pub fn factor(self, step: usize, total: usize) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Linear => (total + 1 - step.min(total)) as f64 / total.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub temperature: f64,
    /// Mined negatives used per query, taken from the front of `hard_negative_ids`.
    pub hard_negatives_per_query: usize,
    pub seed: u64,
    /// Heavy-ball momentum; 0 is plain SGD.
    pub momentum: f64,
    pub lr_schedule: LrSchedule,
    /// Positions, in epochs, at which checkpoints are emitted. Empty means six
    /// evenly spaced points over the last half epoch.
    pub checkpoint_epochs: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 30,
            learning_rate: 0.2,
            temperature: 0.05,
            hard_negatives_per_query: 3,
            seed: 0,
            momentum: 0.0,
            lr_schedule: LrSchedule::Linear,
            checkpoint_epochs: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be positive".into()));
        }
        if self.hard_negatives_per_query == 0 && self.batch_size < 2 {
            return Err(Error::Config(
                "batch_size must be at least 2 without hard negatives".into(),
            ));
        }
        if self.hard_negatives_per_query > 3 {
            return Err(Error::Config("at most 3 hard negatives per query".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("learning_rate must be >= 0 and momentum in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn checkpoint_positions(&self) -> Vec<f64> {
        if !self.checkpoint_epochs.is_empty() {
            return self.checkpoint_epochs.clone();
        }
        let end = self.epochs as f64;
        let start = (end - 0.5).max(0.0);
        (0..6).map(|k| start + (end - start) * k as f64 / 5.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedCheckpoint<T: Scalar> {
    pub epoch: f64,
    pub step: usize,
    pub model: EncoderModel<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T: Scalar> {
    pub checkpoints: Vec<TrainedCheckpoint<T>>,
    pub step_losses: Vec<f64>,
    pub epoch_losses: Vec<f64>,
}

struct Resolved {
    query_id: String,
    query: String,
    positive: (String, String),
    negatives: Vec<(String, String)>,
}

fn resolve(pairs: &[QueryPair], store: &PassageStore, max_negatives: usize) -> Result<Vec<Resolved>> {
    pairs
        .iter()
        .map(|p| {
            let pos = store.require(&p.positive_passage_id)?;
            let negatives = p
                .hard_negative_ids
                .iter()
                .take(max_negatives)
                .map(|id| store.require(id).map(|n| (n.id.clone(), n.embedding_text())))
                .collect::<Result<Vec<_>>>()?;
            Ok(Resolved {
                query_id: p.query_id.clone(),
                query: p.query.clone(),
                positive: (pos.id.clone(), pos.embedding_text()),
                negatives,
            })
        })
        .collect()
}

fn apply<T: Scalar>(model: &mut EncoderModel<T>, grads: &Gradients<T>, lr: T) {
    let d = model.dim();
    let table = model.embeddings_mut();
    for (&row, g) in &grads.embeddings {
        let start = row as usize * d;
        for (p, gi) in table[start..start + d].iter_mut().zip(g) {
            *p -= lr * *gi;
        }
    }
    for (p, gi) in model.projection_mut().iter_mut().zip(&grads.projection) {
        *p -= lr * *gi;
    }
}

struct Momentum<T> {
    mu: T,
    table: Vec<T>,
    projection: Vec<T>,
}

impl<T: Scalar> Momentum<T> {
    fn step(&mut self, model: &mut EncoderModel<T>, grads: &Gradients<T>, lr: T) {
        let d = model.dim();
        self.table.iter_mut().for_each(|v| *v *= self.mu);
        for (&row, g) in &grads.embeddings {
            let start = row as usize * d;
            for (v, gi) in self.table[start..start + d].iter_mut().zip(g) {
                *v += *gi;
            }
        }
        for (v, gi) in self.projection.iter_mut().zip(&grads.projection) {
            *v = self.mu * *v + *gi;
        }
        for (p, v) in model.embeddings_mut().iter_mut().zip(&self.table) {
            *p -= lr * *v;
        }
        for (p, v) in model.projection_mut().iter_mut().zip(&self.projection) {
            *p -= lr * *v;
        }
    }
}

/// Trains `model` in place on `pairs` (the caller selects the split) and
/// returns the emitted checkpoints and the loss trajectory.
pub fn train<T: Scalar>(
    model: &mut EncoderModel<T>,
    pairs: &[QueryPair],
    store: &PassageStore,
    cfg: &TrainConfig,
) -> Result<TrainReport<T>> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let data = resolve(pairs, store, cfg.hard_negatives_per_query)?;
    let tau = T::lit(cfg.temperature);
    let steps_per_epoch = data.len().div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let mut targets: Vec<(usize, f64)> = cfg
        .checkpoint_positions()
        .into_iter()
        .map(|e| (((e * steps_per_epoch as f64).round() as usize).clamp(1, total_steps), e))
        .collect();
    targets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut momentum = (cfg.momentum > 0.0).then(|| Momentum {
        mu: T::lit(cfg.momentum),
        table: vec![T::zero(); model.embeddings().len()],
        projection: vec![T::zero(); model.projection().len()],
    });
    let base_version = model.version.clone();
    let mut report = TrainReport {
        checkpoints: Vec::new(),
        step_losses: Vec::with_capacity(total_steps),
        epoch_losses: Vec::with_capacity(cfg.epochs),
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut step = 0usize;
    let mut next_target = 0usize;

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(epoch as u64));
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let mut epoch_steps = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            step += 1;
            let batch: Vec<ContrastiveExample> = chunk
                .iter()
                .map(|&i| {
                    let r = &data[i];
                    ContrastiveExample {
                        query: &r.query,
                        positive: Candidate {
                            id: &r.positive.0,
                            text: &r.positive.1,
                        },
                        hard_negatives: r
                            .negatives
                            .iter()
                            .map(|(id, text)| Candidate { id, text })
                            .collect(),
                    }
                })
                .collect();
            let has_negatives = batch.len() > 1 || batch.iter().any(|b| !b.hard_negatives.is_empty());
            if has_negatives {
                let out = infonce_loss(model, &batch, tau)?;
                let loss = out.loss.to_f64_lossy();
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        step,
                        batch: chunk.iter().map(|&i| data[i].query_id.clone()).collect(),
                    });
                }
                log::debug!("epoch {epoch} step {step} loss {loss:.5}");
                report.step_losses.push(loss);
                epoch_sum += loss;
                epoch_steps += 1;
                let lr = T::lit(cfg.learning_rate * cfg.lr_schedule.factor(step, total_steps));
                match momentum.as_mut() {
                    Some(m) => m.step(model, &out.gradients, lr),
                    None => apply(model, &out.gradients, lr),
                }
            }
            while next_target < targets.len() && targets[next_target].0 == step {
                let epoch_pos = targets[next_target].1;
                let mut snapshot = model.clone();
                snapshot.version = format!("{base_version}+ep{epoch_pos:.2}");
                report.checkpoints.push(TrainedCheckpoint {
                    epoch: epoch_pos,
                    step,
                    model: snapshot,
                });
                next_target += 1;
            }
        }
        let mean = if epoch_steps > 0 { epoch_sum / epoch_steps as f64 } else { 0.0 };
        log::info!("epoch {} mean loss {mean:.5}", epoch + 1);
        report.epoch_losses.push(mean);
    }
    model.version = format!("{base_version}+ep{}", cfg.epochs);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_schedule_ends_near_zero() {
        let s = LrSchedule::Linear;
        assert_eq!(s.factor(1, 4), 1.0);
        assert_eq!(s.factor(4, 4), 0.25);
        assert_eq!(LrSchedule::Constant.factor(4, 4), 1.0);
    }
}
