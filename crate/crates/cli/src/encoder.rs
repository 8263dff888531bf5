use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use finembed::encoder::{average_weights, load_checkpoint, save_checkpoint, train, TrainConfig};
use finembed::querygen::Split;
use finembed::Encoder;

use crate::io::{load_pairs, load_store, read_json_or_default, select_split, write_json};
use crate::EncoderCmd;

/// Checkpoint files named by `inputs`: directories contribute their
/// `ckpt-*.ckpt` files in name order.
fn checkpoint_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("ckpt-") && n.ends_with(".ckpt"))
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn save(model: &Encoder, path: &Path) -> Result<()> {
    save_checkpoint(model, path).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cmd: EncoderCmd) -> Result<()> {
    match cmd {
        EncoderCmd::Train {
            data,
            store,
            config,
            out,
            init,
            vocab_size,
            dim,
            init_seed,
            epochs,
            lr,
            hard_negatives,
            seed,
        } => {
            let store = load_store(&store)?;
            let pairs = select_split(&load_pairs(&data)?, Some(Split::Train));
            let mut cfg: TrainConfig = read_json_or_default(config.as_deref())?;
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(l) = lr {
                cfg.learning_rate = l;
            }
            if let Some(h) = hard_negatives {
                cfg.hard_negatives_per_query = h;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let mut model = match init {
                Some(p) => load_checkpoint::<f64>(&p).with_context(|| format!("reading {}", p.display()))?,
                None => Encoder::new_random(vocab_size, dim, init_seed),
            };
            log::info!("training on {} pairs: {cfg:?}", pairs.len());
            let report = train(&mut model, &pairs, &store, &cfg)?;
            fs::create_dir_all(&out)?;
            save(&model, &out.join("model.ckpt"))?;
            for (i, ck) in report.checkpoints.iter().enumerate() {
                save(&ck.model, &out.join(format!("ckpt-{i:02}-ep{:.3}.ckpt", ck.epoch)))?;
            }
            write_json(
                &out.join("losses.json"),
                &serde_json::json!({ "epoch_losses": report.epoch_losses, "step_losses": report.step_losses }),
            )?;
            write_json(&out.join("train_config.json"), &cfg)?;
            println!(
                "trained {} on {} pairs; final epoch loss {:.4}; {} checkpoints in {}",
                model.version,
                pairs.len(),
                report.epoch_losses.last().copied().unwrap_or(f64::NAN),
                report.checkpoints.len(),
                out.display()
            );
        }
        EncoderCmd::Soup { base, ckpts, base_weight, each_weight, out } => {
            let base_model = load_checkpoint::<f64>(&base).with_context(|| format!("reading {}", base.display()))?;
            let files = checkpoint_files(&ckpts)?;
            if files.is_empty() {
                bail!("no checkpoints found in {ckpts:?}");
            }
            let models = files
                .iter()
                .map(|f| load_checkpoint::<f64>(f).with_context(|| format!("reading {}", f.display())))
                .collect::<Result<Vec<_>>>()?;
            let each_weight = each_weight.unwrap_or((1.0 - base_weight) / models.len() as f64);
            let soup = average_weights(&base_model, &models, base_weight, each_weight)?;
            save(&soup, &out)?;
            println!("averaged {} checkpoints into {} ({})", models.len(), out.display(), soup.version);
        }
    }
    Ok(())
}
