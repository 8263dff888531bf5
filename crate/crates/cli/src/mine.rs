use anyhow::{Context, Result};
use finembed::encoder::load_checkpoint;
use finembed::mining::{mine, MiningConfig};
use finembed::store::write_jsonl;

use crate::io::{ensure_parent, load_pairs, load_store, parse_split, select_split};
use crate::MineArgs;

pub fn run(args: MineArgs) -> Result<()> {
    let store = load_store(&args.store)?;
    let model = load_checkpoint::<f64>(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let pairs = select_split(&load_pairs(&args.pairs)?, parse_split(&args.split)?);
    let cfg = MiningConfig { top_k: args.top_k, rank_offset: args.offset, negatives_per_query: args.count };
    let mined = mine(&model, &pairs, &store, &cfg)?;
    ensure_parent(&args.out)?;
    write_jsonl(&args.out, &mined.pairs)?;
    if let Some(path) = &args.dropped {
        ensure_parent(path)?;
        write_jsonl(path, &mined.dropped)?;
    }
    println!(
        "mined {} pairs, dropped {} whose positive ranked below {}",
        mined.pairs.len(),
        mined.dropped.len(),
        cfg.top_k
    );
    Ok(())
}
