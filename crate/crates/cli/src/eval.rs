use anyhow::{Context, Result};
use finembed::encoder::load_checkpoint;
use finembed::eval::{
    build_exact_index, length_stratified_compare, reports_to_csv, run_ablations, run_retrieval_eval, AblationConfig,
    AblationSettings, EvalReport, LengthConfig, Level, RetrievalMode,
};
use finembed::index::{build_lexical_index, Analyzer};
use finembed::querygen::Split;

use crate::io::{ensure_parent, load_pairs, load_store, parse_split, read_json_or_default, select_split, write_json};
use crate::EvalCmd;

fn print_report(r: &EvalReport) {
    let cells: Vec<String> = r
        .passage_recall
        .keys()
        .map(|&k| {
            format!(
                "R@{k} {:.3}/{:.3}",
                r.recall(k, Level::Passage).unwrap_or(f64::NAN),
                r.recall(k, Level::Document).unwrap_or(f64::NAN)
            )
        })
        .collect();
    println!("{:<20} {}  (passage/document, {} queries)", r.label, cells.join("  "), r.queries);
}

pub fn run(cmd: EvalCmd) -> Result<()> {
    match cmd {
        EvalCmd::Run { model, pairs, store, split, ks, label, out } => {
            let store = load_store(&store)?;
            let model = load_checkpoint::<f64>(&model).with_context(|| format!("reading {}", model.display()))?;
            let all = load_pairs(&pairs)?;
            let test = select_split(&all, parse_split(&split)?);
            let train = select_split(&all, Some(Split::Train));
            let label = label.unwrap_or_else(|| model.version.clone());
            let report = run_retrieval_eval(&model, &test, &train, &store, &ks, &label)?;
            print_report(&report);
            if let Some(out) = out {
                write_json(&out, &report)?;
            }
        }
        EvalCmd::Ablate { pairs, store, settings, configs, seed, out } => {
            let store = load_store(&store)?;
            let all = load_pairs(&pairs)?;
            let mut settings: AblationSettings = read_json_or_default(settings.as_deref())?;
            if let Some(s) = seed {
                settings.seed = s;
            }
            let configs = if configs.is_empty() { AblationConfig::full_grid() } else { configs };
            let train = select_split(&all, Some(Split::Train));
            let test = select_split(&all, Some(Split::Test));
            let reports = run_ablations::<f64>(&train, &test, &store, &configs, &settings)?;
            for r in &reports {
                print_report(r);
            }
            if let Some(out) = out {
                write_json(&out, &reports)?;
            }
        }
        EvalCmd::Lengths { model, pairs, store, split, buckets, per_bucket, ks, seed, no_filter, csv, out } => {
            let store = load_store(&store)?;
            let model = load_checkpoint::<f64>(&model).with_context(|| format!("reading {}", model.display()))?;
            let test = select_split(&load_pairs(&pairs)?, parse_split(&split)?);
            let vector = build_exact_index(&model, &store)?;
            let lexical = build_lexical_index(&store, Analyzer::default())?;
            let cfg = LengthConfig {
                buckets,
                per_bucket_n: per_bucket,
                seed,
                ks: ks.clone(),
                ticker_filter: !no_filter,
                ..LengthConfig::default()
            };
            let cmp = length_stratified_compare(&model, &vector, &lexical, &test, &store, &cfg)?;
            let k = ks.iter().copied().find(|&k| k == 10).or(ks.first().copied()).unwrap_or(10);
            println!("bucket  filtered  vector R@{k}  lexical R@{k}  n");
            for r in cmp.reports.iter().filter(|r| r.mode == RetrievalMode::Vector) {
                let lex = cmp.report(r.bucket, RetrievalMode::Lexical, r.filtered);
                println!(
                    "{:>6}  {:>8}  {:>11.3}  {:>12.3}  {}",
                    r.bucket,
                    r.filtered,
                    r.recall.get(&k).copied().unwrap_or(f64::NAN),
                    lex.and_then(|l| l.recall.get(&k).copied()).unwrap_or(f64::NAN),
                    r.sample_size
                );
            }
            if !cmp.skipped_buckets.is_empty() {
                println!("skipped (no queries): {:?}", cmp.skipped_buckets);
            }
            if let Some(path) = csv {
                ensure_parent(&path)?;
                std::fs::write(&path, reports_to_csv(&cmp.reports))?;
            }
            if let Some(path) = out {
                write_json(&path, &cmp)?;
            }
        }
    }
    Ok(())
}
