use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use finembed::corpus::Passage;
use finembed::eval::AblationConfig;
use finembed::querygen::{QueryPair, Split, SplitRatios};
use finembed::store::{read_jsonl, DocumentInfo, PassageStore};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::StoreArgs;

pub fn documents_next_to(path: &Path) -> PathBuf {
    path.with_file_name("documents.jsonl")
}

pub fn load_store(args: &StoreArgs) -> Result<PassageStore> {
    let docs_path = args.documents.clone().unwrap_or_else(|| documents_next_to(&args.passages));
    let passages: Vec<Passage> =
        read_jsonl(&args.passages).with_context(|| format!("reading {}", args.passages.display()))?;
    let docs: Vec<DocumentInfo> = read_jsonl(&docs_path).with_context(|| format!("reading {}", docs_path.display()))?;
    let docs: HashMap<_, _> = docs.into_iter().map(|d| (d.id.clone(), d)).collect();
    Ok(PassageStore::from_infos(passages, docs)?)
}

pub fn load_pairs(path: &Path) -> Result<Vec<QueryPair>> {
    read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

pub fn parse_split(s: &str) -> Result<Option<Split>> {
    Ok(match s {
        "train" => Some(Split::Train),
        "val" => Some(Split::Val),
        "test" => Some(Split::Test),
        "all" => None,
        other => bail!("unknown split {other:?} (train, val, test or all)"),
    })
}

pub fn select_split(pairs: &[QueryPair], split: Option<Split>) -> Vec<QueryPair> {
    pairs.iter().filter(|p| split.is_none_or(|s| p.split == s)).cloned().collect()
}

/// Reads a JSON file, or returns the default when no path is given.
pub fn read_json_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn parse_ratios(s: &str) -> Result<SplitRatios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [train, val, test] = parts[..] else {
        return Err(format!("expected train,val,test, got {s:?}"));
    };
    SplitRatios::new(train, val, test).map_err(|e| e.to_string())
}

pub fn parse_ablation(s: &str) -> Result<AblationConfig, String> {
    let (hn, frac) = s.split_once(':').ok_or_else(|| format!("expected HN:FRACTION, got {s:?}"))?;
    let hard_negatives = hn.trim().parse().map_err(|e| format!("{hn:?}: {e}"))?;
    let data_fraction: f64 = frac.trim().parse().map_err(|e| format!("{frac:?}: {e}"))?;
    if !(data_fraction > 0.0 && data_fraction <= 1.0) {
        return Err(format!("data fraction must be in (0, 1], got {data_fraction}"));
    }
    Ok(AblationConfig { hard_negatives, data_fraction })
}
