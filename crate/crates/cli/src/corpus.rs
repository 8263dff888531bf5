use std::path::Path;

use anyhow::{Context, Result};
use finembed::corpus::{
    build_passages, BoilerplateRuleSpec, BoilerplateRules, Corpus, RawDocument, SplitConfig, TableHeuristic,
};
use finembed::store::{read_jsonl, write_jsonl};
use finembed::synth::{generate_corpus, SynthConfig};
use serde::Deserialize;

use crate::io::{documents_next_to, ensure_parent};
use crate::CorpusCmd;

#[derive(Deserialize)]
struct RulesFile {
    #[serde(default)]
    rules: Vec<BoilerplateRuleSpec>,
    #[serde(default)]
    table: Option<TableHeuristic>,
}

fn load_rules(path: Option<&Path>, disabled: bool) -> Result<BoilerplateRules> {
    if disabled {
        return Ok(BoilerplateRules::none());
    }
    Ok(match path {
        Some(p) => {
            let f: RulesFile = serde_json::from_str(&std::fs::read_to_string(p)?)
                .with_context(|| format!("parsing {}", p.display()))?;
            BoilerplateRules::compile(&f.rules, f.table)?
        }
        None => BoilerplateRules::compile(&BoilerplateRules::default_specs(), Some(TableHeuristic::default()))?,
    })
}

pub fn run(cmd: CorpusCmd) -> Result<()> {
    match cmd {
        CorpusCmd::Synth { out, documents, companies, paragraphs, seed } => {
            let corpus = generate_corpus(&SynthConfig {
                seed,
                companies,
                documents,
                paragraphs_per_doc: paragraphs,
                ..SynthConfig::default()
            })?;
            let raw: Vec<RawDocument> = corpus.documents.iter().map(RawDocument::from).collect();
            ensure_parent(&out)?;
            write_jsonl(&out, &raw)?;
            println!("wrote {} documents to {}", raw.len(), out.display());
        }
        CorpusCmd::Build { input, out, documents_out, max_tokens, rules, no_boilerplate } => {
            let rules = load_rules(rules.as_deref(), no_boilerplate)?;
            let records: Vec<RawDocument> = read_jsonl(&input).with_context(|| format!("reading {}", input.display()))?;
            let total = records.len();
            let mut corpus = Corpus::new();
            let mut rejected = 0;
            for (n, r) in records.into_iter().enumerate() {
                if let Err(e) = corpus.ingest(r) {
                    log::warn!("{}: record {}: {e}", input.display(), n + 1);
                    rejected += 1;
                }
            }
            let split = build_passages(corpus.documents(), &rules, &SplitConfig::with_max_tokens(max_tokens))?;
            for w in &split.warnings {
                log::warn!("{}: {}", w.doc_id, w.message);
            }
            let docs_path = documents_out.unwrap_or_else(|| documents_next_to(&out));
            ensure_parent(&out)?;
            ensure_parent(&docs_path)?;
            write_jsonl(&out, &split.passages)?;
            write_jsonl(&docs_path, corpus.documents())?;
            println!(
                "{} of {total} documents accepted ({rejected} rejected), {} passages, {} warnings",
                corpus.len(),
                split.passages.len(),
                split.warnings.len()
            );
        }
    }
    Ok(())
}
