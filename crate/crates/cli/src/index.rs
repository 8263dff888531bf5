use anyhow::{bail, Context, Result};
use finembed::corpus::Passage;
use finembed::encoder::{load_checkpoint, Role};
use finembed::index::{
    build_lexical_index, embed_store, read_embedding_dump, write_embedding_dump, Analyzer, HnswParams, LexicalIndex,
    RankedHit, SearchFilter, SearchMode, VectorIndex,
};
use finembed::store::read_jsonl;

use crate::io::{ensure_parent, load_store};
use crate::{IndexCmd, ModeArg};

pub fn run(cmd: IndexCmd) -> Result<()> {
    match cmd {
        IndexCmd::Build {
            store,
            model,
            embeddings,
            dump,
            vector,
            lexical,
            no_graph,
            m,
            ef_construction,
            ef_search,
        } => {
            let store = load_store(&store)?;
            let (version, dim, embedded) = match (&model, &embeddings) {
                (Some(path), _) => {
                    let model = load_checkpoint::<f64>(path).with_context(|| format!("reading {}", path.display()))?;
                    let embedded = embed_store(&model, &store);
                    if let Some(d) = &dump {
                        ensure_parent(d)?;
                        write_embedding_dump(d, &model.version, model.dim(), &embedded)?;
                    }
                    (model.version.clone(), model.dim(), embedded)
                }
                (None, Some(path)) => {
                    let (header, embedded) = read_embedding_dump::<f64>(path)?;
                    (header.model_version, header.dim, embedded)
                }
                (None, None) => bail!("one of --model or --embeddings is required"),
            };
            let entries = embedded
                .into_iter()
                .map(|(id, e)| {
                    let meta = store.meta(&id).with_context(|| format!("embedding for unknown passage {id}"))?;
                    Ok((id, e, meta))
                })
                .collect::<Result<Vec<_>>>()?;
            let graph = (!no_graph).then_some(HnswParams { m, ef_construction, ef_search, ..HnswParams::default() });
            let vindex = VectorIndex::build(dim, entries, version, graph)?;
            let lindex = build_lexical_index(&store, Analyzer::default())?;
            ensure_parent(&vector)?;
            ensure_parent(&lexical)?;
            vindex.save(&vector)?;
            lindex.save(&lexical)?;
            println!(
                "indexed {} passages: vector {} ({}), lexical {}",
                vindex.len(),
                vindex.version(),
                if vindex.has_graph() { "hnsw" } else { "flat" },
                lindex.version()
            );
        }
        IndexCmd::Query {
            query,
            mode,
            model,
            vector,
            lexical,
            passages,
            k,
            exact,
            tickers,
            tags,
            from,
            to,
            json,
        } => {
            let filter = SearchFilter {
                date_from: from,
                date_to: to,
                tickers: (!tickers.is_empty()).then(|| tickers.into_iter().collect()),
                tags: (!tags.is_empty()).then(|| tags.into_iter().collect()),
            };
            filter.validate()?;
            let hits: Vec<RankedHit> = match mode {
                ModeArg::Vector => {
                    let (Some(model), Some(vector)) = (model, vector) else {
                        bail!("vector mode needs --model and --vector");
                    };
                    let model = load_checkpoint::<f64>(&model)?;
                    let index = VectorIndex::<f64>::load(&vector)?;
                    let search = if exact { SearchMode::Exact } else { SearchMode::Approximate };
                    index.knn(&model.encode(&query, Role::Query), k, &filter, search)?
                }
                ModeArg::Lexical => {
                    let Some(lexical) = lexical else { bail!("lexical mode needs --lexical") };
                    LexicalIndex::load(&lexical)?.search(&query, k, &filter, Default::default())?
                }
            };
            let texts: Vec<Passage> = match &passages {
                Some(p) => read_jsonl(p)?,
                None => Vec::new(),
            };
            for h in &hits {
                if json {
                    println!("{}", serde_json::to_string(h)?);
                    continue;
                }
                println!("{:>3}  {:.4}  {}", h.rank, h.score, h.passage_id);
                if let Some(p) = texts.iter().find(|p| p.id == h.passage_id) {
                    let preview: String = p.body.chars().take(160).collect();
                    println!("     {}\n     {}", p.context_line, preview.replace('\n', " "));
                }
            }
        }
    }
    Ok(())
}
