use anyhow::{bail, Result};
use finembed::querygen::{build_dataset, run_generation, summarize, FewShotExample, GenerationConfig, LlmClient, StubClient};
use finembed::querygen::HttpChatClient;
use finembed::store::{read_jsonl, write_jsonl};
use finembed::synth::few_shot_pool;

use crate::io::{ensure_parent, load_store};
use crate::{ClientKind, QuerygenCmd};

pub fn run(cmd: QuerygenCmd) -> Result<()> {
    let QuerygenCmd::Run {
        store,
        pool,
        client,
        endpoint,
        llm_model,
        token_env,
        seed,
        ratios,
        split_seed,
        max_in_flight,
        out,
        outcomes,
    } = cmd;
    let store = load_store(&store)?;
    let pool: Vec<FewShotExample> = match pool {
        Some(p) => read_jsonl(p)?,
        None => few_shot_pool(),
    };
    let client: Box<dyn LlmClient> = match client {
        ClientKind::Stub => Box::new(StubClient::new(seed)),
        ClientKind::Http => {
            let Some(url) = endpoint else { bail!("--client http needs --endpoint") };
            Box::new(HttpChatClient::from_env(url, llm_model, &token_env))
        }
    };
    let cfg = GenerationConfig { max_in_flight, ..GenerationConfig::default() };
    let results = run_generation(client.as_ref(), &store, &pool, seed, &cfg)?;
    let pairs = build_dataset(&results, &store, ratios.unwrap_or_default(), split_seed)?;
    ensure_parent(&out)?;
    write_jsonl(&out, &pairs)?;
    if let Some(path) = outcomes {
        ensure_parent(&path)?;
        write_jsonl(&path, &results)?;
    }
    println!("{}", serde_json::to_string_pretty(&summarize(&results, &pairs))?);
    Ok(())
}
