use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod corpus;
mod encoder;
mod eval;
mod index;
mod io;
mod mine;
mod querygen;

#[derive(Parser, Debug)]
#[command(name = "finembed", version, about = "Financial passage retrieval pipeline")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest raw documents and split them into passages.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Generate (query, passage) pairs with a completion model.
    #[command(subcommand)]
    Querygen(QuerygenCmd),
    /// Train encoders and average checkpoints.
    #[command(subcommand)]
    Encoder(EncoderCmd),
    /// Attach hard negatives to training pairs.
    Mine(MineArgs),
    /// Build and query vector and BM25 indices.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Retrieval evaluation, ablations and query-length comparisons.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Run the HTTP search service.
    Serve(ServeArgs),
}

/// Passage store inputs shared by most commands.
#[derive(Args, Debug, Clone)]
pub struct StoreArgs {
    /// Passage JSONL written by `corpus build`.
    #[arg(long)]
    pub passages: PathBuf,
    /// Document JSONL; defaults to documents.jsonl next to the passages.
    #[arg(long)]
    pub documents: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum CorpusCmd {
    /// Write a synthetic raw-document JSONL for demos and tests.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        documents: usize,
        #[arg(long, default_value_t = 20)]
        companies: usize,
        #[arg(long, default_value_t = 6)]
        paragraphs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Validate raw documents, strip boilerplate and split into passages.
    Build {
        /// Raw document JSONL.
        #[arg(long = "in")]
        input: PathBuf,
        /// Passage JSONL.
        #[arg(long)]
        out: PathBuf,
        /// Cleaned document JSONL; defaults to documents.jsonl next to --out.
        #[arg(long)]
        documents_out: Option<PathBuf>,
        #[arg(long, default_value_t = finembed::corpus::DEFAULT_MAX_PASSAGE_TOKENS)]
        max_tokens: usize,
        /// JSON file {"rules": [{"pattern", "action"}], "table": {...}}.
        #[arg(long, conflicts_with = "no_boilerplate")]
        rules: Option<PathBuf>,
        /// Keep documents as they are.
        #[arg(long)]
        no_boilerplate: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientKind {
    Stub,
    Http,
}

#[derive(Subcommand, Debug)]
pub enum QuerygenCmd {
    /// One query per passage, then filter, deduplicate and split by document.
    Run {
        #[command(flatten)]
        store: StoreArgs,
        /// Few-shot example JSONL ({"passage_text", "query"}); built-in examples if absent.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ClientKind::Stub)]
        client: ClientKind,
        /// Chat-completion base URL for --client http.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "default")]
        llm_model: String,
        /// Environment variable holding the bearer token.
        #[arg(long, default_value = "FINEMBED_LLM_TOKEN")]
        token_env: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// train,val,test document fractions.
        #[arg(long, value_parser = io::parse_ratios)]
        ratios: Option<finembed::querygen::SplitRatios>,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long, default_value_t = 8)]
        max_in_flight: usize,
        /// Query pair JSONL.
        #[arg(long)]
        out: PathBuf,
        /// Per-passage generation outcomes JSONL.
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum EncoderCmd {
    /// Contrastive finetuning on the train split.
    Train {
        /// Query pair JSONL.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
        /// JSON training config; fields not given keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for model.ckpt, ckpt-*.ckpt and losses.json.
        #[arg(long)]
        out: PathBuf,
        /// Start from this checkpoint instead of a random model.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = finembed::encoder::DEFAULT_VOCAB_SIZE)]
        vocab_size: usize,
        #[arg(long, default_value_t = finembed::encoder::DEFAULT_DIM)]
        dim: usize,
        /// Seed of the random initial model.
        #[arg(long, default_value_t = 0)]
        init_seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        hard_negatives: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Weighted average of a base model and checkpoints.
    Soup {
        #[arg(long)]
        base: PathBuf,
        /// A directory (its ckpt-*.ckpt files) or checkpoint files.
        #[arg(long, num_args = 1.., required = true)]
        ckpts: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        base_weight: f64,
        /// Weight of each checkpoint; defaults to (1 - base weight) / count.
        #[arg(long)]
        each_weight: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct MineArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    #[arg(long, default_value_t = 200)]
    pub offset: usize,
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    /// Pairs of this split are mined (all: every pair).
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Query ids whose positive fell outside the top K.
    #[arg(long)]
    pub dropped: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Vector,
    Lexical,
}

#[derive(Subcommand, Debug)]
pub enum IndexCmd {
    /// Build the vector index (from a model or an embedding dump) and the BM25 index.
    Build {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, required_unless_present = "embeddings", conflicts_with = "embeddings")]
        model: Option<PathBuf>,
        /// Embedding dump JSONL to index instead of embedding with --model.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Also write the embeddings as a dump.
        #[arg(long, requires = "model")]
        dump: Option<PathBuf>,
        #[arg(long)]
        vector: PathBuf,
        #[arg(long)]
        lexical: PathBuf,
        /// Skip the HNSW graph (approximate queries then scan).
        #[arg(long)]
        no_graph: bool,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        ef_construction: usize,
        #[arg(long, default_value_t = 128)]
        ef_search: usize,
    },
    /// Run one query and print the hits.
    Query {
        query: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Vector)]
        mode: ModeArg,
        /// Needed for vector mode.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        vector: Option<PathBuf>,
        #[arg(long)]
        lexical: Option<PathBuf>,
        /// Print passage text when given.
        #[arg(long)]
        passages: Option<PathBuf>,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        exact: bool,
        #[arg(long = "ticker")]
        tickers: Vec<String>,
        #[arg(long = "tag")]
        tags: Vec<String>,
        #[arg(long)]
        from: Option<chrono::NaiveDate>,
        #[arg(long)]
        to: Option<chrono::NaiveDate>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum EvalCmd {
    /// Recall@K at passage and document level on a held-out split.
    Run {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, value_delimiter = ',', default_value = "1,10,50")]
        ks: Vec<usize>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate each (hard negatives, data fraction) configuration.
    Ablate {
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
        /// JSON ablation settings; fields not given keep their defaults.
        #[arg(long)]
        settings: Option<PathBuf>,
        /// Configurations as HN:FRACTION, e.g. 0:1.0,3:1.0 (default: full grid).
        #[arg(long, value_delimiter = ',', value_parser = io::parse_ablation)]
        configs: Vec<finembed::eval::AblationConfig>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vector vs BM25 recall by query length, with and without filters.
    Lengths {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        buckets: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        per_bucket: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,10,50")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_filter: bool,
        /// Plot-ready CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Full JSON result including per-query ranks.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Service TOML config.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the configured listen address.
    #[arg(long)]
    pub listen: Option<std::net::SocketAddr>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Corpus(cmd) => corpus::run(cmd),
        Command::Querygen(cmd) => querygen::run(cmd),
        Command::Encoder(cmd) => encoder::run(cmd),
        Command::Mine(args) => mine::run(args),
        Command::Index(cmd) => index::run(cmd),
        Command::Eval(cmd) => eval::run(cmd),
        Command::Serve(args) => serve(args),
    }
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let mut cfg = finembed_service::ServiceConfig::load(&args.config)?;
    if let Some(addr) = args.listen {
        cfg.listen = addr;
    }
    tokio::runtime::Runtime::new()?.block_on(finembed_service::serve(cfg))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
