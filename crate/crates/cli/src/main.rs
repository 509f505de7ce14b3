use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hypermatch::{
    embed_corpus, evaluate, extract_pair_features, load_corpus, make_triples, pca_2d,
    pool_and_normalize, pseudo_embed, read_embeddings, save_loss_csv, score, train,
    write_embeddings, write_features_csv, write_projection_csv, Checkpoint, EmbeddingStore,
    EvalSet, GeometryConfig, GradientMode, ModelConfig, Role, Split, SplitRatios, TokenSequence,
    TrainConfig, TrainingSet, TripleDataset,
};

#[derive(Parser)]
#[command(
    name = "hypermatch",
    version,
    about = "Question/answer matching in the Poincare ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pseudo-embed a JSONL corpus into description and code stores.
    Ingest(IngestArgs),
    /// Split a corpus and write train/valid/test triples.
    MakeTriples(MakeTriplesArgs),
    /// Train a model on triples and write a checkpoint.
    Train(TrainArgs),
    /// Rank every query of a split against its codes and print metrics.
    Eval(EvalArgs),
    /// Rank all stored codes for one query.
    Search(SearchArgs),
    /// Export a 2-D projection of pair features as CSV.
    ExportViz(ExportVizArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out_desc: PathBuf,
    #[arg(long)]
    out_code: PathBuf,
    /// Token embedding dimension n.
    #[arg(long, default_value_t = 64, value_parser = positive)]
    embed_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MakeTriplesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Train, valid and test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_splits)]
    splits: SplitRatios,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StoreArgs {
    /// Description (question) embedding store.
    #[arg(long)]
    desc: PathBuf,
    /// Code (answer) embedding store.
    #[arg(long)]
    code: PathBuf,
}

#[derive(Args)]
struct LengthArgs {
    #[arg(long, default_value_t = hypermatch::model::DEFAULT_MAX_Q_LEN, value_parser = positive)]
    max_q_len: usize,
    #[arg(long, default_value_t = hypermatch::model::DEFAULT_MAX_A_LEN, value_parser = positive)]
    max_a_len: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    stores: StoreArgs,
    #[arg(long)]
    triples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the per-epoch mean loss as `epoch,mean_loss`.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    /// Ball dimension d.
    #[arg(long, default_value_t = hypermatch::model::DEFAULT_DIM, value_parser = positive)]
    dim: usize,
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    margin: f64,
    #[arg(long, default_value_t = 0.05, value_parser = positive_f64)]
    lr: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 64, value_parser = positive)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = hypermatch::geometry::DEFAULT_EPS_BALL, value_parser = positive_f64)]
    eps_ball: f64,
    #[command(flatten)]
    lengths: LengthArgs,
    /// Use exact Euclidean gradients at the pooled embeddings.
    #[arg(long)]
    euclidean: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    stores: StoreArgs,
    /// Triples file whose query ids form the evaluation split.
    #[arg(long)]
    triples: PathBuf,
    #[command(flatten)]
    lengths: LengthArgs,
    /// Also print an aligned table to stderr.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    code: PathBuf,
    /// Free-text query, pseudo-embedded with `--seed`.
    #[arg(
        long,
        conflicts_with = "query_id",
        required_unless_present = "query_id"
    )]
    query: Option<String>,
    /// Id of a stored description to use as the query; needs `--desc`.
    #[arg(long, requires = "desc")]
    query_id: Option<String>,
    #[arg(long)]
    desc: Option<PathBuf>,
    /// Seed used when the stores were ingested.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    topk: usize,
    #[command(flatten)]
    lengths: LengthArgs,
}

#[derive(Args)]
struct ExportVizArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    stores: StoreArgs,
    #[arg(long)]
    triples: PathBuf,
    /// Projection CSV `label,x,y`.
    #[arg(long)]
    out: PathBuf,
    /// Full feature CSV `label,f_0,...`.
    #[arg(long)]
    features: Option<PathBuf>,
    #[command(flatten)]
    lengths: LengthArgs,
}

/// Bad input detected by the CLI itself.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_splits(s: &str) -> Result<SplitRatios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [train, valid, test] => SplitRatios::new(train, valid, test).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated fractions".into()),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Usage(format!("input file not found: {}", path.display())).into());
    }
    Ok(())
}

fn model_config(n: usize, d: usize, lengths: &LengthArgs) -> ModelConfig {
    ModelConfig {
        max_q_len: lengths.max_q_len,
        max_a_len: lengths.max_a_len,
        ..ModelConfig::new(n, d)
    }
}

fn read_store(path: &Path) -> Result<EmbeddingStore> {
    read_embeddings(path).with_context(|| format!("reading store {}", path.display()))
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::read(path).with_context(|| format!("reading checkpoint {}", path.display()))
}

fn read_triples(path: &Path) -> Result<TripleDataset> {
    let split = match path.file_stem().and_then(|s| s.to_str()) {
        Some("valid") => Split::Valid,
        Some("test") => Split::Test,
        _ => Split::Train,
    };
    TripleDataset::read_jsonl(path, split)
        .with_context(|| format!("reading triples {}", path.display()))
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    require_file(&args.corpus)?;
    let corpus = load_corpus(&args.corpus)?;
    let (desc, code) = embed_corpus(&corpus, args.embed_dim, args.seed)?;
    write_embeddings(&desc, &args.out_desc)?;
    write_embeddings(&code, &args.out_code)?;
    eprintln!("embedded {} items at n = {}", corpus.len(), args.embed_dim);
    Ok(())
}

fn cmd_make_triples(args: MakeTriplesArgs) -> Result<()> {
    require_file(&args.corpus)?;
    let corpus = load_corpus(&args.corpus)?;
    let splits = make_triples(&corpus, args.splits, args.seed)?;
    fs::create_dir_all(&args.out_dir)?;
    for ds in [&splits.train, &splits.valid, &splits.test] {
        ds.write_jsonl(args.out_dir.join(format!("{}.jsonl", ds.split.name())))?;
    }
    eprintln!(
        "train {}, valid {}, test {}",
        splits.train.len(),
        splits.valid.len(),
        splits.test.len()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    for p in [&args.stores.desc, &args.stores.code, &args.triples] {
        require_file(p)?;
    }
    let cfg = TrainConfig {
        margin: args.margin,
        lr: args.lr,
        epochs: args.epochs,
        batch_size: args.batch,
        seed: args.seed,
        geometry: GeometryConfig::new(args.eps_ball, hypermatch::geometry::DEFAULT_EPS_SING)?,
        gradient_mode: if args.euclidean {
            GradientMode::Euclidean
        } else {
            GradientMode::Riemannian
        },
        ..TrainConfig::default()
    };
    let desc = read_store(&args.stores.desc)?;
    let code = read_store(&args.stores.code)?;
    let model = model_config(desc.dim(), args.dim, &args.lengths);
    let triples = read_triples(&args.triples)?;
    let set = TrainingSet::from_stores(&triples, &desc, &code, &model)?;
    let outcome = train(&set, &model, &cfg)?;
    Checkpoint {
        params: outcome.params,
        eps_ball: args.eps_ball,
    }
    .write(&args.out)?;
    if let Some(path) = &args.loss_csv {
        save_loss_csv(&outcome.loss_trace, path)?;
    }
    if let (Some(first), Some(last)) = (outcome.loss_trace.first(), outcome.loss_trace.last()) {
        eprintln!(
            "{} epochs, mean loss {first:.4} -> {last:.4}",
            outcome.loss_trace.len()
        );
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    for p in [
        &args.checkpoint,
        &args.stores.desc,
        &args.stores.code,
        &args.triples,
    ] {
        require_file(p)?;
    }
    let ck = read_checkpoint(&args.checkpoint)?;
    let desc = read_store(&args.stores.desc)?;
    let code = read_store(&args.stores.code)?;
    let model = model_config(ck.params.n, ck.params.d, &args.lengths);
    let triples = read_triples(&args.triples)?;
    let set = EvalSet::from_ids(triples.qids(), &desc, &code, &model)?;
    let ev = evaluate(&ck.params, &set, ck.eps_ball)?;
    println!("{}", ev.report.to_json());
    if args.table {
        eprintln!("{}", ev.report);
    }
    Ok(())
}

fn cmd_search(args: SearchArgs) -> Result<()> {
    for p in [Some(&args.checkpoint), Some(&args.code), args.desc.as_ref()]
        .into_iter()
        .flatten()
    {
        require_file(p)?;
    }
    let ck = read_checkpoint(&args.checkpoint)?;
    let code = read_store(&args.code)?;
    let n = ck.params.n;
    let model = model_config(n, ck.params.d, &args.lengths);
    if code.dim() != n {
        return Err(hypermatch::Error::DimensionMismatch {
            expected: n,
            got: code.dim(),
        }
        .into());
    }
    let query = match (&args.query, &args.query_id, &args.desc) {
        (_, Some(id), Some(desc_path)) => {
            let desc = read_store(desc_path)?;
            if desc.dim() != n {
                return Err(hypermatch::Error::DimensionMismatch {
                    expected: n,
                    got: desc.dim(),
                }
                .into());
            }
            let m = desc.require(id)?;
            TokenSequence::from_f32(Role::Question, n, m.data(), model.max_q_len)?
        }
        (Some(text), _, _) => {
            // round through f32 so a stored description and its text agree
            let rows: Vec<f32> = pseudo_embed(text, n, args.seed)?
                .into_iter()
                .map(|v| v as f32)
                .collect();
            TokenSequence::from_f32(Role::Question, n, &rows, model.max_q_len)?
        }
        _ => return Err(Usage("give --query or --query-id with --desc".into()).into()),
    };
    if code.is_empty() {
        return Err(Usage("code store is empty".into()).into());
    }
    let q = pool_and_normalize(&ck.params, &query, ck.eps_ball)?;
    let mut ranked = Vec::with_capacity(code.len());
    for (id, m) in code.iter() {
        let seq = TokenSequence::from_f32(Role::Answer, n, m.data(), model.max_a_len)?;
        let a = pool_and_normalize(&ck.params, &seq, ck.eps_ball)?;
        ranked.push((id, score(&ck.params, &q, &a)?));
    }
    ranked.sort_by(|x, y| x.1.total_cmp(&y.1));
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (id, s) in ranked.iter().take(args.topk) {
        writeln!(out, "{id}\t{s}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_export_viz(args: ExportVizArgs) -> Result<()> {
    for p in [
        &args.checkpoint,
        &args.stores.desc,
        &args.stores.code,
        &args.triples,
    ] {
        require_file(p)?;
    }
    let ck = read_checkpoint(&args.checkpoint)?;
    let desc = read_store(&args.stores.desc)?;
    let code = read_store(&args.stores.code)?;
    let model = model_config(ck.params.n, ck.params.d, &args.lengths);
    let triples = read_triples(&args.triples)?;
    let set = TrainingSet::from_stores(&triples, &desc, &code, &model)?;
    let features = extract_pair_features(&ck.params, &set.batch(), ck.eps_ball)?;
    let vectors: Vec<Vec<f64>> = features.iter().map(|f| f.feature.clone()).collect();
    let projection = pca_2d(&vectors)?;
    write_projection_csv(&features, &projection, fs::File::create(&args.out)?)?;
    if let Some(path) = &args.features {
        write_features_csv(&features, fs::File::create(path)?)?;
    }
    eprintln!(
        "{} points, explained variance {:.3} + {:.3}",
        features.len(),
        projection.explained_variance_ratio[0],
        projection.explained_variance_ratio[1]
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|cause| {
        cause.is::<Usage>()
            || cause
                .downcast_ref::<hypermatch::Error>()
                .is_some_and(hypermatch::Error::is_validation)
    });
    if validation {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::MakeTriples(a) => cmd_make_triples(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Search(a) => cmd_search(a),
        Command::ExportViz(a) => cmd_export_viz(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
