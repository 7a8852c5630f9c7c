//! Command-line batch evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use matchmetric::corpus::{build_report, join, load_corpus, DocPair, MetricSource};
use matchmetric::latent::{SolverMode, SolverOptions};
use matchmetric::schema::parse_schema;
use matchmetric::zoo::{DatasetConfig, ZooOptions, METRICS};
use matchmetric::{Aggregation, Error, Normalizer, Result};

#[derive(Parser)]
#[command(name = "matchmetric", version, about = "Evaluate structured predictions against references")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a predicted corpus against a reference corpus.
    Eval(EvalArgs),
    /// Check a schema file and print a summary.
    ValidateSchema {
        #[arg(long)]
        schema: PathBuf,
    },
    /// List the built-in metrics.
    ListMetrics {
        /// Also print the expected document payload of each metric.
        #[arg(long)]
        verbose: bool,
    },
    /// Print the witness alignments for one document.
    Explain {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        doc_id: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Schema file deriving the metric.
    #[arg(long, conflicts_with = "metric", required_unless_present = "metric")]
    schema: Option<PathBuf>,
    /// Built-in metric name; repeatable.
    #[arg(long)]
    metric: Vec<String>,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Dataset configuration (labels, ontology, premodifiers, slots).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "exact")]
    solver: SolverMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Branch-and-bound node budget for exact solvers.
    #[arg(long)]
    node_limit: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Defaults to the schema's aggregation, or micro.
    #[arg(long)]
    aggregate: Option<Aggregation>,
    /// Comma-separated subset of P,R,F,J to report.
    #[arg(long, value_delimiter = ',')]
    normalizers: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Documents evaluated concurrently; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

struct Run {
    source: MetricSource,
    opts: ZooOptions,
    pairs: Vec<DocPair>,
}

fn prepare(args: &RunArgs) -> Result<Run> {
    let source = match &args.schema {
        Some(p) => MetricSource::Schema(Box::new(parse_schema(&read(p)?)?)),
        None => MetricSource::builtin(args.metric.clone())?,
    };
    let config = match &args.config {
        Some(p) => DatasetConfig::from_json(&read(p)?)?,
        None => DatasetConfig::default(),
    };
    let mut solver = SolverOptions {
        mode: args.solver,
        seed: args.seed,
        ..SolverOptions::default()
    };
    if let Some(n) = args.node_limit {
        solver.node_limit = n;
    }
    let pairs = join(load_corpus(&args.pred)?, load_corpus(&args.gold)?)?;
    Ok(Run {
        source,
        opts: ZooOptions { config, solver },
        pairs,
    })
}

fn normalizers(names: &[String], fallback: Vec<Normalizer>) -> Result<Vec<Normalizer>> {
    if names.is_empty() {
        return Ok(fallback);
    }
    names
        .iter()
        .map(|n| Normalizer::from_symbol(n.trim()).ok_or_else(|| Error::Config(format!("unknown normalizer {n:?}"))))
        .collect()
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval(args: &EvalArgs) -> Result<()> {
    let run = prepare(&args.run)?;
    let how = args.aggregate.unwrap_or_else(|| run.source.default_aggregation());
    let norms = normalizers(&args.normalizers, run.source.default_normalizers())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<_>> = pool.install(|| {
        run.pairs
            .par_iter()
            .map(|p| run.source.evaluate(p, &run.opts).map(|r| (p.doc_id.clone(), r)))
            .collect()
    });
    let docs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let report = build_report(&docs, &run.source.names(), how, &norms)?;
    let text = match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Tsv => report.to_tsv(&norms),
    };
    emit(&text, args.output.as_deref())
}

fn explain(args: &RunArgs, doc_id: &str) -> Result<()> {
    let run = prepare(args)?;
    let Some(pair) = run.pairs.iter().find(|p| p.doc_id == doc_id) else {
        return Err(Error::data("doc_id", format!("unknown doc_id {doc_id:?}")));
    };
    let alignments = run.source.explain(pair, &run.opts)?;
    let out = json!({"doc_id": doc_id, "alignments": alignments});
    emit(&(serde_json::to_string_pretty(&out).expect("alignments serialize") + "\n"), None)
}

fn validate(path: &Path) -> Result<()> {
    let s = parse_schema(&read(path)?)?;
    let types: Vec<&str> = s.type_names().collect();
    let out = json!({"valid": true, "root": s.metric().root, "types": types});
    emit(&(out.to_string() + "\n"), None)
}

fn list(verbose: bool) {
    for m in METRICS {
        println!("{}\t{}", m.name, m.summary);
        if verbose {
            println!("\tpayload: {}", m.payload);
        }
    }
}

fn error_json(e: &Error) -> Value {
    let mut body = BTreeMap::new();
    body.insert("kind", Value::from(e.kind()));
    body.insert("message", Value::from(e.to_string()));
    match e {
        Error::Schema { path, .. } | Error::Data { path, .. } => {
            body.insert("path", Value::from(path.as_str()));
        }
        Error::Resource { limit } => {
            body.insert("limit", Value::from(*limit));
        }
        _ => {}
    }
    json!({ "error": body })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => eval(a),
        Command::ValidateSchema { schema } => validate(schema),
        Command::ListMetrics { verbose } => {
            list(*verbose);
            Ok(())
        }
        Command::Explain { run, doc_id } => explain(run, doc_id),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(if e.is_resource() { 2 } else { 1 })
        }
    }
}
