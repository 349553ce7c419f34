use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pptree::bench::{error_rate, load_csv, run_benchmark, BenchSpec};
use pptree::boundary::{
    boundary_grid, data_bbox, pca_reduce, sampled_boundary, DEFAULT_RESOLUTION,
};
use pptree::par::max_parallelism_from_env;
use pptree::simulate::{simulate, Scenario, SimSpec};
use pptree::tree::{fit, DEFAULT_ENTROPY_THRESHOLD, DEFAULT_MAX_DEPTH, DEFAULT_MIN_NODE_SIZE};
use pptree::{Execution, FitConfig, FittedTree, IndexConfig, SplitRule, Variant};

use crate::server::{self, AppState};
use crate::table::read_features;

#[derive(Debug, Parser)]
#[command(
    name = "pptree",
    version,
    about = "Projection pursuit classification trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a simulated dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a tree to a labelled CSV and write the model document.
    Fit(FitArgs),
    /// Append a prediction column to a CSV.
    Predict(PredictArgs),
    /// Run the repeated holdout benchmark described by a JSON spec.
    Bench(BenchArgs),
    /// Evaluate a model over the data domain and flag border points.
    Boundary(BoundaryArgs),
    /// Serve the HTTP JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// basic, outlier or mixsim
    #[arg(long, default_value = "basic")]
    scenario: Scenario,
    #[arg(long, default_value_t = 300)]
    n: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Distance between consecutive class means (basic, outlier).
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    /// Spread across the class axis relative to along it (basic, outlier).
    #[arg(long, default_value_t = 3.0)]
    elongation: f64,
    #[arg(long, default_value_t = 0.15)]
    outlier_fraction: f64,
    /// Average pairwise overlap in [0, 1) (mixsim).
    #[arg(long, default_value_t = 0.05)]
    overlap: f64,
    /// Accepted for compatibility; has no effect.
    #[arg(long)]
    max_overlap: Option<f64>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexArg {
    Lda,
    Pda,
}

fn parse_rule(s: &str) -> std::result::Result<SplitRule, String> {
    let id: u8 = s
        .parse()
        .map_err(|_| format!("{s:?} is not a rule id; valid range is 1-8"))?;
    SplitRule::new(id).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// original, mod1, mod2 or axis_baseline
    #[arg(long, default_value = "original")]
    variant: Variant,
    /// Split rule 1-8 (original, mod1).
    #[arg(long, default_value = "1", value_parser = parse_rule)]
    rule: SplitRule,
    #[arg(long, value_enum, default_value_t = IndexArg::Lda)]
    index: IndexArg,
    /// PDA penalty in [0, 1).
    #[arg(long, default_value_t = pptree::projection::DEFAULT_PDA_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_NODE_SIZE)]
    min_node_size: usize,
    #[arg(long, default_value_t = DEFAULT_ENTROPY_THRESHOLD)]
    entropy_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model JSON; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Column ignored as a feature if present.
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Summary CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-repetition CSV.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Worker threads; defaults to MAX_PARALLELISM or all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    /// Data whose range (plus 10% per side) sets the evaluation box.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Lattice points per axis for two-feature models.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Uniform samples for models with more than two features.
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Principal-component scores of the border points (more than two features).
    #[arg(long)]
    pca_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Seconds before stored datasets and models are evicted.
    #[arg(long, default_value_t = 3600)]
    ttl_secs: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Boundary(a) => boundary_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let spec = SimSpec {
        scenario: a.scenario,
        n: a.n,
        k: a.k,
        overlap: a.overlap,
        max_overlap: a.max_overlap,
        separation: a.separation,
        elongation: a.elongation,
        outlier_fraction: a.outlier_fraction,
        seed: a.seed,
    };
    let data = simulate(&spec)?;
    let mut out = output(a.out.as_deref())?;
    data.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let data = load_csv(&a.data, &a.label_column)?;
    let index = match a.index {
        IndexArg::Lda => IndexConfig::lda(),
        IndexArg::Pda => IndexConfig::pda(a.lambda)?,
    };
    let cfg = FitConfig {
        index,
        rule: a.rule,
        min_node_size: a.min_node_size,
        entropy_threshold: a.entropy_threshold,
        max_depth: a.max_depth,
        seed: a.seed,
    };
    let tree = fit(&data, a.variant, &cfg)?;
    for w in &tree.warnings {
        log::warn!("{w}");
    }
    let err = error_rate(&tree.predict_dataset(&data)?, data.labels())?;
    eprintln!(
        "{}: {} internal nodes, {} leaves, training error {err:.4}",
        tree.variant,
        tree.n_internal(),
        tree.n_leaves()
    );
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "{}", tree.to_json_pretty())?;
    out.flush()?;
    Ok(())
}

fn load_model(path: &Path) -> Result<FittedTree> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    FittedTree::from_json(&text).with_context(|| format!("{}", path.display()))
}

fn predict_cmd(a: PredictArgs) -> Result<()> {
    let tree = load_model(&a.model)?;
    let table = read_features(&a.data, &a.label_column)?;
    if table.n_features != tree.n_features {
        bail!(
            "model expects {} features, {} has {}",
            tree.n_features,
            a.data.display(),
            table.n_features
        );
    }
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    let mut header = table.headers.clone();
    header.push_field("prediction");
    w.write_record(&header)?;
    for i in 0..table.n_rows() {
        let mut rec = table.records[i].clone();
        rec.push_field(&tree.class_name(tree.predict(table.row(i))?));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let spec = BenchSpec::load(&a.spec)?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let threads = a.threads.or_else(max_parallelism_from_env);
    let report = Execution::with_threads(threads, || run_benchmark(&spec, exec))?;
    for r in report.records.iter().filter(|r| r.failure.is_some()) {
        log::warn!(
            "{} / {} rep {}: {}",
            r.dataset,
            r.model,
            r.repetition,
            r.failure.as_deref().unwrap_or("")
        );
    }
    let mut out = output(a.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &a.records {
        report.write_records_csv(output(Some(path))?)?;
    }
    if let Some(path) = &a.json {
        let mut out = output(Some(path))?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        out.flush()?;
    }
    Ok(())
}

fn boundary_cmd(a: BoundaryArgs) -> Result<()> {
    let tree = load_model(&a.model)?;
    let table = read_features(&a.data, &a.label_column)?;
    if table.n_features != tree.n_features {
        bail!(
            "model expects {} features, {} has {}",
            tree.n_features,
            a.data.display(),
            table.n_features
        );
    }
    let bbox = data_bbox(&table.unlabeled()?);
    let out = output(a.out.as_deref())?;
    if tree.n_features == 2 {
        let grid = boundary_grid(&tree, &bbox, a.resolution, Execution::Parallel)?;
        grid.write_csv(out, Some(&tree))?;
        return Ok(());
    }
    let sample = sampled_boundary(&tree, &bbox, a.samples, a.seed, Execution::Parallel)?;
    sample.write_csv(out, &tree)?;
    if let Some(path) = &a.pca_out {
        let border = sample.border_dataset(&tree.class_names)?;
        let pca = pca_reduce(&border, 2)?;
        let mut w = csv::Writer::from_writer(output(Some(path))?);
        w.write_record(["pc1", "pc2", "label"])?;
        for i in 0..border.n_rows() {
            let s = pca.score_row(i);
            w.write_record([
                format!("{:?}", s[0]),
                format!("{:?}", s[1]),
                tree.class_name(border.label(i)),
            ])?;
        }
        w.flush()?;
        log::info!(
            "border variance explained by 2 components: {:?}",
            pca.variance_explained
        );
    }
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> Result<()> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .with_context(|| format!("bad listen address {}:{}", a.host, a.port))?;
    let state = AppState::new(Duration::from_secs(a.ttl_secs), max_parallelism_from_env());
    tokio::runtime::Runtime::new()?.block_on(server::serve(addr, state))
}
