//! `classdeg`: class degree, routing and splicing pipelines for 1-step
//! 1-block factor triples.
//!
//! ```bash
//! classdeg degree t1.json --measure bern03.json
//! classdeg parry goldenmean.json
//! classdeg delta t1.json --mu1 bern03.json --mu2 bern07.json --grid N=8,16,32 p=0.05,0.1,0.25
//! ```

mod commands;
mod report;

use clap::{Args, Parser, Subcommand};
use classdeg_core::Error;
use report::{Envelope, Format};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "classdeg", version, about = "Class degree and splicing toolkit for factor triples")]
struct Cli {
    /// Output format; csv is only available for grid sweeps
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Master seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Class degree of a measure: depth of a minimal transition block
    Degree(DegreeArgs),
    /// Minimal transition block with its routing table
    MinTb(DegreeArgs),
    /// Check a transition block and print its routing table
    RoutingTable(RoutingTableArgs),
    /// Measure of maximal entropy of X
    Parry(InstanceArgs),
    /// Equilibrium state of a potential on X
    Equilibrium(EquilibriumArgs),
    /// Entropy estimate from a sampled path
    Entropy(EntropyArgs),
    /// Sample a path, optionally conditioned on a Y-word
    Sample(SampleArgs),
    /// Class-diagonal mass of the relatively independent joining
    JoiningStats(JoiningArgs),
    /// Common routing symbols at every occurrence of the block word
    PointrouteCheck(PointrouteArgs),
    /// Entropy of a jump extension against its closed form
    JumpEntropy(JumpEntropyArgs),
    /// Splicing gain over an (N, p) grid, with bound selection
    Delta(DeltaArgs),
    /// Feasible (N, p) for the lower bound
    BoundReport(BoundArgs),
    /// Transition classes over a periodic Y-point
    OracleClasses(OracleArgs),
}

#[derive(Args, Debug, Serialize)]
struct InstanceArgs {
    /// Instance file
    instance: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DegreeArgs {
    instance: PathBuf,
    /// Measure on X; without it every Y-word counts as positive
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Longest block word searched
    #[arg(long, default_value_t = classdeg_core::class_degree::DEFAULT_LMAX)]
    lmax: usize,
}

#[derive(Args, Debug, Serialize)]
struct RoutingTableArgs {
    instance: PathBuf,
    /// Y-word of the block
    #[arg(long)]
    w: String,
    /// Routing coordinate, 0-based
    #[arg(long)]
    n: usize,
    /// Routing symbols of X
    #[arg(long = "m")]
    m: String,
}

#[derive(Args, Debug, Serialize)]
struct EquilibriumArgs {
    instance: PathBuf,
    /// Potential file; zero when omitted
    #[arg(long)]
    potential: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EntropyArgs {
    instance: PathBuf,
    /// Measure on X; Parry when omitted
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    path_len: usize,
    /// Context lengths of the plug-in schedule
    #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 6, 8, 10])]
    k: Vec<usize>,
    /// Add the LZ76 cross-estimate
    #[arg(long)]
    lz: bool,
    /// Estimate the entropy of the Y-image instead
    #[arg(long)]
    image: bool,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    instance: PathBuf,
    /// Measure on X; Parry when omitted
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    length: usize,
    /// Sample X conditioned on this Y-word
    #[arg(long)]
    conditional_on: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct PairArgs {
    instance: PathBuf,
    #[arg(long)]
    mu1: PathBuf,
    #[arg(long)]
    mu2: PathBuf,
    #[arg(long, default_value_t = classdeg_core::class_degree::DEFAULT_LMAX)]
    lmax: usize,
}

#[derive(Args, Debug, Serialize)]
struct JoiningArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = classdeg_core::joinings::DEFAULT_WINDOW)]
    window: usize,
}

#[derive(Args, Debug, Serialize)]
struct PointrouteArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    /// Occurrences of the block word to check
    #[arg(long, default_value_t = 100_000)]
    occurrences: usize,
    /// Length of each sampled pair
    #[arg(long, default_value_t = 10_000)]
    length: usize,
}

#[derive(Args, Debug, Serialize)]
struct JumpEntropyArgs {
    instance: PathBuf,
    /// Measure on X; Parry when omitted
    #[arg(long)]
    measure: Option<PathBuf>,
    /// X-word whose cylinder carries the jumps
    #[arg(long)]
    a: String,
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    path_len: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    /// Potential file; zero when omitted
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 200_000)]
    path_len: usize,
    /// Separating X-word; the most separating word up to length 3 when omitted
    #[arg(long)]
    separator: Option<String>,
    /// Largest N tried by the bound selection
    #[arg(long, default_value_t = 1024)]
    max_n: usize,
}

#[derive(Args, Debug, Serialize)]
struct DeltaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sweep: SweepArgs,
    /// Grid as `N=8,16,32 p=0.05,0.1,0.25`
    #[arg(long, num_args = 1.., default_values_t = vec!["N=8,16,32".to_string(), "p=0.05,0.1,0.25".to_string()])]
    grid: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
struct BoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32])]
    n_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05f64, 0.1, 0.25])]
    p_grid: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    instance: PathBuf,
    /// One period of the Y-point
    #[arg(long)]
    y: String,
    #[arg(long, default_value_t = classdeg_core::class_degree::DEFAULT_STABILIZATION_CAP)]
    cap: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFoundWithinBound { .. } | Error::NoFeasibleCell => 3,
        Error::ResourceLimit { .. } | Error::PeriodTooLarge { .. } => 4,
        _ => 2,
    }
}

fn instance_path(cmd: &Command) -> &PathBuf {
    match cmd {
        Command::Degree(a) | Command::MinTb(a) => &a.instance,
        Command::RoutingTable(a) => &a.instance,
        Command::Parry(a) => &a.instance,
        Command::Equilibrium(a) => &a.instance,
        Command::Entropy(a) => &a.instance,
        Command::Sample(a) => &a.instance,
        Command::JoiningStats(a) => &a.pair.instance,
        Command::PointrouteCheck(a) => &a.pair.instance,
        Command::JumpEntropy(a) => &a.instance,
        Command::Delta(a) => &a.sweep.pair.instance,
        Command::BoundReport(a) => &a.sweep.pair.instance,
        Command::OracleClasses(a) => &a.instance,
    }
}

fn run(cli: &Cli) -> classdeg_core::Result<String> {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        return Err(Error::InvalidInput("--workers must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let ctx = commands::Context::new(cli.seed)?;
    let path = instance_path(&cli.command);
    let sha = report::file_sha256(path)?;
    let out = match &cli.command {
        Command::Degree(a) => commands::degree(&ctx, a, false)?,
        Command::MinTb(a) => commands::degree(&ctx, a, true)?,
        Command::RoutingTable(a) => commands::routing_table(a)?,
        Command::Parry(a) => commands::parry(a)?,
        Command::Equilibrium(a) => commands::equilibrium(a)?,
        Command::Entropy(a) => commands::entropy(&ctx, a)?,
        Command::Sample(a) => commands::sample(&ctx, a)?,
        Command::JoiningStats(a) => commands::joining_stats(&ctx, a)?,
        Command::PointrouteCheck(a) => commands::pointroute_check(&ctx, a)?,
        Command::JumpEntropy(a) => commands::jump_entropy(&ctx, a)?,
        Command::Delta(a) => commands::delta(&ctx, a)?,
        Command::BoundReport(a) => commands::bound(&ctx, a)?,
        Command::OracleClasses(a) => commands::oracle_classes(a)?,
    };
    let value = serde_json::to_value(&cli.command)?;
    let (name, config) = match value {
        serde_json::Value::Object(mut m) if m.len() == 1 => {
            let (k, v) = m.iter_mut().next().map(|(k, v)| (k.clone(), v.take())).unwrap();
            (k, v)
        }
        v => (String::new(), v),
    };
    let config = serde_json::json!({
        "args": config,
        "format": cli.format,
        "max_blocks": ctx.max_blocks,
    });
    let env = Envelope { command: &name, instance_sha256: Some(sha), config, seed: cli.seed, workers: rayon::current_num_threads() };
    report::render(&env, out, cli.format)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("classdeg: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
