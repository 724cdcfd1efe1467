//! Command-line front end: gradient estimation, structural analysis, and the
//! truncation sweep. Exit codes: 0 success, 1 I/O failure, 2 parse error,
//! 3 structural error (subgroup or Lie-closure blow-up, size guards),
//! 4 numerical error.

use clap::{Args, Parser, Subcommand};
use liegrad::report::RunConfig;
use liegrad::run::{cmd_analyze, cmd_grad, cmd_sweep};
use liegrad::Error;

#[derive(Parser)]
#[command(
    name = "liegrad",
    about = "Gradient estimation for exp(iA) ansatz circuits over Pauli decompositions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a gradient with the selected method.
    Grad(GradArgs),
    /// Report subgroup structure, index complexity, Lie-closure dimension,
    /// and commuting groups of a Hamiltonian file.
    Analyze(AnalyzeArgs),
    /// Truncation-error sweep over TFIM-style instances; writes CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// RNG seed; recorded in the output for reproducibility.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker hint. Every command currently runs single-threaded and is
    /// deterministic for any value; 1 is the reference configuration.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Args)]
struct GradArgs {
    /// Hamiltonian file: one "<coefficient> <word>" per line.
    #[arg(long)]
    hamiltonian: String,
    /// Observable file (Pauli-sum text or dense format).
    #[arg(long, conflicts_with = "random_obs")]
    observable: Option<String>,
    /// Draw a random unit-HS observable from this seed instead of a file.
    #[arg(long)]
    random_obs: Option<u64>,
    /// Input state: "mixed", a bitstring like "0101", or a dense/vector file.
    #[arg(long, default_value = "mixed")]
    state: String,
    /// Estimation method: subgroup, dla, truncated, poisson, shadow,
    /// short-term, or series.
    #[arg(long)]
    method: String,
    /// Truncation order for series/truncated.
    #[arg(long = "K")]
    truncation_k: Option<usize>,
    /// Sample count for the poisson estimator.
    #[arg(long)]
    samples: Option<usize>,
    /// Shadow group size n.
    #[arg(long = "shadow-n")]
    shadow_n: Option<usize>,
    /// Shadow group count K.
    #[arg(long = "shadow-groups")]
    shadow_groups: Option<usize>,
    /// Use finite-shot second-stage measurements instead of exact readout.
    #[arg(long = "shadow-shots")]
    shadow_shots: Option<usize>,
    /// Target additive error for the short-term condition check.
    #[arg(long)]
    eps: Option<f64>,
    /// Generated-subgroup size guard.
    #[arg(long = "max-subgroup")]
    max_subgroup: Option<usize>,
    /// Lie-closure dimension guard.
    #[arg(long = "max-dla")]
    max_dla: Option<usize>,
    /// Write one "tableau-hex phasebits-hex outcome-bits" line per shadow.
    #[arg(long = "dump-shadows")]
    dump_shadows: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    hamiltonian: String,
    #[arg(long = "max-subgroup")]
    max_subgroup: Option<usize>,
    #[arg(long = "max-dla")]
    max_dla: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated qubit counts, e.g. "3,4,5".
    #[arg(long = "d-list", value_delimiter = ',')]
    d_list: Vec<usize>,
    /// Largest truncation order.
    #[arg(long = "k-max", default_value_t = 40)]
    k_max: usize,
    /// Trials per qubit count.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[command(flatten)]
    common: CommonArgs,
}

fn emit(output: &Option<String>, content: &str) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Grad(args) => {
            let cfg = RunConfig {
                command: "grad".into(),
                hamiltonian: Some(args.hamiltonian),
                observable: args.observable,
                random_obs_seed: args.random_obs,
                state: Some(args.state),
                method: Some(args.method),
                truncation_k: args.truncation_k,
                samples: args.samples,
                shadow_n: args.shadow_n,
                shadow_groups: args.shadow_groups,
                shadow_shots: args.shadow_shots,
                eps: args.eps,
                max_subgroup: args.max_subgroup,
                max_dla: args.max_dla,
                dump_shadows: args.dump_shadows,
                seed: args.common.seed,
                workers: args.common.workers.max(1),
                ..Default::default()
            };
            let doc = cmd_grad(&cfg)?;
            emit(&args.common.output, &doc.to_json())?;
        }
        Command::Analyze(args) => {
            let cfg = RunConfig {
                command: "analyze".into(),
                hamiltonian: Some(args.hamiltonian),
                max_subgroup: args.max_subgroup,
                max_dla: args.max_dla,
                seed: args.common.seed,
                workers: args.common.workers.max(1),
                ..Default::default()
            };
            let doc = cmd_analyze(&cfg)?;
            emit(&args.common.output, &doc.to_json())?;
        }
        Command::Sweep(args) => {
            let cfg = RunConfig {
                command: "sweep".into(),
                sweep_d: Some(args.d_list),
                sweep_k_max: Some(args.k_max),
                trials: Some(args.trials),
                seed: args.common.seed,
                workers: args.common.workers.max(1),
                ..Default::default()
            };
            let csv = cmd_sweep(&cfg)?;
            emit(&args.common.output, &csv)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err}");
        let code = match err {
            Error::Io(_) => 1,
            Error::Parse(_) => 2,
            Error::Structural(_) => 3,
            Error::Numerical(_) => 4,
        };
        std::process::exit(code);
    }
}
