//! `specmargin`: spectral clustering, level-set estimation and bound
//! verification from the command line.

mod commands;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use specmargin_core::exec::configure_threads;

use manifest::Outcome;

#[derive(Parser, Debug)]
#[command(name = "specmargin", version, about = "Kernel spectral clustering with margin certificates")]
struct Cli {
    /// Worker threads; falls back to SPECMARGIN_THREADS, then to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral clustering of a point CSV at a fixed bandwidth.
    Cluster(ClusterArgs),
    /// Level-set truncation followed by spectral clustering of the survivors.
    Levelset(LevelsetArgs),
    /// Randomized conformance sweep of every closed-form bound.
    VerifyBounds(VerifyArgs),
    /// Clustering along a descending bandwidth grid, compared with the max-margin partition.
    SigmaSweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// Kernel exponent α in K(x) = exp(-x^α).
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,

    /// Laplacian variant: L, LN or LN0.
    #[arg(long, default_value = "LN")]
    pub variant: String,

    /// Clamp LN0 degrees from below instead of reporting underflow.
    #[arg(long)]
    pub degree_floor: Option<f64>,

    /// Label assignment in the embedding: linkage or kmeans.
    #[arg(long, default_value = "linkage")]
    pub assignment: String,

    /// Seed for k-means initialization and model sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Args, Debug)]
pub struct LevelsetArgs {
    /// Point CSV; mutually exclusive with --model.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub input: Option<PathBuf>,
    /// Mixture model config to sample from.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Sample size when sampling from --model.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Density level; defaults to the model's lambda.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Force the number of components instead of estimating it.
    #[arg(long)]
    pub c: Option<usize>,
    /// Schedule profile: evec or eval. Defaults to evec with --c, eval otherwise.
    #[arg(long)]
    pub profile: Option<String>,
    /// Slack scale D in s_n = D·σ_n^{1-ε}.
    #[arg(long = "D", default_value_t = 1.0)]
    pub slack_scale: f64,
    /// Schedule exponent ε.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Window exponent ν; profile default when absent.
    #[arg(long)]
    pub nu: Option<f64>,
    /// H in f_n = H·n^h·K(σ_n^{-√ε}).
    #[arg(long = "H", default_value_t = 1.0)]
    pub h_scale: f64,
    /// h in f_n.
    #[arg(long = "h", default_value_t = 0.0)]
    pub h_exp: f64,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest instance size.
    #[arg(long, default_value_t = 60)]
    pub nmax: usize,
    /// Comma-separated variants to check.
    #[arg(long, default_value = "L,LN,LN0")]
    pub variants: String,
    /// Write reports.jsonl and a manifest here instead of printing reports.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Log-spaced grid start:stop:count with start > stop.
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SPECMARGIN_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| anyhow::anyhow!("SPECMARGIN_THREADS must be a positive integer, got {v:?}")),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(t) = thread_count(cli.threads)? {
        if t == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        configure_threads(t).map_err(|e| anyhow::anyhow!("cannot size the worker pool: {e}"))?;
    }
    match cli.command {
        Command::Cluster(a) => commands::cluster(a),
        Command::Levelset(a) => commands::levelset(a),
        Command::VerifyBounds(a) => commands::verify_bounds(a),
        Command::SigmaSweep(a) => commands::sigma_sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(2),
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
