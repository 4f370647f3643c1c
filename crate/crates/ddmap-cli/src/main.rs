//! Command-line front-end for the waveshape library: synthesize benchmark
//! signals, run the cycle-embedding pipeline, and inspect its outputs.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_inspect, cmd_run, cmd_synth, rerun_from_manifest, CmdError, RunArgs};
use config::{parse_bandwidth_flag, DetectorCfg, FileOverrides, ResolvedConfig};

#[derive(Parser)]
#[command(
    name = "ddmap",
    version,
    about = "Embed oscillatory cycles of a periodic signal with alpha-normalized diffusion maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known ground truth
    Synth(SynthArgs),
    /// Run the full pipeline on a signal CSV
    Run(RunCliArgs),
    /// Summarize an embedding produced by `run`
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario name; an unknown name lists the available ones
    #[arg(long)]
    scenario: String,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the scenario's default duration in seconds
    #[arg(long)]
    duration: Option<f64>,
    /// Output directory (defaults to $DDMAP_OUT)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunCliArgs {
    /// Pipeline preset: ecg, abp, or custom
    #[arg(long, default_value = "ecg")]
    mode: String,
    /// Input signal CSV with time,value rows
    #[arg(
        long,
        required_unless_present = "manifest",
        conflicts_with = "manifest"
    )]
    input: Option<PathBuf>,
    /// Re-run a previous invocation from its manifest
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// External landmark CSV, one sample index per row
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// TOML file overriding parts of the mode preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// Density-normalization exponent in [0, 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Diffusion time
    #[arg(long)]
    t: Option<f64>,
    /// Embedding dimension
    #[arg(long)]
    d: Option<usize>,
    /// Bandwidth rule: quartile, knn:K:PCT, or explicit:H
    #[arg(long)]
    bandwidth: Option<String>,
    /// Z-normalize each cycle row before embedding
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,
    /// Keep raw cycle amplitudes
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,
    /// Embedding coordinate used for the respiratory trace (1-based)
    #[arg(long)]
    edr_coord: Option<usize>,
    /// Output directory (defaults to $DDMAP_OUT)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Embedding CSV written by `run`
    embedding: PathBuf,
    /// Eigenvalue report (defaults to eigenvalues.json next to the embedding)
    #[arg(long)]
    eigenvalues: Option<PathBuf>,
}

fn resolve_out(out: Option<PathBuf>) -> Result<PathBuf, CmdError> {
    out.or_else(|| std::env::var_os("DDMAP_OUT").map(PathBuf::from))
        .ok_or_else(|| CmdError::Usage("no output directory: pass --out or set DDMAP_OUT".into()))
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Synth(a) => {
            let out = resolve_out(a.out)?;
            cmd_synth(&a.scenario, a.seed, a.duration, &out)
        }
        Command::Run(a) => {
            let out = resolve_out(a.out)?;
            if let Some(m) = &a.manifest {
                return rerun_from_manifest(m, &out);
            }
            let mut cfg = ResolvedConfig::for_mode(&a.mode).ok_or_else(|| {
                CmdError::Usage(format!(
                    "unknown mode `{}` (expected ecg, abp, or custom)",
                    a.mode
                ))
            })?;
            if let Some(p) = &a.config {
                let text = fs::read_to_string(p)
                    .map_err(|e| CmdError::Usage(format!("config `{}`: {e}", p.display())))?;
                let over: FileOverrides = toml::from_str(&text)
                    .map_err(|e| CmdError::Usage(format!("config `{}`: {e}", p.display())))?;
                over.apply(&mut cfg);
            }
            if let Some(alpha) = a.alpha {
                cfg.kernel.alpha = alpha;
            }
            if let Some(t) = a.t {
                cfg.kernel.t = t;
            }
            if let Some(d) = a.d {
                cfg.kernel.d = d;
            }
            if let Some(s) = &a.bandwidth {
                cfg.kernel.bandwidth = parse_bandwidth_flag(s).map_err(CmdError::Usage)?;
            }
            if a.normalize {
                cfg.normalize = true;
            }
            if a.no_normalize {
                cfg.normalize = false;
            }
            if let Some(c) = a.edr_coord {
                cfg.edr_coord = c;
            }
            if a.landmarks.is_some() {
                cfg.detector = DetectorCfg::External;
            }
            let input = a.input.expect("clap enforces --input without --manifest");
            cmd_run(RunArgs {
                config: cfg,
                input,
                landmarks: a.landmarks,
                out,
                expect_sha: None,
            })
        }
        Command::Inspect(a) => cmd_inspect(&a.embedding, a.eigenvalues.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
