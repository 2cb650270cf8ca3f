use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hawkes_field::experiments::{
    cmd_chaos_study, cmd_converge_study, cmd_quantize, cmd_simulate, cmd_solve_limit, cmd_verify, ExperimentConfig,
    Run,
};
use hawkes_field::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Spatial nonlinear Hawkes networks and their neural-field limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the network and check the moment bounds.
    Simulate(Common),
    /// Solve the limit intensity and membrane potential.
    SolveLimit(Common),
    /// Build quantized positions with their certificates.
    Quantize(Common),
    /// Coupling, distance bounds and rate regressions over the N ladder.
    ConvergeStudy(Common),
    /// Covariance of localized activity over the N ladder.
    ChaosStudy(Common),
    /// Re-check the hashes of an output directory.
    Verify {
        #[arg(long)]
        out: PathBuf,
        /// Also require the outputs to come from this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn run_common(c: &Common, f: impl FnOnce(Run<'_>) -> Result<String>) -> Result<String> {
    if let Some(k) = c.jobs {
        if k == 0 {
            return Err(Error::InvalidParameter {
                path: "--jobs".into(),
                reason: "must be >= 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Structural(e.to_string()))?;
    }
    let loaded = ExperimentConfig::load(&c.config)?;
    let out = c
        .out
        .clone()
        .or_else(|| loaded.config.output_dir.clone())
        .ok_or_else(|| Error::InvalidParameter {
            path: "output_dir".into(),
            reason: "give --out or set output_dir in the config".into(),
        })?;
    f(Run {
        config: &loaded.config,
        config_sha256: &loaded.sha256,
        seed: c.seed.unwrap_or(loaded.config.seed),
        out: &out,
    })
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Structural(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate(c) => run_common(&c, |r| json(&cmd_simulate(r)?)),
        Command::SolveLimit(c) => run_common(&c, |r| json(&cmd_solve_limit(r)?)),
        Command::Quantize(c) => run_common(&c, |r| json(&cmd_quantize(r)?)),
        Command::ConvergeStudy(c) => run_common(&c, |r| json(&cmd_converge_study(r)?)),
        Command::ChaosStudy(c) => run_common(&c, |r| json(&cmd_chaos_study(r)?)),
        Command::Verify { out, config } => {
            let hash = config.map(|p| ExperimentConfig::load(&p)).transpose()?.map(|l| l.sha256);
            let m = cmd_verify(&out, hash.as_deref())?;
            Ok(format!("verified {} files", m.files.len()))
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                2
            } else if e.is_numerical() {
                3
            } else {
                1
            })
        }
    }
}
