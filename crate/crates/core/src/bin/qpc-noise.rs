use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpc_noise::harness::{run, ExperimentConfig, Mode, RunOptions};
use qpc_noise::Error;

#[derive(Parser)]
#[command(name = "qpc-noise", version, about = "Detector noise and decoherence experiments")]
struct Cli {
    #[command(subcommand)]
    mode: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectory ensemble with summary statistics
    Simulate(Common),
    /// Closed forms against brute-force enumeration
    VerifyOracle(Common),
    /// Measurement noise against decoherence rate
    VerifyRelation(Common),
    /// Current variance against averaging time
    NoiseCurve(Common),
    /// Cartesian product over parameter axes
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides master_seed from the config
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.mode {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::VerifyOracle(a) => (Mode::VerifyOracle, a),
        Command::VerifyRelation(a) => (Mode::VerifyRelation, a),
        Command::NoiseCurve(a) => (Mode::NoiseCurve, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    let outcome = ExperimentConfig::load(&args.config).and_then(|cfg| {
        run(
            mode,
            &cfg,
            &RunOptions {
                seed: args.seed,
                out: args.out,
            },
        )
    });
    match outcome {
        Err(e) => {
            eprintln!("qpc-noise: {e}");
            // a numerical failure after validation counts against the run,
            // not the config
            match e {
                Error::Config(_) | Error::Io(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
        Ok(o) => {
            if !args.quiet {
                for c in &o.summary.checks {
                    println!(
                        "{} {} = {:e} (threshold {:e})",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.name,
                        c.value,
                        c.threshold
                    );
                }
                if let Some(n) = o.summary.empirical_n_max {
                    println!("empirical N_max = {n}");
                }
                println!("wrote {} files to {}", o.summary.files.len(), o.out_dir.display());
            }
            if o.summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
