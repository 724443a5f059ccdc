//! Drives the harness from a config file, as the CLI does.
//!
//! cargo run --example run_experiment -- configs/verify_relation.json

use std::path::PathBuf;

use qpc_noise::harness::{run, ExperimentConfig, RunOptions};

fn main() -> qpc_noise::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/verify_relation.json").into());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let mode = cfg
        .mode
        .ok_or_else(|| qpc_noise::Error::Config("config does not name a mode".into()))?;
    let out = std::env::temp_dir().join("qpc-noise-example");
    let outcome = run(mode, &cfg, &RunOptions { seed: None, out: Some(PathBuf::from(&out)) })?;
    for c in &outcome.summary.checks {
        println!("{:5} {} = {:e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.value);
    }
    println!("files in {}: {}", out.display(), outcome.summary.files.join(", "));
    Ok(())
}
