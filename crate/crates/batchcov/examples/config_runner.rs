//! Drives an experiment from a JSON document through the same runner the CLI
//! uses, printing the CSV artifact to stdout.
//!
//! Run with: cargo run --release --example config_runner

use batchcov::config::ExperimentConfig;
use batchcov::runner;

fn main() -> batchcov::Result<()> {
    let text = r#"{
        "version": 1,
        "command": "k-sweep",
        "model": {"f": {"terms": [{"exps": [1], "coef": 1.0}, {"exps": [2], "coef": 1.0}]}},
        "distribution": {"kind": "normal", "params": {"d": 1}},
        "k_list": [5, 10],
        "n": 30,
        "alphas": [0.1],
        "reps": 20000,
        "coeff_reps": 5000,
        "seed": 12,
        "timing": false
    }"#;
    let config = ExperimentConfig::from_json(text)?;
    let artifact = runner::run(&config)?;
    print!("{}", artifact.to_csv());
    Ok(())
}
