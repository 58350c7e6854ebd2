//! Loads a JSON run configuration and writes the `metrics` artifacts, as the command line does.
//!
//! `cargo run --example run_from_config -- crates/core/configs/device.json out/`

use clap::Parser;
use qndsim::cli::{run_cli, Cli};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/device.json").into());
    let out = args.next().unwrap_or_else(|| "qndsim-example-out".into());
    let cli = Cli::parse_from(["qndsim", "metrics", "--config", &config, "--out", &out, "--seed", "1"]);
    match run_cli(&cli) {
        Ok(summary) => summary.iter().for_each(|line| println!("{line}")),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
