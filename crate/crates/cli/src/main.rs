//! `finsler-lab`: runs one JSON-configured command and writes a summary
//! plus CSV traces.
//!
//! Exit codes: 0 when every gated quantity passes, 1 on an acceptance
//! failure or numeric blow-up, 2 on a configuration error.

mod run;

use clap::Parser;
use finsler_lab::checks::CHECKS;
use finsler_lab::config::{schema, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "finsler-lab", version, about = "Numerical laboratory for complex Finsler metrics")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir` of the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the JSON schema of the configuration and exit.
    #[arg(long)]
    print_schema: bool,
    /// List the checks of the `validate` suite and exit.
    #[arg(long)]
    list_checks: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if cli.print_schema {
        println!("{}", serde_json::to_string_pretty(&schema()).expect("schema serializes"));
        return ExitCode::SUCCESS;
    }
    if cli.list_checks {
        for c in &CHECKS {
            println!("{:>2}  {:<22} {}", c.id, c.name, c.summary);
        }
        return ExitCode::SUCCESS;
    }
    let Some(path) = cli.config else {
        eprintln!("error: --config <PATH> is required unless --print-schema or --list-checks is given");
        return ExitCode::from(2);
    };
    let cfg = match std::fs::read_to_string(&path) {
        Ok(src) => RunConfig::from_json(&src),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match run::run(&cfg, &out) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("{} -> {}", if outcome.passed { "PASS" } else { "FAIL" }, out.display());
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(run::RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(run::RunError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(1)
        }
    }
}
