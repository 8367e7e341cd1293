//! `mellip` — checks and experiments for the lattice symbol calculus.
//!
//! ```text
//! mellip <task> --config <path> [--out <dir>] [--seed <u64>] [--csv]
//! ```
//!
//! Tasks: `validate-weight`, `check-symbol`, `calculus`, `parametrix`,
//! `index`, `sobolev`. Exit codes: 0 all contracts met, 1 usage or
//! configuration error, 2 contract violation (the failing invariants are
//! listed in the report and on stderr).

mod config;
mod expr;
mod report;
mod sources;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

const TASKS: [&str; 6] =
    ["validate-weight", "check-symbol", "calculus", "parametrix", "index", "sobolev"];

const USAGE: &str = "usage: mellip <task> --config <path> [--out <dir>] [--seed <u64>] [--csv]
tasks: validate-weight | check-symbol | calculus | parametrix | index | sobolev";

struct Args {
    task: String,
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    csv: bool,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut it = argv.iter();
    let task = it.next().ok_or_else(|| USAGE.to_string())?.clone();
    if !TASKS.contains(&task.as_str()) {
        return Err(format!("unknown task '{task}'\n{USAGE}"));
    }
    let mut config = None;
    let mut out = PathBuf::from(".");
    let mut seed = None;
    let mut csv = false;
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--config" => {
                let v = it.next().ok_or("--config needs a path")?;
                config = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it.next().ok_or("--out needs a directory")?;
                out = PathBuf::from(v);
            }
            "--seed" => {
                let v = it.next().ok_or("--seed needs an unsigned integer")?;
                seed = Some(v.parse::<u64>().map_err(|_| format!("bad seed '{v}'"))?);
            }
            "--csv" => csv = true,
            other => return Err(format!("unknown flag '{other}'\n{USAGE}")),
        }
    }
    let config = config.ok_or_else(|| format!("--config is required\n{USAGE}"))?;
    Ok(Args { task, config, out, seed, csv })
}

fn run(args: &Args) -> Result<bool, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let cfg: config::ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let seed = args.seed.unwrap_or(cfg.params.seed);

    let output = tasks::run_task(&args.task, &cfg, seed, args.csv)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| format!("{}: {e}", args.out.display()))?;
    let report_path = args.out.join(format!("{}-report.json", args.task));
    std::fs::write(&report_path, output.report.to_pretty_string())
        .map_err(|e| format!("{}: {e}", report_path.display()))?;
    for (name, contents) in &output.csv {
        let path = args.out.join(name);
        std::fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    println!("report: {}", report_path.display());
    let passed = output.report.passed();
    for v in &output.report.verdicts {
        let mark = if v.passed { "pass" } else { "FAIL" };
        println!("  [{mark}] {}: {}", v.name, v.detail);
        if !v.passed {
            eprintln!("violation: {}: {}", v.name, v.detail);
        }
    }
    println!("{}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
