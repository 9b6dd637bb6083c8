//! `kadupul`: run, validate and list simulator scenarios.
//!
//! Exit status is 0 on success, 2 when the scenario does not parse or
//! validate, 3 when the horizon was reached before the event queue drained
//! (outputs are still written) and 1 for anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::Context;
use clap::{Parser, Subcommand};
use kadupul::netsim::{self, templates, validate, ScenarioConfig, SimulationReport};

#[derive(Parser)]
#[command(name = "kadupul", version, about = "Deterministic simulator for time-locked forwarding rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or built-in template and write CSV/TOML results.
    Run {
        /// Path to a scenario TOML file, or a template name.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds after which the run stops.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run several seeds concurrently, each into `<out>/seed-<n>`.
        #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
        seeds: Vec<u64>,
    },
    /// Check a scenario and list every problem found.
    Validate { scenario: String },
    /// Print the built-in scenario templates.
    ListTemplates,
}

enum Failure {
    Invalid(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(scenario: &str) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(scenario);
    let text = if path.exists() {
        fs::read_to_string(path).with_context(|| format!("reading {scenario}"))?
    } else if let Some(t) = templates::get(scenario) {
        t.to_string()
    } else {
        return Err(Failure::Invalid(format!("{scenario}: no such file or template")));
    };
    ScenarioConfig::from_toml(&text).map_err(|e| Failure::Invalid(format!("{scenario}: {e}")))
}

fn check(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let diagnostics = validate(cfg);
    if diagnostics.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
    Err(Failure::Invalid(lines.join("\n")))
}

fn run_one(cfg: &ScenarioConfig, out: &Path) -> anyhow::Result<SimulationReport> {
    let report = netsim::run(cfg)?;
    report.write_outputs(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(report)
}

fn print_summary(report: &SimulationReport, out: &Path) {
    println!(
        "seed {}: {} events, ended at {:.6} s{}, outputs in {}",
        report.seed,
        report.events_processed,
        report.end_time_ns as f64 / 1e9,
        if report.quiescent { "" } else { " (horizon reached)" },
        out.display()
    );
    for w in &report.workloads {
        let status = if w.delivered { "delivered" } else { "not delivered" };
        println!("  {} [{}]: {status} {}", w.id, w.model, w.note);
    }
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::ListTemplates => {
            for name in templates::names() {
                let cfg = templates::load(name).expect("template");
                println!("{name:<30} {}", cfg.description);
            }
            Ok(0)
        }
        Command::Validate { scenario } => {
            let cfg = load(&scenario)?;
            check(&cfg)?;
            println!("{scenario}: ok");
            Ok(0)
        }
        Command::Run { scenario, seed, horizon, out, seeds } => {
            let mut cfg = load(&scenario)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            check(&cfg)?;
            if seeds.is_empty() {
                let report = run_one(&cfg, &out)?;
                print_summary(&report, &out);
                return Ok(if report.quiescent { 0 } else { 3 });
            }
            // every seed gets its own copy of the scenario and its own directory
            let results: Vec<(PathBuf, anyhow::Result<SimulationReport>)> = thread::scope(|s| {
                let handles: Vec<_> = seeds
                    .iter()
                    .map(|&n| {
                        let mut cfg = cfg.clone();
                        cfg.seed = n;
                        let dir = out.join(format!("seed-{n}"));
                        s.spawn(move || {
                            let r = run_one(&cfg, &dir);
                            (dir, r)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("seed worker panicked")).collect()
            });
            let mut code = 0;
            for (dir, r) in results {
                let report = r?;
                print_summary(&report, &dir);
                if !report.quiescent {
                    code = 3;
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Invalid(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
