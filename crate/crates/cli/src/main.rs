use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use catmem_cli::commands::{cmd_run, cmd_sweep};
use catmem_cli::config::{ConfigFile, ExperimentConfig};
use catmem_cli::manifest::{ensure_dir, write_json};
use catmem_cli::validate::{run_all, selected, ValidateOptions};
use catmem_cli::{oracle_cmd, presets};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "catmem", version, about = "Positive-P simulation of a cat-state optomechanical memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one parameter point and write its signatures.
    Run(Common),
    /// Evaluate negativity over one or two swept parameters.
    Sweep(Common),
    /// Evaluate a closed-form result, e.g. `oracle t_positive n_bar=2`.
    Oracle {
        /// Query name; `list` prints the available queries.
        query: String,
        /// Parameters as key=value.
        params: Vec<String>,
    },
    /// Run the acceptance criteria and write a JSON report.
    Validate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trajectories for the thermal consistency criterion.
        #[arg(long)]
        thermal_samples: Option<usize>,
        /// Comma-separated criterion numbers to run.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// List the criteria without running them.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of the named presets; `--preset list` prints them.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration without simulating.
    #[arg(long)]
    dry_run: bool,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = self.config.as_deref().map(ConfigFile::load).transpose()?;
        let flags = ConfigFile {
            preset: self.preset.clone(),
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            ..Default::default()
        };
        ExperimentConfig::resolve(file, flags)
    }

    fn lists_presets(&self) -> bool {
        if self.preset.as_deref() == Some("list") {
            for n in presets::names() {
                println!("{n}");
            }
            return true;
        }
        false
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(c) | Command::Sweep(c) if c.lists_presets() => Ok(true),
        Command::Run(c) => {
            let cfg = c.resolve()?;
            if c.dry_run {
                print_json(&cfg)?;
                return Ok(true);
            }
            let o = cmd_run(&cfg)?;
            print_json(&o.summary)?;
            eprintln!("wrote {}", o.manifest.display());
            Ok(true)
        }
        Command::Sweep(c) => {
            let cfg = c.resolve()?;
            if c.dry_run {
                print_json(&cfg)?;
                eprintln!("{} sweep points", cfg.points().len());
                return Ok(true);
            }
            let o = cmd_sweep(&cfg, |done, total| eprintln!("point {done}/{total}"))?;
            eprintln!("wrote {}", o.files[0].display());
            Ok(true)
        }
        Command::Oracle { query, params } => {
            if query == "list" {
                for (q, p) in oracle_cmd::QUERIES {
                    println!("{q:<20} {p}");
                }
                return Ok(true);
            }
            print_json(&oracle_cmd::evaluate(&query, oracle_cmd::parse_params(&params)?)?)?;
            Ok(true)
        }
        Command::Validate { seed, workers, out, thermal_samples, only, dry_run } => {
            let d = ValidateOptions::default();
            let opts = ValidateOptions {
                seed: seed.unwrap_or(d.seed),
                workers: workers.unwrap_or(d.workers),
                thermal_samples: thermal_samples.unwrap_or(d.thermal_samples),
                only,
            };
            if dry_run {
                for c in selected(&opts) {
                    println!("[{}] {}", c.id, c.title);
                }
                return Ok(true);
            }
            let report = run_all(&opts, |r| {
                println!("{}", r.line());
                for c in r.checks.iter().filter(|c| !c.passed) {
                    println!("    {}", c.describe());
                }
            });
            let dir = out.unwrap_or_else(|| PathBuf::from("out"));
            ensure_dir(&dir)?;
            let path = dir.join("validation.json");
            write_json(&path, &report).context("writing validation report")?;
            eprintln!("wrote {}", path.display());
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
