use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use semnet_core::routing::Scheme;
use semnet_core::ErrorCategory;
use semnet_harness::batch::{read_batch_rows, run_batch};
use semnet_harness::config::parse_phase;
use semnet_harness::output::write_run_logs;
use semnet_harness::report::{claims, gain_table, render, write_report, Table};
use semnet_harness::robustness::{run_robustness, Levels};
use semnet_harness::stability::{rows as stability_rows, run_stability, write_stability_csv, Setting};
use semnet_harness::sweep::{plateau, run_grid, write_sweep_csv, Grid, DELTA0S, GAMMAS, KAPPAS};
use semnet_harness::{run_scenario, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "semnet", version, about = "Semantic-aware routing experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file; omitted keys take their defaults.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,
    /// Seeds as a comma list or inclusive range, e.g. `1,4,9` or `1-10`.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Schemes to run, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    schemes: Vec<Scheme>,
    /// Replace the phase schedule; `start:load:mobility[:arrivals]`, repeatable.
    #[arg(long = "phase", global = true)]
    phases: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One scheme on one seed, with full logs.
    Run {
        #[arg(long, default_value = "proposed")]
        scheme: Scheme,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Every scheme on every seed.
    Batch {
        /// Also write per-run event logs.
        #[arg(long)]
        logs: bool,
    },
    /// Sensitivity surfaces of the proposed scheme.
    Sweep {
        #[arg(long, value_enum, default_value = "all")]
        grid: GridName,
    },
    /// Embedding noise, dimension reduction and concept drift.
    Robustness,
    /// Stabilization under escalating dynamics.
    Stability,
    /// Gain table and comparative claims from a batch CSV.
    Report {
        /// Batch CSV; defaults to `<out>/batch.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Print the default scenario file.
    Defaults,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridName {
    KappaDelta0,
    RelevanceSimplex,
    KappaGamma,
    All,
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                if a > b {
                    bail!("empty seed range {part:?}");
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse()?),
        }
    }
    if out.is_empty() {
        bail!("no seeds in {s:?}");
    }
    Ok(out)
}

fn load_config(c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &c.seeds {
        let seeds = parse_seeds(s).map_err(|e| HarnessError::Config(format!("--seeds: {e}")))?;
        cfg.harness.sweep_seeds = seeds.clone();
        cfg.harness.seeds = seeds;
    }
    if !c.schemes.is_empty() {
        cfg.harness.schemes = c.schemes.clone();
    }
    if !c.phases.is_empty() {
        let phases = c.phases.iter().map(|p| parse_phase(p)).collect::<Result<Vec<_>, _>>()?;
        cfg = cfg.with_phases(phases)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    if let Command::Defaults = cli.command {
        print!("{}", ExperimentConfig::default().to_toml()?);
        return Ok(());
    }
    let cfg = load_config(&cli.common)?;
    let out = &cli.common.out;
    create(out)?;
    match cli.command {
        Command::Run { scheme, seed } => {
            let run = run_scenario(&cfg, scheme, seed)?;
            let dir = write_run_logs(out, &cfg.netsim.name, &run)?;
            for (name, value) in run.metrics.named() {
                println!("{name:<30} {value:.6}");
            }
            eprintln!("logs in {}", dir.display());
        }
        Command::Batch { logs } => {
            let batch = run_batch(&cfg, logs.then_some(out.as_path()))?;
            let path = out.join("batch.csv");
            batch.write_csv(&path)?;
            if !batch.schemes_share_inputs() {
                bail!("schemes saw different topologies or arrivals");
            }
            eprintln!("{} runs written to {}", batch.runs.len(), path.display());
        }
        Command::Sweep { grid } => {
            let grids = match grid {
                GridName::KappaDelta0 => vec![Grid::kappa_delta0(&KAPPAS, &DELTA0S)],
                GridName::RelevanceSimplex => vec![Grid::relevance_simplex(0.1)],
                GridName::KappaGamma => vec![Grid::kappa_gamma(&KAPPAS, &GAMMAS)],
                GridName::All => Grid::standard(),
            };
            for g in grids {
                let points = run_grid(&cfg, &g, &cfg.harness.sweep_seeds)?;
                let path = out.join(format!("sweep_{}.csv", g.name));
                write_sweep_csv(&path, &points)?;
                if let Some(p) = plateau(&points) {
                    println!(
                        "{}: best ({}, {}) SDSR {:.4}, grid minimum {:.4}",
                        g.name, p.best.0, p.best.1, p.best_sdsr, p.min_sdsr
                    );
                }
            }
        }
        Command::Robustness => {
            let r = run_robustness(&cfg, &Levels::default(), &cfg.harness.seeds)?;
            r.write_csv(out)?;
            for (scheme, level, seed, k) in r.reentries() {
                let k = k.map_or("never".to_string(), |k| k.to_string());
                println!("drift {level} {scheme} seed {seed}: re-entry after {k} intervals");
            }
        }
        Command::Stability => {
            let runs = run_stability(&cfg, &Setting::escalating(), &cfg.harness.seeds)?;
            write_stability_csv(&out.join("stability.csv"), &runs)?;
            for r in stability_rows(&runs) {
                println!(
                    "setting {}: {:.2} ± {:.2} intervals (n = {}, unsettled {}), max excursions {}",
                    r.setting, r.stabilization, r.ci95, r.n, r.unstabilized, r.max_excursions
                );
            }
        }
        Command::Report { input } => {
            let path = input.unwrap_or_else(|| out.join("batch.csv"));
            let rows = read_batch_rows(&path).with_context(|| format!("reading {}", path.display()))?;
            let table = Table::new(rows);
            let (gains, claims) = (gain_table(&table), claims(&table));
            write_report(out, &gains, &claims)?;
            print!("{}", render(&gains, &claims));
        }
        Command::Defaults => unreachable!("handled above"),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let category = err.chain().find_map(|e| {
        e.downcast_ref::<HarnessError>()
            .map(HarnessError::category)
            .or_else(|| e.downcast_ref::<semnet_core::Error>().map(semnet_core::Error::category))
    });
    match category {
        Some(ErrorCategory::Config) => 2,
        Some(ErrorCategory::Domain) => 3,
        Some(ErrorCategory::Simulation) => 4,
        Some(ErrorCategory::Measurement) => 5,
        Some(ErrorCategory::Io) => 6,
        None => 1,
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("1-3,7").unwrap(), vec![1, 2, 3, 7]);
        assert_eq!(parse_seeds("5").unwrap(), vec![5]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn config_errors_map_to_their_exit_code() {
        let e = anyhow::Error::from(HarnessError::Config("x".into())).context("loading");
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
