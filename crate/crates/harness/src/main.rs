use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use c3sim::{Mechanism, ScenarioVariant, SyntheticSpec};
use c3sim_harness::commands::{self, VerifyParams};
use c3sim_harness::config::{EnvironmentConfig, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "c3sim", version, about = "Content-creator competition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic population and creator setup to CSV.
    GenSynth {
        /// Experiment config; its synthetic environment and variant are used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Instance seed, added to the spec's own seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the dynamics for every mechanism and seed.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds overriding the config.
        #[arg(long, value_delimiter = ',')]
        seed: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the mechanism search for every seed.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seed: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check equilibria on TvN games and fuzz the mechanism properties.
    Verify {
        /// Creator counts to sweep; pass the flag with no value for an empty sweep.
        #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = [3usize, 4, 5])]
        n: Vec<usize>,
        /// Top-K cutoffs to sweep.
        #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = [1usize, 2])]
        k: Vec<usize>,
        /// Maximum profile-deviation checks per enumeration.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u128,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file with an extra mechanism (`kind = ...`) to check.
        #[arg(long)]
        mechanism: Option<PathBuf>,
        /// Creator count for an extra mechanism that does not fix one.
        #[arg(long, default_value_t = 5)]
        mechanism_n: usize,
        /// Also write the report to `verify.txt` in this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute aggregates from `summary.csv` and rank mechanisms.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, seeds: Option<Vec<u64>>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    Ok(cfg)
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenSynth { config, seed, out } => {
            let cfg = config.as_deref().map(|p| load(p, None)).transpose()?;
            let (mut spec, variant) = match &cfg {
                None => (SyntheticSpec::default(), ScenarioVariant::G1),
                Some(c) => match &c.environment {
                    EnvironmentConfig::Synthetic { spec, .. } => (spec.clone(), c.variant),
                    _ => bail!("gen-synth needs a synthetic environment"),
                },
            };
            spec.seed = spec.seed.wrapping_add(seed);
            let out = out_dir(out, cfg.as_ref());
            commands::gen_synth(&spec, variant, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Simulate { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let out = out_dir(out, Some(&cfg));
            let rows = commands::simulate(&cfg, &out)?;
            for r in &rows {
                println!("{} seed {}: welfare {:.6}", r.mechanism, r.seed, r.final_welfare);
            }
            println!("wrote {}", out.join("summary.csv").display());
        }
        Command::Optimize { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let out = out_dir(out, Some(&cfg));
            for r in commands::optimize(&cfg, &out)? {
                println!(
                    "seed {}: welfare {:.6} -> {:.6} (best {:.6})",
                    r.seed, r.initial_welfare, r.final_welfare, r.best_welfare
                );
            }
            println!("wrote {}", out.join("optimize_summary.csv").display());
        }
        Command::Verify { n, k, budget, samples, seed, mechanism, mechanism_n, out } => {
            let mechanism = match mechanism {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    Some(toml::from_str::<Mechanism>(&text)
                        .with_context(|| format!("parsing {}", p.display()))?)
                }
                None => None,
            };
            let params = VerifyParams { ns: n, ks: k, budget, samples, seed, mechanism, mechanism_n };
            let lines = commands::verify(&params)?;
            let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
            print!("{text}");
            if let Some(dir) = out {
                c3sim_harness::output::write_atomic(&dir.join("verify.txt"), |b| {
                    b.extend_from_slice(text.as_bytes());
                    Ok(())
                })?;
            }
            return Ok(lines.iter().all(|l| l.passed));
        }
        Command::Report { out } => {
            let rows = commands::report(&out)?;
            println!("{:<16} {:>5} {:>12} {:>12} {:>4}", "mechanism", "seeds", "mean", "sd", "rank");
            for r in &rows {
                println!(
                    "{:<16} {:>5} {:>12.6} {:>12.6} {:>4}{}",
                    r.mechanism,
                    r.seeds,
                    r.mean_welfare,
                    r.sd_welfare,
                    r.rank,
                    if r.consistent { "" } else { "  aggregate mismatch" }
                );
            }
            return Ok(rows.iter().all(|r| r.consistent));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
