use std::path::Path;

use anyhow::{Context, Result};
use c3sim::{
    grouped_user_welfare, run_preset, sim_stra, welfare, DynamicsConfig, OptimizerConfig, Scenario,
};
use rayon::prelude::*;

use crate::config::{Arm, ExperimentConfig};
use crate::output::{mean, sd, write_atomic};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mechanism: String,
    pub seed: u64,
    pub final_welfare: f64,
    /// Mean user welfare per reporting group.
    pub groups: Vec<f64>,
}

fn cell_file(out: &Path, dir: &str, name: &str, seed: u64) -> std::path::PathBuf {
    out.join(dir).join(format!("{name}_seed{seed}.csv"))
}

fn run_cell(
    arm: &Arm,
    seed: u64,
    scenario: &Scenario,
    groups: &[Vec<usize>],
    dynamics: &DynamicsConfig,
    optimizer: &OptimizerConfig,
    out: &Path,
) -> Result<SummaryRow> {
    let name = arm.name();
    let dynamics = DynamicsConfig { seed, ..dynamics.clone() };
    let optimizer = OptimizerConfig { seed, ..optimizer.clone() };
    let (game, final_profile) = match arm {
        Arm::Preset(p) => {
            let run = run_preset(*p, &scenario.game, &scenario.initial_profile, &dynamics, &optimizer)?;
            if let Some(traj) = &run.trajectory {
                write_atomic(&cell_file(out, "trajectories", &name, seed), |b| Ok(traj.write_csv(b)?))?;
            }
            if let Some(opt) = &run.optimizer {
                write_atomic(&cell_file(out, "epochs", &name, seed), |b| Ok(opt.write_epoch_csv(b)?))?;
            }
            (scenario.game.clone().with_mechanism(run.mechanism)?, run.final_profile)
        }
        Arm::Fixed { mechanism, .. } => {
            let game = scenario.game.clone().with_mechanism(mechanism.clone())?;
            let (fin, traj) = sim_stra(&game, &scenario.initial_profile, &dynamics)?;
            write_atomic(&cell_file(out, "trajectories", &name, seed), |b| Ok(traj.write_csv(b)?))?;
            (game, fin)
        }
    };
    let groups = if groups.is_empty() {
        Vec::new()
    } else {
        grouped_user_welfare(&final_profile, &game, groups)?
    };
    Ok(SummaryRow {
        mechanism: name,
        seed,
        final_welfare: welfare(&final_profile, &game)?,
        groups,
    })
}

/// Runs every (mechanism, seed) cell in parallel and writes per-cell CSVs
/// plus `summary.csv` under `out`.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let arms = cfg.arms()?;
    let scenarios: Vec<Scenario> = cfg
        .seeds
        .par_iter()
        .map(|&s| cfg.scenario(s).with_context(|| format!("building environment for seed {s}")))
        .collect::<Result<_>>()?;
    let groups = cfg.reporting_groups(&scenarios[0]);
    let optimizer = cfg.optimizer();
    let cells: Vec<(usize, usize)> =
        (0..arms.len()).flat_map(|a| (0..cfg.seeds.len()).map(move |s| (a, s))).collect();
    let rows: Vec<SummaryRow> = cells
        .par_iter()
        .map(|&(a, s)| {
            run_cell(&arms[a], cfg.seeds[s], &scenarios[s], &groups, &cfg.dynamics, &optimizer, out)
                .with_context(|| format!("{} seed {}", arms[a].name(), cfg.seeds[s]))
        })
        .collect::<Result<_>>()?;
    write_summary(&out.join("summary.csv"), &rows, groups.len())?;
    Ok(rows)
}

/// `mechanism,seed,final_welfare,final_welfare_sd,group_1,group_1_sd,...`:
/// one row per seed with empty `_sd` columns, then one `aggregate` row per
/// mechanism holding means and sample standard deviations.
pub fn write_summary(path: &Path, rows: &[SummaryRow], n_groups: usize) -> Result<()> {
    write_atomic(path, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["mechanism".to_string(), "seed".into(), "final_welfare".into(), "final_welfare_sd".into()];
        for g in 1..=n_groups {
            header.push(format!("group_{g}"));
            header.push(format!("group_{g}_sd"));
        }
        w.write_record(&header)?;
        let mut names: Vec<&str> = Vec::new();
        for r in rows {
            if !names.contains(&r.mechanism.as_str()) {
                names.push(&r.mechanism);
            }
        }
        for name in names {
            let mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.mechanism == name).collect();
            for r in &mine {
                let mut rec = vec![name.to_string(), r.seed.to_string(), r.final_welfare.to_string(), String::new()];
                for g in &r.groups {
                    rec.push(g.to_string());
                    rec.push(String::new());
                }
                w.write_record(&rec)?;
            }
            let wv: Vec<f64> = mine.iter().map(|r| r.final_welfare).collect();
            let mut rec = vec![name.to_string(), "aggregate".into(), mean(&wv).to_string(), sd(&wv).to_string()];
            for g in 0..n_groups {
                let gv: Vec<f64> = mine.iter().map(|r| r.groups[g]).collect();
                rec.push(mean(&gv).to_string());
                rec.push(sd(&gv).to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })
}
