use std::path::Path;

use anyhow::Result;
use c3sim::{optimize_brcm, OptimizerConfig, Preset};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{join, write_atomic};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeRow {
    pub seed: u64,
    pub initial_welfare: f64,
    pub final_welfare: f64,
    pub best_welfare: f64,
    pub f: Vec<f64>,
    pub best_f: Vec<f64>,
}

/// Runs the mechanism search once per seed, starting from the optimizer's
/// `initial_f` or the `brcm-opt` starting point. Writes `epochs/opt_seed<s>.csv`
/// and `optimize_summary.csv` under `out`.
pub fn optimize(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<OptimizeRow>> {
    if cfg.seeds.is_empty() {
        anyhow::bail!("config lists no seeds");
    }
    let base = cfg.optimizer();
    base.validate()?;
    let rows: Vec<OptimizeRow> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let scenario = cfg.scenario(seed)?;
            let n = scenario.game.n();
            let start = Preset::BrcmOpt.mechanism(n, scenario.game.attention())?;
            let game = scenario.game.with_mechanism(start)?;
            let opt_cfg = OptimizerConfig { seed, ..base.clone() };
            let res = optimize_brcm(&game, &scenario.initial_profile, &opt_cfg)?;
            write_atomic(&out.join("epochs").join(format!("opt_seed{seed}.csv")), |b| {
                Ok(res.write_epoch_csv(b)?)
            })?;
            Ok(OptimizeRow {
                seed,
                initial_welfare: res.initial_welfare,
                final_welfare: res.final_welfare(),
                best_welfare: res.best_welfare,
                f: res.f,
                best_f: res.best_f,
            })
        })
        .collect::<Result<_>>()?;
    write_atomic(&out.join("optimize_summary.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["seed", "initial_welfare", "final_welfare", "best_welfare", "f", "best_f"])?;
        for r in &rows {
            w.write_record([
                r.seed.to_string(),
                r.initial_welfare.to_string(),
                r.final_welfare.to_string(),
                r.best_welfare.to_string(),
                join(&r.f),
                join(&r.best_f),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(rows)
}
