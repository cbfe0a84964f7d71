//! Zeroth-order coordinate search over constant-density backward rewarding
//! mechanisms, with better-response dynamics as the inner creator response.
//!
//! Two ChaCha8 streams are derived from the seed: stream 0 drives the inner
//! dynamics (so `mech_step = 0` replays [`sim_stra`](crate::dynamics::sim_stra)
//! exactly) and stream 1 draws the coordinate, then the sign, of each epoch.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Simulator;
use crate::error::{invalid, Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{GameInstance, StrategyProfile};

/// Euclidean projection onto `{f_1 >= ... >= f_n >= 0}`: a nonincreasing
/// pool-adjacent-violators fit followed by truncation at zero.
pub fn project_to_polytope(f: &[f64]) -> Result<Vec<f64>> {
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("density vector".into()));
    }
    // (sum, count) blocks
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(f.len());
    for &x in f {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, c1 + c2);
        }
    }
    let mut out = Vec::with_capacity(f.len());
    for (s, c) in blocks {
        let v = if c == 1 { s } else { s / c as f64 };
        out.extend(std::iter::repeat_n(v.max(0.0), c));
    }
    Ok(out)
}

pub fn is_feasible(f: &[f64]) -> bool {
    f.iter().all(|x| x.is_finite() && *x >= 0.0) && f.windows(2).all(|w| w[0] >= w[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of epochs `L1`.
    pub epochs: usize,
    /// Dynamics steps per epoch `L2`.
    pub inner_steps: usize,
    /// Mechanism step `eta1`.
    pub mech_step: f64,
    /// Creator step `eta2`.
    pub creator_step: f64,
    #[serde(default)]
    pub seed: u64,
    /// Starting densities; the game's own constant densities when absent.
    #[serde(default)]
    pub initial_f: Option<Vec<f64>>,
    #[serde(default)]
    pub evaluate_unprojected: bool,
}

impl OptimizerConfig {
    pub fn new(epochs: usize, inner_steps: usize, mech_step: f64, creator_step: f64, seed: u64) -> Self {
        Self {
            epochs,
            inner_steps,
            mech_step,
            creator_step,
            seed,
            initial_f: None,
            evaluate_unprojected: false,
        }
    }

    pub fn with_initial_f(mut self, f: Vec<f64>) -> Self {
        self.initial_f = Some(f);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mech_step", self.mech_step), ("creator_step", self.creator_step)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub coordinate: usize,
    pub sign: i8,
    pub accepted: bool,
    /// Welfare of the profile reached at the end of the epoch.
    pub welfare: f64,
    /// Densities in force after the acceptance decision.
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerOutcome {
    /// Densities after the last epoch.
    pub f: Vec<f64>,
    /// Highest welfare observed at an epoch boundary, including the start.
    pub best_welfare: f64,
    /// Densities in force when `best_welfare` was observed.
    pub best_f: Vec<f64>,
    pub initial_welfare: f64,
    pub final_profile: StrategyProfile,
    pub log: Vec<EpochRecord>,
}

impl OptimizerOutcome {
    pub fn final_welfare(&self) -> f64 {
        self.log.last().map_or(self.initial_welfare, |r| r.welfare)
    }

    /// CSV with columns `epoch,coordinate,sign,accepted,welfare,f`, the
    /// density vector joined by `;`.
    pub fn write_epoch_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "coordinate", "sign", "accepted", "welfare", "f"])?;
        for r in &self.log {
            let f: Vec<String> = r.f.iter().map(|x| x.to_string()).collect();
            w.write_record([
                r.epoch.to_string(),
                (r.coordinate + 1).to_string(),
                r.sign.to_string(),
                u8::from(r.accepted).to_string(),
                r.welfare.to_string(),
                f.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rng_pair(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let dynamics = ChaCha8Rng::seed_from_u64(seed);
    let mut mechanism = ChaCha8Rng::seed_from_u64(seed);
    mechanism.set_stream(1);
    (dynamics, mechanism)
}

/// Searches the constant-density polytope for a mechanism whose induced
/// creator behaviour yields high social welfare.
pub fn optimize_brcm(
    game: &GameInstance,
    init: &StrategyProfile,
    cfg: &OptimizerConfig,
) -> Result<OptimizerOutcome> {
    cfg.validate()?;
    game.validate_profile(init)?;
    let n = game.n();
    let f0 = match (&cfg.initial_f, game.mechanism()) {
        (Some(f), _) => f.clone(),
        (None, Ok(Mechanism::Brcm { f })) => f.clone(),
        (None, _) => {
            return Err(invalid("optimizer needs a constant-density mechanism or an initial f"))
        }
    };
    if f0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f0.len() });
    }
    if !is_feasible(&f0) {
        return Err(invalid("initial densities must be nonnegative and nonincreasing"));
    }

    let (mut dyn_rng, mut mech_rng) = rng_pair(cfg.seed);
    let mut sim = Simulator::new(game, init.clone());
    let mut f = f0;
    let initial_welfare = sim.welfare();
    let mut current_w = initial_welfare;
    let mut best_welfare = initial_welfare;
    let mut best_f = f.clone();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let coordinate = mech_rng.random_range(0..n);
        let sign: i8 = if mech_rng.random::<bool>() { 1 } else { -1 };
        let mut trial = f.clone();
        trial[coordinate] += cfg.mech_step * f64::from(sign);
        let half = project_to_polytope(&trial)?;
        let mech = Mechanism::Brcm { f: half.clone() };
        sim.run(&mech, &mut dyn_rng, cfg.inner_steps, cfg.creator_step, cfg.evaluate_unprojected, None)?;
        let w = sim.welfare();
        let accepted = w > current_w;
        if accepted {
            f = half;
        }
        current_w = w;
        if w > best_welfare {
            best_welfare = w;
            best_f = f.clone();
        }
        log.push(EpochRecord { epoch: epoch + 1, coordinate, sign, accepted, welfare: w, f: f.clone() });
    }

    Ok(OptimizerOutcome {
        f,
        best_welfare,
        best_f,
        initial_welfare,
        final_profile: sim.into_profile(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{sim_stra_final, DynamicsConfig};
    use crate::environments::{make_synthetic, make_tvn, ScenarioVariant, SyntheticSpec};
    use crate::model::AttentionWeights;

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_polytope(&[0.5, 0.8]).unwrap(), vec![0.65, 0.65]);
        assert_eq!(project_to_polytope(&[-0.2, -0.5]).unwrap(), vec![0.0, 0.0]);
        let p = project_to_polytope(&[1.0, 0.5, 0.7]).unwrap();
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 0.6).abs() < 1e-15 && p[1] == p[2]);
        assert!(project_to_polytope(&[f64::NAN]).is_err());
        assert_eq!(project_to_polytope(&[]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn projection_pools_across_blocks() {
        let p = project_to_polytope(&[0.0, 1.0, 2.0, -3.0]).unwrap();
        assert_eq!(p, vec![1.0, 1.0, 1.0, 0.0]);
    }

    fn tvn2() -> GameInstance {
        make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap())
            .unwrap()
            .with_mechanism(Mechanism::brcm(vec![1.0, 1.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_epochs_returns_start() {
        let g = tvn2();
        let init = StrategyProfile::uniform_index(2, 0);
        let out = optimize_brcm(&g, &init, &OptimizerConfig::new(0, 5, 1.0, 2.0, 0)).unwrap();
        assert_eq!(out.f, vec![1.0, 1.0]);
        assert_eq!(out.final_profile, init);
        assert!(out.log.is_empty());
    }

    #[test]
    fn zero_mech_step_matches_plain_dynamics() {
        let s = make_synthetic(&SyntheticSpec::default(), ScenarioVariant::G1).unwrap();
        let f0 = vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let g = s.game.with_mechanism(Mechanism::brcm(f0.clone()).unwrap()).unwrap();
        let out =
            optimize_brcm(&g, &s.initial_profile, &OptimizerConfig::new(8, 5, 0.0, 0.1, 9)).unwrap();
        assert!(out.log.iter().all(|r| r.f == f0));
        let plain = sim_stra_final(&g, &s.initial_profile, &DynamicsConfig::new(40, 0.1, 9)).unwrap();
        assert_eq!(out.final_profile, plain);
    }

    #[test]
    fn emitted_densities_feasible_and_accepts_improve() {
        let g = tvn2();
        let init = StrategyProfile::uniform_index(2, 0);
        let out = optimize_brcm(&g, &init, &OptimizerConfig::new(60, 5, 0.4, 2.0, 3)).unwrap();
        let mut start = out.initial_welfare;
        for r in &out.log {
            assert!(is_feasible(&r.f));
            if r.accepted {
                assert!(r.welfare > start);
            }
            start = r.welfare;
        }
    }

    #[test]
    fn toy_reaches_optimum() {
        let g = tvn2();
        let init = StrategyProfile::uniform_index(2, 0);
        let out = optimize_brcm(&g, &init, &OptimizerConfig::new(50, 5, 1.0, 2.0, 1)).unwrap();
        assert_eq!(out.best_welfare, 1.0);
    }

    #[test]
    fn deterministic_and_validated() {
        let g = tvn2();
        let init = StrategyProfile::uniform_index(2, 0);
        let cfg = OptimizerConfig::new(20, 5, 0.5, 2.0, 4);
        assert_eq!(optimize_brcm(&g, &init, &cfg).unwrap(), optimize_brcm(&g, &init, &cfg).unwrap());
        let bad = cfg.clone().with_initial_f(vec![0.5, 1.0]);
        assert!(optimize_brcm(&g, &init, &bad).is_err());
        let g0 = make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap())
            .unwrap()
            .with_mechanism(Mechanism::M3Zero)
            .unwrap();
        assert!(optimize_brcm(&g0, &init, &cfg).is_err());
    }

    #[test]
    fn epoch_csv_header() {
        let g = tvn2();
        let init = StrategyProfile::uniform_index(2, 0);
        let out = optimize_brcm(&g, &init, &OptimizerConfig::new(2, 1, 0.5, 2.0, 4)).unwrap();
        let mut buf = Vec::new();
        out.write_epoch_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epoch,coordinate,sign,accepted,welfare,f\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
