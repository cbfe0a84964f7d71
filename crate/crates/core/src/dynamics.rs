//! Stochastic better-response dynamics.
//!
//! Each step draws a creator `i` uniformly, then a direction `g` uniformly on
//! the unit sphere (a normalized standard Gaussian, `d` draws), both from one
//! ChaCha8 stream in that order. The creator proposes `project(s_i + step * g)`
//! and adopts it when its utility does not decrease.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mechanisms::Mechanism;
use crate::model::{norm, GameInstance, StrategyProfile};
use crate::welfare::{self, ScoreTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Number of steps `T`.
    pub horizon: usize,
    /// Perturbation length `eta`.
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    /// Record a trajectory snapshot every this many steps.
    #[serde(default = "one")]
    pub record_every: usize,
    /// Compare utilities at the raw perturbed point and project afterwards,
    /// instead of comparing at the projected candidate.
    #[serde(default)]
    pub evaluate_unprojected: bool,
}

fn one() -> usize {
    1
}

impl DynamicsConfig {
    pub fn new(horizon: usize, step: f64, seed: u64) -> Self {
        Self { horizon, step, seed, record_every: 1, evaluate_unprojected: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step >= 0.0) {
            return Err(invalid("dynamics step must be finite and nonnegative"));
        }
        if self.record_every < 1 {
            return Err(invalid("record_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub t: usize,
    pub profile: StrategyProfile,
    pub welfare: f64,
    /// Present under backward rewarding mechanisms.
    pub potential: Option<f64>,
    pub utilities: Vec<f64>,
    /// Whether the move proposed at this step was adopted (`false` at `t = 0`).
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub accepted_moves: usize,
}

impl Trajectory {
    /// CSV with columns `t,welfare,potential,accepted,u_1..u_n`; potential is
    /// empty for mechanisms without one.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.steps.first().map_or(0, |s| s.utilities.len());
        let mut header = vec!["t".to_string(), "welfare".into(), "potential".into(), "accepted".into()];
        header.extend((1..=n).map(|i| format!("u_{i}")));
        w.write_record(&header)?;
        for s in &self.steps {
            let mut row = vec![
                s.t.to_string(),
                s.welfare.to_string(),
                s.potential.map(|p| p.to_string()).unwrap_or_default(),
                u8::from(s.accepted).to_string(),
            ];
            row.extend(s.utilities.iter().map(|u| u.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mutable state of a running simulation: the profile and its score table.
/// The mechanism is supplied per call so callers may swap it between steps.
pub(crate) struct Simulator<'a> {
    game: &'a GameInstance,
    profile: StrategyProfile,
    table: ScoreTable,
}

impl<'a> Simulator<'a> {
    pub(crate) fn new(game: &'a GameInstance, profile: StrategyProfile) -> Self {
        let table = ScoreTable::build_unchecked(game, &profile);
        Self { game, profile, table }
    }

    pub(crate) fn into_profile(self) -> StrategyProfile {
        self.profile
    }

    pub(crate) fn welfare(&self) -> f64 {
        welfare::welfare_from_table(&self.table, self.game, &self.profile)
    }

    fn snapshot(&self, mech: &Mechanism, t: usize, accepted: bool) -> Result<TrajectoryStep> {
        let potential = if mech.is_backward_rewarding() {
            Some(welfare::potential_from_table(&self.table, self.game, mech, &self.profile)?)
        } else {
            None
        };
        Ok(TrajectoryStep {
            t,
            profile: self.profile.clone(),
            welfare: self.welfare(),
            potential,
            utilities: welfare::all_utilities(&self.table, self.game, mech, &self.profile)?,
            accepted,
        })
    }

    /// One better-response step; returns whether the proposal was adopted.
    pub(crate) fn step(
        &mut self,
        mech: &Mechanism,
        rng: &mut ChaCha8Rng,
        eta: f64,
        unprojected: bool,
    ) -> Result<bool> {
        let game = self.game;
        let n = game.n();
        let d = game.dim();
        let i = rng.random_range(0..n);
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let g_len = norm(&g);

        let current = game.action_vector(i, self.profile.get(i)).to_vec();
        let raw: Vec<f64> = if g_len > 0.0 {
            current.iter().zip(&g).map(|(s, gk)| s + eta * gk / g_len).collect()
        } else {
            current.clone()
        };
        let space = &game.action_spaces()[i];
        let candidate =
            if raw == current { self.profile.get(i).clone() } else { space.project(&raw) };

        let cost = &game.costs()[i];
        let u_now =
            welfare::expected_reward(&self.table, game, mech, i, None)? - cost.eval(&current);
        let cand_vec = game.action_vector(i, &candidate).to_vec();
        let eval_point = if unprojected { &raw } else { &cand_vec };
        let eval_column = ScoreTable::column_for(game, eval_point);
        let u_new = welfare::expected_reward(&self.table, game, mech, i, Some(&eval_column))?
            - cost.eval(eval_point);

        if u_new >= u_now {
            let column =
                if unprojected { ScoreTable::column_for(game, &cand_vec) } else { eval_column };
            self.table.set_column(i, &column);
            self.profile.set(i, candidate);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Runs `steps` steps, optionally recording snapshots into `traj`.
    pub(crate) fn run(
        &mut self,
        mech: &Mechanism,
        rng: &mut ChaCha8Rng,
        steps: usize,
        eta: f64,
        unprojected: bool,
        mut record: Option<(&mut Trajectory, usize)>,
    ) -> Result<usize> {
        let mut accepted_moves = 0;
        for t in 0..steps {
            let accepted = self.step(mech, rng, eta, unprojected)?;
            accepted_moves += usize::from(accepted);
            if let Some((traj, every)) = record.as_mut() {
                if (t + 1) % *every == 0 || t + 1 == steps {
                    traj.steps.push(self.snapshot(mech, t + 1, accepted)?);
                }
            }
        }
        if let Some((traj, _)) = record {
            traj.accepted_moves += accepted_moves;
        }
        Ok(accepted_moves)
    }
}

/// Simulates creators' strategy evolution for `cfg.horizon` steps from `init`
/// under the game's mechanism.
pub fn sim_stra(
    game: &GameInstance,
    init: &StrategyProfile,
    cfg: &DynamicsConfig,
) -> Result<(StrategyProfile, Trajectory)> {
    cfg.validate()?;
    game.validate_profile(init)?;
    let mech = game.mechanism()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sim = Simulator::new(game, init.clone());
    let mut traj = Trajectory::default();
    traj.steps.push(sim.snapshot(mech, 0, false)?);
    sim.run(
        mech,
        &mut rng,
        cfg.horizon,
        cfg.step,
        cfg.evaluate_unprojected,
        Some((&mut traj, cfg.record_every)),
    )?;
    Ok((sim.into_profile(), traj))
}

/// Final profile only, without recording a trajectory.
pub fn sim_stra_final(
    game: &GameInstance,
    init: &StrategyProfile,
    cfg: &DynamicsConfig,
) -> Result<StrategyProfile> {
    cfg.validate()?;
    game.validate_profile(init)?;
    let mech = game.mechanism()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sim = Simulator::new(game, init.clone());
    sim.run(mech, &mut rng, cfg.horizon, cfg.step, cfg.evaluate_unprojected, None)?;
    Ok(sim.into_profile())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_synthetic, make_tvn, ScenarioVariant, SyntheticSpec};
    use crate::model::{Action, ActionSpace, AttentionWeights, CostSpec, ScoreFunction, UserPopulation};

    fn tvn2(mech: Mechanism) -> GameInstance {
        make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap())
            .unwrap()
            .with_mechanism(mech)
            .unwrap()
    }

    #[test]
    fn zero_horizon_is_identity() {
        let g = tvn2(Mechanism::brcm(vec![1.0, 0.0]).unwrap());
        let init = StrategyProfile::uniform_index(2, 0);
        let (fin, traj) = sim_stra(&g, &init, &DynamicsConfig::new(0, 1.0, 3)).unwrap();
        assert_eq!(fin, init);
        assert_eq!(traj.accepted_moves, 0);
        assert_eq!(traj.steps.len(), 1);
        assert_eq!(traj.steps[0].profile, init);
    }

    #[test]
    fn zero_step_is_identity() {
        let s = make_synthetic(&SyntheticSpec::default(), ScenarioVariant::G1).unwrap();
        let g = s.game.with_mechanism(Mechanism::exposure(5, 0.05)).unwrap();
        let (fin, _) = sim_stra(&g, &s.initial_profile, &DynamicsConfig::new(50, 0.0, 1)).unwrap();
        assert_eq!(fin, s.initial_profile);
    }

    #[test]
    fn lone_creator_climbs_and_stays() {
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let g = GameInstance::new(
            UserPopulation::uniform(vec![e1.clone(), e1.clone()]).unwrap(),
            vec![ActionSpace::finite(vec![e1, e2]).unwrap()],
            vec![CostSpec::Zero],
            ScoreFunction::RawInnerProduct,
            AttentionWeights::new(vec![1.0]).unwrap(),
        )
        .unwrap()
        .with_mechanism(Mechanism::M3Zero)
        .unwrap();
        let init = StrategyProfile::new(vec![Action::Index(1)]);
        let (fin, traj) = sim_stra(&g, &init, &DynamicsConfig::new(200, 1.5, 11)).unwrap();
        assert_eq!(fin, StrategyProfile::new(vec![Action::Index(0)]));
        let first = traj.steps.iter().position(|s| s.profile.get(0) == &Action::Index(0)).unwrap();
        assert!(traj.steps[first..].iter().all(|s| s.profile.get(0) == &Action::Index(0)));
    }

    #[test]
    fn deterministic_under_seed() {
        let s = make_synthetic(&SyntheticSpec::default(), ScenarioVariant::G2 { lambda: 0.5 }).unwrap();
        let g = s.game.with_mechanism(Mechanism::brcm(vec![1.0; 10]).unwrap()).unwrap();
        let cfg = DynamicsConfig::new(100, 0.1, 42);
        let a = sim_stra(&g, &s.initial_profile, &cfg).unwrap();
        let b = sim_stra(&g, &s.initial_profile, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(sim_stra_final(&g, &s.initial_profile, &cfg).unwrap(), a.0);
    }

    #[test]
    fn potential_never_drops_on_tvn() {
        let g = tvn2(Mechanism::brcm(vec![1.0, 0.0]).unwrap());
        let init = StrategyProfile::uniform_index(2, 0);
        let (fin, traj) = sim_stra(&g, &init, &DynamicsConfig::new(300, 2.0, 5)).unwrap();
        for w in traj.steps.windows(2) {
            assert!(w[1].potential.unwrap() >= w[0].potential.unwrap() - 1e-12);
        }
        assert_eq!(crate::welfare::welfare(&fin, &g).unwrap(), 1.0);
    }

    #[test]
    fn unprojected_mode_runs() {
        let g = tvn2(Mechanism::brcm(vec![1.0, 0.0]).unwrap());
        let init = StrategyProfile::uniform_index(2, 0);
        let mut cfg = DynamicsConfig::new(300, 2.0, 5);
        cfg.evaluate_unprojected = true;
        let (fin, _) = sim_stra(&g, &init, &cfg).unwrap();
        g.validate_profile(&fin).unwrap();
    }

    #[test]
    fn rejects_bad_config() {
        let g = tvn2(Mechanism::M3Zero);
        let init = StrategyProfile::uniform_index(2, 0);
        let mut cfg = DynamicsConfig::new(1, -1.0, 0);
        assert!(sim_stra(&g, &init, &cfg).is_err());
        cfg.step = 1.0;
        cfg.record_every = 0;
        assert!(sim_stra(&g, &init, &cfg).is_err());
    }

    #[test]
    fn trajectory_csv_header() {
        let g = tvn2(Mechanism::brcm(vec![1.0, 0.0]).unwrap());
        let init = StrategyProfile::uniform_index(2, 0);
        let (_, traj) = sim_stra(&g, &init, &DynamicsConfig::new(3, 1.0, 0)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,welfare,potential,accepted,u_1,u_2\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
