//! Randomized verification sweeps: random finite games and random backward
//! rewarding mechanisms, used to fuzz the potential identity and the
//! merit-based axioms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mechanisms::{check_merit_based, Mechanism, PiecewiseConstant};
use crate::model::{
    Action, ActionSpace, AttentionWeights, CostSpec, GameInstance, ScoreFunction, StrategyProfile,
    UserPopulation,
};
use crate::welfare::{creator_utility, potential};

const DIM: usize = 3;

fn uniform_vec(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
    (0..DIM).map(|_| rng.random_range(lo..hi)).collect()
}

/// Finite game with at most `n_max` creators, `k_max` actions per creator
/// and `m_max` weighted users. The mechanism is left unset.
pub fn random_finite_game(
    rng: &mut ChaCha8Rng,
    n_max: usize,
    k_max: usize,
    m_max: usize,
) -> Result<GameInstance> {
    let n = rng.random_range(1..=n_max.max(1));
    let m = rng.random_range(1..=m_max.max(1));
    let users: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(rng, 0.0, 1.0)).collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let population = UserPopulation::new(users, raw.iter().map(|w| w / total).collect(), None)?;
    let mut spaces = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.random_range(1..=k_max.max(1));
        spaces.push(ActionSpace::finite((0..k).map(|_| uniform_vec(rng, -0.2, 0.8)).collect())?);
        costs.push(if rng.random::<bool>() {
            CostSpec::Zero
        } else {
            CostSpec::quadratic(rng.random_range(0.0..0.5), uniform_vec(rng, -0.5, 0.5))?
        });
    }
    let mut r: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    r.sort_by(|a, b| b.total_cmp(a));
    GameInstance::new(
        population,
        spaces,
        costs,
        ScoreFunction::RawInnerProduct,
        AttentionWeights::new(r)?,
    )
}

/// Valid BRM over `n` ranks with up to three random interior breakpoints
/// shared by all densities.
pub fn random_brm(rng: &mut ChaCha8Rng, n: usize) -> Result<Mechanism> {
    let mut cuts: Vec<f64> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0.05..0.95)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts);
    breakpoints.push(1.0);
    let mut densities = vec![Vec::new(); n];
    for _ in 1..breakpoints.len() {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v[0] += 0.01;
        for (k, x) in v.into_iter().enumerate() {
            densities[k].push(x);
        }
    }
    Mechanism::brm(
        densities
            .into_iter()
            .map(|values| PiecewiseConstant::new(breakpoints.clone(), values))
            .collect::<Result<_>>()?,
    )
}

fn random_profile(rng: &mut ChaCha8Rng, game: &GameInstance) -> StrategyProfile {
    StrategyProfile::new(
        game.action_spaces()
            .iter()
            .map(|s| Action::Index(rng.random_range(0..s.size().unwrap_or(1))))
            .collect(),
    )
}

/// Largest `|du_i - dP|` over `games` random BRM games with `deviations`
/// random unilateral deviations each.
pub fn potential_exactness(seed: u64, games: usize, deviations: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..games {
        let game = random_finite_game(&mut rng, 5, 6, 8)?;
        let mech = random_brm(&mut rng, game.n())?;
        let game = game.with_mechanism(mech)?;
        for _ in 0..deviations {
            let s = random_profile(&mut rng, &game);
            let i = rng.random_range(0..game.n());
            let k = game.action_spaces()[i].size().unwrap_or(1);
            let mut t = s.clone();
            t.set(i, Action::Index(rng.random_range(0..k)));
            let du = creator_utility(i, &t, &game)? - creator_utility(i, &s, &game)?;
            let dp = potential(&t, &game)? - potential(&s, &game)?;
            worst = worst.max((du - dp).abs());
        }
    }
    Ok(worst)
}

/// Number of `specs` random BRMs failing the merit-based check.
pub fn merit_sweep(seed: u64, specs: usize, samples: usize) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for k in 0..specs {
        let n = rng.random_range(2..=6);
        let mech = random_brm(&mut rng, n)?;
        if !check_merit_based(&mech, n, samples, seed.wrapping_add(k as u64))?.passed() {
            failures += 1;
        }
    }
    Ok(failures)
}

/// Largest `|total - 1|` of the exposure mechanism over `samples` random
/// score profiles, with random `n <= 8`, cutoff and occasional ties.
pub fn exposure_total_deviation(seed: u64, samples: usize, beta: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=n);
        let mut s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        for i in 1..n {
            if rng.random::<f64>() < 0.2 {
                s[i] = s[i - 1];
            }
        }
        let total = Mechanism::exposure(k, beta).total_reward(&s)?;
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_brms_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in 1..6 {
            let m = random_brm(&mut rng, n).unwrap();
            m.validate(n).unwrap();
        }
    }

    #[test]
    fn small_sweeps_pass() {
        assert!(potential_exactness(3, 10, 10).unwrap() <= 1e-10);
        assert_eq!(merit_sweep(3, 5, 100).unwrap(), 0);
        assert!(exposure_total_deviation(3, 100, 0.05).unwrap() <= 1e-12);
    }
}
