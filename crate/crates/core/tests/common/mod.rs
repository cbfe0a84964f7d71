#![allow(dead_code)]

use c3sim::{
    Action, ActionSpace, AttentionWeights, CostSpec, GameInstance, Mechanism, PiecewiseConstant,
    ScoreFunction, StrategyProfile, UserPopulation,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const DIM: usize = 3;

pub fn random_vec(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
    (0..DIM).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_attention(rng: &mut ChaCha8Rng, n: usize) -> AttentionWeights {
    let mut r: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    r.sort_by(|a, b| b.total_cmp(a));
    AttentionWeights::new(r).unwrap()
}

/// Finite game with up to `n_max` creators, `k_max` actions each and
/// `m_max` weighted users; mechanism left unset.
pub fn random_finite_game(rng: &mut ChaCha8Rng, n_max: usize, k_max: usize, m_max: usize) -> GameInstance {
    let n = rng.random_range(1..=n_max);
    let m = rng.random_range(1..=m_max);
    let users: Vec<Vec<f64>> = (0..m).map(|_| random_vec(rng, 0.0, 1.0)).collect();
    let mut weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let population = UserPopulation::new(users, weights, None).unwrap();
    let spaces = (0..n)
        .map(|_| {
            let k = rng.random_range(1..=k_max);
            ActionSpace::finite((0..k).map(|_| random_vec(rng, -0.2, 0.8)).collect()).unwrap()
        })
        .collect();
    let costs = (0..n)
        .map(|_| {
            if rng.random::<bool>() {
                CostSpec::Zero
            } else {
                CostSpec::quadratic(rng.random_range(0.0..0.5), random_vec(rng, -0.5, 0.5)).unwrap()
            }
        })
        .collect();
    let score = if rng.random::<bool>() {
        ScoreFunction::RawInnerProduct
    } else {
        ScoreFunction::ShiftedInnerProduct
    };
    GameInstance::new(population, spaces, costs, score, random_attention(rng, n)).unwrap()
}

pub fn random_profile(rng: &mut ChaCha8Rng, game: &GameInstance) -> StrategyProfile {
    StrategyProfile::new(
        game.action_spaces()
            .iter()
            .map(|s| Action::Index(rng.random_range(0..s.size().unwrap())))
            .collect(),
    )
}

/// Piecewise-constant densities on shared random breakpoints, ordered
/// pointwise and with a positive first density.
pub fn random_brm(rng: &mut ChaCha8Rng, n: usize) -> Mechanism {
    let interior = rng.random_range(0..4);
    let mut cuts: Vec<f64> = (0..interior).map(|_| rng.random_range(0.05..0.95)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts);
    breakpoints.push(1.0);
    let segments = breakpoints.len() - 1;
    let mut per_density = vec![Vec::with_capacity(segments); n];
    for _ in 0..segments {
        let mut v: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random_range(0.0..2.0) })
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v[0] += 0.01;
        for (k, x) in v.into_iter().enumerate() {
            per_density[k].push(x);
        }
    }
    Mechanism::brm(
        per_density
            .into_iter()
            .map(|values| PiecewiseConstant::new(breakpoints.clone(), values).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Descending scores in `[0, 1]` with occasional exact ties.
pub fn descending_with_ties(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    for k in 1..n {
        if rng.random::<f64>() < 0.25 {
            s[k] = s[k - 1];
        }
    }
    s
}
