//! Reward mechanisms mapping one user's matching scores to creator rewards.
//!
//! Two families are provided. The merit-based monotone baselines (`m3-zero`,
//! top-K exposure and top-K engagement) and the backward rewarding mechanisms,
//! where the creator at rank `k` collects
//!
//! ```text
//! reward_k = sum_{j >= k} integral_{s_{j+1}}^{s_j} f_j(t) dt,   s_{n+1} = 0
//! ```
//!
//! for densities `f_1 >= ... >= f_n >= 0`. With constant densities this is the
//! BRCM subclass, parameterized by a vector in the monotone cone.

mod axioms;
mod piecewise;

pub use axioms::{check_merit_based, check_monotone, Counterexample, MeritReport, PropertyOutcome};
pub use piecewise::PiecewiseConstant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ScoreProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mechanism {
    /// Each creator is paid its own matching score.
    M3Zero,
    /// Softmax share of exposure among the top `k`.
    M3Exposure { k: usize, beta: f64 },
    /// Exposure share scaled by the top-`k` log-sum-exp engagement.
    M3Engagement { k: usize, beta: f64 },
    /// Backward rewarding with piecewise-constant densities.
    Brm { f: Vec<PiecewiseConstant> },
    /// Backward rewarding with constant densities.
    Brcm { f: Vec<f64> },
}

impl Mechanism {
    pub fn exposure(k: usize, beta: f64) -> Self {
        Mechanism::M3Exposure { k, beta }
    }

    pub fn engagement(k: usize, beta: f64) -> Self {
        Mechanism::M3Engagement { k, beta }
    }

    /// A validated BRM.
    pub fn brm(f: Vec<PiecewiseConstant>) -> Result<Self> {
        let n = f.len();
        let m = Mechanism::Brm { f };
        m.validate(n)?;
        Ok(m)
    }

    /// A validated BRCM; `f` must lie in `{f_1 >= ... >= f_n >= 0}`.
    pub fn brcm(f: Vec<f64>) -> Result<Self> {
        let n = f.len();
        let m = Mechanism::Brcm { f };
        m.validate(n)?;
        Ok(m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::M3Zero => "m3-zero",
            Mechanism::M3Exposure { .. } => "m3-exposure",
            Mechanism::M3Engagement { .. } => "m3-engagement",
            Mechanism::Brm { .. } => "brm",
            Mechanism::Brcm { .. } => "brcm",
        }
    }

    pub fn is_backward_rewarding(&self) -> bool {
        matches!(self, Mechanism::Brm { .. } | Mechanism::Brcm { .. })
    }

    /// Checks the mechanism's invariants for a game with `n` creators.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Mechanism::M3Zero => Ok(()),
            Mechanism::M3Exposure { k, beta } | Mechanism::M3Engagement { k, beta } => {
                if *k < 1 || *k > n {
                    return Err(invalid(format!("top-K cutoff {k} must lie in 1..={n}")));
                }
                if !beta.is_finite() || *beta <= 0.0 {
                    return Err(invalid("temperature must be positive"));
                }
                Ok(())
            }
            Mechanism::Brcm { f } => {
                if f.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: f.len() });
                }
                if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(invalid("BRCM densities must be finite and nonnegative"));
                }
                if f.windows(2).any(|w| w[0] < w[1]) {
                    return Err(invalid("BRCM densities must be nonincreasing"));
                }
                Ok(())
            }
            Mechanism::Brm { f } => {
                if f.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: f.len() });
                }
                if f[0].min_value() <= 0.0 {
                    return Err(invalid("first BRM density must be positive on [0, 1]"));
                }
                for (k, w) in f.windows(2).enumerate() {
                    if !w[0].dominates(&w[1]) {
                        return Err(invalid(format!(
                            "BRM density {} falls below density {} somewhere",
                            k + 1,
                            k + 2
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Rewards of every creator, indexed like `sp.scores()`.
    pub fn rewards(&self, sp: &ScoreProfile) -> Result<Vec<f64>> {
        let sorted = sp.sorted_scores();
        let by_position = self.position_rewards(&sorted)?;
        let mut out = vec![0.0; sp.len()];
        match self {
            Mechanism::M3Exposure { .. } | Mechanism::M3Engagement { .. } => {
                // tied creators share the mean of the positions they span
                let mut pos = 0;
                for group in sp.tie_groups() {
                    let t = group.len();
                    let mean = by_position[pos..pos + t].iter().sum::<f64>() / t as f64;
                    for &i in group {
                        out[i] = mean;
                    }
                    pos += t;
                }
            }
            _ => {
                for (pos, &i) in sp.order().iter().enumerate() {
                    out[i] = by_position[pos];
                }
            }
        }
        Ok(out)
    }

    /// Rewards for an arbitrary score vector (creator `i` has `scores[i]`).
    pub fn rewards_for(&self, scores: &[f64]) -> Result<Vec<f64>> {
        self.rewards(&ScoreProfile::from_scores(scores.to_vec())?)
    }

    /// Sum of all creators' rewards.
    pub fn total_reward(&self, scores: &[f64]) -> Result<f64> {
        Ok(self.rewards_for(scores)?.iter().sum())
    }

    /// Reward paid to each rank position for a descending score sequence,
    /// before any tie sharing.
    pub fn position_rewards(&self, sorted: &[f64]) -> Result<Vec<f64>> {
        let n = sorted.len();
        if sorted.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("matching score".into()));
        }
        match self {
            Mechanism::M3Zero => Ok(sorted.to_vec()),
            Mechanism::M3Exposure { k, beta } => {
                let (weights, _) = top_k_softmax(sorted, (*k).min(n), *beta);
                Ok(weights)
            }
            Mechanism::M3Engagement { k, beta } => {
                let (mut weights, lse) = top_k_softmax(sorted, (*k).min(n), *beta);
                for w in &mut weights {
                    *w *= lse;
                }
                Ok(weights)
            }
            Mechanism::Brcm { f } => {
                check_len(f.len(), n)?;
                let mut out = vec![0.0; n];
                let mut acc = 0.0;
                for k in (0..n).rev() {
                    let below = if k + 1 < n { sorted[k + 1] } else { 0.0 };
                    acc += f[k] * (sorted[k] - below);
                    out[k] = acc;
                }
                Ok(out)
            }
            Mechanism::Brm { f } => {
                check_len(f.len(), n)?;
                let mut out = vec![0.0; n];
                let mut acc = 0.0;
                for k in (0..n).rev() {
                    let below = if k + 1 < n { sorted[k + 1] } else { 0.0 };
                    acc += f[k].integral(below, sorted[k]);
                    out[k] = acc;
                }
                Ok(out)
            }
        }
    }

    /// `sum_k integral_0^{s_k} f_k(t) dt` for a descending score sequence; the
    /// per-user term of the BRM potential.
    pub fn potential_term(&self, sorted: &[f64]) -> Result<f64> {
        match self {
            Mechanism::Brcm { f } => {
                check_len(f.len(), sorted.len())?;
                Ok(f.iter().zip(sorted).map(|(fk, s)| fk * s).sum())
            }
            Mechanism::Brm { f } => {
                check_len(f.len(), sorted.len())?;
                Ok(f.iter().zip(sorted).map(|(fk, s)| fk.integral(0.0, *s)).sum())
            }
            other => Err(Error::NotBackwardRewarding(other.name())),
        }
    }
}

fn check_len(f_len: usize, n: usize) -> Result<()> {
    if f_len != n {
        return Err(Error::DimensionMismatch { expected: f_len, got: n });
    }
    Ok(())
}

/// Softmax weights over the first `k` positions of a descending sequence and
/// `beta * log sum_{j<k} exp(s_j / beta)`, both stabilized by the top score.
fn top_k_softmax(sorted: &[f64], k: usize, beta: f64) -> (Vec<f64>, f64) {
    let n = sorted.len();
    let mut weights = vec![0.0; n];
    if k == 0 {
        return (weights, 0.0);
    }
    let top = sorted[0];
    let mut z = 0.0;
    for (w, s) in weights.iter_mut().zip(sorted).take(k) {
        *w = ((s - top) / beta).exp();
        z += *w;
    }
    for w in weights.iter_mut().take(k) {
        *w /= z;
    }
    (weights, top + beta * z.ln())
}

/// The Shapley mediator: BRCM with `f = (1, 1/2, ..., 1/n)`.
pub fn shapley_mediator(n: usize) -> Result<Mechanism> {
    if n < 1 {
        return Err(invalid("Shapley mediator needs at least one creator"));
    }
    Mechanism::brcm((1..=n).map(|k| 1.0 / k as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn brcm_top_k_indicator() {
        let m = Mechanism::brcm(vec![1.0, 1.0, 0.0]).unwrap();
        let r = m.rewards_for(&[0.8, 0.5, 0.3]).unwrap();
        close(&r, &[0.5, 0.2, 0.0], 1e-15);
    }

    #[test]
    fn shapley_example() {
        let m = shapley_mediator(3).unwrap();
        let r = m.rewards_for(&[0.9, 0.6, 0.2]).unwrap();
        // 0.2/3, 0.4/2 + 0.2/3, 0.3 + 0.4/2 + 0.2/3
        close(&r, &[0.3 + 0.2 + 0.2 / 3.0, 0.2 + 0.2 / 3.0, 0.2 / 3.0], 1e-15);
        assert!((r.iter().sum::<f64>() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn shapley_constructor() {
        assert_eq!(shapley_mediator(1).unwrap(), Mechanism::Brcm { f: vec![1.0] });
        match shapley_mediator(3).unwrap() {
            Mechanism::Brcm { f } => close(&f, &[1.0, 0.5, 1.0 / 3.0], 0.0),
            _ => unreachable!(),
        }
        assert!(shapley_mediator(0).is_err());
        let r = shapley_mediator(2).unwrap().rewards_for(&[0.4, 0.4]).unwrap();
        close(&r, &[0.2, 0.2], 1e-16);
    }

    #[test]
    fn exposure_tie_in_top_k() {
        let m = Mechanism::exposure(2, 0.05);
        let r = m.rewards_for(&[0.5, 0.5, 0.1]).unwrap();
        close(&r, &[0.5, 0.5, 0.0], 1e-15);
    }

    #[test]
    fn exposure_tie_across_boundary() {
        // three creators tied for a single top slot each get a third
        let m = Mechanism::exposure(1, 0.05);
        let r = m.rewards_for(&[1.0, 1.0, 1.0]).unwrap();
        close(&r, &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn engagement_single_winner() {
        for beta in [0.01, 0.05, 1.0, 10.0] {
            let m = Mechanism::engagement(1, beta);
            let r = m.rewards_for(&[1.0, 0.0, 0.0, 0.0]).unwrap();
            close(&r, &[1.0, 0.0, 0.0, 0.0], 1e-12);
        }
    }

    #[test]
    fn engagement_large_exponent_is_finite() {
        let m = Mechanism::engagement(3, 1e-4);
        let r = m.rewards_for(&[1.0, 0.9, 0.2]).unwrap();
        assert!(r.iter().all(|v| v.is_finite()));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn brm_indicator_counterexample() {
        let n = 4;
        let mut f = vec![PiecewiseConstant::constant(1.0).unwrap()];
        f.extend((1..n).map(|_| PiecewiseConstant::constant(0.0).unwrap()));
        let m = Mechanism::brm(f).unwrap();
        assert_eq!(m.total_reward(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(m.total_reward(&[1.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn brm_matches_brcm_for_constant_densities() {
        let f = vec![1.0, 0.7, 0.7, 0.2];
        let brcm = Mechanism::brcm(f.clone()).unwrap();
        let brm = Mechanism::brm(
            f.iter().map(|v| PiecewiseConstant::constant(*v).unwrap()).collect(),
        )
        .unwrap();
        let scores = [0.3, 0.95, 0.3, 0.6];
        close(
            &brcm.rewards_for(&scores).unwrap(),
            &brm.rewards_for(&scores).unwrap(),
            1e-15,
        );
    }

    #[test]
    fn brm_piecewise_rewards() {
        // f1 = 2 on [0, .5), 1 on [.5, 1]; f2 = 1 on [0, .5), 0 afterwards
        let f1 = PiecewiseConstant::new(vec![0.0, 0.5, 1.0], vec![2.0, 1.0]).unwrap();
        let f2 = PiecewiseConstant::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.0]).unwrap();
        let m = Mechanism::brm(vec![f1, f2]).unwrap();
        let r = m.rewards_for(&[0.4, 0.8]).unwrap();
        // rank 2 (score .4): integral_0^.4 f2 = .4
        // rank 1 (score .8): integral_.4^.8 f1 = .1*2 + .3*1 = .5, plus .4
        close(&r, &[0.4, 0.9], 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Mechanism::brcm(vec![0.5, 1.0]).is_err());
        assert!(Mechanism::brcm(vec![1.0, -0.1]).is_err());
        assert!(Mechanism::brcm(vec![0.0, 0.0]).is_ok());
        let zero = PiecewiseConstant::constant(0.0).unwrap();
        assert!(Mechanism::brm(vec![zero.clone(), zero.clone()]).is_err());
        let one = PiecewiseConstant::constant(1.0).unwrap();
        assert!(Mechanism::brm(vec![zero, one]).is_err());
        assert!(Mechanism::exposure(0, 0.1).validate(3).is_err());
        assert!(Mechanism::exposure(4, 0.1).validate(3).is_err());
        assert!(Mechanism::engagement(2, 0.0).validate(3).is_err());
        assert!(Mechanism::Brcm { f: vec![1.0] }.validate(2).is_err());
    }

    #[test]
    fn non_finite_scores_rejected() {
        let m = Mechanism::M3Zero;
        assert!(m.rewards_for(&[f64::INFINITY, 0.0]).is_err());
        assert!(m.position_rewards(&[f64::NAN]).is_err());
    }
}
