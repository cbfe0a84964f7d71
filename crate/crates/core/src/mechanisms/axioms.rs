//! Randomized checks of the merit-based and monotonicity axioms.
//!
//! Every probe works on a descending score sequence where creator `i` holds
//! `scores[i]`; rewards are tracked by creator identity across perturbations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Mechanism;
use crate::error::{invalid, Result};

/// Slack allowed in reward comparisons.
const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub creator: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

impl PropertyOutcome {
    fn pass() -> Self {
        Self { passed: true, counterexample: None }
    }

    fn fail(cx: Counterexample) -> Self {
        Self { passed: false, counterexample: Some(cx) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeritReport {
    pub normality: PropertyOutcome,
    pub fairness: PropertyOutcome,
    pub negative_externality: PropertyOutcome,
}

impl MeritReport {
    pub fn passed(&self) -> bool {
        self.normality.passed && self.fairness.passed && self.negative_externality.passed
    }
}

/// Random descending sequence in `[0, 1]`, with engineered ties about a
/// fifth of the time.
fn descending_scores(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    for k in 1..n {
        if rng.random::<f64>() < 0.2 {
            s[k] = s[k - 1];
        }
    }
    s
}

fn uniform_between(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// Checks normality, fairness and negative externality on `samples` random
/// profiles per property.
pub fn check_merit_based(
    mech: &Mechanism,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<MeritReport> {
    if samples < 1 || n < 1 {
        return Err(invalid("need at least one sample and one creator"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // normality
    let mut normality = PropertyOutcome::pass();
    let mut lone = vec![0.0; n];
    lone[0] = 1.0;
    let top = mech.rewards_for(&lone)?[0];
    if !(top > 0.0) {
        normality = PropertyOutcome::fail(Counterexample {
            before: lone.clone(),
            after: lone,
            creator: Some(0),
            detail: format!("sole nonzero score 1 earns {top}"),
        });
    }
    if normality.passed {
        for _ in 0..samples {
            let mut s = descending_scores(&mut rng, n);
            s[n - 1] = 0.0;
            let r = mech.rewards_for(&s)?;
            if let Some(i) = (0..n).find(|&i| s[i] == 0.0 && r[i].abs() > TOL) {
                normality = PropertyOutcome::fail(Counterexample {
                    before: s.clone(),
                    after: s,
                    creator: Some(i),
                    detail: format!("zero score earns {}", r[i]),
                });
                break;
            }
        }
    }

    // fairness
    let mut fairness = PropertyOutcome::pass();
    for _ in 0..samples {
        let s = descending_scores(&mut rng, n);
        let r = mech.rewards_for(&s)?;
        if let Some(k) = (1..n).find(|&k| r[k] > r[k - 1] + TOL) {
            fairness = PropertyOutcome::fail(Counterexample {
                before: s.clone(),
                after: s,
                creator: Some(k),
                detail: format!("rank {} earns {} > rank {} earns {}", k + 1, r[k], k, r[k - 1]),
            });
            break;
        }
    }

    // negative externality, via the two elementary raises: one that keeps
    // the order, one that lifts a lower competitor past creator i
    let mut negative_externality = PropertyOutcome::pass();
    if n >= 2 {
        for sample in 0..samples {
            let before = descending_scores(&mut rng, n);
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let mut after = before.clone();
            let crossing = sample % 2 == 1 && j > i;
            after[j] = if crossing {
                let upper = if i == 0 { 1.0 } else { before[i - 1] };
                uniform_between(&mut rng, before[i], upper)
            } else {
                let upper = if j == 0 { 1.0 } else { before[j - 1] };
                uniform_between(&mut rng, before[j], upper)
            };
            let r0 = mech.rewards_for(&before)?[i];
            let r1 = mech.rewards_for(&after)?[i];
            if r1 > r0 + TOL {
                negative_externality = PropertyOutcome::fail(Counterexample {
                    before,
                    after,
                    creator: Some(i),
                    detail: format!("raising creator {j} lifts creator {i} from {r0} to {r1}"),
                });
                break;
            }
        }
    }

    Ok(MeritReport { normality, fairness, negative_externality })
}

/// Checks that total reward never drops when a single score rises.
///
/// The canonical probe `(1, 0, ..., 0) -> (1, 1, 0, ..., 0)` runs first,
/// followed by `samples` random single-coordinate increases.
pub fn check_monotone(
    mech: &Mechanism,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<PropertyOutcome> {
    if samples < 1 || n < 1 {
        return Err(invalid("need at least one sample and one creator"));
    }
    let probe = |before: Vec<f64>, after: Vec<f64>, i: usize| -> Result<Option<Counterexample>> {
        let t0 = mech.total_reward(&before)?;
        let t1 = mech.total_reward(&after)?;
        Ok((t1 < t0 - TOL).then(|| Counterexample {
            before,
            after,
            creator: Some(i),
            detail: format!("total reward falls from {t0} to {t1}"),
        }))
    };
    if n >= 2 {
        let mut before = vec![0.0; n];
        before[0] = 1.0;
        let mut after = before.clone();
        after[1] = 1.0;
        if let Some(cx) = probe(before, after, 1)? {
            return Ok(PropertyOutcome::fail(cx));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let before = descending_scores(&mut rng, n);
        let i = rng.random_range(0..n);
        let mut after = before.clone();
        after[i] = uniform_between(&mut rng, before[i], 1.0);
        if let Some(cx) = probe(before, after, i)? {
            return Ok(PropertyOutcome::fail(cx));
        }
    }
    Ok(PropertyOutcome::pass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{shapley_mediator, PiecewiseConstant};

    fn indicator_brm(n: usize) -> Mechanism {
        let mut f = vec![PiecewiseConstant::constant(1.0).unwrap()];
        f.extend((1..n).map(|_| PiecewiseConstant::constant(0.0).unwrap()));
        Mechanism::brm(f).unwrap()
    }

    #[test]
    fn brm_is_merit_based() {
        let m = indicator_brm(4);
        assert!(check_merit_based(&m, 4, 500, 1).unwrap().passed());
        let m = shapley_mediator(5).unwrap();
        assert!(check_merit_based(&m, 5, 500, 2).unwrap().passed());
    }

    #[test]
    fn m3_zero_passes_everything() {
        let m = Mechanism::M3Zero;
        assert!(check_merit_based(&m, 4, 500, 3).unwrap().passed());
        assert!(check_monotone(&m, 4, 500, 3).unwrap().passed);
    }

    #[test]
    fn reversed_densities_break_negative_externality() {
        // f1 < f2 everywhere; bypasses construction checks on purpose
        let m = Mechanism::Brcm { f: vec![0.5, 1.0] };
        let report = check_merit_based(&m, 2, 200, 4).unwrap();
        assert!(!report.negative_externality.passed);
        assert!(report.negative_externality.counterexample.is_some());
    }

    #[test]
    fn indicator_brm_is_not_monotone() {
        let out = check_monotone(&indicator_brm(3), 3, 100, 5).unwrap();
        assert!(!out.passed);
        let cx = out.counterexample.unwrap();
        assert_eq!(cx.before, vec![1.0, 0.0, 0.0]);
        assert_eq!(cx.after, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn softmax_baselines_are_monotone() {
        assert!(check_monotone(&Mechanism::exposure(2, 0.05), 4, 1000, 6).unwrap().passed);
        assert!(check_monotone(&Mechanism::engagement(2, 0.05), 4, 1000, 7).unwrap().passed);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(check_monotone(&Mechanism::M3Zero, 2, 0, 0).is_err());
        assert!(check_merit_based(&Mechanism::M3Zero, 2, 0, 0).is_err());
    }
}
