use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A nonnegative step function on `[0, 1]`.
///
/// `values[j]` holds on `[breakpoints[j], breakpoints[j + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise", into = "RawPiecewise")]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    // antiderivative at each breakpoint
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPiecewise {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawPiecewise> for PiecewiseConstant {
    type Error = Error;
    fn try_from(raw: RawPiecewise) -> Result<Self> {
        Self::new(raw.breakpoints, raw.values)
    }
}

impl From<PiecewiseConstant> for RawPiecewise {
    fn from(p: PiecewiseConstant) -> Self {
        RawPiecewise { breakpoints: p.breakpoints, values: p.values }
    }
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(invalid("need k + 1 breakpoints for k values"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(invalid("breakpoints must start at 0 and end at 1"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("density values must be finite and nonnegative"));
        }
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        cumulative.push(0.0);
        for (j, v) in values.iter().enumerate() {
            let prev = cumulative[j];
            cumulative.push(prev + v * (breakpoints[j + 1] - breakpoints[j]));
        }
        Ok(Self { breakpoints, values, cumulative })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, t: f64) -> usize {
        // last j with breakpoints[j] <= t, capped at the final segment
        let j = self.breakpoints.partition_point(|b| *b <= t);
        j.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.segment(t)]
    }

    /// `integral_0^t f`, for `t` clamped into `[0, 1]`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let j = self.segment(t);
        self.cumulative[j] + self.values[j] * (t - self.breakpoints[j])
    }

    /// `integral_a^b f`; zero when `a == b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        self.antiderivative(b) - self.antiderivative(a)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `self(t) >= other(t)` for every `t` in `[0, 1]`.
    pub fn dominates(&self, other: &Self) -> bool {
        let mut cuts: Vec<f64> =
            self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2).all(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            self.value_at(mid) >= other.value_at(mid)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrals() {
        let f = PiecewiseConstant::new(vec![0.0, 0.25, 1.0], vec![4.0, 0.0]).unwrap();
        assert_eq!(f.integral(0.0, 1.0), 1.0);
        assert_eq!(f.integral(0.1, 0.2), 0.4);
        assert_eq!(f.integral(0.5, 0.9), 0.0);
        assert_eq!(f.integral(0.3, 0.3), 0.0);
        assert_eq!(f.value_at(1.0), 0.0);
        assert_eq!(f.value_at(0.0), 4.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(PiecewiseConstant::new(vec![0.0, 0.5], vec![1.0]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0, 0.5, 0.5, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0, 1.0], vec![-1.0]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn domination_checks_every_interval() {
        let a = PiecewiseConstant::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.5]).unwrap();
        let b = PiecewiseConstant::new(vec![0.0, 0.7, 1.0], vec![0.5, 0.6]).unwrap();
        // on [0.7, 1] b = 0.6 > a = 0.5
        assert!(!a.dominates(&b));
        let c = PiecewiseConstant::constant(0.5).unwrap();
        assert!(a.dominates(&c));
    }
}
