//! Brute-force equilibrium enumeration for finite games and closed-form
//! checks on Trend-vs-Niche instances.

use rayon::prelude::*;
use serde::Serialize;

use crate::environments::make_tvn;
use crate::error::{invalid, Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{Action, AttentionWeights, GameInstance, StrategyProfile};
use crate::welfare::{self, ScoreTable};

pub const DEFAULT_BUDGET: u128 = 10_000_000;
pub const EXACT_TOLERANCE: f64 = 1e-12;
pub const SOFTMAX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Maximum number of profile-deviation checks.
    pub budget: u128,
    /// A deviation counts as improving when it gains more than this.
    pub tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, tolerance: EXACT_TOLERANCE }
    }
}

impl OracleOptions {
    /// Default budget with the tolerance suited to `mech`.
    pub fn for_mechanism(mech: &Mechanism) -> Self {
        let tolerance = match mech {
            Mechanism::M3Exposure { .. } | Mechanism::M3Engagement { .. } => SOFTMAX_TOLERANCE,
            _ => EXACT_TOLERANCE,
        };
        Self { tolerance, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    /// In lexicographic order of action indices.
    pub pnes: Vec<StrategyProfile>,
    pub ne_welfares: Vec<f64>,
    pub max_welfare: f64,
    pub argmax: Vec<StrategyProfile>,
    /// Worst equilibrium welfare over max welfare; absent without equilibria
    /// or when max welfare is not positive.
    pub ratio: Option<f64>,
    /// Local maximizers of the potential under unilateral moves, for
    /// backward rewarding mechanisms.
    pub potential_local_maxima: Option<Vec<StrategyProfile>>,
    pub profiles: usize,
    pub checks: u128,
}

struct Layout {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(game: &GameInstance, budget: u128) -> Result<Self> {
        let mut sizes = Vec::with_capacity(game.n());
        for (i, space) in game.action_spaces().iter().enumerate() {
            sizes.push(space.size().ok_or(Error::NonFiniteActionSpace(i))?);
        }
        let profiles = sizes.iter().try_fold(1u128, |acc, &k| acc.checked_mul(k as u128));
        let per_profile: u128 = 1 + sizes.iter().map(|&k| k as u128 - 1).sum::<u128>();
        let needed = profiles.and_then(|p| p.checked_mul(per_profile)).unwrap_or(u128::MAX);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let total = profiles.unwrap() as usize;
        Ok(Self { sizes, strides, total })
    }

    fn digits(&self, idx: usize) -> Vec<usize> {
        self.sizes.iter().zip(&self.strides).map(|(k, s)| (idx / s) % k).collect()
    }

    fn profile(&self, idx: usize) -> StrategyProfile {
        StrategyProfile::new(self.digits(idx).into_iter().map(Action::Index).collect())
    }

    /// Profiles reachable from `idx` by one unilateral change, with the mover.
    fn neighbours(&self, idx: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let digits = self.digits(idx);
        (0..self.sizes.len()).flat_map(move |i| {
            let base = idx - digits[i] * self.strides[i];
            let own = digits[i];
            (0..self.sizes[i]).filter(move |&a| a != own).map(move |a| (i, base + a * self.strides[i]))
        })
    }
}

struct ProfileValues {
    utilities: Vec<f64>,
    welfare: f64,
    potential: Option<f64>,
}

/// Enumerates every profile of a finite game and every unilateral deviation.
pub fn enumerate_pne(game: &GameInstance, opts: &OracleOptions) -> Result<EquilibriumReport> {
    let mech = game.mechanism()?;
    let layout = Layout::new(game, opts.budget)?;
    let brm = mech.is_backward_rewarding();

    let values: Vec<ProfileValues> = (0..layout.total)
        .into_par_iter()
        .map(|idx| {
            let profile = layout.profile(idx);
            let table = ScoreTable::build_unchecked(game, &profile);
            Ok(ProfileValues {
                utilities: welfare::all_utilities(&table, game, mech, &profile)?,
                welfare: welfare::welfare_from_table(&table, game, &profile),
                potential: if brm {
                    Some(welfare::potential_from_table(&table, game, mech, &profile)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<_>>()?;

    let tol = opts.tolerance;
    let is_pne = |idx: usize| {
        layout
            .neighbours(idx)
            .all(|(i, nb)| values[nb].utilities[i] <= values[idx].utilities[i] + tol)
    };
    let is_potential_max = |idx: usize| {
        let p = values[idx].potential.unwrap();
        layout.neighbours(idx).all(|(_, nb)| values[nb].potential.unwrap() <= p + tol)
    };

    let pne_idx: Vec<usize> = (0..layout.total).into_par_iter().filter(|&i| is_pne(i)).collect();
    let max_welfare = values.iter().map(|v| v.welfare).fold(f64::NEG_INFINITY, f64::max);
    let argmax = (0..layout.total)
        .filter(|&i| values[i].welfare >= max_welfare - EXACT_TOLERANCE)
        .map(|i| layout.profile(i))
        .collect();
    let ne_welfares: Vec<f64> = pne_idx.iter().map(|&i| values[i].welfare).collect();
    let ratio = if ne_welfares.is_empty() || max_welfare <= 0.0 {
        None
    } else {
        Some(ne_welfares.iter().copied().fold(f64::INFINITY, f64::min) / max_welfare)
    };
    let potential_local_maxima = brm.then(|| {
        (0..layout.total)
            .into_par_iter()
            .filter(|&i| is_potential_max(i))
            .map(|i| layout.profile(i))
            .collect()
    });
    let per_profile: u128 = 1 + layout.sizes.iter().map(|&k| k as u128 - 1).sum::<u128>();

    Ok(EquilibriumReport {
        pnes: pne_idx.iter().map(|&i| layout.profile(i)).collect(),
        ne_welfares,
        max_welfare,
        argmax,
        ratio,
        potential_local_maxima,
        profiles: layout.total,
        checks: layout.total as u128 * per_profile,
    })
}

/// Recomputes every unilateral deviation from scratch; `true` when none gains
/// more than `tolerance`.
pub fn replay_deviations(
    game: &GameInstance,
    profile: &StrategyProfile,
    tolerance: f64,
) -> Result<bool> {
    let base = welfare::creator_utilities(profile, game)?;
    for (i, space) in game.action_spaces().iter().enumerate() {
        let k = space.size().ok_or(Error::NonFiniteActionSpace(i))?;
        for a in 0..k {
            let mut dev = profile.clone();
            dev.set(i, Action::Index(a));
            if welfare::creator_utility(i, &dev, game)? > base[i] + tolerance {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvnClosedForms {
    pub ne_welfare: f64,
    pub max_welfare: f64,
    pub ratio: f64,
}

/// Equilibrium and optimal welfare of the TvN game under any merit-based
/// monotone mechanism, as user means.
pub fn tvn_closed_forms(n: usize, attention: &AttentionWeights) -> Result<TvnClosedForms> {
    if n < 2 || attention.len() != n {
        return Err(invalid("closed forms need n >= 2 and n attention weights"));
    }
    let r = attention.as_slice();
    let k = attention.top_k();
    let scale = 2.0 * n as f64;
    let np1 = (n + 1) as f64;
    let head = |q: usize| r[..q.min(k)].iter().sum::<f64>();
    let ne_welfare = np1 * head(k) / scale;
    let max_welfare = (1..=k)
        .map(|q| (np1 * head(q) + (n - q) as f64 * r[0]) / scale)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TvnClosedForms { ne_welfare, max_welfare, ratio: ne_welfare / max_welfare })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub n: usize,
    pub mechanism: Mechanism,
    pub report: EquilibriumReport,
    pub closed: TvnClosedForms,
    pub unique: bool,
    pub all_trend: bool,
    pub ne_matches: bool,
    pub max_matches: bool,
    pub ratio_below_one: bool,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.unique && self.all_trend && self.ne_matches && self.max_matches && self.ratio_below_one
    }
}

/// On TvN, checks that `mech` has the all-trend profile as its only
/// equilibrium and that equilibrium and optimal welfare match the closed forms.
pub fn verify_theorem1(
    n: usize,
    attention: &AttentionWeights,
    mech: &Mechanism,
    opts: &OracleOptions,
) -> Result<Theorem1Report> {
    if !matches!(
        mech,
        Mechanism::M3Zero | Mechanism::M3Exposure { .. } | Mechanism::M3Engagement { .. }
    ) {
        return Err(invalid("the uniqueness check covers the M3 baselines only"));
    }
    let game = make_tvn(n, attention.clone())?.with_mechanism(mech.clone())?;
    let report = enumerate_pne(&game, opts)?;
    let closed = tvn_closed_forms(n, attention)?;
    let trend = StrategyProfile::uniform_index(n, 0);
    let unique = report.pnes.len() == 1;
    let all_trend = unique && report.pnes[0] == trend;
    let ne_matches = unique && (report.ne_welfares[0] - closed.ne_welfare).abs() <= 1e-9;
    let max_matches = (report.max_welfare - closed.max_welfare).abs() <= 1e-9;
    let ratio_below_one = report.ratio.is_some_and(|r| r < 1.0);
    Ok(Theorem1Report {
        n,
        mechanism: mech.clone(),
        report,
        closed,
        unique,
        all_trend,
        ne_matches,
        max_matches,
        ratio_below_one,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary1Report {
    pub n: usize,
    pub mechanism: Mechanism,
    pub report: EquilibriumReport,
    pub all_optimal: bool,
}

impl Corollary1Report {
    pub fn passed(&self) -> bool {
        self.all_optimal
    }
}

/// On TvN with constant densities equal to the attention weights, checks
/// that every equilibrium attains the optimal welfare.
pub fn verify_corollary1(
    n: usize,
    attention: &AttentionWeights,
    opts: &OracleOptions,
) -> Result<Corollary1Report> {
    let mech = Mechanism::brcm(attention.as_slice().to_vec())?;
    let game = make_tvn(n, attention.clone())?.with_mechanism(mech.clone())?;
    let report = enumerate_pne(&game, opts)?;
    let all_optimal = !report.pnes.is_empty()
        && report.ne_welfares.iter().all(|w| (w - report.max_welfare).abs() <= 1e-12);
    Ok(Corollary1Report { n, mechanism: mech, report, all_optimal })
}
