//! Creator utilities, user and social welfare, and the BRM potential.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{GameInstance, StrategyProfile};

/// Matching scores of every creator for every user under one profile.
/// Row `j` holds user `j`'s scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    n: usize,
    data: Vec<f64>,
}

impl ScoreTable {
    pub fn build(game: &GameInstance, profile: &StrategyProfile) -> Result<Self> {
        game.validate_profile(profile)?;
        Ok(Self::build_unchecked(game, profile))
    }

    pub(crate) fn build_unchecked(game: &GameInstance, profile: &StrategyProfile) -> Self {
        let n = game.n();
        let pop = game.population();
        let mut data = vec![0.0; pop.len() * n];
        for (i, a) in profile.actions().iter().enumerate() {
            let v = game.action_vector(i, a);
            for (j, x) in pop.users().iter().enumerate() {
                data[j * n + i] = game.score_fn().eval(v, x);
            }
        }
        Self { n, data }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    /// Scores every user assigns to embedding `v`.
    pub(crate) fn column_for(game: &GameInstance, v: &[f64]) -> Vec<f64> {
        game.population().users().iter().map(|x| game.score_fn().eval(v, x)).collect()
    }

    pub(crate) fn set_column(&mut self, i: usize, column: &[f64]) {
        for (j, s) in column.iter().enumerate() {
            self.data[j * self.n + i] = *s;
        }
    }
}

fn sorted_desc(row: &[f64]) -> Vec<f64> {
    let mut s = row.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Expected reward of creator `i` given the scores in `table`, with creator
/// `i`'s column replaced by `column` when supplied.
pub(crate) fn expected_reward(
    table: &ScoreTable,
    game: &GameInstance,
    mech: &Mechanism,
    i: usize,
    column: Option<&[f64]>,
) -> Result<f64> {
    let weights = game.population().weights();
    let mut total = 0.0;
    let mut buf = vec![0.0; table.n];
    for (j, row) in table.rows().enumerate() {
        buf.copy_from_slice(row);
        if let Some(c) = column {
            buf[i] = c[j];
        }
        let r = mech.rewards_for(&buf)?;
        total += weights[j] * r[i];
    }
    Ok(total)
}

pub(crate) fn all_utilities(
    table: &ScoreTable,
    game: &GameInstance,
    mech: &Mechanism,
    profile: &StrategyProfile,
) -> Result<Vec<f64>> {
    let n = game.n();
    let weights = game.population().weights();
    let mut out = vec![0.0; n];
    for (j, row) in table.rows().enumerate() {
        let r = mech.rewards_for(row)?;
        for (o, ri) in out.iter_mut().zip(r) {
            *o += weights[j] * ri;
        }
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o -= game.costs()[i].eval(game.action_vector(i, profile.get(i)));
    }
    Ok(out)
}

pub(crate) fn welfare_from_table(
    table: &ScoreTable,
    game: &GameInstance,
    profile: &StrategyProfile,
) -> f64 {
    let r = game.attention().as_slice();
    let weights = game.population().weights();
    let user_side: f64 = table
        .rows()
        .zip(weights)
        .map(|(row, w)| w * sorted_desc(row).iter().zip(r).map(|(s, rk)| rk * s).sum::<f64>())
        .sum();
    user_side - total_cost(game, profile)
}

pub(crate) fn potential_from_table(
    table: &ScoreTable,
    game: &GameInstance,
    mech: &Mechanism,
    profile: &StrategyProfile,
) -> Result<f64> {
    let weights = game.population().weights();
    let mut total = 0.0;
    for (row, w) in table.rows().zip(weights) {
        total += w * mech.potential_term(&sorted_desc(row))?;
    }
    Ok(total - total_cost(game, profile))
}

fn total_cost(game: &GameInstance, profile: &StrategyProfile) -> f64 {
    profile
        .actions()
        .iter()
        .enumerate()
        .map(|(i, a)| game.costs()[i].eval(game.action_vector(i, a)))
        .sum()
}

/// Expected reward of creator `i` minus its production cost.
pub fn creator_utility(i: usize, profile: &StrategyProfile, game: &GameInstance) -> Result<f64> {
    if i >= game.n() {
        return Err(Error::IndexOutOfRange { index: i, n: game.n() });
    }
    let mech = game.mechanism()?;
    let table = ScoreTable::build(game, profile)?;
    let reward = expected_reward(&table, game, mech, i, None)?;
    Ok(reward - game.costs()[i].eval(game.action_vector(i, profile.get(i))))
}

/// Utilities of all creators at once.
pub fn creator_utilities(profile: &StrategyProfile, game: &GameInstance) -> Result<Vec<f64>> {
    let mech = game.mechanism()?;
    let table = ScoreTable::build(game, profile)?;
    all_utilities(&table, game, mech, profile)
}

/// Attention-weighted sum of one user's ranked matching scores.
pub fn user_welfare(profile: &StrategyProfile, user: &[f64], game: &GameInstance) -> Result<f64> {
    game.validate_profile(profile)?;
    if user.len() != game.dim() {
        return Err(Error::DimensionMismatch { expected: game.dim(), got: user.len() });
    }
    let scores: Vec<f64> = profile
        .actions()
        .iter()
        .enumerate()
        .map(|(i, a)| game.score_fn().eval(game.action_vector(i, a), user))
        .collect();
    let r = game.attention().as_slice();
    Ok(sorted_desc(&scores).iter().zip(r).map(|(s, rk)| rk * s).sum())
}

/// Social welfare: mean user welfare minus total cost. Mechanism transfers
/// cancel, so no mechanism is needed.
pub fn welfare(profile: &StrategyProfile, game: &GameInstance) -> Result<f64> {
    let table = ScoreTable::build(game, profile)?;
    Ok(welfare_from_table(&table, game, profile))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub total_welfare: f64,
    pub user_side: f64,
    pub total_cost: f64,
    pub per_creator_utility: Vec<f64>,
    /// Mean user welfare per group label; empty when the population is unlabeled.
    pub per_group_mean_user_utility: BTreeMap<usize, f64>,
}

/// Full welfare breakdown for a profile. Requires an attached mechanism for
/// the per-creator utilities.
pub fn social_welfare(profile: &StrategyProfile, game: &GameInstance) -> Result<WelfareReport> {
    let mech = game.mechanism()?;
    let table = ScoreTable::build(game, profile)?;
    report_from_table(&table, game, mech, profile)
}

pub(crate) fn report_from_table(
    table: &ScoreTable,
    game: &GameInstance,
    mech: &Mechanism,
    profile: &StrategyProfile,
) -> Result<WelfareReport> {
    let r = game.attention().as_slice();
    let pop = game.population();
    let per_user: Vec<f64> = table
        .rows()
        .map(|row| sorted_desc(row).iter().zip(r).map(|(s, rk)| rk * s).sum())
        .collect();
    let user_side: f64 = per_user.iter().zip(pop.weights()).map(|(u, w)| u * w).sum();
    let cost = total_cost(game, profile);

    let mut per_group = BTreeMap::new();
    if let Some(labels) = pop.group_labels() {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for (u, g) in per_user.iter().zip(labels) {
            let e = acc.entry(*g).or_insert((0.0, 0));
            e.0 += u;
            e.1 += 1;
        }
        per_group = acc.into_iter().map(|(g, (s, c))| (g, s / c as f64)).collect();
    }

    Ok(WelfareReport {
        total_welfare: user_side - cost,
        user_side,
        total_cost: cost,
        per_creator_utility: all_utilities(table, game, mech, profile)?,
        per_group_mean_user_utility: per_group,
    })
}

/// Mean user welfare over the users whose group label falls in each entry of
/// `groups`; NaN for a group with no users.
pub fn grouped_user_welfare(
    profile: &StrategyProfile,
    game: &GameInstance,
    groups: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let labels = game
        .population()
        .group_labels()
        .ok_or_else(|| crate::error::invalid("population has no group labels"))?;
    let table = ScoreTable::build(game, profile)?;
    let r = game.attention().as_slice();
    let mut acc = vec![(0.0, 0usize); groups.len()];
    for (row, label) in table.rows().zip(labels) {
        let u: f64 = sorted_desc(row).iter().zip(r).map(|(s, rk)| rk * s).sum();
        for (g, members) in groups.iter().enumerate() {
            if members.contains(label) {
                acc[g].0 += u;
                acc[g].1 += 1;
            }
        }
    }
    Ok(acc.into_iter().map(|(s, c)| s / c as f64).collect())
}

/// `E_x[sum_k integral_0^{s_(k)(x)} f_k] - sum_i c_i(s_i)`, the exact potential
/// of any backward rewarding mechanism.
pub fn potential(profile: &StrategyProfile, game: &GameInstance) -> Result<f64> {
    let mech = game.mechanism()?;
    if !mech.is_backward_rewarding() {
        return Err(Error::NotBackwardRewarding(mech.name()));
    }
    let table = ScoreTable::build(game, profile)?;
    potential_from_table(&table, game, mech, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::make_tvn;
    use crate::model::{
        Action, ActionSpace, AttentionWeights, CostSpec, ScoreFunction, UserPopulation,
    };

    fn single(score_user: Vec<f64>, action: Vec<f64>, cost: CostSpec) -> GameInstance {
        GameInstance::new(
            UserPopulation::uniform(vec![score_user]).unwrap(),
            vec![ActionSpace::finite(vec![action]).unwrap()],
            vec![cost],
            ScoreFunction::RawInnerProduct,
            AttentionWeights::new(vec![1.0]).unwrap(),
        )
        .unwrap()
        .with_mechanism(Mechanism::M3Zero)
        .unwrap()
    }

    #[test]
    fn lone_creator_utility() {
        let g = single(vec![1.0, 0.0], vec![0.7, 0.0], CostSpec::Zero);
        let p = StrategyProfile::uniform_index(1, 0);
        assert!((creator_utility(0, &p, &g).unwrap() - 0.7).abs() < 1e-15);
        assert!(matches!(creator_utility(1, &p, &g), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn quadratic_cost_only() {
        // zero score, action at distance 1 from the center
        let g = single(
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            CostSpec::quadratic(0.5, vec![0.0, 0.0]).unwrap(),
        );
        let p = StrategyProfile::uniform_index(1, 0);
        assert_eq!(creator_utility(0, &p, &g).unwrap(), -0.5);
    }

    #[test]
    fn tvn_two_creators() {
        let g = make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap())
            .unwrap()
            .with_mechanism(Mechanism::brcm(vec![1.0, 0.0]).unwrap())
            .unwrap();
        let split = StrategyProfile::new(vec![Action::Index(0), Action::Index(1)]);
        assert_eq!(creator_utilities(&split, &g).unwrap(), vec![0.75, 0.25]);
        assert_eq!(welfare(&split, &g).unwrap(), 1.0);
        assert_eq!(potential(&split, &g).unwrap(), 1.0);
        let herd = StrategyProfile::uniform_index(2, 0);
        assert_eq!(welfare(&herd, &g).unwrap(), 0.75);
        let report = social_welfare(&herd, &g).unwrap();
        assert_eq!(report.total_welfare, report.user_side);
    }

    #[test]
    fn user_welfare_examples() {
        let g = make_tvn(3, AttentionWeights::new(vec![1.0, 1.0 / 3f64.log2(), 0.0]).unwrap())
            .unwrap();
        let p = StrategyProfile::new(vec![Action::Index(0), Action::Index(0), Action::Index(1)]);
        let u = user_welfare(&p, &[1.0, 0.0, 0.0], &g).unwrap();
        assert!((u - (1.0 + 1.0 / 3f64.log2())).abs() < 1e-15);
        assert!((u - 1.6309).abs() < 1e-4);
        assert_eq!(user_welfare(&p, &[0.0, 0.0, 1.0], &g).unwrap(), 0.0);
        let g2 = make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap()).unwrap();
        let p2 = StrategyProfile::new(vec![Action::Index(0), Action::Index(1)]);
        assert_eq!(user_welfare(&p2, &[0.9, 0.4], &g2).unwrap(), 0.9);
    }

    #[test]
    fn potential_requires_brm() {
        let g = make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap())
            .unwrap()
            .with_mechanism(Mechanism::exposure(1, 0.1))
            .unwrap();
        let p = StrategyProfile::uniform_index(2, 0);
        assert!(matches!(potential(&p, &g), Err(Error::NotBackwardRewarding(_))));
        let unset = make_tvn(2, AttentionWeights::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!(matches!(potential(&p, &unset), Err(Error::MechanismUnset)));
    }
}
