//! Game primitives: user populations, action spaces, costs, matching scores,
//! attention weights and the game tuple that ties them together.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanisms::Mechanism;

/// Tolerance for unit-norm membership of continuous actions.
pub const UNIT_NORM_TOL: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A finite weighted population of users, each a `d`-dimensional preference vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPopulation {
    users: Vec<Vec<f64>>,
    weights: Vec<f64>,
    group_labels: Option<Vec<usize>>,
    dim: usize,
}

impl UserPopulation {
    pub fn new(
        users: Vec<Vec<f64>>,
        weights: Vec<f64>,
        group_labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(invalid("user population is empty"));
        }
        let dim = users[0].len();
        if dim == 0 {
            return Err(invalid("user vectors must have positive dimension"));
        }
        for u in &users {
            if u.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("user vector".into()));
            }
        }
        if weights.len() != users.len() {
            return Err(Error::DimensionMismatch { expected: users.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("user weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("user weights sum to {total}, expected 1")));
        }
        if let Some(labels) = &group_labels {
            if labels.len() != users.len() {
                return Err(Error::DimensionMismatch { expected: users.len(), got: labels.len() });
            }
        }
        Ok(Self { users, weights, group_labels, dim })
    }

    /// Uniform weights over the given users.
    pub fn uniform(users: Vec<Vec<f64>>) -> Result<Self> {
        let m = users.len().max(1);
        let weights = vec![1.0 / m as f64; users.len()];
        Self::new(users, weights, None)
    }

    pub fn with_groups(self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.users, self.weights, Some(labels))
    }

    pub fn users(&self) -> &[Vec<f64>] {
        &self.users
    }

    pub fn user(&self, j: usize) -> &[f64] {
        &self.users[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn group_labels(&self) -> Option<&[usize]> {
        self.group_labels.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// One creator's choice: a unit vector on the sphere, or an index into a finite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Vector(Vec<f64>),
    Index(usize),
}

/// The set of contents a creator can produce.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    /// The unit sphere in `R^dim`.
    Sphere { dim: usize },
    /// A finite, shared set of embeddings.
    Finite { actions: Arc<Vec<Vec<f64>>> },
}

impl ActionSpace {
    pub fn sphere(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("sphere dimension must be positive"));
        }
        Ok(ActionSpace::Sphere { dim })
    }

    pub fn finite(actions: Vec<Vec<f64>>) -> Result<Self> {
        Self::finite_shared(Arc::new(actions))
    }

    pub fn finite_shared(actions: Arc<Vec<Vec<f64>>>) -> Result<Self> {
        let first = actions.first().ok_or_else(|| invalid("finite action set is empty"))?;
        let dim = first.len();
        for a in actions.iter() {
            if a.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("action vector".into()));
            }
        }
        Ok(ActionSpace::Finite { actions })
    }

    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Sphere { dim } => *dim,
            ActionSpace::Finite { actions } => actions[0].len(),
        }
    }

    /// Number of actions, `None` for the continuous sphere.
    pub fn size(&self) -> Option<usize> {
        match self {
            ActionSpace::Sphere { .. } => None,
            ActionSpace::Finite { actions } => Some(actions.len()),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Sphere { dim }, Action::Vector(v)) => {
                v.len() == *dim
                    && v.iter().all(|x| x.is_finite())
                    && (norm(v) - 1.0).abs() <= UNIT_NORM_TOL
            }
            (ActionSpace::Finite { actions }, Action::Index(k)) => *k < actions.len(),
            _ => false,
        }
    }

    /// Euclidean projection of an arbitrary point onto the space.
    ///
    /// The sphere normalizes (a zero vector is nudged by machine epsilon along
    /// the first axis); a finite set returns its nearest member, lowest index
    /// on ties.
    pub fn project(&self, point: &[f64]) -> Action {
        match self {
            ActionSpace::Sphere { .. } => {
                let mut v = point.to_vec();
                let mut len = norm(&v);
                if len == 0.0 {
                    v[0] += f64::EPSILON;
                    len = norm(&v);
                }
                Action::Vector(v.into_iter().map(|x| x / len).collect())
            }
            ActionSpace::Finite { actions } => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (k, a) in actions.iter().enumerate() {
                    let d = sq_dist(a, point);
                    if d < best_d {
                        best_d = d;
                        best = k;
                    }
                }
                Action::Index(best)
            }
        }
    }
}

/// Production cost of a creator.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    Zero,
    /// `lambda * ||s - center||^2`
    Quadratic { lambda: f64, center: Vec<f64> },
}

impl CostSpec {
    pub fn quadratic(lambda: f64, center: Vec<f64>) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid("quadratic cost weight must be finite and nonnegative"));
        }
        Ok(CostSpec::Quadratic { lambda, center })
    }

    pub fn eval(&self, action: &[f64]) -> f64 {
        match self {
            CostSpec::Zero => 0.0,
            CostSpec::Quadratic { lambda, center } => lambda * sq_dist(action, center),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            CostSpec::Quadratic { center, .. } if center.len() != dim => {
                Err(Error::DimensionMismatch { expected: dim, got: center.len() })
            }
            _ => Ok(()),
        }
    }
}

/// Matching score between a content embedding and a user. Always lands in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScoreFunction {
    /// `<s, x>`; callers guarantee a nonnegative product, the result is clamped.
    RawInnerProduct,
    /// `(<s, x> + 1) / 2`
    ShiftedInnerProduct,
    /// `clip(scale * <s, x> + offset, 0, 1)`
    ClippedAffine { scale: f64, offset: f64 },
}

impl ScoreFunction {
    /// Scale and offset used for rating-style embeddings (`<s, x> / 2.5 - 1`).
    pub fn rating_clip() -> Self {
        ScoreFunction::ClippedAffine { scale: 1.0 / 2.5, offset: -1.0 }
    }

    pub fn score(&self, action: &[f64], user: &[f64]) -> Result<f64> {
        if action.len() != user.len() {
            return Err(Error::DimensionMismatch { expected: user.len(), got: action.len() });
        }
        let s = self.eval(action, user);
        if s.is_nan() {
            return Err(Error::NonFinite("matching score".into()));
        }
        Ok(s)
    }

    #[inline]
    pub(crate) fn eval(&self, action: &[f64], user: &[f64]) -> f64 {
        let ip = dot(action, user);
        let raw = match *self {
            ScoreFunction::RawInnerProduct => ip,
            ScoreFunction::ShiftedInnerProduct => 0.5 * (ip + 1.0),
            ScoreFunction::ClippedAffine { scale, offset } => scale * ip + offset,
        };
        raw.clamp(0.0, 1.0)
    }
}

/// Nonincreasing user attention over rank positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AttentionWeights {
    r: Vec<f64>,
}

impl AttentionWeights {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(invalid("attention weights are empty"));
        }
        if r.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(invalid("attention weights must lie in [0, 1]"));
        }
        if r.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("attention weights must be nonincreasing"));
        }
        Ok(Self { r })
    }

    /// `1/log2(k+1)` for the first `k` positions, zero for the remaining `n - k`.
    pub fn dcg(k: usize, n: usize) -> Result<Self> {
        if k > n {
            return Err(invalid(format!("top-K cutoff {k} exceeds {n} positions")));
        }
        let r = (1..=n)
            .map(|pos| if pos <= k { 1.0 / ((pos + 1) as f64).log2() } else { 0.0 })
            .collect();
        Self::new(r)
    }

    /// The five-position DCG preset padded with zeros to `n` entries.
    pub fn dcg5(n: usize) -> Result<Self> {
        Self::dcg(5.min(n), n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Number of positions carrying nonzero attention.
    pub fn top_k(&self) -> usize {
        self.r.iter().take_while(|v| **v > 0.0).count()
    }
}

impl TryFrom<Vec<f64>> for AttentionWeights {
    type Error = Error;
    fn try_from(r: Vec<f64>) -> Result<Self> {
        Self::new(r)
    }
}

impl From<AttentionWeights> for Vec<f64> {
    fn from(a: AttentionWeights) -> Self {
        a.r
    }
}

/// Attention weights after randomizing display positions, with a flag telling
/// whether the result is still nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedAttention {
    pub weights: Vec<f64>,
    pub nonincreasing: bool,
}

/// Expected attention received by the content at each relevance rank when the
/// displayed order is drawn from `mixture`.
///
/// Each permutation lists, for display position `p`, the relevance rank shown
/// there (0-based): `perm[p] = k`.
pub fn perturbed_attention_weights(
    r: &AttentionWeights,
    mixture: &[(Vec<usize>, f64)],
) -> Result<PerturbedAttention> {
    let n = r.len();
    let mut total = 0.0;
    let mut out = vec![0.0; n];
    for (perm, p) in mixture {
        if !p.is_finite() || *p < 0.0 {
            return Err(invalid("mixture probabilities must be nonnegative"));
        }
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
        }
        let mut seen = vec![false; n];
        for &k in perm {
            if k >= n || seen[k] {
                return Err(invalid("mixture entry is not a permutation"));
            }
            seen[k] = true;
        }
        for (pos, &rank) in perm.iter().enumerate() {
            out[rank] += p * r.as_slice()[pos];
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("mixture probabilities sum to {total}")));
    }
    let nonincreasing = out.windows(2).all(|w| w[0] >= w[1]);
    Ok(PerturbedAttention { weights: out, nonincreasing })
}

/// Scores of all creators for one user, together with the descending rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreProfile {
    scores: Vec<f64>,
    order: Vec<usize>,
    tie_groups: Vec<Vec<usize>>,
}

impl ScoreProfile {
    /// Sorts descending; equal scores keep creator-index order.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(invalid("score profile needs at least one creator"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("matching score".into()));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut tie_groups: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            match tie_groups.last_mut() {
                Some(g) if scores[g[0]] == scores[i] => g.push(i),
                _ => tie_groups.push(vec![i]),
            }
        }
        Ok(Self { scores, order, tie_groups })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// `order[k]` is the creator at rank `k` (0-based).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Maximal runs of equal scores, in rank order.
    pub fn tie_groups(&self) -> &[Vec<usize>] {
        &self.tie_groups
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn sorted_scores(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.scores[i]).collect()
    }
}

/// One action per creator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    actions: Vec<Action>,
}

impl StrategyProfile {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions }
    }

    /// Every creator plays finite action `k`.
    pub fn uniform_index(n: usize, k: usize) -> Self {
        Self::new(vec![Action::Index(k); n])
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn get(&self, i: usize) -> &Action {
        &self.actions[i]
    }

    pub fn set(&mut self, i: usize, action: Action) {
        self.actions[i] = action;
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Indices of a profile over finite spaces, `None` if any action is a vector.
    pub fn indices(&self) -> Option<Vec<usize>> {
        self.actions
            .iter()
            .map(|a| match a {
                Action::Index(k) => Some(*k),
                Action::Vector(_) => None,
            })
            .collect()
    }
}

/// A content-creator competition game.
#[derive(Debug, Clone)]
pub struct GameInstance {
    population: Arc<UserPopulation>,
    action_spaces: Vec<ActionSpace>,
    costs: Vec<CostSpec>,
    score_fn: ScoreFunction,
    mechanism: Option<Mechanism>,
    attention: AttentionWeights,
}

impl GameInstance {
    pub fn new(
        population: UserPopulation,
        action_spaces: Vec<ActionSpace>,
        costs: Vec<CostSpec>,
        score_fn: ScoreFunction,
        attention: AttentionWeights,
    ) -> Result<Self> {
        let n = action_spaces.len();
        if n == 0 {
            return Err(invalid("a game needs at least one creator"));
        }
        if costs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: costs.len() });
        }
        if attention.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: attention.len() });
        }
        let d = population.dim();
        for space in &action_spaces {
            if space.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: space.dim() });
            }
        }
        for c in &costs {
            c.check_dim(d)?;
        }
        Ok(Self {
            population: Arc::new(population),
            action_spaces,
            costs,
            score_fn,
            mechanism: None,
            attention,
        })
    }

    pub fn with_mechanism(mut self, mechanism: Mechanism) -> Result<Self> {
        mechanism.validate(self.n())?;
        self.mechanism = Some(mechanism);
        Ok(self)
    }

    /// Like [`with_mechanism`](Self::with_mechanism) but skips validation.
    /// Used to probe deliberately malformed mechanisms.
    pub fn with_mechanism_unchecked(mut self, mechanism: Mechanism) -> Self {
        self.mechanism = Some(mechanism);
        self
    }

    pub fn mechanism(&self) -> Result<&Mechanism> {
        self.mechanism.as_ref().ok_or(Error::MechanismUnset)
    }

    pub fn population(&self) -> &UserPopulation {
        &self.population
    }

    pub fn action_spaces(&self) -> &[ActionSpace] {
        &self.action_spaces
    }

    pub fn costs(&self) -> &[CostSpec] {
        &self.costs
    }

    pub fn score_fn(&self) -> ScoreFunction {
        self.score_fn
    }

    pub fn attention(&self) -> &AttentionWeights {
        &self.attention
    }

    pub fn n(&self) -> usize {
        self.action_spaces.len()
    }

    pub fn dim(&self) -> usize {
        self.population.dim()
    }

    /// Embedding of creator `i` playing `action`.
    pub fn action_vector<'a>(&'a self, i: usize, action: &'a Action) -> &'a [f64] {
        match (action, &self.action_spaces[i]) {
            (Action::Vector(v), _) => v,
            (Action::Index(k), ActionSpace::Finite { actions }) => &actions[*k],
            (Action::Index(_), ActionSpace::Sphere { .. }) => {
                panic!("index action used with a continuous action space")
            }
        }
    }

    pub fn validate_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: profile.len() });
        }
        for (i, (a, space)) in profile.actions().iter().zip(&self.action_spaces).enumerate() {
            if !space.contains(a) {
                return Err(invalid(format!("action of creator {i} is not in its action space")));
            }
        }
        Ok(())
    }
}

/// Matching scores of every creator for one user.
pub fn score_profile(
    profile: &StrategyProfile,
    user: &[f64],
    game: &GameInstance,
) -> Result<ScoreProfile> {
    let scores = profile
        .actions()
        .iter()
        .enumerate()
        .map(|(i, a)| game.score_fn().score(game.action_vector(i, a), user))
        .collect::<Result<Vec<_>>>()?;
    ScoreProfile::from_scores(scores)
}
