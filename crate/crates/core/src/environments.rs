//! Game constructors: Trend-vs-Niche instances, clustered synthetic
//! populations and embedding-file ingestion.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    dot, norm, Action, ActionSpace, AttentionWeights, CostSpec, GameInstance, ScoreFunction,
    StrategyProfile, UserPopulation,
};

/// Cost and starting-point regime of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioVariant {
    /// Zero cost; every creator starts at the most popular strategy.
    G1,
    /// Quadratic cost `lambda * ||s - center||^2`, creators start at their centers.
    G2 { lambda: f64 },
}

impl ScenarioVariant {
    fn validate(&self) -> Result<()> {
        match self {
            ScenarioVariant::G2 { lambda } if !(lambda.is_finite() && *lambda > 0.0) => {
                Err(invalid("G2 cost weight must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// A game together with the profile creators start from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub game: GameInstance,
    pub initial_profile: StrategyProfile,
}

fn basis(d: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[k] = 1.0;
    v
}

/// Trend-vs-Niche game with `n` creators: `n + 1` users on `e_1`, one user on
/// each of `e_2 .. e_n`, every creator choosing among the basis vectors.
/// The mechanism is left unset.
pub fn make_tvn(n: usize, attention: AttentionWeights) -> Result<GameInstance> {
    if n < 2 {
        return Err(invalid("TvN needs at least two creators"));
    }
    if attention.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: attention.len() });
    }
    let k = attention.top_k();
    if attention.as_slice()[k..].iter().any(|r| *r != 0.0) {
        return Err(invalid("TvN attention must be top-K with trailing zeros"));
    }
    let mut users: Vec<Vec<f64>> = (0..=n).map(|_| basis(n, 0)).collect();
    users.extend((1..n).map(|k| basis(n, k)));
    let population = UserPopulation::uniform(users)?;
    let actions = ActionSpace::finite((0..n).map(|k| basis(n, k)).collect())?;
    GameInstance::new(
        population,
        vec![actions; n],
        vec![CostSpec::Zero; n],
        ScoreFunction::RawInnerProduct,
        attention,
    )
}

/// The TvN profile where every creator caters to the majority group.
pub fn tvn_trend_profile(n: usize) -> StrategyProfile {
    StrategyProfile::uniform_index(n, 0)
}

/// Clustered population on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Embedding dimension.
    pub d: usize,
    /// Standard deviation of the per-cluster Gaussian noise.
    pub v: f64,
    /// Number of clusters.
    pub clusters: usize,
    /// Users per cluster.
    pub sizes: Vec<usize>,
    /// Declared population size; must equal the sum of `sizes` when given.
    pub m: Option<usize>,
    /// Number of creators.
    pub n: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            d: 10,
            v: 0.3,
            clusters: 8,
            sizes: vec![20, 10, 8, 5, 3, 3, 2, 1],
            m: Some(52),
            n: 10,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(invalid("synthetic dimension must be at least 2"));
        }
        if !(self.v.is_finite() && self.v >= 0.0) {
            return Err(invalid("cluster noise must be nonnegative"));
        }
        if self.sizes.len() != self.clusters {
            return Err(invalid(format!(
                "{} cluster sizes given for {} clusters",
                self.sizes.len(),
                self.clusters
            )));
        }
        if self.sizes.contains(&0) {
            return Err(invalid("cluster sizes must be positive"));
        }
        let m: usize = self.sizes.iter().sum();
        if let Some(declared) = self.m {
            if declared != m {
                return Err(invalid(format!("cluster sizes sum to {m}, declared {declared}")));
            }
        }
        if self.n < 1 {
            return Err(invalid("need at least one creator"));
        }
        Ok(())
    }
}

/// Cluster grouping used when reporting synthetic results: the majority
/// cluster, the two minority clusters, and the niche tail.
pub fn synthetic_reporting_groups() -> Vec<Vec<usize>> {
    vec![vec![0], vec![1, 2], vec![3, 4, 5, 6, 7]]
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&v);
        if len > 0.0 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Samples cluster centers on the sphere, then users around each center,
/// normalized back onto the sphere. Draw order: centers, users cluster by
/// cluster, then G2 cost centers.
pub fn make_synthetic(spec: &SyntheticSpec, variant: ScenarioVariant) -> Result<Scenario> {
    spec.validate()?;
    variant.validate()?;
    let d = spec.d;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.clusters).map(|_| random_unit(&mut rng, d)).collect();

    let mut users = Vec::new();
    let mut labels = Vec::new();
    for (c, (center, &size)) in centers.iter().zip(&spec.sizes).enumerate() {
        for _ in 0..size {
            let x: Vec<f64> = center
                .iter()
                .map(|ci| ci + spec.v * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let len = norm(&x);
            let x = if len > 0.0 { x.into_iter().map(|v| v / len).collect() } else { center.clone() };
            users.push(x);
            labels.push(c);
        }
    }
    let population = UserPopulation::uniform(users)?.with_groups(labels)?;
    let n = spec.n;
    let spaces = vec![ActionSpace::sphere(d)?; n];

    let (costs, init) = match variant {
        ScenarioVariant::G1 => {
            let largest = (0..spec.clusters)
                .max_by(|&a, &b| spec.sizes[a].cmp(&spec.sizes[b]).then(b.cmp(&a)))
                .unwrap();
            let start = Action::Vector(centers[largest].clone());
            (vec![CostSpec::Zero; n], StrategyProfile::new(vec![start; n]))
        }
        ScenarioVariant::G2 { lambda } => {
            let cost_centers: Vec<Vec<f64>> = (0..n).map(|_| random_unit(&mut rng, d)).collect();
            let costs = cost_centers
                .iter()
                .map(|c| CostSpec::quadratic(lambda, c.clone()))
                .collect::<Result<Vec<_>>>()?;
            let init = StrategyProfile::new(cost_centers.into_iter().map(Action::Vector).collect());
            (costs, init)
        }
    };

    let game = GameInstance::new(
        population,
        spaces,
        costs,
        ScoreFunction::ShiftedInnerProduct,
        AttentionWeights::dcg5(n)?,
    )?;
    Ok(Scenario { game, initial_profile: init })
}

/// Where and how to read precomputed user/item embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingIngestSpec {
    pub user_file: PathBuf,
    pub item_file: PathBuf,
    pub d: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_offset")]
    pub offset: f64,
    /// Drop entities with more than this many predicted scores above the
    /// cutoff; `None` keeps everything.
    #[serde(default = "default_threshold")]
    pub max_high_ratings: Option<usize>,
    #[serde(default = "default_cutoff")]
    pub rating_cutoff: f64,
    /// Seed for sampling G2 cost centers.
    #[serde(default)]
    pub seed: u64,
}

fn default_scale() -> f64 {
    1.0 / 2.5
}
fn default_offset() -> f64 {
    -1.0
}
fn default_threshold() -> Option<usize> {
    Some(500)
}
fn default_cutoff() -> f64 {
    4.0
}

impl EmbeddingIngestSpec {
    pub fn new(user_file: impl Into<PathBuf>, item_file: impl Into<PathBuf>, d: usize) -> Self {
        Self {
            user_file: user_file.into(),
            item_file: item_file.into(),
            d,
            scale: default_scale(),
            offset: default_offset(),
            max_high_ratings: default_threshold(),
            rating_cutoff: default_cutoff(),
            seed: 0,
        }
    }
}

/// Reads `id, v_1, ..., v_d` rows. A first row whose second field is not
/// numeric is treated as a header.
pub fn read_embedding_csv(path: &Path, d: usize) -> Result<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != d + 1 {
            if line == 0 && record.get(1).is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            return Err(Error::DimensionMismatch { expected: d + 1, got: record.len() });
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().skip(1).map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => out.push((record[0].to_string(), v)),
            Ok(_) => return Err(Error::NonFinite(format!("{}:{}", path.display(), line + 1))),
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse(format!("{}:{}: {e}", path.display(), line + 1)))
            }
        }
    }
    Ok(out)
}

/// Indices of users and items that survive the popularity filter. Counts use
/// raw inner products over the unfiltered sets; "above" is strict.
pub fn popularity_filter(
    users: &[Vec<f64>],
    items: &[Vec<f64>],
    max_high: Option<usize>,
    cutoff: f64,
) -> (Vec<usize>, Vec<usize>) {
    let Some(max_high) = max_high else {
        return ((0..users.len()).collect(), (0..items.len()).collect());
    };
    let mut user_counts = vec![0usize; users.len()];
    let mut item_counts = vec![0usize; items.len()];
    for (j, x) in users.iter().enumerate() {
        for (k, s) in items.iter().enumerate() {
            if dot(x, s) > cutoff {
                user_counts[j] += 1;
                item_counts[k] += 1;
            }
        }
    }
    let keep_users = (0..users.len()).filter(|&j| user_counts[j] <= max_high).collect();
    let keep_items = (0..items.len()).filter(|&k| item_counts[k] <= max_high).collect();
    (keep_users, keep_items)
}

/// Builds a game from embedding files: surviving users form the population,
/// surviving items the shared finite action space of all `n` creators.
pub fn ingest_embeddings(
    spec: &EmbeddingIngestSpec,
    variant: ScenarioVariant,
    n: usize,
) -> Result<Scenario> {
    variant.validate()?;
    if n < 1 {
        return Err(invalid("need at least one creator"));
    }
    let users: Vec<Vec<f64>> =
        read_embedding_csv(&spec.user_file, spec.d)?.into_iter().map(|(_, v)| v).collect();
    let items: Vec<Vec<f64>> =
        read_embedding_csv(&spec.item_file, spec.d)?.into_iter().map(|(_, v)| v).collect();
    let (keep_u, keep_i) =
        popularity_filter(&users, &items, spec.max_high_ratings, spec.rating_cutoff);
    if keep_u.is_empty() {
        return Err(invalid("no users left after filtering"));
    }
    if keep_i.is_empty() {
        return Err(invalid("no items left after filtering"));
    }
    let users: Vec<Vec<f64>> = keep_u.into_iter().map(|j| users[j].clone()).collect();
    let items: Arc<Vec<Vec<f64>>> = Arc::new(keep_i.into_iter().map(|k| items[k].clone()).collect());
    let score_fn = ScoreFunction::ClippedAffine { scale: spec.scale, offset: spec.offset };

    let (costs, init) = match variant {
        ScenarioVariant::G1 => {
            let mut best = 0;
            let mut best_mean = f64::NEG_INFINITY;
            for (k, s) in items.iter().enumerate() {
                let mean = users.iter().map(|x| score_fn.eval(s, x)).sum::<f64>() / users.len() as f64;
                if mean > best_mean {
                    best_mean = mean;
                    best = k;
                }
            }
            (vec![CostSpec::Zero; n], StrategyProfile::uniform_index(n, best))
        }
        ScenarioVariant::G2 { lambda } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..items.len())).collect();
            let costs = picks
                .iter()
                .map(|&k| CostSpec::quadratic(lambda, items[k].clone()))
                .collect::<Result<Vec<_>>>()?;
            (costs, StrategyProfile::new(picks.into_iter().map(Action::Index).collect()))
        }
    };

    let space = ActionSpace::finite_shared(items)?;
    let game = GameInstance::new(
        UserPopulation::uniform(users)?,
        vec![space; n],
        costs,
        score_fn,
        AttentionWeights::dcg5(n)?,
    )?;
    Ok(Scenario { game, initial_profile: init })
}
