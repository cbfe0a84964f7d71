//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use c3sim::environments::{make_synthetic, synthetic_reporting_groups, tvn_trend_profile};
use c3sim::presets::{embedding_optimizer, synthetic_optimizer};
use c3sim::{
    ingest_embeddings, make_tvn, Action, AttentionWeights, DynamicsConfig, EmbeddingIngestSpec,
    Mechanism, OptimizerConfig, Preset, Scenario, ScenarioVariant, StrategyProfile, SyntheticSpec,
};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvironmentConfig {
    /// Clustered synthetic population. With `resample` (the default) every
    /// run seed draws its own instance from `seed + run seed`.
    Synthetic {
        #[serde(flatten)]
        spec: SyntheticSpec,
        #[serde(default = "yes")]
        resample: bool,
    },
    /// Embedding files; relative paths resolve against the config file.
    Embedding {
        #[serde(flatten)]
        spec: EmbeddingIngestSpec,
        n: usize,
    },
    /// Trend-vs-Niche game; `initial` lists action indices, all-trend by default.
    Tvn {
        n: usize,
        attention: Vec<f64>,
        #[serde(default)]
        initial: Option<Vec<usize>>,
    },
}

fn yes() -> bool {
    true
}

/// A mechanism to run: a preset name or a named explicit mechanism.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MechanismEntry {
    Preset(String),
    Custom {
        name: String,
        #[serde(flatten)]
        mechanism: Mechanism,
    },
}

#[derive(Debug, Clone)]
pub enum Arm {
    Preset(Preset),
    Fixed { name: String, mechanism: Mechanism },
}

impl Arm {
    pub fn name(&self) -> String {
        match self {
            Arm::Preset(p) => p.name().to_string(),
            Arm::Fixed { name, .. } => name.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    #[serde(default = "default_variant")]
    pub variant: ScenarioVariant,
    #[serde(default)]
    pub mechanisms: Vec<MechanismEntry>,
    pub dynamics: DynamicsConfig,
    /// Defaults to the environment's preset when absent.
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_variant() -> ScenarioVariant {
    ScenarioVariant::G1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let EnvironmentConfig::Embedding { spec, .. } = &mut cfg.environment {
            let base = path.parent().unwrap_or(Path::new("."));
            spec.user_file = base.join(&spec.user_file);
            spec.item_file = base.join(&spec.item_file);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() {
            bail!("config lists no mechanisms");
        }
        if self.seeds.is_empty() {
            bail!("config lists no seeds");
        }
        self.dynamics.validate()?;
        self.optimizer().validate()?;
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        self.optimizer.clone().unwrap_or_else(|| match self.environment {
            EnvironmentConfig::Embedding { .. } => embedding_optimizer(0),
            _ => synthetic_optimizer(0),
        })
    }

    pub fn arms(&self) -> Result<Vec<Arm>> {
        self.mechanisms
            .iter()
            .map(|e| match e {
                MechanismEntry::Preset(name) => Ok(Arm::Preset(name.parse()?)),
                MechanismEntry::Custom { name, mechanism } => {
                    Ok(Arm::Fixed { name: name.clone(), mechanism: mechanism.clone() })
                }
            })
            .collect()
    }

    /// The game instance and starting profile for one run seed.
    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        Ok(match &self.environment {
            EnvironmentConfig::Synthetic { spec, resample } => {
                let mut spec = spec.clone();
                if *resample {
                    spec.seed = spec.seed.wrapping_add(seed);
                }
                make_synthetic(&spec, self.variant)?
            }
            EnvironmentConfig::Embedding { spec, n } => {
                let mut spec = spec.clone();
                spec.seed = spec.seed.wrapping_add(seed);
                ingest_embeddings(&spec, self.variant, *n)?
            }
            EnvironmentConfig::Tvn { n, attention, initial } => {
                let game = make_tvn(*n, AttentionWeights::new(attention.clone())?)?;
                let initial_profile = match initial {
                    Some(idx) => StrategyProfile::new(idx.iter().map(|&k| Action::Index(k)).collect()),
                    None => tvn_trend_profile(*n),
                };
                game.validate_profile(&initial_profile)?;
                Scenario { game, initial_profile }
            }
        })
    }

    /// Reporting groups as lists of population labels; empty when the
    /// population is unlabeled.
    pub fn reporting_groups(&self, scenario: &Scenario) -> Vec<Vec<usize>> {
        match &self.environment {
            EnvironmentConfig::Synthetic { spec, .. } if spec.clusters == 8 => {
                synthetic_reporting_groups()
            }
            _ => match scenario.game.population().group_labels() {
                Some(labels) => {
                    let max = labels.iter().copied().max().unwrap_or(0);
                    (0..=max).map(|g| vec![g]).collect()
                }
                None => Vec::new(),
            },
        }
    }
}
