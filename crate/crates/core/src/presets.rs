//! Named mechanisms and the default experiment parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{sim_stra, DynamicsConfig, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::Mechanism;
use crate::model::{AttentionWeights, GameInstance, StrategyProfile};
use crate::optimizer::{optimize_brcm, OptimizerConfig, OptimizerOutcome};
use crate::welfare;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Constant densities equal to the attention weights.
    BrcmStar,
    /// `(1, 1/2, 1/3, 1/4, 1/5, 0, ...)`.
    Brcm1,
    M3Zero,
    /// Top-5 exposure at temperature 0.05.
    M3Exposure,
    /// Top-5 engagement at temperature 0.05.
    M3Engagement,
    /// Constant densities tuned by the optimizer from `(1, 1, 1, 1, 1, 0, ...)`.
    BrcmOpt,
}

pub const ALL_PRESETS: [Preset; 6] = [
    Preset::BrcmStar,
    Preset::Brcm1,
    Preset::BrcmOpt,
    Preset::M3Zero,
    Preset::M3Exposure,
    Preset::M3Engagement,
];

const SOFTMAX_K: usize = 5;
const SOFTMAX_BETA: f64 = 0.05;

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::BrcmStar => "brcm-star",
            Preset::Brcm1 => "brcm-1",
            Preset::M3Zero => "m3-zero",
            Preset::M3Exposure => "m3-exposure",
            Preset::M3Engagement => "m3-engagement",
            Preset::BrcmOpt => "brcm-opt",
        }
    }

    /// Whether the mechanism is tuned by the optimizer rather than fixed.
    pub fn is_optimized(self) -> bool {
        self == Preset::BrcmOpt
    }

    /// The mechanism for `n` creators; for `brcm-opt` this is the starting
    /// point of the search.
    pub fn mechanism(self, n: usize, attention: &AttentionWeights) -> Result<Mechanism> {
        if n == 0 {
            return Err(invalid("presets need at least one creator"));
        }
        match self {
            Preset::BrcmStar => {
                if attention.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: attention.len() });
                }
                Mechanism::brcm(attention.as_slice().to_vec())
            }
            Preset::Brcm1 => {
                Mechanism::brcm((1..=n).map(|k| if k <= 5 { 1.0 / k as f64 } else { 0.0 }).collect())
            }
            Preset::M3Zero => Ok(Mechanism::M3Zero),
            Preset::M3Exposure => Ok(Mechanism::exposure(SOFTMAX_K.min(n), SOFTMAX_BETA)),
            Preset::M3Engagement => Ok(Mechanism::engagement(SOFTMAX_K.min(n), SOFTMAX_BETA)),
            Preset::BrcmOpt => Mechanism::brcm((0..n).map(|k| if k < 5 { 1.0 } else { 0.0 }).collect()),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_PRESETS
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown mechanism preset {s:?}")))
    }
}

/// Outcome of running one preset from a starting profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    pub preset: Preset,
    /// The mechanism in force at the end (the tuned one for `brcm-opt`).
    pub mechanism: Mechanism,
    pub final_profile: StrategyProfile,
    pub final_welfare: f64,
    /// Recorded for fixed mechanisms.
    pub trajectory: Option<Trajectory>,
    /// Recorded for `brcm-opt`.
    pub optimizer: Option<OptimizerOutcome>,
}

/// Attaches the preset's mechanism to `game` and runs the dynamics, or the
/// optimizer for `brcm-opt`. Any mechanism already attached is replaced.
pub fn run_preset(
    preset: Preset,
    game: &GameInstance,
    init: &StrategyProfile,
    dynamics: &DynamicsConfig,
    optimizer: &OptimizerConfig,
) -> Result<PresetRun> {
    let mech = preset.mechanism(game.n(), game.attention())?;
    let game = game.clone().with_mechanism(mech)?;
    if preset.is_optimized() {
        let out = optimize_brcm(&game, init, optimizer)?;
        let final_welfare = welfare::welfare(&out.final_profile, &game)?;
        Ok(PresetRun {
            preset,
            mechanism: Mechanism::Brcm { f: out.f.clone() },
            final_profile: out.final_profile.clone(),
            final_welfare,
            trajectory: None,
            optimizer: Some(out),
        })
    } else {
        let (final_profile, traj) = sim_stra(&game, init, dynamics)?;
        let final_welfare = welfare::welfare(&final_profile, &game)?;
        Ok(PresetRun {
            preset,
            mechanism: game.mechanism()?.clone(),
            final_profile,
            final_welfare,
            trajectory: Some(traj),
            optimizer: None,
        })
    }
}

/// Dynamics defaults for the synthetic environment: `T = 1000`, step 0.1.
pub fn synthetic_dynamics(seed: u64) -> DynamicsConfig {
    DynamicsConfig::new(1000, 0.1, seed)
}

/// Optimizer defaults for the synthetic environment: 200 epochs of 5 steps,
/// both step sizes 0.1.
pub fn synthetic_optimizer(seed: u64) -> OptimizerConfig {
    OptimizerConfig::new(200, 5, 0.1, 0.1, seed)
}

/// Dynamics defaults for embedding-file environments: `T = 500`, step 0.1.
pub fn embedding_dynamics(seed: u64) -> DynamicsConfig {
    DynamicsConfig::new(500, 0.1, seed)
}

/// Optimizer defaults for embedding-file environments: 100 epochs of 5
/// steps, mechanism step 0.5, creator step 0.1.
pub fn embedding_optimizer(seed: u64) -> OptimizerConfig {
    OptimizerConfig::new(100, 5, 0.5, 0.1, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in ALL_PRESETS {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("brcm-2".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_vectors() {
        let att = AttentionWeights::dcg5(10).unwrap();
        let Mechanism::Brcm { f } = Preset::Brcm1.mechanism(10, &att).unwrap() else { panic!() };
        assert_eq!(f[..6], [1.0, 0.5, 1.0 / 3.0, 0.25, 0.2, 0.0]);
        let Mechanism::Brcm { f } = Preset::BrcmStar.mechanism(10, &att).unwrap() else { panic!() };
        assert_eq!(f, att.as_slice());
        let Mechanism::Brcm { f } = Preset::BrcmOpt.mechanism(7, &att).unwrap_or(Mechanism::M3Zero) else {
            panic!()
        };
        assert_eq!(f, vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(Preset::M3Exposure.mechanism(3, &att).unwrap(), Mechanism::exposure(3, 0.05));
        assert!(Preset::BrcmStar.mechanism(4, &att).is_err());
    }
}
