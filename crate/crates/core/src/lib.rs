//! Content-creator competition games: reward mechanisms, welfare and
//! potential, better-response dynamics, mechanism search and brute-force
//! equilibrium oracles.

pub mod dynamics;
pub mod environments;
pub mod error;
pub mod fuzz;
pub mod mechanisms;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod presets;
pub mod welfare;

pub use dynamics::{sim_stra, sim_stra_final, DynamicsConfig, Trajectory, TrajectoryStep};
pub use environments::{
    ingest_embeddings, make_synthetic, make_tvn, EmbeddingIngestSpec, Scenario, ScenarioVariant,
    SyntheticSpec,
};
pub use error::{Error, Result};
pub use mechanisms::{shapley_mediator, Mechanism, PiecewiseConstant};
pub use model::{
    perturbed_attention_weights, score_profile, Action, ActionSpace, AttentionWeights, CostSpec,
    GameInstance, ScoreFunction, ScoreProfile, StrategyProfile, UserPopulation,
};
pub use optimizer::{optimize_brcm, project_to_polytope, OptimizerConfig, OptimizerOutcome};
pub use oracle::{enumerate_pne, tvn_closed_forms, EquilibriumReport, OracleOptions};
pub use presets::{run_preset, Preset, PresetRun};
pub use welfare::{
    creator_utilities, creator_utility, grouped_user_welfare, potential, social_welfare, user_welfare,
    welfare, WelfareReport,
};
