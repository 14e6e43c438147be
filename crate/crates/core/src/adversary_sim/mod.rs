//! Adaptive adversaries and a reproducible Monte Carlo engine.
//!
//! An adversary picks, before every round, a mixture of its class's vertices
//! as a function of what it has seen. The engine plays catalog adversaries
//! against the optimal likelihood-ratio test, estimates both error
//! probabilities at several sample lengths and fits their exponential decay.
//! Every episode owns a counter-based random stream keyed by the experiment
//! seed and the episode's position, so results are identical across thread
//! counts.

mod engine;
mod probe;
mod rng;
mod strategy;

pub use engine::{
    episode_stream, fit_exponent, run_experiment, run_with_sources, simulate_statistics, EpisodeSource,
    ErrorRow, ExperimentPlan, ExperimentResult, ExponentFit, MIN_FIT_COUNT,
};
pub use probe::{supermartingale_probe, tilted_probe, ProbeResult};
pub use rng::episode_rng;
pub use strategy::{
    builtin_strategies, builtin_strategy, catalog_kinds, AdaptiveStrategy, HistoryRule, HistoryView, MarkovRule,
    MarkovStrategy, StrategyKind, Target, TestFamily,
};
