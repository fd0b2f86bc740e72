//! Persistence and extinction in stochastic Lotka-Volterra food chains.
//!
//! A chain of `n` species (a prey and `n - 1` predators, each eating the
//! level below) is driven by environmental noise with covariance `Σ`, which
//! may be singular. The [`persistence`] module decides analytically which
//! species persist; [`sde`] and [`stats`] check the verdict by simulation.

pub mod chain;
mod dd;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod persistence;
pub mod rng;
pub mod sde;
pub mod stats;

pub use chain::{
    effective_rates, factor_noise, validate_chain, ApexPredator, EffectiveRates, FoodChain, Model,
    ModelConfig, NoiseModel, RawChain,
};
pub use equilibrium::{
    build_system, closed_form_c, closed_form_dn, equilibrium, forward_sweep, generic_solve,
    EquilibriumSolution, SweepCoefficients,
};
pub use error::{Error, Result};
pub use persistence::{
    apex_extension, classify, deterministic_limit_rates, invasion_rate, kappa_deterministic,
    kappa_tilde, lyapunov_at_boundary, ClassificationReport, Verdict,
};
pub use sde::{
    drift, simulate_ensemble, simulate_ode, simulate_path, simulate_stream, step_log_em,
    summarize_stream, SimConfig, Trajectory,
};
pub use stats::{
    log_growth_rate, lyapunov_estimate, occupation, time_average, EnsembleStats, OccupationMeasure,
    Region,
};
