//! Ensemble experiments for the long-time scaling limits, and their reports.
//!
//! Every stochastic experiment runs `R` independent replicas (stream `r` of
//! the configured seed) and reduces them to per-time ensemble statistics,
//! each carried with its standard error.

mod config;
mod experiments;
mod report;

pub use config::{
    lattice_times, ExperimentConfig, ExperimentSection, MotionSection, OutputSection,
    SystemSection,
};
pub use experiments::{
    run_experiment, run_martingale_checks, run_mass_scaling, run_occupation_scaling,
    run_semigroup_expansion_study, ExperimentKind,
};
pub use report::{
    sanitize, summarize, Check, Condition, Estimate, ReportDocument, ScalingReport, Summary,
};
