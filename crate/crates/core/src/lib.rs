//! Statistics-only analysis of cell-free massive-MIMO surveillance.
//!
//! A set of multi-antenna monitoring nodes (MNs) either observe untrusted
//! transmitters or jam untrusted receivers. This crate evaluates the
//! closed-form monitoring success probability of every untrusted link,
//! assigns observe/jam modes greedily, and runs max-min jamming power control
//! by bisection over linear feasibility programs. A signal-level Monte-Carlo
//! oracle is included to check every closed form against brute force.
//!
//! The crate is `no_std` and only needs `alloc`; IO, configuration and the
//! experiment driver live in the `cfmon` crate.

#![no_std]

extern crate alloc;

pub mod channel;
mod error;
pub mod modes;
pub mod oracle;
pub mod powerctl;
pub mod sinr;

pub use channel::{
    compute_large_scale, estimation_quality, generate_topology, path_loss_db, sample_small_scale,
    wrap_distance, EstimationModel, LargeScale, Point, SimParams, SmallScaleDraw, Topology,
};
pub use error::{Error, Result};
pub use modes::{
    equal_power, greedy_assign, random_assign, GreedyStep, GreedyTrace, PowerRule, DEFAULT_E_MIN,
};
pub use oracle::{
    fourth_moment_check, mc_effective_noise_variance, mc_observe_terms, mc_success_probability,
    ObserveEstimates, OracleEstimate,
};
pub use powerctl::{
    bisection_power_control, bisection_with, build_feasibility_lp, build_weighted_lp,
    check_feasible, objective_value, tilde_xi, BisectionOptions, BisectionResult, BisectionTarget,
    Feasibility, FeasibilityLP, WitnessSource,
};
pub use sinr::{
    min_success_probability, observe_terms, sinr_observe, sinr_untrusted, success_probability, xi,
    ModeAssignment, MonitoringReport, ObserveTerms, PowerAllocation,
};

/// Row-of-rows dense matrix used for every per-link coefficient table.
pub type Grid = alloc::vec::Vec<alloc::vec::Vec<f64>>;
