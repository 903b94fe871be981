//! Monte Carlo for the time-changed process: stable subordinators, the
//! first passage Q(t), event-driven birth-death paths and estimators.

pub mod engine;
pub mod gillespie;
pub mod stable;
pub mod subordinator;

pub use engine::{
    mc_estimate, mc_estimate_with, path_rng, refinement_means, sample_gflbdp, sample_gflbdp_path,
    sample_gflbdp_with, MCEstimate, McKind, Model,
};
pub use gillespie::{
    gillespie_bounded, gillespie_lbdp, gillespie_lbdp_capped, path_integral, SamplePath,
    DEFAULT_MAX_JUMPS,
};
pub use stable::stable_increment;
pub use subordinator::{sample_q, simulate_b, step_size, GridConfig, StepRule, SubordinatorGrid};
