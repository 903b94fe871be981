//! Closed forms and series for the moments, extinction and state
//! probabilities, characteristic functions and the genetic model.

pub mod cf;
pub mod classical;
pub mod clock;
pub mod genetic;
pub mod moments;
pub mod params;
pub mod probabilities;

pub use cf::joint_cf_gflbdp;
pub use classical::{classical_extinction, classical_state_prob, joint_cf_classical, ComplexRoots};
pub use clock::{EvalOptions, Evaluated, Method, Route};
pub use genetic::{
    genetic_avg_type_h, genetic_avg_type_h_asymptotic, genetic_mean,
    genetic_time_changed_path_integral_mean,
};
pub use moments::{
    clock_mean, mean_gflbdp, mean_prabhakar_integral, mean_with, second_factorial_moment,
    variance_gflbdp, variance_with,
};
pub use params::{GeneticParams, PrabhakarIntegralParams, ProcessParams, RateRegime};
pub use probabilities::{
    asymptotic_extinction, asymptotic_state_prob, extinction_laplace, extinction_prob,
    extinction_with, state_laplace, state_prob, state_with, survival_interarrival, survival_with,
};
