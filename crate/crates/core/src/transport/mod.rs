//! Empirical optimal transport, Brownian reference paths and the
//! logarithmic modulus of continuity.

pub mod assignment;
mod brownian;
mod modulus;
mod wasserstein;

pub use brownian::sample_brownian;
pub use modulus::{ell, holder_modulus_statistic, omega, ModulusParams};
pub use wasserstein::{
    assignment_on_cost, cost_matrix, wasserstein_1d, wasserstein_assignment, wasserstein_brute_force,
    wasserstein_entropic, AbsoluteDifference, EmpiricalMeasure, EntropicResult, GridSup, Metric, Solver,
    TransportResult, ASSIGNMENT_CAP, BRUTE_FORCE_CAP, SINKHORN_TOLERANCE,
};
