//! Ulam discretization of the transfer operator, invariant densities and
//! the martingale–coboundary decomposition `ψ = m + χ∘F − χ`.

pub mod cache;
mod decomposition;
mod grid;
mod operator;

pub use decomposition::{
    conditional_variance_profile, observable_on_grid, raw_observable_on_grid, solve_coboundary, Decomposition, GridLayout, Residuals,
    DEFAULT_MAX_TERMS, DEFAULT_SERIES_TOLERANCE, MEAN_TOLERANCE,
};
pub use grid::{gauss_points, GriddedFunction};
pub use operator::{
    build_ulam, invariant_density, Transfer, UlamOperator, DENSITY_MAX_ITERATIONS, INDUCED_TAIL_FRACTION,
    MAX_INDUCED_BRANCHES, MIN_CELLS,
};
