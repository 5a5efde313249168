//! Distances, matchings, vectorizations and barycenters of persistence diagrams.

mod barycenter;
mod hungarian;
mod kernel;
mod landscape;
mod wasserstein;

pub use barycenter::{
    barycenter, barycenter_with, BarycenterResult, DEFAULT_MAX_ITERATIONS, DEFAULT_REL_TOL,
};
pub use hungarian::solve_assignment;
pub use kernel::w1_gaussian_kernel;
pub use landscape::{landscape, uniform_grid, LandscapeVector};
pub use wasserstein::{diagonal_distance, diagonal_projection, wasserstein, MatchPair, Matching};

pub(crate) use kernel::{check_sigma, kernel_from_distance};
pub(crate) use wasserstein::optimal_matching;
