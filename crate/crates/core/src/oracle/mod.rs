//! Independent ground truth for the sampler: grid quadrature of Gibbs
//! integrals, a finite-difference eigensolver for the generator
//! `L_ε f = -εΔf + ∇U·∇f`, and simulation-based transition-density
//! diagnostics.
//!
//! Nothing in this module touches the SMC code path; every quantity is
//! computed from the potential alone so the test suite can measure the
//! sampler against it.

mod fixtures;
mod quadrature;
mod spectral;
mod transition;

pub use fixtures::{fixture_paths, load_gibbs, load_spectral, save_gibbs, save_spectral};
pub use quadrature::{
    gibbs_reference, grid_expectation, grid_expectation_piecewise, grid_partition_function,
    well_masses, GibbsReference, GridSpec,
};
pub use spectral::{
    eigenfunction_flatness, spectral_gap, spectral_solve, SpectralOptions, SpectralSummary,
};
pub use transition::{
    ou_diagonal_density, transition_density_diagonal, TransitionEstimate, TransitionOptions,
};
