//! Annealed sequential Monte Carlo (ASMC) for low-temperature Gibbs measures
//! `π_ε ∝ exp(-U/ε)` on `R^d` with multimodal energies `U`.
//!
//! The crate has two halves that deliberately never share code paths:
//!
//! * the **sampler** ([`smc`], driven by [`dynamics`] and [`schedule`]):
//!   particles are propagated by overdamped Langevin dynamics through a
//!   ladder of temperatures with linearly spaced inverse temperatures,
//!   reweighted by the ratio of unnormalized Gibbs densities, and
//!   multinomially resampled at every level;
//! * the **oracles** ([`oracle`]): grid quadrature for partition functions
//!   and well masses, a finite-difference eigensolver for the generator
//!   `L_ε f = -εΔf + ∇U·∇f`, and simulation-based transition-density
//!   diagnostics. These provide independent ground truth that the test
//!   suite measures the sampler against (see [`diagnostics`]).
//!
//! Energy landscapes live in [`potential`]; everything is reproducible via
//! counter-based RNG streams keyed by `(seed, level, particle)` ([`rng`]).

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod potential;
pub mod rng;
pub mod schedule;
pub mod smc;

pub use error::Error;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
