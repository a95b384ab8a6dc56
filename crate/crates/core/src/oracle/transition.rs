//! Simulation-based diagnostics for the Langevin transition density: a
//! kernel-density estimate of the diagonal `p_{ε,t}(x,x)`, its ratio to
//! the stationary density, and the a-priori bound
//! `C_p·e^{U(x)/ε}·(1 - e^{-(c/d)t})^{-d/2}` it is checked against.

use super::quadrature::grid_partition_function;
use crate::dynamics::{simulate, Integrator, LangevinParams};
use crate::potential::Potential;
use crate::rng::{Purpose, StreamId};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct TransitionOptions {
    pub dt: f64,
    pub seed: u64,
    /// Bandwidth override; `None` applies the Silverman rule per axis.
    pub bandwidth: Option<f64>,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        TransitionOptions {
            dt: 5e-3,
            seed: 71,
            bandwidth: None,
        }
    }
}

/// One diagonal transition-density measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionEstimate {
    pub eps: f64,
    pub t: f64,
    pub x: Vec<f64>,
    /// KDE estimate of `p_{ε,t}(x,x)`.
    pub density_at_start: f64,
    /// `π_ε(x)` from quadrature.
    pub stationary_density: f64,
    /// `p̂/π`.
    pub ratio: f64,
    /// Bound value with `C_p = 1` and the potential's declared Laplacian
    /// bound for `c` (reported for comparison, not asserted here).
    pub bound: f64,
    pub bandwidth: Vec<f64>,
    pub n_runs: usize,
}

/// Estimates `p_{ε,t}(x,x)` from `n_runs` independent simulations started
/// at `x`, via a Gaussian-product KDE evaluated back at `x`.
pub fn transition_density_diagonal(
    pot: &Potential,
    eps: f64,
    t: f64,
    x: &[f64],
    n_runs: usize,
    opts: &TransitionOptions,
) -> Result<TransitionEstimate> {
    let d = pot.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension { max: 2, got: d });
    }
    if n_runs < 10_000 {
        return Err(Error::invalid("n_runs", "must be at least 10^4"));
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }

    let endpoints: Result<Vec<Vec<f64>>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let params = LangevinParams {
                temperature: eps,
                total_time: t,
                dt: opts.dt,
                stream: StreamId::new(opts.seed, 0, i as u64, Purpose::Diagnostics),
                integrator: Integrator::Ula,
                guard_radius: 1e6,
            };
            simulate(x, pot, &params)
        })
        .collect();
    let endpoints = endpoints?;

    // Per-axis Silverman bandwidth on the endpoint sample.
    let mut bandwidth = Vec::with_capacity(d);
    for axis in 0..d {
        let h = match opts.bandwidth {
            Some(h) => h,
            None => {
                let mean: f64 =
                    endpoints.iter().map(|p| p[axis]).sum::<f64>() / n_runs as f64;
                let var: f64 = endpoints
                    .iter()
                    .map(|p| (p[axis] - mean) * (p[axis] - mean))
                    .sum::<f64>()
                    / (n_runs - 1) as f64;
                1.06 * var.sqrt() * (n_runs as f64).powf(-1.0 / (4.0 + d as f64))
            }
        };
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::DegenerateBandwidth(h));
        }
        bandwidth.push(h);
    }

    let norm: f64 = bandwidth
        .iter()
        .map(|h| 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt()))
        .product();
    let density_at_start = endpoints
        .iter()
        .map(|p| {
            let mut e = 0.0;
            for axis in 0..d {
                let z = (p[axis] - x[axis]) / bandwidth[axis];
                e -= 0.5 * z * z;
            }
            e.exp()
        })
        .sum::<f64>()
        / n_runs as f64
        * norm;

    let (z, _) = grid_partition_function(pot, eps, None)?;
    let stationary_density = (-pot.evaluate(x)? / eps).exp() / z;
    let ratio = density_at_start / stationary_density;

    let c = pot.laplacian_bound();
    let bound = (pot.evaluate(x)? / eps).exp()
        * (1.0 - (-(c / d as f64) * t).exp()).powf(-(d as f64) / 2.0);

    Ok(TransitionEstimate {
        eps,
        t,
        x: x.to_vec(),
        density_at_start,
        stationary_density,
        ratio,
        bound,
        bandwidth,
        n_runs,
    })
}

/// Exact diagonal transition density of the OU process with `U = ωx²/2`:
/// Gaussian with mean `x·e^{-ωt}` and variance `(ε/ω)(1 - e^{-2ωt})`,
/// evaluated at `x`. Test oracle.
pub fn ou_diagonal_density(omega: f64, eps: f64, t: f64, x: f64) -> f64 {
    let mean = x * (-omega * t).exp();
    let var = eps / omega * (1.0 - (-2.0 * omega * t).exp());
    let d = x - mean;
    (-d * d / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_samples_and_high_dimension() {
        let pot = Potential::quadratic(1.0);
        assert!(transition_density_diagonal(
            &pot,
            0.5,
            0.5,
            &[1.0],
            100,
            &TransitionOptions::default()
        )
        .is_err());
        let pot3 = Potential::gaussian_mixture(3, 3.0, 0.5, 0.5).unwrap();
        assert!(matches!(
            transition_density_diagonal(
                &pot3,
                0.5,
                0.5,
                &[0.0, 0.0, 0.0],
                20_000,
                &TransitionOptions::default()
            ),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn ou_kde_matches_analytic_density() {
        let pot = Potential::quadratic(1.0);
        let (eps, t, x) = (0.5, 0.5, 1.0);
        let est = transition_density_diagonal(
            &pot,
            eps,
            t,
            &[x],
            40_000,
            &TransitionOptions::default(),
        )
        .unwrap();
        let exact = ou_diagonal_density(1.0, eps, t, x);
        assert!(
            ((est.density_at_start - exact) / exact).abs() < 0.05,
            "KDE {} vs exact {exact}",
            est.density_at_start
        );
    }

    #[test]
    fn ratio_tends_to_one_at_stationarity() {
        let pot = Potential::quadratic(1.0);
        // t ≫ 1/λ₂ = 1 for OU
        let est = transition_density_diagonal(
            &pot,
            0.5,
            12.0,
            &[0.5],
            20_000,
            &TransitionOptions::default(),
        )
        .unwrap();
        assert!(
            est.ratio > 0.9 && est.ratio < 1.1,
            "ratio = {}",
            est.ratio
        );
    }
}
