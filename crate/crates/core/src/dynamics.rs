//! Time discretization of the overdamped Langevin diffusion
//! `dY = -∇U(Y) dt + √(2ε) dW` with reproducible per-particle noise.
//!
//! The default integrator is the plain Euler-Maruyama scheme (ULA). The
//! diffusion itself leaves `π_ε` invariant; ULA carries an O(Δt) stationary
//! bias which the test suite controls by step-halving checks. A
//! Metropolis-adjusted variant (MALA) is available where exactness
//! matters.

use crate::potential::Potential;
use crate::rng::{stream_rng, StreamId};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Unadjusted Langevin (Euler-Maruyama).
    Ula,
    /// Metropolis-adjusted Langevin.
    Mala,
}

/// Parameters of one Langevin simulation segment.
#[derive(Debug, Clone, Copy)]
pub struct LangevinParams {
    /// Temperature ε.
    pub temperature: f64,
    /// Total simulated time T.
    pub total_time: f64,
    /// Step size Δt; the final partial step uses the remaining time.
    pub dt: f64,
    /// Noise stream for this particle.
    pub stream: StreamId,
    pub integrator: Integrator,
    /// Abort when |x| exceeds this (blow-up means Δt is too large for the
    /// landscape's curvature).
    pub guard_radius: f64,
}

impl LangevinParams {
    pub fn validate(&self, pot: &Potential) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature", "must be >= 0"));
        }
        if !(self.total_time >= 0.0) {
            return Err(Error::invalid("total_time", "must be >= 0"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.total_time > 0.0 && self.dt > self.total_time {
            return Err(Error::invalid("dt", "must not exceed total_time"));
        }
        // Euler stability near the minima: Δt·λ_max(Hess U) < 2. The axis
        // second differences underestimate the top eigenvalue by at most
        // the dimension, which the safety margin absorbs.
        let mut curv = 0.0f64;
        for m in pot.minima() {
            let h = pot.fd_hessian(&m.point);
            for i in 0..pot.dim() {
                curv = curv.max(h[(i, i)].abs());
            }
        }
        if curv > 0.0 && self.dt * curv >= 2.0 {
            return Err(Error::invalid(
                "dt",
                format!(
                    "dt = {} unstable for local curvature {curv:.3} (need dt < {:.4})",
                    self.dt,
                    2.0 / curv
                ),
            ));
        }
        Ok(())
    }
}

/// One Euler-Maruyama update `x - ∇U(x)·Δt + √(2εΔt)·ξ`.
pub fn langevin_step(
    x: &[f64],
    pot: &Potential,
    temperature: f64,
    dt: f64,
    xi: &[f64],
) -> Result<Vec<f64>> {
    if xi.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: xi.len(),
        });
    }
    let g = pot.gradient(x)?;
    let noise_scale = (2.0 * temperature * dt).sqrt();
    let next: Vec<f64> = x
        .iter()
        .zip(&g)
        .zip(xi)
        .map(|((xi_, gi), ni)| xi_ - gi * dt + noise_scale * ni)
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(next)
}

/// Simulates the diffusion for time `T`, drawing all randomness from the
/// stream named in `params`. Deterministic in `(x0, params)`.
pub fn simulate(x0: &[f64], pot: &Potential, params: &LangevinParams) -> Result<Vec<f64>> {
    params.validate(pot)?;
    let mut rng = stream_rng(params.stream);
    simulate_with_rng(x0, pot, params, &mut rng)
}

/// Same as [`simulate`] but with a caller-managed generator, so several
/// segments can share one stream (used by the single-chain baseline).
pub fn simulate_with_rng(
    x0: &[f64],
    pot: &Potential,
    params: &LangevinParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if x0.len() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            got: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut remaining = params.total_time;
    let mut step_count = 0usize;
    while remaining > 0.0 {
        let dt = params.dt.min(remaining);
        x = match params.integrator {
            Integrator::Ula => {
                let xi: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
                langevin_step(&x, pot, params.temperature, dt, &xi)?
            }
            Integrator::Mala => mala_step(&x, pot, params.temperature, dt, rng)?,
        };
        step_count += 1;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > params.guard_radius * params.guard_radius {
            return Err(Error::Diverged {
                guard_radius: params.guard_radius,
                step: step_count,
            });
        }
        remaining -= dt;
    }
    Ok(x)
}

/// Metropolis-adjusted step: Euler proposal plus accept/reject against the
/// exact Gibbs density, which removes the discretization bias of ULA.
fn mala_step(
    x: &[f64],
    pot: &Potential,
    temperature: f64,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let xi: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    let proposal = langevin_step(x, pot, temperature, dt, &xi)?;
    // At zero temperature the proposal is plain gradient descent.
    if temperature == 0.0 {
        return Ok(proposal);
    }
    let log_q = |from: &[f64], to: &[f64]| -> Result<f64> {
        let g = pot.gradient(from)?;
        let var = 2.0 * temperature * dt;
        let mut s = 0.0;
        for i in 0..from.len() {
            let mean = from[i] - g[i] * dt;
            let d = to[i] - mean;
            s -= d * d / (2.0 * var);
        }
        Ok(s)
    };
    let log_ratio = (pot.evaluate(x)? - pot.evaluate(&proposal)?) / temperature
        + log_q(&proposal, x)?
        - log_q(x, &proposal)?;
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        Ok(proposal)
    } else {
        Ok(x.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    fn params(eps: f64, t: f64, dt: f64, seed: u64, particle: u64) -> LangevinParams {
        LangevinParams {
            temperature: eps,
            total_time: t,
            dt,
            stream: StreamId::new(seed, 0, particle, Purpose::Propagation),
            integrator: Integrator::Ula,
            guard_radius: 1e6,
        }
    }

    #[test]
    fn zero_noise_fixed_point() {
        let pot = Potential::quartic();
        let x = vec![1.0];
        let next = langevin_step(&x, &pot, 0.3, 0.01, &[0.0]).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn quadratic_step_formula() {
        // U = x²/2: one step from 1 with Δt=0.1 and no noise gives 0.9.
        let pot = Potential::quadratic(1.0);
        let next = langevin_step(&[1.0], &pot, 0.0, 0.1, &[0.0]).unwrap();
        assert!((next[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_descends_to_minimum() {
        let pot = Potential::quartic();
        let p = params(0.0, 50.0, 0.01, 1, 0);
        let end = simulate(&[0.5], &pot, &p).unwrap();
        assert!((end[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_time_returns_start() {
        let pot = Potential::quartic();
        let p = params(0.1, 0.0, 0.01, 1, 0);
        assert_eq!(simulate(&[0.3], &pot, &p).unwrap(), vec![0.3]);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let pot = Potential::quartic();
        let p = params(0.2, 3.0, 0.01, 42, 7);
        let a = simulate(&[0.5], &pot, &p).unwrap();
        let b = simulate(&[0.5], &pot, &p).unwrap();
        assert_eq!(a, b);
        // different particle stream differs
        let p2 = params(0.2, 3.0, 0.01, 42, 8);
        assert_ne!(a, simulate(&[0.5], &pot, &p2).unwrap());
    }

    #[test]
    fn partial_final_step_covers_total_time() {
        // T = 0.25, Δt = 0.1: steps 0.1, 0.1, 0.05. Against ε=0 quadratic
        // flow the exact product is (1-0.1)²·(1-0.05).
        let pot = Potential::quadratic(1.0);
        let p = params(0.0, 0.25, 0.1, 0, 0);
        let end = simulate(&[1.0], &pot, &p).unwrap();
        assert!((end[0] - 0.9 * 0.9 * 0.95).abs() < 1e-12);
    }

    #[test]
    fn ou_stationary_variance() {
        // For U = ωx²/2 the stationary law is N(0, ε/ω). ULA at step Δt has
        // second moment ε/ω · 1/(1 - ωΔt/2) exactly; with Δt = 0.01 the
        // bias is ~0.5%. 10^5 independent runs pin the moment to ~0.45%
        // (3 standard errors).
        let omega = 2.0;
        let eps = 0.5;
        let pot = Potential::quadratic(omega);
        let n = 100_000;
        let t = 6.0; // ≫ 1/ω, forgets the start
        use rayon::prelude::*;
        let second_moment: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let p = params(eps, t, 0.01, 9, i as u64);
                let x = simulate(&[0.0], &pot, &p).unwrap();
                x[0] * x[0]
            })
            .sum::<f64>()
            / n as f64;
        let target = eps / omega;
        let se = (2.0f64).sqrt() * target / (n as f64).sqrt(); // Var(x²)=2σ⁴ for Gaussian
        let bias_allowance = target * omega * 0.01; // O(Δt)
        assert!(
            (second_moment - target).abs() < 3.0 * se + bias_allowance,
            "moment {second_moment} vs {target} (3se = {:.2e})",
            3.0 * se
        );
    }

    #[test]
    fn halving_dt_keeps_ensemble_statistics() {
        // Weak-convergence smoke test: ensemble second moment moves by less
        // than statistical error when Δt is halved.
        let pot = Potential::quadratic(1.0);
        let eps = 0.5;
        let n = 40_000;
        use rayon::prelude::*;
        let moment = |dt: f64, seed: u64| -> f64 {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let p = params(eps, 4.0, dt, seed, i as u64);
                    let x = simulate(&[0.2], &pot, &p).unwrap();
                    x[0] * x[0]
                })
                .sum::<f64>()
                / n as f64
        };
        let coarse = moment(0.02, 3);
        let fine = moment(0.01, 4);
        let se = (2.0f64).sqrt() * eps / (n as f64).sqrt();
        assert!(
            (coarse - fine).abs() < 4.0 * se + 0.02 * eps,
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn guard_radius_catches_blowup() {
        let pot = Potential::quartic();
        let mut p = params(0.1, 10.0, 0.01, 1, 0);
        p.guard_radius = 2.0;
        p.temperature = 5.0; // hot enough to leave |x| ≤ 2 quickly
        let err = simulate(&[0.0], &pot, &p).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn unstable_dt_is_rejected() {
        let pot = Potential::quartic(); // curvature 8 at the minima
        let p = params(0.1, 1.0, 0.3, 1, 0);
        assert!(matches!(
            simulate(&[0.5], &pot, &p),
            Err(Error::InvalidParameter { name: "dt", .. })
        ));
    }

    #[test]
    fn mala_matches_exact_gaussian_moments() {
        // MALA has no stationary bias; check the second moment against ε/ω
        // without a Δt allowance.
        let omega = 1.0;
        let eps = 0.4;
        let pot = Potential::quadratic(omega);
        let n = 60_000;
        use rayon::prelude::*;
        let second_moment: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut p = params(eps, 6.0, 0.05, 17, i as u64);
                p.integrator = Integrator::Mala;
                let x = simulate(&[0.0], &pot, &p).unwrap();
                x[0] * x[0]
            })
            .sum::<f64>()
            / n as f64;
        let target = eps / omega;
        let se = (2.0f64).sqrt() * target / (n as f64).sqrt();
        assert!(
            (second_moment - target).abs() < 4.0 * se,
            "moment {second_moment} vs {target}"
        );
    }
}
