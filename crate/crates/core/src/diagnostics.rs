//! Measures sampler output against oracle ground truth: Monte Carlo
//! errors, coverage probabilities over seeded runs, the complexity
//! separation benchmark, and planner-constant calibration.

use crate::dynamics::{simulate_with_rng, Integrator, LangevinParams};
use crate::oracle::spectral_gap;
use crate::potential::{LandscapeSummary, Potential};
use crate::rng::{stream_rng, Purpose, StreamId};
use crate::schedule::{build_schedule, plan_parameters, Plan, PlannerConstants};
use crate::smc::{run_asmc, AsmcOptions, InitialEnsemble, ParticleEnsemble};
use crate::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// A bounded test function with its oscillation norm and oracle reference
/// value.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    /// `‖h‖_osc = sup h - inf h`.
    pub osc: f64,
    /// `∫ h dπ_η` from the oracle.
    pub reference: f64,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("osc", &self.osc)
            .field("reference", &self.reference)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        osc: f64,
        reference: f64,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            name: name.into(),
            osc,
            reference,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Indicator of basin `i` (energy-ordered minima).
    pub fn basin_indicator(
        pot: &Potential,
        ls: &LandscapeSummary,
        basin: usize,
        reference: f64,
    ) -> Self {
        let pot = pot.clone();
        let ls = ls.clone();
        TestFunction::new(
            format!("indicator_basin_{}", basin + 1),
            1.0,
            reference,
            move |x| match ls.basin_index(&pot, x) {
                Ok(b) if b == basin => 1.0,
                _ => 0.0,
            },
        )
    }

    /// `tanh(x₁)` with an oracle reference.
    pub fn tanh_x1(reference: f64) -> Self {
        TestFunction::new("tanh_x1", 2.0, reference, |x| x[0].tanh())
    }

    /// Indicator of the truncation set `K`.
    pub fn k_indicator(pot: &Potential, ls: &LandscapeSummary, reference: f64) -> Self {
        let pot = pot.clone();
        let ls = ls.clone();
        TestFunction::new("indicator_K", 1.0, reference, move |x| {
            match ls.in_k(&pot, x) {
                Ok(true) => 1.0,
                _ => 0.0,
            }
        })
    }
}

/// `|N⁻¹ Σ h(xⁱ) - reference|`.
pub fn mc_error(samples: &ParticleEnsemble, h: &TestFunction) -> f64 {
    let n = samples.len();
    let mean: f64 = (0..n).map(|i| h.eval(samples.point(i))).sum::<f64>() / n as f64;
    (mean - h.reference).abs()
}

/// Outcome of a repeated-seed coverage experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub function: String,
    pub n_runs: usize,
    pub seeds: Vec<u64>,
    /// Per-run `mc_error`.
    pub errors: Vec<f64>,
    /// Fraction of runs with error < `‖h‖_osc·δ`.
    pub success_fraction: f64,
    /// `1 - θ`.
    pub target: f64,
    /// One-sided binomial 95% allowance `1.645·√(θ(1-θ)/n)`.
    pub slack: f64,
    pub pass: bool,
}

/// Everything needed to launch one ASMC run repeatedly.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub n_particles: usize,
    pub level_time: f64,
    pub options: AsmcOptions,
    pub init: InitialEnsemble,
}

/// Runs `run_asmc` once per seed and reports the fraction of runs whose
/// error beats `‖h‖_osc·δ`, passing when that fraction reaches `1-θ`
/// minus the one-sided binomial 95% allowance for the finite run count.
#[allow(clippy::too_many_arguments)]
pub fn coverage_trial(
    pot: &Potential,
    schedule: &crate::schedule::AnnealSchedule,
    setup: &RunSetup,
    landscape: Option<&LandscapeSummary>,
    h: &TestFunction,
    delta: f64,
    theta: f64,
    seeds: &[u64],
) -> Result<CoverageReport> {
    if seeds.len() < 20 {
        return Err(Error::invalid("n_runs", "coverage needs at least 20 runs"));
    }
    let mut errors = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let (samples, _) = run_asmc(
            pot,
            schedule,
            setup.n_particles,
            setup.level_time,
            &setup.options,
            &setup.init,
            landscape,
            seed,
        )
        .map_err(|e| Error::RunAborted {
            run_id: seed,
            source: Box::new(e),
        })?;
        errors.push(mc_error(&samples, h));
    }
    let tolerance = h.osc * delta;
    let successes = errors.iter().filter(|&&e| e < tolerance).count();
    let success_fraction = successes as f64 / seeds.len() as f64;
    let slack = 1.645 * (theta * (1.0 - theta) / seeds.len() as f64).sqrt();
    let target = 1.0 - theta;
    Ok(CoverageReport {
        function: h.name.clone(),
        n_runs: seeds.len(),
        seeds: seeds.to_vec(),
        errors,
        success_fraction,
        target,
        slack,
        pass: success_fraction >= target - slack,
    })
}

/// One row of the complexity sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub level_count: usize,
    pub sample_size: usize,
    pub level_time: f64,
    /// `M·N·T`.
    pub budget: f64,
    /// Oracle mixing proxy `1/λ_2` at this temperature (1-d only).
    pub inverse_gap: Option<f64>,
    pub note: Option<String>,
}

/// Sweep result with the two fitted slopes.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log(M·N·T)` against `log(1/η)`.
    pub budget_slope: f64,
    /// Least-squares slope of `log(1/λ₂)` against `1/η` (≈ γ̂).
    pub rate_slope: f64,
}

/// Planner budgets and oracle mixing times across a temperature ladder.
#[allow(clippy::too_many_arguments)]
pub fn complexity_sweep(
    pot: &Potential,
    etas: &[f64],
    delta: f64,
    theta: f64,
    alpha: f64,
    nu: f64,
    barrier_ratio: f64,
    c_k: f64,
    constants: PlannerConstants,
) -> Result<SweepTable> {
    if etas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("etas", "must be strictly decreasing"));
    }
    let mut rows = Vec::new();
    for &eta in etas {
        match plan_parameters(eta, delta, theta, alpha, nu, barrier_ratio, c_k, constants) {
            Ok(plan) => {
                let inverse_gap = if pot.dim() == 1 {
                    Some(1.0 / spectral_gap(pot, eta, None)?)
                } else {
                    None
                };
                rows.push(SweepRow {
                    eta,
                    level_count: plan.level_count,
                    sample_size: plan.sample_size,
                    level_time: plan.level_time,
                    budget: plan.budget(),
                    inverse_gap,
                    note: None,
                });
            }
            Err(e) => rows.push(SweepRow {
                eta,
                level_count: 0,
                sample_size: 0,
                level_time: 0.0,
                budget: 0.0,
                inverse_gap: None,
                note: Some(format!("infeasible: {e}")),
            }),
        }
    }
    let feasible: Vec<&SweepRow> = rows.iter().filter(|r| r.note.is_none()).collect();
    let budget_slope = fit_slope(
        &feasible
            .iter()
            .map(|r| ((1.0 / r.eta).ln(), r.budget.ln()))
            .collect::<Vec<_>>(),
    );
    let rate_points: Vec<(f64, f64)> = feasible
        .iter()
        .filter_map(|r| r.inverse_gap.map(|ig| (1.0 / r.eta, ig.ln())))
        .collect();
    let rate_slope = fit_slope(&rate_points);
    Ok(SweepTable {
        rows,
        budget_slope,
        rate_slope,
    })
}

/// Least-squares slope through `(x, y)` pairs.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// A single long Langevin chain at the target temperature with the same
/// total step budget as an ASMC run; returns its `mc_error` on `h`. The
/// chain starts in one well, which is exactly the trap the annealed
/// sampler exists to escape.
pub fn baseline_direct_langevin(
    pot: &Potential,
    eta: f64,
    budget_steps: u64,
    dt: f64,
    seed: u64,
    start: &[f64],
    h: &TestFunction,
) -> Result<f64> {
    if budget_steps == 0 {
        return Ok((h.eval(start) - h.reference).abs());
    }
    let mut rng = stream_rng(StreamId::new(seed, 0, 0, Purpose::Diagnostics));
    let mut x = start.to_vec();
    // Subsample every ~10 steps once past a short burn-in.
    let subsample = 10u64;
    let burn_in = budget_steps / 10;
    let mut acc = 0.0f64;
    let mut count = 0u64;
    let params = LangevinParams {
        temperature: eta,
        total_time: dt,
        dt,
        stream: StreamId::new(seed, 0, 0, Purpose::Diagnostics),
        integrator: Integrator::Ula,
        guard_radius: 1e6,
    };
    for step in 0..budget_steps {
        x = simulate_with_rng(&x, pot, &params, &mut rng)?;
        if step >= burn_in && step % subsample == 0 {
            acc += h.eval(&x);
            count += 1;
        }
    }
    if count == 0 {
        return Ok((h.eval(&x) - h.reference).abs());
    }
    Ok((acc / count as f64 - h.reference).abs())
}

/// Calibration outcome: the scaled constants and the budgets they imply.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub constants: PlannerConstants,
    pub plan: Plan,
    pub probes: Vec<CalibrationProbe>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationProbe {
    pub c_n: f64,
    pub c_t: f64,
    pub success_fraction: f64,
    pub pass: bool,
}

/// Scales `C_T` and then `C_N` down by powers of two (bisecting the last
/// octave) until the empirical coverage test just passes at the cheapest
/// budget. The guarantee's formulas fix how budgets grow; this pins the
/// prefactors the theory leaves open.
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    pot: &Potential,
    ls: &LandscapeSummary,
    eta: f64,
    delta: f64,
    theta: f64,
    alpha: f64,
    nu: f64,
    options: &AsmcOptions,
    h: &TestFunction,
    probe_seeds: &[u64],
    start_constants: PlannerConstants,
) -> Result<Calibration> {
    let mut constants = start_constants;
    let mut probes = Vec::new();

    let passes = |constants: PlannerConstants, probes: &mut Vec<CalibrationProbe>| -> Result<bool> {
        let plan = plan_parameters(
            eta,
            delta,
            theta,
            alpha,
            nu,
            ls.barrier_ratio,
            ls.c_k,
            constants,
        )?;
        if plan.step_count(options.dt) > options.budget_cap {
            probes.push(CalibrationProbe {
                c_n: constants.c_n,
                c_t: constants.c_t,
                success_fraction: 0.0,
                pass: false,
            });
            return Ok(false);
        }
        let schedule = build_schedule(eta, plan.level_count, 1.0)?;
        let setup = RunSetup {
            n_particles: plan.sample_size,
            level_time: plan.level_time,
            options: *options,
            init: InitialEnsemble::UniformCube,
        };
        let report = coverage_trial(
            pot,
            &schedule,
            &setup,
            Some(ls),
            h,
            delta,
            theta,
            probe_seeds,
        )?;
        probes.push(CalibrationProbe {
            c_n: constants.c_n,
            c_t: constants.c_t,
            success_fraction: report.success_fraction,
            pass: report.pass,
        });
        Ok(report.pass)
    };

    // Make the starting point feasible first: shrink both constants until
    // the budget fits the cap.
    for _ in 0..200 {
        let plan = plan_parameters(
            eta,
            delta,
            theta,
            alpha,
            nu,
            ls.barrier_ratio,
            ls.c_k,
            constants,
        )?;
        if plan.step_count(options.dt) <= options.budget_cap {
            break;
        }
        constants.c_t *= 0.25;
        if plan.sample_size > 100_000 {
            constants.c_n *= 0.25;
        }
    }
    if !passes(constants, &mut probes)? {
        return Err(Error::invalid(
            "calibration",
            "coverage fails even at the largest feasible budget",
        ));
    }

    // Shrink C_T while coverage still passes, then bisect the last octave.
    let (mut lo_t, mut hi_t) = (constants.c_t, constants.c_t);
    loop {
        let cand = PlannerConstants {
            c_t: lo_t * 0.5,
            ..constants
        };
        if passes(cand, &mut probes)? {
            hi_t = lo_t * 0.5;
            lo_t = lo_t * 0.5;
            if lo_t < 1e-12 {
                break;
            }
        } else {
            lo_t *= 0.5; // lo_t now fails
            break;
        }
    }
    if lo_t < hi_t {
        for _ in 0..3 {
            let mid = (lo_t * hi_t).sqrt();
            let cand = PlannerConstants {
                c_t: mid,
                ..constants
            };
            if passes(cand, &mut probes)? {
                hi_t = mid;
            } else {
                lo_t = mid;
            }
        }
    }
    constants.c_t = hi_t;

    // Same descent for C_N.
    let (mut lo_n, mut hi_n) = (constants.c_n, constants.c_n);
    loop {
        let cand = PlannerConstants {
            c_n: lo_n * 0.5,
            ..constants
        };
        if passes(cand, &mut probes)? {
            hi_n = lo_n * 0.5;
            lo_n = lo_n * 0.5;
            if lo_n < 1e-12 {
                break;
            }
        } else {
            lo_n *= 0.5;
            break;
        }
    }
    if lo_n < hi_n {
        for _ in 0..3 {
            let mid = (lo_n * hi_n).sqrt();
            let cand = PlannerConstants {
                c_n: mid,
                ..constants
            };
            if passes(cand, &mut probes)? {
                hi_n = mid;
            } else {
                lo_n = mid;
            }
        }
    }
    constants.c_n = hi_n;

    let plan = plan_parameters(
        eta,
        delta,
        theta,
        alpha,
        nu,
        ls.barrier_ratio,
        ls.c_k,
        constants,
    )?;
    Ok(Calibration {
        constants,
        plan,
        probes,
    })
}
