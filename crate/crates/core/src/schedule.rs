//! Annealing schedules with linearly spaced inverse temperatures, and the
//! planner that turns `(η, δ, θ, α, ν)` plus the landscape's barrier ratio
//! into `(M, N, T)`.
//!
//! The planner constants `C_N`, `C_T`, `C_tem` are not explicit in the
//! underlying theory; they default to 1 and are meant to be calibrated
//! (see `diagnostics::calibrate` and the `calibrate` CLI subcommand),
//! which only rescales budgets and never changes how they grow.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A decreasing temperature ladder `η_1 > … > η_M = η` whose inverse
/// temperatures are equally spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub target: f64,
    pub start: f64,
    pub levels: Vec<f64>,
    /// Set when the schedule is degenerate (`M = 1` with `η ≠ η_1`).
    pub degenerate: bool,
}

impl AnnealSchedule {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Inverse-temperature increment `1/η_{k+1} - 1/η_k` (constant by
    /// construction).
    pub fn inverse_step(&self) -> f64 {
        if self.levels.len() < 2 {
            0.0
        } else {
            1.0 / self.levels[1] - 1.0 / self.levels[0]
        }
    }
}

/// Builds the `M`-level schedule from `η_1` down to `η` with linearly
/// spaced inverse temperatures; for `η_1 = 1` this is exactly
/// `η_k = (M-1)η / ((M-1)η + (k-1)(1-η))`.
pub fn build_schedule(target: f64, level_count: usize, start: f64) -> Result<AnnealSchedule> {
    if !(target > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if !(start > 0.0) {
        return Err(Error::invalid("eta1", "must be positive"));
    }
    if target > start {
        return Err(Error::invalid(
            "eta",
            format!("target η = {target} must not exceed η_1 = {start}"),
        ));
    }
    if level_count == 0 {
        return Err(Error::invalid("levels", "must be >= 1"));
    }
    if level_count == 1 {
        // Degenerate: a single level pinned at the target.
        return Ok(AnnealSchedule {
            target,
            start,
            levels: vec![target],
            degenerate: target != start,
        });
    }
    let beta_start = 1.0 / start;
    let beta_end = 1.0 / target;
    let m = level_count as f64;
    let levels: Vec<f64> = (0..level_count)
        .map(|k| {
            let beta = beta_start + (beta_end - beta_start) * k as f64 / (m - 1.0);
            1.0 / beta
        })
        .collect();
    let mut schedule = AnnealSchedule {
        target,
        start,
        levels,
        degenerate: false,
    };
    // Pin the endpoints exactly against roundoff.
    schedule.levels[0] = start;
    *schedule.levels.last_mut().unwrap() = target;
    Ok(schedule)
}

/// Temperature-independent planner constants (calibration targets).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConstants {
    pub c_n: f64,
    pub c_t: f64,
    pub c_tem: f64,
}

impl Default for PlannerConstants {
    fn default() -> Self {
        PlannerConstants {
            c_n: 1.0,
            c_t: 1.0,
            c_tem: 1.0,
        }
    }
}

/// A fully resolved run plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan {
    pub target: f64,
    pub level_count: usize,
    pub sample_size: usize,
    pub level_time: f64,
    pub delta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub nu: f64,
    pub barrier_ratio: f64,
    pub constants: PlannerConstants,
    /// Critical temperature `η_cr = C_K / log(C_tem·M·N/θ)`.
    pub eta_critical: f64,
    /// Smallest level index (1-based, ≥ 2) with `η_k ≤ η_cr`, or `M+1`
    /// when no level qualifies.
    pub critical_level: usize,
}

impl Plan {
    /// Total Langevin budget `M·N·T` (continuous time units).
    pub fn budget(&self) -> f64 {
        self.level_count as f64 * self.sample_size as f64 * self.level_time
    }

    /// Total step count at step size `dt`.
    pub fn step_count(&self, dt: f64) -> u128 {
        let per_particle = (self.level_time / dt).ceil() as u128;
        self.level_count as u128 * self.sample_size as u128 * per_particle
    }
}

/// Derives `(M, N, T)` from the guarantee's parameter formulas:
/// `M = ⌈1/(νη)⌉`, `N = ⌈C_N M² δ⁻² log(M/θ)⌉`,
/// `T = C_T((MN/θ)^{γ̂_r(1+α)}(log N + log(M/θ)) + log(1/δ) + 1/η)`,
/// plus the critical temperature `η_cr` and level `k_cr`.
///
/// `c_k` is the landscape constant `γ̂/(1+α)^{1/2}` of the potential the
/// plan is for.
#[allow(clippy::too_many_arguments)]
pub fn plan_parameters(
    target: f64,
    delta: f64,
    theta: f64,
    alpha: f64,
    nu: f64,
    barrier_ratio: f64,
    c_k: f64,
    constants: PlannerConstants,
) -> Result<Plan> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", "must be in (0,1)"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid("theta", "must be in (0,1)"));
    }
    if !(alpha > 0.0) || !(nu > 0.0) {
        return Err(Error::invalid("alpha/nu", "must be positive"));
    }
    if !(target > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if !(constants.c_n > 0.0 && constants.c_t > 0.0 && constants.c_tem > 0.0) {
        return Err(Error::invalid("constants", "must be positive"));
    }
    if !(barrier_ratio >= 1.0) {
        return Err(Error::invalid("barrier_ratio", "must be >= 1"));
    }

    let m = (1.0 / (nu * target)).ceil().max(1.0);
    let n = (constants.c_n * m * m / (delta * delta) * (m / theta).ln()).ceil();
    if !n.is_finite() || n > 1e15 {
        return Err(Error::invalid("plan", "sample size N overflows"));
    }
    let n = (n as usize).max(1);
    let mn_over_theta = m * n as f64 / theta;
    let t = constants.c_t
        * (mn_over_theta.powf(barrier_ratio * (1.0 + alpha))
            * ((n as f64).ln() + (m / theta).ln())
            + (1.0 / delta).ln()
            + 1.0 / target);
    if !t.is_finite() {
        return Err(Error::invalid("plan", "level time T overflows"));
    }

    let eta_critical = c_k / (constants.c_tem * m * n as f64 / theta).ln();
    let schedule = build_schedule(target, m as usize, 1.0)?;
    let critical_level = critical_level(&schedule, eta_critical);

    Ok(Plan {
        target,
        level_count: m as usize,
        sample_size: n,
        level_time: t,
        delta,
        theta,
        alpha,
        nu,
        barrier_ratio,
        constants,
        eta_critical,
        critical_level,
    })
}

/// Smallest `k ≥ 2` (1-based) with `η_k ≤ η_cr`; `M+1` when none
/// qualifies.
pub fn critical_level(schedule: &AnnealSchedule, eta_critical: f64) -> usize {
    let m = schedule.level_count();
    for (idx, &eta) in schedule.levels.iter().enumerate().skip(1) {
        if eta <= eta_critical {
            return idx + 1; // 1-based level index
        }
    }
    m + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_level_schedule_is_one_half_third() {
        let s = build_schedule(1.0 / 3.0, 3, 1.0).unwrap();
        assert_eq!(s.levels.len(), 3);
        assert!((s.levels[0] - 1.0).abs() < 1e-15);
        assert!((s.levels[1] - 0.5).abs() < 1e-15);
        assert!((s.levels[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(!s.degenerate);
    }

    #[test]
    fn inverse_temperatures_equally_spaced() {
        let s = build_schedule(0.05, 17, 1.0).unwrap();
        let d0 = 1.0 / s.levels[1] - 1.0 / s.levels[0];
        for w in s.levels.windows(2) {
            let d = 1.0 / w[1] - 1.0 / w[0];
            assert!((d - d0).abs() < 1e-12);
        }
        // monotone, endpoints exact
        for w in s.levels.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert_eq!(*s.levels.last().unwrap(), 0.05);
    }

    #[test]
    fn matches_closed_form_for_eta1_one() {
        let (eta, m) = (0.1, 7);
        let s = build_schedule(eta, m, 1.0).unwrap();
        for k in 1..=m {
            let expected = (m as f64 - 1.0) * eta
                / ((m as f64 - 1.0) * eta + (k as f64 - 1.0) * (1.0 - eta));
            assert!(
                (s.levels[k - 1] - expected).abs() < 1e-12,
                "level {k}: {} vs {}",
                s.levels[k - 1],
                expected
            );
        }
    }

    #[test]
    fn zero_length_anneal() {
        let s = build_schedule(0.7, 4, 0.7).unwrap();
        assert!(s.levels.iter().all(|&l| (l - 0.7).abs() < 1e-15));
    }

    #[test]
    fn degenerate_single_level_is_flagged() {
        let s = build_schedule(0.1, 1, 1.0).unwrap();
        assert_eq!(s.levels, vec![0.1]);
        assert!(s.degenerate);
    }

    #[test]
    fn target_above_start_rejected() {
        assert!(build_schedule(1.5, 3, 1.0).is_err());
    }

    #[test]
    fn planner_formulas() {
        // M = ⌈1/(νη)⌉
        let plan = plan_parameters(
            0.1,
            0.1,
            0.1,
            1.0,
            1.0,
            1.0,
            0.7,
            PlannerConstants::default(),
        )
        .unwrap();
        assert_eq!(plan.level_count, 10);
        // N = ⌈C_N M² δ⁻² log(M/θ)⌉ = ⌈100·100·log 100⌉ = 46052
        assert_eq!(plan.sample_size, 46052);
    }

    #[test]
    fn planner_satisfies_its_own_inequalities() {
        let c = PlannerConstants {
            c_n: 0.3,
            c_t: 0.02,
            c_tem: 2.0,
        };
        let (eta, delta, theta, alpha, nu, gr) = (0.05, 0.1, 0.1, 0.5, 1.0, 1.3);
        let plan = plan_parameters(eta, delta, theta, alpha, nu, gr, 0.6, c).unwrap();
        let m = plan.level_count as f64;
        let n = plan.sample_size as f64;
        assert!(m >= (1.0 / (nu * eta)).ceil());
        assert!(n >= c.c_n * m * m / (delta * delta) * (m / theta).ln());
        let t_min = c.c_t
            * ((m * n / theta).powf(gr * (1.0 + alpha)) * (n.ln() + (m / theta).ln())
                + (1.0 / delta).ln()
                + 1.0 / eta);
        assert!(plan.level_time >= t_min - 1e-9 * t_min);
    }

    #[test]
    fn planner_is_monotone_in_delta() {
        let base = plan_parameters(
            0.1,
            0.1,
            0.1,
            1.0,
            1.0,
            1.0,
            0.7,
            PlannerConstants::default(),
        )
        .unwrap();
        let tighter = plan_parameters(
            0.1,
            0.05,
            0.1,
            1.0,
            1.0,
            1.0,
            0.7,
            PlannerConstants::default(),
        )
        .unwrap();
        assert!(tighter.sample_size >= base.sample_size);
        assert!(tighter.level_time >= base.level_time);
    }

    #[test]
    fn critical_level_scan() {
        let s = build_schedule(1.0 / 3.0, 3, 1.0).unwrap();
        assert_eq!(critical_level(&s, 0.4), 3);
        assert_eq!(critical_level(&s, 0.6), 2); // η_2 = 1/2 ≤ 0.6
        assert_eq!(critical_level(&s, 0.2), 4); // sentinel M+1
    }

    #[test]
    fn lowering_eta_cr_never_decreases_k_cr() {
        let s = build_schedule(0.05, 20, 1.0).unwrap();
        let mut last = 0usize;
        for i in 0..40 {
            let eta_cr = 1.0 - i as f64 * 0.025;
            let k = critical_level(&s, eta_cr);
            assert!(k >= last);
            last = k;
        }
    }
}
