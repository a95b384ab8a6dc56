//! The annealed SMC driver: per-level Langevin propagation, resampling
//! weights from the ratio of unnormalized Gibbs densities, multinomial
//! resampling at every level, and the final sample emission.
//!
//! Weights are kept in log space. For the transition from `η_k` to
//! `η_{k+1}` the unnormalized-density ratio is
//! `log r̃_k(x) = -(1/η_{k+1} - 1/η_k)·U(x)`; the normalization constants
//! cancel inside the resampling probabilities, which is why they never
//! need to be computed at runtime.

use crate::dynamics::{simulate, Integrator, LangevinParams};
use crate::potential::{LandscapeSummary, Potential};
use crate::rng::{stream_rng, Purpose, StreamId};
use crate::schedule::AnnealSchedule;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The particle population at one annealing level.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    /// 1-based level index.
    pub level: u32,
    pub dim: usize,
    /// Flat `N·d` array of positions.
    pub positions: Vec<f64>,
    /// `log r̃` of the pending transition; zeroed by resampling.
    pub log_weights: Vec<f64>,
    /// Stream family all of this run's randomness is keyed under.
    pub seed: u64,
    /// Per-particle membership in the truncation set `K` (empty when no
    /// landscape was supplied).
    pub in_k: Vec<bool>,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }
}

/// Per-level trace record. `wall_ms` is timing metadata and deliberately
/// excluded from equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    pub eta: f64,
    pub ess: f64,
    /// Fraction of particles in each basin (energy-ordered minima); empty
    /// when no landscape was supplied.
    pub frac_basin: Vec<f64>,
    pub frac_in_k: f64,
    /// Histogram of multinomial selection counts: entry `j` is the number
    /// of particles that were chosen `j` times (all zeros at the last
    /// level, which does not resample).
    pub count_histogram: Vec<u32>,
    pub resample_max_count: u32,
    pub wall_ms: u64,
}

impl PartialEq for LevelRecord {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.eta == other.eta
            && self.ess == other.ess
            && self.frac_basin == other.frac_basin
            && (self.frac_in_k == other.frac_in_k
                || (self.frac_in_k.is_nan() && other.frac_in_k.is_nan()))
            && self.count_histogram == other.count_histogram
            && self.resample_max_count == other.resample_max_count
    }
}

/// Full per-run trace: one record per level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub levels: Vec<LevelRecord>,
}

/// Runtime options orthogonal to the plan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsmcOptions {
    pub dt: f64,
    pub integrator: Integrator,
    pub guard_radius: f64,
    /// Cap on `N·M·⌈T/Δt⌉`.
    pub budget_cap: u128,
}

impl Default for AsmcOptions {
    fn default() -> Self {
        AsmcOptions {
            dt: 1e-2,
            integrator: Integrator::Ula,
            guard_radius: 1e6,
            budget_cap: 10_000_000_000,
        }
    }
}

/// How the level-1 population is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialEnsemble {
    /// N i.i.d. uniform points in the cube `[-1,1]^d`.
    UniformCube,
    /// All particles at the origin.
    DeltaOrigin,
    /// Caller-supplied points (flat `N·d`).
    Points(Vec<f64>),
}

/// `log r̃_k(x) = -(1/η_{k+1} - 1/η_k)·U(x)` for the transition
/// `η_k → η_{k+1}` (requires `η_{k+1} < η_k`).
pub fn log_weight(pot: &Potential, eta_k: f64, eta_next: f64, x: &[f64]) -> Result<f64> {
    if eta_next >= eta_k {
        return Err(Error::invalid(
            "eta_next",
            format!("transition must cool: η_next = {eta_next} >= η_k = {eta_k}"),
        ));
    }
    let u = pot.evaluate(x)?;
    Ok(-(1.0 / eta_next - 1.0 / eta_k) * u)
}

/// Effective sample size `(Σw)²/Σw²` of the normalized weights; lies in
/// `[1, N]`. Uses max-subtraction, so any common shift of the log weights
/// cancels.
pub fn effective_sample_size(log_weights: &[f64]) -> f64 {
    let max = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &lw in log_weights {
        let w = (lw - max).exp();
        sum += w;
        sum_sq += w * w;
    }
    sum * sum / sum_sq
}

/// Normalized resampling probabilities from log weights
/// (max-subtracted softmax).
pub fn resampling_probabilities(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::WeightCollapse);
    }
    let weights: Vec<f64> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Draws `N` independent ancestors from the multinomial distribution with
/// probabilities `r̃(x^j)/Σ r̃(x^n)` and returns the refreshed ensemble
/// (weights zeroed) together with the per-ancestor selection counts.
pub fn resample_multinomial(
    ens: &ParticleEnsemble,
    rng: &mut ChaCha8Rng,
) -> Result<(ParticleEnsemble, Vec<u32>)> {
    let n = ens.len();
    let probs = resampling_probabilities(&ens.log_weights)?;
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    *cdf.last_mut().unwrap() = 1.0;

    let mut counts = vec![0u32; n];
    let mut indices = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let idx = cdf.partition_point(|&c| c < u).min(n - 1);
        counts[idx] += 1;
        indices.push(idx);
    }
    let mut positions = Vec::with_capacity(ens.positions.len());
    for &idx in &indices {
        positions.extend_from_slice(ens.point(idx));
    }
    Ok((
        ParticleEnsemble {
            level: ens.level + 1,
            dim: ens.dim,
            positions,
            log_weights: vec![0.0; n],
            seed: ens.seed,
            in_k: Vec::new(),
        },
        counts,
    ))
}

/// Systematic resampling (single stratified uniform). Offered for
/// benchmarking only; the analyzed algorithm and all acceptance runs use
/// the multinomial scheme.
pub fn resample_systematic(
    ens: &ParticleEnsemble,
    rng: &mut ChaCha8Rng,
) -> Result<(ParticleEnsemble, Vec<u32>)> {
    let n = ens.len();
    let probs = resampling_probabilities(&ens.log_weights)?;
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut counts = vec![0u32; n];
    let mut positions = Vec::with_capacity(ens.positions.len());
    let mut acc = 0.0;
    let mut j = 0usize;
    for i in 0..n {
        let u = u0 + i as f64 / n as f64;
        while acc + probs[j] < u && j + 1 < n {
            acc += probs[j];
            j += 1;
        }
        counts[j] += 1;
        positions.extend_from_slice(ens.point(j));
    }
    Ok((
        ParticleEnsemble {
            level: ens.level + 1,
            dim: ens.dim,
            positions,
            log_weights: vec![0.0; n],
            seed: ens.seed,
            in_k: Vec::new(),
        },
        counts,
    ))
}

/// Runs the full annealed SMC loop: for `k = 1…M-1` simulate every
/// particle at `η_k` for time `T`, weight towards `η_{k+1}`, resample;
/// then simulate at `η_M` and return the final positions with the trace.
/// Deterministic given the seed, independent of worker count.
#[allow(clippy::too_many_arguments)]
pub fn run_asmc(
    pot: &Potential,
    schedule: &AnnealSchedule,
    n_particles: usize,
    level_time: f64,
    options: &AsmcOptions,
    init: &InitialEnsemble,
    landscape: Option<&LandscapeSummary>,
    seed: u64,
) -> Result<(ParticleEnsemble, RunTrace)> {
    if n_particles == 0 {
        return Err(Error::invalid("n_particles", "must be >= 1"));
    }
    if !(level_time > 0.0) {
        return Err(Error::invalid("level_time", "must be positive"));
    }
    let m = schedule.level_count();
    let steps_per_segment = (level_time / options.dt).ceil() as u128;
    let total_steps = steps_per_segment * n_particles as u128 * m as u128;
    if total_steps > options.budget_cap {
        return Err(Error::BudgetExceeded {
            steps: total_steps,
            cap: options.budget_cap,
        });
    }

    let dim = pot.dim();
    let positions = initial_positions(pot, n_particles, init, seed)?;

    // Initial points must satisfy the bounded-start assumption.
    let c_ini = pot.initial_energy_bound();
    for i in 0..n_particles {
        let u = pot.evaluate(&positions[i * dim..(i + 1) * dim])?;
        if u > c_ini + 1e-9 {
            return Err(Error::invalid(
                "init",
                format!("initial point {i} has U = {u:.4} > C_ini = {c_ini:.4}"),
            ));
        }
    }

    let mut ens = ParticleEnsemble {
        level: 1,
        dim,
        positions,
        log_weights: vec![0.0; n_particles],
        seed,
        in_k: Vec::new(),
    };
    let mut trace = RunTrace::default();

    for k in 1..=m {
        let eta_k = schedule.levels[k - 1];
        let started = std::time::Instant::now();

        // Propagate. Each particle owns stream (seed, k, i): results are
        // independent of scheduling.
        let propagated: Result<Vec<Vec<f64>>> = (0..n_particles)
            .into_par_iter()
            .map(|i| {
                let params = LangevinParams {
                    temperature: eta_k,
                    total_time: level_time,
                    dt: options.dt,
                    stream: StreamId::new(seed, k as u32, i as u64, Purpose::Propagation),
                    integrator: options.integrator,
                    guard_radius: options.guard_radius,
                };
                simulate(ens.point(i), pot, &params)
            })
            .collect();
        let propagated = propagated?;
        for (i, p) in propagated.iter().enumerate() {
            ens.positions[i * dim..(i + 1) * dim].copy_from_slice(p);
        }

        // Landscape bookkeeping on the post-move population.
        let (frac_basin, frac_in_k, in_k) = match landscape {
            Some(ls) => {
                let mut basin_counts = vec![0usize; ls.minima.len()];
                let mut in_k = Vec::with_capacity(n_particles);
                for i in 0..n_particles {
                    let x = ens.point(i);
                    if let Ok(b) = ls.basin_index(pot, x) {
                        basin_counts[b] += 1;
                    }
                    in_k.push(ls.in_k(pot, x)?);
                }
                let frac: Vec<f64> = basin_counts
                    .iter()
                    .map(|&c| c as f64 / n_particles as f64)
                    .collect();
                let fk = in_k.iter().filter(|&&b| b).count() as f64 / n_particles as f64;
                (frac, fk, in_k)
            }
            None => (Vec::new(), f64::NAN, Vec::new()),
        };
        ens.in_k = in_k;

        if k < m {
            let eta_next = schedule.levels[k];
            for i in 0..n_particles {
                ens.log_weights[i] = log_weight(pot, eta_k, eta_next, ens.point(i))?;
            }
            let ess = effective_sample_size(&ens.log_weights);
            let mut rng = stream_rng(StreamId::new(seed, k as u32, 0, Purpose::Resampling));
            let (next, counts) = resample_multinomial(&ens, &mut rng)?;
            let max_count = counts.iter().cloned().max().unwrap_or(0);
            trace.levels.push(LevelRecord {
                level: k as u32,
                eta: eta_k,
                ess,
                frac_basin,
                frac_in_k,
                count_histogram: histogram(&counts),
                resample_max_count: max_count,
                wall_ms: started.elapsed().as_millis() as u64,
            });
            ens = next;
        } else {
            trace.levels.push(LevelRecord {
                level: k as u32,
                eta: eta_k,
                ess: n_particles as f64,
                frac_basin,
                frac_in_k,
                count_histogram: Vec::new(),
                resample_max_count: 0,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
    }

    Ok((ens, trace))
}

fn initial_positions(
    pot: &Potential,
    n: usize,
    init: &InitialEnsemble,
    seed: u64,
) -> Result<Vec<f64>> {
    let dim = pot.dim();
    match init {
        InitialEnsemble::UniformCube => {
            let mut positions = Vec::with_capacity(n * dim);
            for i in 0..n {
                let mut rng = stream_rng(StreamId::new(seed, 0, i as u64, Purpose::Init));
                for _ in 0..dim {
                    positions.push(rng.random_range(-1.0..1.0));
                }
            }
            Ok(positions)
        }
        InitialEnsemble::DeltaOrigin => Ok(vec![0.0; n * dim]),
        InitialEnsemble::Points(points) => {
            if points.len() != n * dim {
                return Err(Error::invalid(
                    "init",
                    format!("expected {} coordinates, got {}", n * dim, points.len()),
                ));
            }
            Ok(points.clone())
        }
    }
}

fn histogram(counts: &[u32]) -> Vec<u32> {
    let max = counts.iter().cloned().max().unwrap_or(0) as usize;
    let mut hist = vec![0u32; max + 1];
    for &c in counts {
        hist[c as usize] += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::landscape_summary;
    use crate::schedule::build_schedule;

    #[test]
    fn log_weight_values() {
        let pot = Potential::quartic();
        // U = 0 at the minimum → weight 1
        assert_eq!(log_weight(&pot, 0.5, 1.0 / 3.0, &[1.0]).unwrap(), 0.0);
        // η_k = 1/2, η_{k+1} = 1/3, U = 1 → -(3-2)·1 = -1
        let lw = log_weight(&pot, 0.5, 1.0 / 3.0, &[0.0]).unwrap();
        assert!((lw + 1.0).abs() < 1e-12);
        // heating is rejected
        assert!(log_weight(&pot, 0.3, 0.5, &[0.0]).is_err());
    }

    #[test]
    fn ess_values() {
        let n = 64;
        assert!((effective_sample_size(&vec![0.7; n]) - n as f64).abs() < 1e-9);
        let mut one_alive = vec![f64::NEG_INFINITY; n];
        one_alive[3] = -2.0;
        assert!((effective_sample_size(&one_alive) - 1.0).abs() < 1e-12);
        // probabilities (0.8, 0.2): ESS = 1/(0.64+0.04) = 1.470588…
        let lw = [0.8f64.ln(), 0.2f64.ln()];
        assert!((effective_sample_size(&lw) - 1.0 / 0.68).abs() < 1e-9);
    }

    #[test]
    fn shifting_log_weights_preserves_probabilities() {
        let lw = [-1.0, -0.5, -2.0, 0.3];
        let shifted: Vec<f64> = lw.iter().map(|x| x + 123.456).collect();
        let p1 = resampling_probabilities(&lw).unwrap();
        let p2 = resampling_probabilities(&shifted).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn toy_ensemble(log_weights: Vec<f64>, positions: Vec<f64>) -> ParticleEnsemble {
        ParticleEnsemble {
            level: 1,
            dim: 1,
            positions,
            log_weights,
            seed: 0,
            in_k: Vec::new(),
        }
    }

    #[test]
    fn degenerate_mass_resamples_to_single_ancestor() {
        let ens = toy_ensemble(
            vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![7.0, 8.0, 9.0],
        );
        let mut rng = stream_rng(StreamId::new(1, 1, 0, Purpose::Resampling));
        let (next, counts) = resample_multinomial(&ens, &mut rng).unwrap();
        assert_eq!(counts, vec![3, 0, 0]);
        assert!(next.positions.iter().all(|&x| x == 7.0));
        assert!(next.log_weights.iter().all(|&w| w == 0.0));
        assert_eq!(next.level, 2);
    }

    #[test]
    fn total_collapse_is_an_error() {
        let ens = toy_ensemble(vec![f64::NEG_INFINITY; 3], vec![0.0; 3]);
        let mut rng = stream_rng(StreamId::new(1, 1, 0, Purpose::Resampling));
        assert!(matches!(
            resample_multinomial(&ens, &mut rng),
            Err(Error::WeightCollapse)
        ));
    }

    #[test]
    fn multinomial_counts_match_expectation() {
        // probabilities (0.5, 0.3, 0.2) over 10^5 draws: each count within
        // 3σ of the multinomial mean.
        let probs = [0.5, 0.3, 0.2];
        let n = 100_000usize;
        let lw: Vec<f64> = probs.iter().map(|p: &f64| p.ln()).collect();
        let mut big = toy_ensemble(lw, vec![0.0, 1.0, 2.0]);
        // resample_multinomial draws ensemble-size many indices, so blow up
        // the ensemble to n particles with the same three weights cycled.
        big.log_weights = (0..n).map(|i| probs[i % 3].ln()).collect();
        big.positions = (0..n).map(|i| (i % 3) as f64).collect();
        let mut rng = stream_rng(StreamId::new(3, 1, 0, Purpose::Resampling));
        let (next, _) = resample_multinomial(&big, &mut rng).unwrap();
        // per-category totals
        let total: f64 = probs.iter().map(|p| p * (n / 3) as f64).sum();
        for (cat, p) in probs.iter().enumerate() {
            let expect = p * (n / 3) as f64 / total * n as f64;
            let var = n as f64 * (expect / n as f64) * (1.0 - expect / n as f64);
            let got = next
                .positions
                .iter()
                .filter(|&&x| x == cat as f64)
                .count() as f64;
            assert!(
                (got - expect).abs() < 3.0 * var.sqrt(),
                "category {cat}: got {got}, expected {expect} ± {:.1}",
                3.0 * var.sqrt()
            );
        }
    }

    #[test]
    fn run_is_bit_identical_under_rerun() {
        let pot = Potential::quartic();
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let schedule = build_schedule(0.25, 4, 1.0).unwrap();
        let opts = AsmcOptions::default();
        let run = || {
            run_asmc(
                &pot,
                &schedule,
                64,
                1.0,
                &opts,
                &InitialEnsemble::UniformCube,
                Some(&ls),
                2024,
            )
            .unwrap()
        };
        let (a, ta) = run();
        let (b, tb) = run();
        assert_eq!(a.positions, b.positions);
        assert_eq!(ta, tb);
    }

    #[test]
    fn single_level_run_equals_direct_langevin() {
        // M = 1 degenerates to direct simulation at η for time T.
        let pot = Potential::quartic();
        let schedule = build_schedule(0.3, 1, 0.3).unwrap();
        let opts = AsmcOptions::default();
        let n = 16;
        let (ens, trace) = run_asmc(
            &pot,
            &schedule,
            n,
            0.7,
            &opts,
            &InitialEnsemble::DeltaOrigin,
            None,
            5,
        )
        .unwrap();
        assert_eq!(trace.levels.len(), 1);
        for i in 0..n {
            let params = LangevinParams {
                temperature: 0.3,
                total_time: 0.7,
                dt: opts.dt,
                stream: StreamId::new(5, 1, i as u64, Purpose::Propagation),
                integrator: Integrator::Ula,
                guard_radius: opts.guard_radius,
            };
            let direct = simulate(&[0.0], &pot, &params).unwrap();
            assert_eq!(ens.point(i), direct.as_slice());
        }
    }

    #[test]
    fn budget_cap_is_enforced() {
        let pot = Potential::quartic();
        let schedule = build_schedule(0.25, 4, 1.0).unwrap();
        let opts = AsmcOptions {
            budget_cap: 100,
            ..AsmcOptions::default()
        };
        assert!(matches!(
            run_asmc(
                &pot,
                &schedule,
                64,
                1.0,
                &opts,
                &InitialEnsemble::UniformCube,
                None,
                1,
            ),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn trace_histogram_counts_sum_to_n() {
        let pot = Potential::quartic();
        let schedule = build_schedule(0.25, 4, 1.0).unwrap();
        let n = 128;
        let (_, trace) = run_asmc(
            &pot,
            &schedule,
            n,
            0.5,
            &AsmcOptions::default(),
            &InitialEnsemble::UniformCube,
            None,
            9,
        )
        .unwrap();
        assert_eq!(trace.levels.len(), 4);
        for rec in &trace.levels[..3] {
            let selected: u32 = rec
                .count_histogram
                .iter()
                .enumerate()
                .map(|(times, &cnt)| times as u32 * cnt)
                .sum();
            assert_eq!(selected, n as u32);
            let ancestors: u32 = rec.count_histogram.iter().sum();
            assert_eq!(ancestors, n as u32);
            assert!(rec.ess >= 1.0 && rec.ess <= n as f64);
        }
    }
}
