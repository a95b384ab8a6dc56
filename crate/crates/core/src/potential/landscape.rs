//! Basin classification by gradient-descent flow, saddle location, and the
//! derived landscape summary (saddle height, energy barrier, truncation
//! sets `B_i` and `K`).

use super::{dist2, norm, Minimum, Potential};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the descent flow `ẏ = -∇U(y)` used for basin
/// classification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowParams {
    /// Initial step size; adapted by backtracking.
    pub dt: f64,
    /// Flow stops when |∇U| falls below this.
    pub grad_tol: f64,
    /// The endpoint must lie within this distance of a declared minimum.
    pub snap_radius: f64,
    pub max_steps: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt: 0.05,
            grad_tol: 1e-8,
            snap_radius: 0.15,
            max_steps: 200_000,
        }
    }
}

/// Outcome of a basin classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasinLabel {
    /// Index into `Potential::minima()` (0 is the global minimum).
    pub index: usize,
    /// Set when the flow stalled on a saddle and the label was assigned by
    /// the deterministic lowest-adjacent-index tie-break.
    pub tie_broken: bool,
}

/// A located saddle point with its (normalized) energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saddle {
    pub point: Vec<f64>,
    pub energy: f64,
}

/// Landscape quantities derived from a potential and a slack `α`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeSummary {
    /// Saddles between adjacent minima (1-d: ordered by position).
    pub saddles: Vec<Saddle>,
    /// Û: energy of the communicating saddle between the global minimum
    /// and the minimum with the largest barrier towards it.
    pub saddle_height: f64,
    /// γ̂: the per-well minimum escape barrier.
    pub energy_barrier: f64,
    /// γ̂_r = Û/γ̂ (≥ 1).
    pub barrier_ratio: f64,
    pub alpha: f64,
    /// Sublevel threshold of the sets `B_i`: γ̂/(1+α)^{1/4}.
    pub b_threshold: f64,
    /// C_K = γ̂/(1+α)^{1/2}.
    pub c_k: f64,
    /// Copy of the potential's minima (energy-ordered).
    pub minima: Vec<Minimum>,
    /// 1-d only: saddle abscissae separating the basins, ascending, plus a
    /// map from position-interval to energy-ordered minimum index.
    basin_cuts: Option<Vec<f64>>,
    interval_to_minimum: Option<Vec<usize>>,
}

/// Classifies `x` into the basin of attraction of a declared minimum by
/// integrating the descent flow. A flow that stalls on a saddle (gradient
/// below tolerance, indefinite Hessian) is assigned to the lowest-index
/// adjacent basin with `tie_broken` set.
pub fn classify_basin(pot: &Potential, x: &[f64], flow: &FlowParams) -> Result<BasinLabel> {
    classify_inner(pot, x, flow, 0)
}

fn classify_inner(
    pot: &Potential,
    x: &[f64],
    flow: &FlowParams,
    depth: usize,
) -> Result<BasinLabel> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut y = x.to_vec();
    let mut dt = flow.dt;
    let mut energy = pot.evaluate(&y)?;
    for _ in 0..flow.max_steps {
        let g = pot.gradient_unchecked(&y);
        let gnorm = norm(&g);
        if gnorm < flow.grad_tol {
            if let Some(idx) = snap_to_minimum(pot, &y, flow.snap_radius) {
                return Ok(BasinLabel {
                    index: idx,
                    tie_broken: false,
                });
            }
            // Stalled away from every minimum: saddle or flat region.
            return saddle_tie_break(pot, &y, flow, depth);
        }
        // Backtracking descent step (Armijo on the energy).
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - dt * gi).collect();
            let cand_energy = pot.energy_unchecked(&cand);
            if cand_energy <= energy - 0.25 * dt * gnorm * gnorm {
                y = cand;
                energy = cand_energy;
                accepted = true;
                dt = (dt * 1.3).min(flow.dt);
                break;
            }
            dt *= 0.5;
        }
        if !accepted {
            // Step size underflowed; treat as converged and snap.
            if let Some(idx) = snap_to_minimum(pot, &y, flow.snap_radius) {
                return Ok(BasinLabel {
                    index: idx,
                    tie_broken: false,
                });
            }
            return Err(Error::FlowNotConverged {
                max_steps: flow.max_steps,
                grad_norm: gnorm,
            });
        }
    }
    let gnorm = norm(&pot.gradient_unchecked(&y));
    // Long flows can crawl arbitrarily slowly near a minimum; accept if we
    // are already inside the snap radius.
    if let Some(idx) = snap_to_minimum(pot, &y, flow.snap_radius) {
        return Ok(BasinLabel {
            index: idx,
            tie_broken: false,
        });
    }
    Err(Error::FlowNotConverged {
        max_steps: flow.max_steps,
        grad_norm: gnorm,
    })
}

fn snap_to_minimum(pot: &Potential, y: &[f64], snap_radius: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in pot.minima().iter().enumerate() {
        let d2 = dist2(y, &m.point);
        if d2 <= snap_radius * snap_radius && best.map_or(true, |(_, bd)| d2 < bd) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, _)| i)
}

/// Measure-zero case: the flow reached a critical point that is not a
/// minimum. Nudge along the Hessian's most negative direction both ways,
/// classify each side, and return the lower index.
fn saddle_tie_break(
    pot: &Potential,
    y: &[f64],
    flow: &FlowParams,
    depth: usize,
) -> Result<BasinLabel> {
    if depth >= 2 {
        return Err(Error::NoNearbyMinimum { point: y.to_vec() });
    }
    let h = pot.fd_hessian(y);
    let eig = nalgebra::SymmetricEigen::new(h);
    let (mut min_val, mut min_idx) = (f64::INFINITY, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < min_val {
            min_val = v;
            min_idx = i;
        }
    }
    if min_val >= -1e-8 {
        // Not a descent direction anywhere: flat region, give up.
        return Err(Error::NoNearbyMinimum { point: y.to_vec() });
    }
    let dir = eig.eigenvectors.column(min_idx);
    let delta = 1e-3;
    let mut indices = Vec::new();
    for sign in [-1.0, 1.0] {
        let nudged: Vec<f64> = y
            .iter()
            .zip(dir.iter())
            .map(|(yi, di)| yi + sign * delta * di)
            .collect();
        if let Ok(label) = classify_inner(pot, &nudged, flow, depth + 1) {
            indices.push(label.index);
        }
    }
    match indices.into_iter().min() {
        Some(index) => Ok(BasinLabel {
            index,
            tie_broken: true,
        }),
        None => Err(Error::NoNearbyMinimum { point: y.to_vec() }),
    }
}

/// Builds the landscape summary for a multi-well potential: locates the
/// saddles, computes Û, γ̂, γ̂_r and the `B_i`/`K` set parameters.
///
/// In one dimension the saddle between adjacent minima is found by grid
/// search along the connecting segment followed by golden-section
/// refinement; in higher dimensions the segment maximum is polished by
/// Newton iteration on `∇U = 0` and checked to be index one.
pub fn landscape_summary(pot: &Potential, alpha: f64) -> Result<LandscapeSummary> {
    if alpha <= 0.0 {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    let minima = pot.minima().to_vec();
    if minima.len() < 2 {
        return Err(Error::TooFewMinima {
            found: minima.len(),
        });
    }

    // Position-ordered view (1-d: ascending x; d>1 with two minima: as is).
    let mut pos_order: Vec<usize> = (0..minima.len()).collect();
    if pot.dim() == 1 {
        pos_order.sort_by(|&a, &b| minima[a].point[0].partial_cmp(&minima[b].point[0]).unwrap());
    }

    // One saddle per adjacent pair in position order.
    let mut saddles = Vec::new();
    for w in pos_order.windows(2) {
        let s = locate_saddle(pot, &minima[w[0]].point, &minima[w[1]].point, w[0], w[1])?;
        saddles.push(s);
    }

    // Escape barrier of basin i: lowest adjacent saddle minus the local
    // minimum energy. Outer basins of a 1-d chain see only one saddle.
    let mut barriers = vec![f64::INFINITY; minima.len()];
    for (slot, w) in pos_order.windows(2).enumerate() {
        let s = &saddles[slot];
        for &mi in &[w[0], w[1]] {
            barriers[mi] = barriers[mi].min(s.energy - minima[mi].energy);
        }
    }
    let energy_barrier = barriers.iter().cloned().fold(f64::INFINITY, f64::min);

    // Communicating saddle height between the global minimum and minimum i:
    // the max saddle energy crossed along the 1-d chain (single saddle for
    // the d>1 two-well case). Û is taken at the minimum with the largest
    // such barrier relative to its own depth.
    let global_pos = pos_order.iter().position(|&i| i == 0).unwrap();
    let mut saddle_height = f64::NEG_INFINITY;
    for (pos, &mi) in pos_order.iter().enumerate() {
        if mi == 0 {
            continue;
        }
        let (a, b) = if pos < global_pos {
            (pos, global_pos)
        } else {
            (global_pos, pos)
        };
        let comm = saddles[a..b]
            .iter()
            .map(|s| s.energy)
            .fold(f64::NEG_INFINITY, f64::max);
        if comm - minima[mi].energy > saddle_height - f64::EPSILON {
            saddle_height = saddle_height.max(comm);
        }
    }

    let barrier_ratio = saddle_height / energy_barrier;
    let onep = 1.0 + alpha;
    let b_threshold = energy_barrier / onep.powf(0.25);
    let c_k = energy_barrier / onep.sqrt();

    let (basin_cuts, interval_to_minimum) = if pot.dim() == 1 {
        let cuts: Vec<f64> = saddles.iter().map(|s| s.point[0]).collect();
        (Some(cuts), Some(pos_order.clone()))
    } else {
        (None, None)
    };

    Ok(LandscapeSummary {
        saddles,
        saddle_height,
        energy_barrier,
        barrier_ratio,
        alpha,
        b_threshold,
        c_k,
        minima,
        basin_cuts,
        interval_to_minimum,
    })
}

fn locate_saddle(
    pot: &Potential,
    a: &[f64],
    b: &[f64],
    ia: usize,
    ib: usize,
) -> Result<Saddle> {
    // Grid search for the max of U along the segment.
    let n = 2001;
    let mut best_t = 0.5;
    let mut best_u = f64::NEG_INFINITY;
    for i in 1..n {
        let t = i as f64 / n as f64;
        let x = lerp(a, b, t);
        let u = pot.energy_unchecked(&x);
        if u > best_u {
            best_u = u;
            best_t = t;
        }
    }
    // Golden-section refinement of the 1-d restriction around the peak.
    let (mut lo, mut hi) = (best_t - 2.0 / n as f64, best_t + 2.0 / n as f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let t1 = hi - phi * (hi - lo);
        let t2 = lo + phi * (hi - lo);
        let u1 = pot.energy_unchecked(&lerp(a, b, t1));
        let u2 = pot.energy_unchecked(&lerp(a, b, t2));
        if u1 > u2 {
            hi = t2;
        } else {
            lo = t1;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let mut point = lerp(a, b, 0.5 * (lo + hi));

    // Newton-polish the critical point: the value-based segment search can
    // only resolve the flat maximum to ~sqrt(machine eps).
    for _ in 0..50 {
        let g = pot.gradient_unchecked(&point);
        if norm(&g) < 1e-13 {
            break;
        }
        let h = pot.fd_hessian(&point);
        let Some(step) = h.lu().solve(&nalgebra::DVector::from_vec(g)) else {
            break;
        };
        for (pi, si) in point.iter_mut().zip(step.iter()) {
            *pi -= si;
        }
    }

    let g = pot.gradient_unchecked(&point);
    if norm(&g) > 1e-6 {
        return Err(Error::NoSaddleFound { lo: ia, hi: ib });
    }
    // Index-one check: exactly one negative Hessian eigenvalue.
    let eig = nalgebra::SymmetricEigen::new(pot.fd_hessian(&point));
    let negatives = eig.eigenvalues.iter().filter(|&&v| v < -1e-7).count();
    let positives = eig.eigenvalues.iter().filter(|&&v| v > 1e-7).count();
    if negatives != 1 || positives != pot.dim() - 1 {
        return Err(Error::DegenerateSaddle { point });
    }
    let energy = pot.energy_unchecked(&point);
    Ok(Saddle { point, energy })
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

impl LandscapeSummary {
    /// Basin index of `x` (into the energy-ordered minima). Uses the saddle
    /// abscissae directly in 1-d; falls back to the descent flow otherwise.
    pub fn basin_index(&self, pot: &Potential, x: &[f64]) -> Result<usize> {
        if let (Some(cuts), Some(map)) = (&self.basin_cuts, &self.interval_to_minimum) {
            let xi = x[0];
            let slot = cuts.iter().take_while(|&&c| xi > c).count();
            return Ok(map[slot]);
        }
        classify_basin(pot, x, &FlowParams::default()).map(|l| l.index)
    }

    /// Membership in `B_i = {x ∈ Ω_i : U(x) - U(x_min_i) ≤ γ̂/(1+α)^{1/4}}`.
    pub fn in_b(&self, pot: &Potential, i: usize, x: &[f64]) -> Result<bool> {
        let u = pot.evaluate(x)?;
        if u - self.minima[i].energy > self.b_threshold {
            return Ok(false);
        }
        Ok(self.basin_index(pot, x)? == i)
    }

    /// Membership in `K = ∪_i B_i`.
    pub fn in_k(&self, pot: &Potential, x: &[f64]) -> Result<bool> {
        let u = pot.evaluate(x)?;
        // Cheap reject: above every per-well threshold.
        if self
            .minima
            .iter()
            .all(|m| u - m.energy > self.b_threshold)
        {
            return Ok(false);
        }
        let i = self.basin_index(pot, x)?;
        Ok(u - self.minima[i].energy <= self.b_threshold)
    }
}
