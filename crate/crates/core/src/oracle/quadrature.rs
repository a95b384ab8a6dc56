//! Composite-Simpson tensor-grid quadrature for `Z_ε`, Gibbs expectations
//! and well masses, with automatic domain selection and refinement
//! doubling (d ≤ 3).

use crate::potential::{grid_indices, LandscapeSummary, Potential};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tensor-product grid: per-axis extent and node count (odd, for Simpson).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl GridSpec {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        let n = self.nodes[axis];
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Composite Simpson weights along one axis.
    fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let n = self.nodes[axis];
        let h = (self.hi[axis] - self.lo[axis]) / (n - 1) as f64;
        let mut w = vec![0.0; n];
        for i in 0..n {
            w[i] = if i == 0 || i == n - 1 {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
        w
    }

    /// Doubles the interval count on every axis (n -> 2n - 1).
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            nodes: self.nodes.iter().map(|&n| 2 * n - 1).collect(),
        }
    }

    /// Domain covering the sublevel set `{U ≤ max minima energy + 40ε}`,
    /// padded by 20% per side, with a resolution-matched initial node
    /// count.
    pub fn auto(pot: &Potential, eps: f64) -> Result<GridSpec> {
        let dim = pot.dim();
        if dim > 3 {
            return Err(Error::UnsupportedDimension { max: 3, got: dim });
        }
        let threshold = pot
            .minima()
            .iter()
            .map(|m| m.energy)
            .fold(0.0f64, f64::max)
            + 40.0 * eps;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for m in pot.minima() {
            for (a, b) in lo.iter_mut().zip(&m.point) {
                *a = a.min(*b);
            }
            for (a, b) in hi.iter_mut().zip(&m.point) {
                *a = a.max(*b);
            }
        }
        // March outward along axis lines through every minimum until U
        // exceeds the threshold, then bisect the crossing.
        for axis in 0..dim {
            for m in pot.minima() {
                for sign in [-1.0, 1.0] {
                    let mut probe = m.point.clone();
                    let mut step = 1e-3;
                    let mut inner = 0.0;
                    loop {
                        probe[axis] = m.point[axis] + sign * step;
                        if pot.evaluate(&probe)? > threshold {
                            break;
                        }
                        inner = step;
                        step *= 1.4;
                    }
                    let mut outer = step;
                    for _ in 0..60 {
                        let mid = 0.5 * (inner + outer);
                        probe[axis] = m.point[axis] + sign * mid;
                        if pot.evaluate(&probe)? > threshold {
                            outer = mid;
                        } else {
                            inner = mid;
                        }
                    }
                    let edge = m.point[axis] + sign * outer;
                    if sign < 0.0 {
                        lo[axis] = lo[axis].min(edge);
                    } else {
                        hi[axis] = hi[axis].max(edge);
                    }
                }
            }
        }
        let base = match dim {
            1 => 257usize,
            2 => 65,
            _ => 33,
        };
        let mut nodes = Vec::with_capacity(dim);
        for axis in 0..dim {
            let width = hi[axis] - lo[axis];
            let pad = 0.2 * width;
            lo[axis] -= pad;
            hi[axis] += pad;
            // Resolve the well width ~ sqrt(eps); refinement does the rest.
            let needed = ((hi[axis] - lo[axis]) / (eps.sqrt() / 4.0)).ceil() as usize;
            let mut n = base.max(needed + 1);
            if n % 2 == 0 {
                n += 1;
            }
            nodes.push(n.min(4097));
        }
        Ok(GridSpec { lo, hi, nodes })
    }
}

/// Quadrature of `f` over the grid.
fn integrate(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let dim = grid.dim();
    let axes: Vec<Vec<f64>> = (0..dim).map(|a| grid.axis_nodes(a)).collect();
    let weights: Vec<Vec<f64>> = (0..dim).map(|a| grid.axis_weights(a)).collect();
    let n = grid.nodes[0];
    let mut total = 0.0;
    let mut x = vec![0.0; dim];
    for idx in grid_indices(dim, n) {
        // Uniform node counts across axes keep the index iterator simple;
        // auto grids always satisfy this.
        let mut w = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            x[axis] = axes[axis][i];
            w *= weights[axis][i];
        }
        total += w * f(&x);
    }
    total
}

fn ensure_uniform_nodes(grid: &GridSpec) -> GridSpec {
    let max = grid.nodes.iter().cloned().max().unwrap_or(3);
    GridSpec {
        lo: grid.lo.clone(),
        hi: grid.hi.clone(),
        nodes: vec![max; grid.lo.len()],
    }
}

/// Partition function `Z_ε = ∫ e^{-U/ε}` by refinement doubling to a
/// relative target of 1e-6. Returns the converged value and the grid that
/// achieved it.
pub fn grid_partition_function(
    pot: &Potential,
    eps: f64,
    grid: Option<GridSpec>,
) -> Result<(f64, GridSpec)> {
    refine_to_convergence(pot, eps, grid, 0.0, |g| {
        Ok(integrate(g, |x| (-pot.energy_unchecked(x) / eps).exp()))
    })
}

/// Refines until `|Δ| ≤ 1e-6·max(|value|, floor)`; `floor = 0` demands
/// pure relative accuracy, `floor = 1` absolute at the problem scale
/// (needed when the target vanishes by symmetry).
fn refine_to_convergence(
    pot: &Potential,
    eps: f64,
    grid: Option<GridSpec>,
    floor: f64,
    mut eval: impl FnMut(&GridSpec) -> Result<f64>,
) -> Result<(f64, GridSpec)> {
    if pot.dim() > 3 {
        return Err(Error::UnsupportedDimension {
            max: 3,
            got: pot.dim(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let mut grid = ensure_uniform_nodes(&match grid {
        Some(g) => g,
        None => GridSpec::auto(pot, eps)?,
    });
    let mut value = eval(&grid)?;
    let max_levels = match pot.dim() {
        1 => 8,
        2 => 5,
        _ => 3,
    };
    let mut rel = f64::INFINITY;
    for _ in 0..max_levels {
        let finer = grid.refined();
        let next = eval(&finer)?;
        let scale = next.abs().max(floor);
        rel = if scale > 0.0 {
            (next - value).abs() / scale
        } else {
            (next - value).abs()
        };
        value = next;
        grid = finer;
        if rel < 1e-6 {
            return Ok((value, grid));
        }
    }
    Err(Error::QuadratureNotConverged {
        levels: max_levels,
        rel_change: rel,
    })
}

/// Gibbs expectation `∫ h dπ_ε` (normalized on the same grid), refined to
/// the 1e-6 relative target.
pub fn grid_expectation(
    pot: &Potential,
    eps: f64,
    h: impl Fn(&[f64]) -> f64,
    grid: Option<GridSpec>,
) -> Result<f64> {
    let (val, _) = refine_to_convergence(pot, eps, grid, 1.0, |g| {
        let num = integrate(g, |x| (-pot.energy_unchecked(x) / eps).exp() * h(x));
        let den = integrate(g, |x| (-pot.energy_unchecked(x) / eps).exp());
        Ok(num / den)
    })?;
    Ok(val)
}

/// Per-well Gibbs masses `π_ε(Ω_i)` (energy-ordered minima) and the mass
/// outside the truncation set, `π_ε(K^c)`.
///
/// Indicator integrands kill Simpson's convergence at the basin and `K`
/// boundaries, so in 1-d the domain is split at every such boundary
/// (saddle abscissae plus the sublevel crossings of each `B_i`) and
/// integrated piece by piece; every piece is smooth and the 1e-6 target
/// applies. For d ≥ 2 the domain is split along axis 0 at the saddles
/// (the exact basin boundary for the built-in families); the `K^c` mass
/// there is only O(h) accurate and excluded from the convergence test.
pub fn well_masses(
    pot: &Potential,
    eps: f64,
    landscape: &LandscapeSummary,
    grid: Option<GridSpec>,
) -> Result<(Vec<f64>, f64)> {
    let base = match grid {
        Some(g) => g,
        None => GridSpec::auto(pot, eps)?,
    };
    if pot.dim() == 1 {
        well_masses_1d(pot, eps, landscape, &base)
    } else {
        well_masses_nd(pot, eps, landscape, &base)
    }
}

/// Solves `U(x) - e0 = threshold` on a monotone bracket by bisection.
fn crossing_1d(pot: &Potential, mut lo: f64, mut hi: f64, level: f64) -> f64 {
    // assumes U(lo) and U(hi) straddle `level`
    let f_lo = pot.energy_unchecked(&[lo]) - level;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        let f_mid = pot.energy_unchecked(&[mid]) - level;
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Breakpoints of the piecewise-smooth structure: domain ends, basin
/// cuts, and the `B_i` sublevel crossings.
fn breakpoints_1d(
    pot: &Potential,
    landscape: &LandscapeSummary,
    lo: f64,
    hi: f64,
) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for s in &landscape.saddles {
        pts.push(s.point[0]);
    }
    // Within each basin interval U decreases to the minimum then rises;
    // each monotone half crosses the B_i level at most once.
    let mut walls: Vec<f64> = vec![lo];
    walls.extend(landscape.saddles.iter().map(|s| s.point[0]));
    walls.push(hi);
    for w in walls.windows(2) {
        let (a, b) = (w[0], w[1]);
        // minimum inside this interval
        let m = landscape
            .minima
            .iter()
            .find(|m| m.point[0] > a && m.point[0] < b);
        let Some(m) = m else { continue };
        let level = m.energy + landscape.b_threshold;
        let xm = m.point[0];
        if pot.energy_unchecked(&[a]) > level && pot.energy_unchecked(&[xm]) < level {
            pts.push(crossing_1d(pot, a, xm, level));
        }
        if pot.energy_unchecked(&[b]) > level && pot.energy_unchecked(&[xm]) < level {
            pts.push(crossing_1d(pot, xm, b, level));
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    pts
}

fn simpson_1d(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    // n odd nodes
    let h = (b - a) / (n - 1) as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n - 1 {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

fn well_masses_1d(
    pot: &Potential,
    eps: f64,
    landscape: &LandscapeSummary,
    base: &GridSpec,
) -> Result<(Vec<f64>, f64)> {
    let wells = landscape.minima.len();
    let pts = breakpoints_1d(pot, landscape, base.lo[0], base.hi[0]);
    // Piece labels, decided at the midpoint (constant within a piece).
    let mut labels = Vec::new();
    for w in pts.windows(2) {
        let mid = [0.5 * (w[0] + w[1])];
        let basin = landscape.basin_index(pot, &mid)?;
        let in_k = landscape.in_k(pot, &mid)?;
        labels.push((basin, in_k));
    }

    let width = base.hi[0] - base.lo[0];
    let base_nodes = base.nodes[0];
    let mut level = 0usize;
    let mut prev: Option<(Vec<f64>, f64)> = None;
    loop {
        let mut per_well = vec![0.0; wells];
        let mut outside_k = 0.0;
        let mut z = 0.0;
        for (w, &(basin, in_k)) in pts.windows(2).zip(&labels) {
            let frac = (w[1] - w[0]) / width;
            let mut n = ((base_nodes as f64 * frac).ceil() as usize).max(17) << level;
            if n % 2 == 0 {
                n += 1;
            }
            let piece = simpson_1d(w[0], w[1], n, |x| (-pot.energy_unchecked(&[x]) / eps).exp());
            z += piece;
            per_well[basin] += piece;
            if !in_k {
                outside_k += piece;
            }
        }
        for m in &mut per_well {
            *m /= z;
        }
        outside_k /= z;
        if let Some((prev_masses, prev_out)) = &prev {
            let mass_drift = per_well
                .iter()
                .zip(prev_masses)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let out_scale = outside_k.abs().max(1e-300);
            let out_drift = (outside_k - prev_out).abs() / out_scale;
            if mass_drift < 1e-7 && out_drift < 1e-6 {
                return Ok((per_well, outside_k));
            }
        }
        prev = Some((per_well, outside_k));
        level += 1;
        if level > 9 {
            return Err(Error::QuadratureNotConverged {
                levels: level,
                rel_change: f64::NAN,
            });
        }
    }
}

fn well_masses_nd(
    pot: &Potential,
    eps: f64,
    landscape: &LandscapeSummary,
    base: &GridSpec,
) -> Result<(Vec<f64>, f64)> {
    let wells = landscape.minima.len();
    let dim = pot.dim();
    // Split axis 0 at the saddle abscissae (exact basin boundary for the
    // built-in d ≥ 2 families).
    let mut cuts: Vec<f64> = vec![base.lo[0]];
    for s in &landscape.saddles {
        cuts.push(s.point[0]);
    }
    cuts.push(base.hi[0]);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let mut lo = base.lo.clone();
        let mut hi = base.hi.clone();
        lo[0] = w[0];
        hi[0] = w[1];
        let mut center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        // classify at the nearest minimum-height slice to avoid starting a
        // descent flow from a ridge
        center[0] = 0.5 * (w[0] + w[1]);
        let basin = landscape.basin_index(pot, &center)?;
        pieces.push((lo, hi, basin));
    }

    let mut nodes = base.nodes.iter().cloned().max().unwrap_or(33);
    let mut prev: Option<(Vec<f64>, f64)> = None;
    for _ in 0..6 {
        let mut per_well = vec![0.0; wells];
        let mut outside_k = 0.0;
        let mut z = 0.0;
        for (lo, hi, basin) in &pieces {
            let g = GridSpec {
                lo: lo.clone(),
                hi: hi.clone(),
                nodes: vec![nodes; dim],
            };
            let axes: Vec<Vec<f64>> = (0..dim).map(|a| g.axis_nodes(a)).collect();
            let weights: Vec<Vec<f64>> = (0..dim).map(|a| g.axis_weights(a)).collect();
            let e_min = landscape.minima[*basin].energy;
            let mut x = vec![0.0; dim];
            for idx in grid_indices(dim, nodes) {
                let mut w = 1.0;
                for (axis, &i) in idx.iter().enumerate() {
                    x[axis] = axes[axis][i];
                    w *= weights[axis][i];
                }
                let u = pot.energy_unchecked(&x);
                let dens = w * (-u / eps).exp();
                z += dens;
                per_well[*basin] += dens;
                if u - e_min > landscape.b_threshold {
                    outside_k += dens;
                }
            }
        }
        for m in &mut per_well {
            *m /= z;
        }
        outside_k /= z;
        if let Some((prev_masses, _)) = &prev {
            let mass_drift = per_well
                .iter()
                .zip(prev_masses)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if mass_drift < 1e-6 {
                return Ok((per_well, outside_k));
            }
        }
        prev = Some((per_well, outside_k));
        nodes = 2 * nodes - 1;
    }
    Err(Error::QuadratureNotConverged {
        levels: 6,
        rel_change: f64::NAN,
    })
}

/// Gibbs expectation of an `h` that is smooth except across the given
/// breakpoints (basin indicators and the like): the integral is assembled
/// piece by piece so Simpson keeps its full order. 1-d only.
pub fn grid_expectation_piecewise(
    pot: &Potential,
    eps: f64,
    h: impl Fn(&[f64]) -> f64,
    breakpoints: &[f64],
) -> Result<f64> {
    if pot.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            max: 1,
            got: pot.dim(),
        });
    }
    let base = GridSpec::auto(pot, eps)?;
    let mut pts = vec![base.lo[0], base.hi[0]];
    pts.extend(
        breakpoints
            .iter()
            .filter(|&&b| b > base.lo[0] && b < base.hi[0]),
    );
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let width = base.hi[0] - base.lo[0];
    let mut level = 0usize;
    let mut prev: Option<f64> = None;
    loop {
        let mut num = 0.0;
        let mut den = 0.0;
        for w in pts.windows(2) {
            let frac = (w[1] - w[0]) / width;
            let mut n = ((base.nodes[0] as f64 * frac).ceil() as usize).max(17) << level;
            if n % 2 == 0 {
                n += 1;
            }
            // offset midpoints inside the piece so h's jump sits exactly on
            // the boundary nodes, which get half weight from each side --
            // evaluate h a hair inside instead
            let inset = 1e-9 * (w[1] - w[0]);
            num += simpson_1d(w[0], w[1], n, |x| {
                let xe = x.clamp(w[0] + inset, w[1] - inset);
                (-pot.energy_unchecked(&[x]) / eps).exp() * h(&[xe])
            });
            den += simpson_1d(w[0], w[1], n, |x| (-pot.energy_unchecked(&[x]) / eps).exp());
        }
        let value = num / den;
        if let Some(p) = prev {
            if (value - p).abs() <= 1e-6 * value.abs().max(1.0) {
                return Ok(value);
            }
        }
        prev = Some(value);
        level += 1;
        if level > 9 {
            return Err(Error::QuadratureNotConverged {
                levels: level,
                rel_change: f64::NAN,
            });
        }
    }
}

/// Everything quadrature knows about one `(potential, ε)` pair, frozen for
/// fixture files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsReference {
    pub potential_id: String,
    pub eps: f64,
    pub grid: GridSpec,
    pub z: f64,
    /// Normalized density at the grid nodes (omitted above 2^16 nodes to
    /// keep fixtures small).
    pub density: Option<Vec<f64>>,
    /// `π_ε(Ω_i)`, energy-ordered.
    pub well_masses: Vec<f64>,
    /// `π_ε(K^c)`.
    pub mass_outside_k: f64,
    /// `C_m` such that `min_i π_ε(Ω_i) = 1/C_m²`.
    pub c_m_estimate: f64,
    pub config_hash: String,
}

/// Builds the Gibbs reference record at one temperature.
pub fn gibbs_reference(
    pot: &Potential,
    eps: f64,
    landscape: &LandscapeSummary,
    config_hash: &str,
) -> Result<GibbsReference> {
    let (z, grid) = grid_partition_function(pot, eps, None)?;
    let (masses, outside_k) = well_masses(pot, eps, landscape, Some(grid.clone()))?;
    let min_mass = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_m = (1.0 / min_mass).sqrt();
    let density = if grid.total_nodes() <= 1 << 16 {
        let axes: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.axis_nodes(a)).collect();
        let mut vals = Vec::with_capacity(grid.total_nodes());
        let mut x = vec![0.0; grid.dim()];
        for idx in grid_indices(grid.dim(), grid.nodes[0]) {
            for (axis, &i) in idx.iter().enumerate() {
                x[axis] = axes[axis][i];
            }
            vals.push((-pot.energy_unchecked(&x) / eps).exp() / z);
        }
        Some(vals)
    } else {
        None
    };
    Ok(GibbsReference {
        potential_id: pot.id().to_string(),
        eps,
        grid,
        z,
        density,
        well_masses: masses,
        mass_outside_k: outside_k,
        c_m_estimate: c_m,
        config_hash: config_hash.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::landscape_summary;

    #[test]
    fn gaussian_partition_function() {
        // U = x²/2, ε = 1: Z = √(2π).
        let pot = Potential::quadratic(1.0);
        let (z, _) = grid_partition_function(&pot, 1.0, None).unwrap();
        assert!(
            (z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-5 * z,
            "Z = {z}"
        );
    }

    #[test]
    fn gaussian_scaling_z_over_sqrt_eps_constant() {
        let pot = Potential::quadratic(1.0);
        let mut ratios = Vec::new();
        for eps in [1.0, 0.5, 0.1] {
            let (z, _) = grid_partition_function(&pot, eps, None).unwrap();
            ratios.push(z / eps.sqrt());
        }
        for w in ratios.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-4 * w[0], "{ratios:?}");
        }
    }

    #[test]
    fn quartic_z_matches_laplace_asymptotics() {
        // Z_ε ≈ Σ_i √(2πε / U''(x_min_i)) e^{-U_i/ε}; U'' = 8 at ±1.
        let pot = Potential::quartic();
        let eps = 0.05;
        let (z, _) = grid_partition_function(&pot, eps, None).unwrap();
        let laplace = 2.0 * (2.0 * std::f64::consts::PI * eps / 8.0).sqrt();
        assert!(
            (z - laplace).abs() < 0.1 * laplace,
            "Z = {z}, Laplace = {laplace}"
        );
    }

    #[test]
    fn expectation_basics() {
        let pot = Potential::quartic();
        let one = grid_expectation(&pot, 0.3, |_| 1.0, None).unwrap();
        assert!((one - 1.0).abs() < 1e-9);
        let odd = grid_expectation(&pot, 0.3, |x| x[0], None).unwrap();
        assert!(odd.abs() < 1e-8);
        // Basin indicator: piecewise path with the saddle as breakpoint.
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let pot2 = pot.clone();
        let ls2 = ls.clone();
        let left = grid_expectation_piecewise(
            &pot,
            0.3,
            move |x| {
                if ls2.basin_index(&pot2, x).unwrap() == 0 {
                    1.0
                } else {
                    0.0
                }
            },
            &[ls.saddles[0].point[0]],
        )
        .unwrap();
        assert!((left - 0.5).abs() < 1e-6, "left = {left}");
    }

    #[test]
    fn symmetric_quartic_masses_are_half_half() {
        let pot = Potential::quartic();
        let ls = landscape_summary(&pot, 1.0).unwrap();
        for eps in [0.3, 0.1] {
            let (masses, outside) = well_masses(&pot, eps, &ls, None).unwrap();
            assert_eq!(masses.len(), 2);
            assert!((masses[0] - 0.5).abs() < 1e-6, "{masses:?}");
            assert!((masses[1] - 0.5).abs() < 1e-6);
            assert!(outside >= 0.0 && outside < 0.5);
        }
    }

    #[test]
    fn tilted_quartic_masses_from_two_resolutions_agree() {
        let pot = Potential::tilted_quartic(0.1);
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let eps = 0.1;
        let (m1, _) = well_masses(&pot, eps, &ls, None).unwrap();
        // Independent, finer starting grid.
        let mut grid = GridSpec::auto(&pot, eps).unwrap();
        grid.nodes = grid.nodes.iter().map(|&n| 2 * n - 1).collect();
        let (m2, _) = well_masses(&pot, eps, &ls, Some(grid)).unwrap();
        for (a, b) in m1.iter().zip(&m2) {
            assert!((a - b).abs() < 1e-4, "{m1:?} vs {m2:?}");
        }
        // The tilt favours the left (global) well.
        assert!(m1[0] > 0.6 && m1[0] < 1.0, "{m1:?}");
    }

    #[test]
    fn double_well_2d_masses() {
        let pot = Potential::double_well_2d(1.0);
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let (masses, _) = well_masses(&pot, 0.3, &ls, None).unwrap();
        assert!((masses[0] - 0.5).abs() < 1e-4, "{masses:?}");
    }

    #[test]
    fn density_normalizes_on_grid() {
        let pot = Potential::quartic();
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let gr = gibbs_reference(&pot, 0.2, &ls, "testhash").unwrap();
        let dens = gr.density.as_ref().unwrap();
        let w: Vec<f64> = gr.grid.axis_weights(0);
        let total: f64 = dens.iter().zip(&w).map(|(d, w)| d * w).sum();
        assert!((total - 1.0).abs() < 1e-8, "total = {total}");
        assert!((gr.c_m_estimate - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn triple_well_low_temperature_masses() {
        // Equal depths, curvatures 54 (outer) and 13.5 (center): Laplace
        // masses (0.25, 0.5, 0.25), center listed first among equal
        // energies ordered by position (-1 < 0 < 1 → indistinct energies
        // sort by position, so minima order is -1, 0, 1).
        let pot = Potential::triple_well();
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let (masses, _) = well_masses(&pot, 0.05, &ls, None).unwrap();
        assert_eq!(masses.len(), 3);
        assert!((masses[0] - 0.25).abs() < 0.02, "{masses:?}");
        assert!((masses[1] - 0.5).abs() < 0.03, "{masses:?}");
        assert!((masses[2] - 0.25).abs() < 0.02, "{masses:?}");
    }

    #[test]
    fn doubling_changes_results_below_tolerance() {
        let pot = Potential::quartic();
        let (z1, g1) = grid_partition_function(&pot, 0.1, None).unwrap();
        let z2 = integrate(&g1.refined(), |x| (-pot.energy_unchecked(x) / 0.1).exp());
        assert!(((z2 - z1) / z1).abs() < 1e-5);
    }
}
