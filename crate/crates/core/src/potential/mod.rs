//! Energy landscapes `U: R^d -> R` and the landscape quantities consumed by
//! the sampler and the oracles: minima, saddle heights, basins of
//! attraction, and the truncation sets `B_i` and `K`.
//!
//! All built-ins are normalized at construction so the lowest declared
//! minimum has energy exactly zero, and carry the regularity metadata the
//! diagnostics need (a Laplacian bound `c`, a gradient lower bound `C_U`
//! far out, and the initial-energy bound `C_ini` over the default start
//! cube `[-1,1]^d`).

mod landscape;

pub use landscape::{
    classify_basin, landscape_summary, BasinLabel, FlowParams, LandscapeSummary, Saddle,
};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A declared local minimum (normalized energy, so the global one is 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub energy: f64,
}

/// The built-in energy families. Each satisfies the double-/multi-well
/// regularity the sampler assumes on its reference domain, with analytic
/// gradients and Laplacians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `U = ω x²/2`, the single-well control case (Ornstein-Uhlenbeck).
    Quadratic { omega: f64 },
    /// `U = (x²-1)² + tilt·(x+1)`; tilt 0 is the symmetric double well.
    Quartic { tilt: f64 },
    /// `U = (x²-1)² + ω y²/2` on R².
    DoubleWell2d { omega: f64 },
    /// `U = -log Σ_j w_j exp(-|x-μ_j|²/(2σ²))`, two components, d ≤ 3.
    GaussianMixture {
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        sigma: f64,
    },
    /// `U = (27/4) x²(x²-1)²`: three equal-depth wells at -1, 0, 1 with
    /// unit barriers at ±1/√3.
    TripleWell,
}

/// An energy landscape with its declared metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential {
    id: String,
    dim: usize,
    family: Family,
    /// Subtracted from the raw energy so `min_i U(x_min_i) = 0`.
    offset: f64,
    /// Sorted by (energy, position); index 0 is the global minimum.
    minima: Vec<Minimum>,
    /// `c`: sup |ΔU| over the reference box.
    laplacian_bound: f64,
    /// `C_U`: min |∇U| over the boundary of the reference box.
    gradient_liminf: f64,
    /// `C_ini`: sup U over the default start cube `[-1,1]^d`.
    initial_energy_bound: f64,
    /// Box on which the metadata above was computed.
    reference_box: (Vec<f64>, Vec<f64>),
}

impl Potential {
    /// Symmetric quartic double well `(x²-1)²`.
    pub fn quartic() -> Self {
        Self::build("quartic", 1, Family::Quartic { tilt: 0.0 })
    }

    /// Tilted quartic `(x²-1)² + tilt·(x+1)`; nearly equal well depths for
    /// small tilt.
    pub fn tilted_quartic(tilt: f64) -> Self {
        Self::build("quartic", 1, Family::Quartic { tilt })
    }

    /// Two-dimensional double well `(x²-1)² + ω y²/2`.
    pub fn double_well_2d(omega: f64) -> Self {
        assert!(omega > 0.0, "omega must be positive");
        Self::build("double_well_2d", 2, Family::DoubleWell2d { omega })
    }

    /// Single quadratic well `ω x²/2` (the exactly solvable control case).
    pub fn quadratic(omega: f64) -> Self {
        assert!(omega > 0.0, "omega must be positive");
        Self::build("quadratic", 1, Family::Quadratic { omega })
    }

    /// Negative-log Gaussian mixture with two equal-covariance components
    /// at `±(sep/2)·e_1` in `R^dim`, component weights `(w, 1-w)`.
    pub fn gaussian_mixture(dim: usize, sep: f64, sigma: f64, w: f64) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::UnsupportedDimension { max: 3, got: dim });
        }
        if !(sep > 0.0) || !(sigma > 0.0) {
            return Err(Error::invalid("sep/sigma", "must be positive"));
        }
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::invalid("weight", "must be in (0,1)"));
        }
        // Wells merge when the separation is too small relative to σ.
        if sep <= 2.0 * sigma {
            return Err(Error::invalid(
                "sep",
                format!("sep = {sep} must exceed 2σ = {} for two wells", 2.0 * sigma),
            ));
        }
        let mut m1 = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        m1[0] = -sep / 2.0;
        m2[0] = sep / 2.0;
        Ok(Self::build(
            "gaussian_mixture",
            dim,
            Family::GaussianMixture {
                means: vec![m1, m2],
                weights: vec![w, 1.0 - w],
                sigma,
            },
        ))
    }

    /// Triple well `(27/4) x²(x²-1)²`.
    pub fn triple_well() -> Self {
        Self::build("triple_well", 1, Family::TripleWell)
    }

    /// Constructs a built-in from its string id and a flat parameter map
    /// (the config-file representation).
    pub fn from_id(id: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        match id {
            "quartic" => Ok(Self::tilted_quartic(get("tilt", 0.0))),
            "quadratic" => Ok(Self::quadratic(get("omega", 1.0))),
            "double_well_2d" => Ok(Self::double_well_2d(get("omega", 1.0))),
            "triple_well" => Ok(Self::triple_well()),
            "gaussian_mixture" => Self::gaussian_mixture(
                get("dim", 1.0) as usize,
                get("sep", 3.0),
                get("sigma", 0.5),
                get("weight", 0.5),
            ),
            other => Err(Error::UnknownPotential {
                id: other.to_string(),
                valid: "quartic, quadratic, double_well_2d, triple_well, gaussian_mixture"
                    .to_string(),
            }),
        }
    }

    fn build(id: &str, dim: usize, family: Family) -> Self {
        let mut pot = Potential {
            id: id.to_string(),
            dim,
            family,
            offset: 0.0,
            minima: Vec::new(),
            laplacian_bound: 0.0,
            gradient_liminf: 0.0,
            initial_energy_bound: 0.0,
            reference_box: (vec![0.0; dim], vec![0.0; dim]),
        };
        let mut minima: Vec<Minimum> = pot
            .minima_guesses()
            .into_iter()
            .map(|guess| {
                let point = pot.refine_minimum(guess);
                let energy = pot.raw_energy(&point);
                Minimum { point, energy }
            })
            .collect();
        let offset = minima
            .iter()
            .map(|m| m.energy)
            .fold(f64::INFINITY, f64::min);
        for m in &mut minima {
            m.energy -= offset;
        }
        minima.sort_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap()
                .then_with(|| a.point.partial_cmp(&b.point).unwrap())
        });
        pot.offset = offset;
        pot.minima = minima;
        pot.reference_box = pot.compute_reference_box();
        let (c, c_u, c_ini) = pot.compute_metadata();
        pot.laplacian_bound = c;
        pot.gradient_liminf = c_u;
        pot.initial_energy_bound = c_ini;
        pot
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Declared minima, global minimum first (energy 0 by normalization).
    pub fn minima(&self) -> &[Minimum] {
        &self.minima
    }

    pub fn laplacian_bound(&self) -> f64 {
        self.laplacian_bound
    }

    pub fn gradient_liminf(&self) -> f64 {
        self.gradient_liminf
    }

    pub fn initial_energy_bound(&self) -> f64 {
        self.initial_energy_bound
    }

    /// Box inside which the metadata constants were measured; also the
    /// fallback oracle domain.
    pub fn reference_box(&self) -> (&[f64], &[f64]) {
        (&self.reference_box.0, &self.reference_box.1)
    }

    /// Energy `U(x)`, normalized so the global declared minimum is 0.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.raw_energy(x) - self.offset)
    }

    /// Gradient `∇U(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.raw_gradient(x))
    }

    /// Laplacian `ΔU(x)` (trace of the Hessian).
    pub fn laplacian(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.raw_laplacian(x))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn energy_unchecked(&self, x: &[f64]) -> f64 {
        self.raw_energy(x) - self.offset
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.raw_gradient(x)
    }

    fn raw_energy(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::Quadratic { omega } => 0.5 * omega * x[0] * x[0],
            Family::Quartic { tilt } => {
                let s = x[0] * x[0] - 1.0;
                s * s + tilt * (x[0] + 1.0)
            }
            Family::DoubleWell2d { omega } => {
                let s = x[0] * x[0] - 1.0;
                s * s + 0.5 * omega * x[1] * x[1]
            }
            Family::GaussianMixture {
                means,
                weights,
                sigma,
            } => {
                let inv2s2 = 0.5 / (sigma * sigma);
                // log-sum-exp over components
                let args: Vec<f64> = means
                    .iter()
                    .zip(weights)
                    .map(|(m, w)| w.ln() - inv2s2 * dist2(x, m))
                    .collect();
                let m = args.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + args.iter().map(|a| (a - m).exp()).sum::<f64>().ln();
                -lse
            }
            Family::TripleWell => {
                let s = x[0] * x[0] - 1.0;
                6.75 * x[0] * x[0] * s * s
            }
        }
    }

    fn raw_gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.family {
            Family::Quadratic { omega } => vec![omega * x[0]],
            Family::Quartic { tilt } => vec![4.0 * x[0] * (x[0] * x[0] - 1.0) + tilt],
            Family::DoubleWell2d { omega } => {
                vec![4.0 * x[0] * (x[0] * x[0] - 1.0), omega * x[1]]
            }
            Family::GaussianMixture { sigma, .. } => {
                let p = self.mixture_responsibilities(x);
                let means = self.mixture_means();
                let inv_s2 = 1.0 / (sigma * sigma);
                let mut g = vec![0.0; x.len()];
                for (pj, m) in p.iter().zip(means) {
                    for (gi, (xi, mi)) in g.iter_mut().zip(x.iter().zip(m)) {
                        *gi += pj * (xi - mi) * inv_s2;
                    }
                }
                g
            }
            Family::TripleWell => {
                // d/dx (27/4)(x^6 - 2x^4 + x^2)
                vec![6.75 * (6.0 * x[0].powi(5) - 8.0 * x[0].powi(3) + 2.0 * x[0])]
            }
        }
    }

    fn raw_laplacian(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::Quadratic { omega } => *omega,
            Family::Quartic { .. } => 12.0 * x[0] * x[0] - 4.0,
            Family::DoubleWell2d { omega } => 12.0 * x[0] * x[0] - 4.0 + omega,
            Family::GaussianMixture { sigma, .. } => {
                let p = self.mixture_responsibilities(x);
                let means = self.mixture_means();
                let inv_s2 = 1.0 / (sigma * sigma);
                let d = x.len() as f64;
                let grad = self.raw_gradient(x);
                let grad2: f64 = grad.iter().map(|g| g * g).sum();
                let mut lap = grad2;
                for (pj, m) in p.iter().zip(means) {
                    lap += pj * (d * inv_s2 - dist2(x, m) * inv_s2 * inv_s2);
                }
                lap
            }
            Family::TripleWell => 6.75 * (30.0 * x[0].powi(4) - 24.0 * x[0] * x[0] + 2.0),
        }
    }

    /// Posterior component weights of the mixture at `x` (softmax of the
    /// component log-densities).
    fn mixture_responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let Family::GaussianMixture {
            means,
            weights,
            sigma,
        } = &self.family
        else {
            unreachable!()
        };
        let inv2s2 = 0.5 / (sigma * sigma);
        let args: Vec<f64> = means
            .iter()
            .zip(weights)
            .map(|(m, w)| w.ln() - inv2s2 * dist2(x, m))
            .collect();
        let m = args.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = args.iter().map(|a| (a - m).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    fn mixture_means(&self) -> &[Vec<f64>] {
        match &self.family {
            Family::GaussianMixture { means, .. } => means,
            _ => unreachable!(),
        }
    }

    fn minima_guesses(&self) -> Vec<Vec<f64>> {
        match &self.family {
            Family::Quadratic { .. } => vec![vec![0.0]],
            Family::Quartic { .. } => vec![vec![-1.0], vec![1.0]],
            Family::DoubleWell2d { .. } => vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            Family::GaussianMixture { means, .. } => means.clone(),
            Family::TripleWell => vec![vec![-1.0], vec![0.0], vec![1.0]],
        }
    }

    /// Newton-polishes a minimum guess to machine precision. Exact guesses
    /// (zero gradient) pass through unchanged.
    fn refine_minimum(&self, mut x: Vec<f64>) -> Vec<f64> {
        for _ in 0..60 {
            let g = self.raw_gradient(&x);
            let gnorm = norm(&g);
            if gnorm < 1e-13 {
                break;
            }
            let h = self.fd_hessian(&x);
            let step = match h.clone().lu().solve(&nalgebra::DVector::from_vec(g.clone())) {
                Some(s) => s,
                None => nalgebra::DVector::from_vec(g.clone()),
            };
            // Fall back to a damped gradient step whenever Newton misbehaves.
            let mut cand: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi - si).collect();
            if self.raw_energy(&cand) > self.raw_energy(&x) {
                cand = x.iter().zip(&g).map(|(xi, gi)| xi - 0.05 * gi).collect();
            }
            x = cand;
        }
        x
    }

    /// Central-difference Hessian from the analytic gradient.
    pub(crate) fn fd_hessian(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        let d = x.len();
        let mut h = nalgebra::DMatrix::zeros(d, d);
        let eps = 1e-5;
        for j in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += eps;
            xm[j] -= eps;
            let gp = self.raw_gradient(&xp);
            let gm = self.raw_gradient(&xm);
            for i in 0..d {
                h[(i, j)] = (gp[i] - gm[i]) / (2.0 * eps);
            }
        }
        // Symmetrize away the finite-difference asymmetry.
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (h[(i, j)] + h[(j, i)]);
                h[(i, j)] = avg;
                h[(j, i)] = avg;
            }
        }
        h
    }

    /// Reference box: hull of the minima, padded to contain the sublevel
    /// set `{U <= max minima energy + 8}` along each axis.
    fn compute_reference_box(&self) -> (Vec<f64>, Vec<f64>) {
        let threshold = self
            .minima
            .iter()
            .map(|m| m.energy)
            .fold(0.0f64, f64::max)
            + self.offset
            + 8.0;
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for m in &self.minima {
            for (a, b) in lo.iter_mut().zip(&m.point) {
                *a = a.min(*b);
            }
            for (a, b) in hi.iter_mut().zip(&m.point) {
                *a = a.max(*b);
            }
        }
        // March outward axis by axis from the hull until the raw energy
        // exceeds the threshold on every face probe.
        for axis in 0..self.dim {
            let mut step = 0.25;
            loop {
                let mut probe = self.center();
                probe[axis] = lo[axis] - step;
                if self.raw_energy(&probe) > threshold {
                    lo[axis] -= step;
                    break;
                }
                step *= 1.5;
                if step > 1e6 {
                    lo[axis] -= step;
                    break;
                }
            }
            let mut step = 0.25;
            loop {
                let mut probe = self.center();
                probe[axis] = hi[axis] + step;
                if self.raw_energy(&probe) > threshold {
                    hi[axis] += step;
                    break;
                }
                step *= 1.5;
                if step > 1e6 {
                    hi[axis] += step;
                    break;
                }
            }
        }
        (lo, hi)
    }

    fn center(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for m in &self.minima {
            for (ci, pi) in c.iter_mut().zip(&m.point) {
                *ci += pi / self.minima.len() as f64;
            }
        }
        c
    }

    /// (sup |ΔU| over the box, min |∇U| on its boundary, sup U over [-1,1]^d).
    fn compute_metadata(&self) -> (f64, f64, f64) {
        let (lo, hi) = self.reference_box.clone();
        let n = 41usize;
        let mut c = 0.0f64;
        let mut c_u = f64::INFINITY;
        for idx in grid_indices(self.dim, n) {
            let x: Vec<f64> = idx
                .iter()
                .zip(lo.iter().zip(&hi))
                .map(|(&i, (a, b))| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect();
            c = c.max(self.raw_laplacian(&x).abs());
            let on_boundary = idx.iter().any(|&i| i == 0 || i == n - 1);
            if on_boundary {
                c_u = c_u.min(norm(&self.raw_gradient(&x)));
            }
        }
        let mut c_ini = f64::NEG_INFINITY;
        for idx in grid_indices(self.dim, 33) {
            let x: Vec<f64> = idx
                .iter()
                .map(|&i| -1.0 + 2.0 * i as f64 / 32.0)
                .collect();
            c_ini = c_ini.max(self.energy_unchecked(&x));
        }
        (c, c_u, c_ini)
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Iterator over the index tuples of a `d`-dimensional `n`-per-axis grid.
pub(crate) fn grid_indices(dim: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(dim as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0usize; dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_values() {
        let pot = Potential::quartic();
        assert_eq!(pot.evaluate(&[1.0]).unwrap(), 0.0);
        assert_eq!(pot.evaluate(&[0.0]).unwrap(), 1.0);
        assert_eq!(pot.gradient(&[0.0]).unwrap()[0], 0.0);
        assert_eq!(pot.gradient(&[1.0]).unwrap()[0], 0.0);
        // 4·0.5·(0.25−1) = −1.5
        assert!((pot.gradient(&[0.5]).unwrap()[0] + 1.5).abs() < 1e-15);
    }

    #[test]
    fn normalization_holds_for_all_builtins() {
        let pots = [
            Potential::quartic(),
            Potential::tilted_quartic(0.1),
            Potential::double_well_2d(1.0),
            Potential::triple_well(),
            Potential::quadratic(1.0),
            Potential::gaussian_mixture(2, 3.0, 0.5, 0.3).unwrap(),
        ];
        for pot in &pots {
            let m0 = &pot.minima()[0];
            assert_eq!(m0.energy, 0.0, "{}", pot.id());
            assert!(
                (pot.evaluate(&m0.point).unwrap()).abs() < 1e-14,
                "{}",
                pot.id()
            );
            let mut prev = 0.0;
            for m in pot.minima() {
                assert!(m.energy >= prev, "{}: energies must ascend", pot.id());
                prev = m.energy;
                let g = pot.gradient(&m.point).unwrap();
                assert!(norm(&g) < 1e-7, "{}: ∇U(min) = {:?}", pot.id(), g);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let pot = Potential::quartic();
        assert!(matches!(
            pot.evaluate(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            pot.gradient(&[]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tilted_quartic_orders_minima_by_energy() {
        let pot = Potential::tilted_quartic(0.1);
        // Tilt +0.1·(x+1) raises the right well, so the global minimum sits
        // near -1 and the second near +1.
        assert!(pot.minima()[0].point[0] < 0.0);
        assert!(pot.minima()[1].point[0] > 0.0);
        assert!(pot.minima()[1].energy > 0.15 && pot.minima()[1].energy < 0.25);
    }

    #[test]
    fn finite_difference_gradient_matches_analytic() {
        let pots = [
            Potential::quartic(),
            Potential::tilted_quartic(0.1),
            Potential::double_well_2d(2.0),
            Potential::triple_well(),
            Potential::gaussian_mixture(3, 3.0, 0.6, 0.4).unwrap(),
        ];
        let mut rng = crate::rng::stream_rng(crate::rng::StreamId::new(
            42,
            0,
            0,
            crate::rng::Purpose::Diagnostics,
        ));
        use rand::Rng;
        for pot in &pots {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..pot.dim())
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect();
                let g = pot.gradient(&x).unwrap();
                let h = 1e-6;
                for j in 0..pot.dim() {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (pot.evaluate(&xp).unwrap() - pot.evaluate(&xm).unwrap()) / (2.0 * h);
                    let tol = 1e-6 * (1.0 + g[j].abs()).max(1.0) + 1e-6;
                    assert!(
                        (fd - g[j]).abs() <= tol,
                        "{}: fd {} vs analytic {} at {:?}",
                        pot.id(),
                        fd,
                        g[j],
                        x
                    );
                }
            }
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let pot = Potential::gaussian_mixture(2, 3.0, 0.5, 0.5).unwrap();
        let x = [0.3, -0.4];
        let h = 1e-4;
        let mut fd = 0.0;
        for j in 0..2 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            fd += (pot.evaluate(&xp).unwrap() - 2.0 * pot.evaluate(&x).unwrap()
                + pot.evaluate(&xm).unwrap())
                / (h * h);
        }
        assert!((fd - pot.laplacian(&x).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn unknown_id_lists_valid_ones() {
        let err = Potential::from_id("unknown", &BTreeMap::new()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown"));
        assert!(msg.contains("quartic"));
        assert!(msg.contains("triple_well"));
    }

    #[test]
    fn metadata_is_positive_and_finite() {
        for pot in [
            Potential::quartic(),
            Potential::double_well_2d(1.0),
            Potential::gaussian_mixture(1, 3.0, 0.5, 0.5).unwrap(),
        ] {
            assert!(pot.laplacian_bound() > 0.0 && pot.laplacian_bound().is_finite());
            assert!(pot.gradient_liminf() > 0.0, "{}", pot.id());
            assert!(pot.initial_energy_bound().is_finite());
        }
        // Quartic on [-1,1]: max U is at the barrier top.
        assert!((Potential::quartic().initial_energy_bound() - 1.0).abs() < 1e-9);
    }
}
