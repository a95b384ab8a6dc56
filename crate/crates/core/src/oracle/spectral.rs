//! Finite-difference eigensolver for the generator `L_ε f = -εΔf + ∇U·∇f`
//! on its π_ε-weighted form.
//!
//! Discretizing the Dirichlet form `ε∫ f'g' dπ_ε` with zero-flux
//! boundaries gives the generalized symmetric tridiagonal pencil
//! `S ψ = λ D ψ` with conductances `c_j = ε·π̃(mid_j)/h` and lumped masses
//! `D_j = w_j·π̃(x_j)`. Constants are an exact kernel of `S`, so `λ_1 = 0`
//! to roundoff. Eigenvalues come from Sturm bisection on the pencil,
//! eigenvectors from shifted inverse iteration with mass-orthogonalization
//! against the modes already found.
//!
//! The metastable gap `λ_2` collapses like `e^{-γ̂/ε}` and falls below the
//! absolute resolution of the primal pencil at very low temperature.
//! [`spectral_gap`] therefore solves the equivalent flow-form pencil
//! `(B D⁻¹ Bᵀ) w = λ C⁻¹ w` (B the difference operator, C the
//! conductances), whose spectrum is exactly the nonzero spectrum of
//! `(S, D)` but graded so that bisection in log space resolves tiny gaps
//! at full relative accuracy.

use super::quadrature::GridSpec;
use crate::potential::{landscape_summary, LandscapeSummary, Potential};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Options for [`spectral_solve`].
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Number of modes to return (≤ 10).
    pub n_modes: usize,
    /// Grid override; `None` picks the quadrature auto-domain.
    pub grid: Option<GridSpec>,
    /// Slack α used for the truncation set `K` in `C_ψ` (and `B_i` in
    /// flatness checks downstream).
    pub alpha: f64,
    /// Per-axis node cap for the dense 2-d path.
    pub max_nodes_2d: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            n_modes: 4,
            grid: None,
            alpha: 1.0,
            max_nodes_2d: 33,
        }
    }
}

/// Low-lying spectrum of `L_ε` plus the eigenfunction data the
/// metastability checks consume. `psi2` is normalized in `L²(π_ε)` and
/// signed positive on the global-minimum basin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub potential_id: String,
    pub eps: f64,
    /// Ascending; `eigenvalues[0]` is the zero mode.
    pub eigenvalues: Vec<f64>,
    /// Λ estimate: `λ_{J+1}` for a J-well potential.
    pub lambda_gap: f64,
    /// 1-d only: grid nodes, their energies, and ψ₂ values there.
    pub nodes: Vec<f64>,
    pub node_energy: Vec<f64>,
    pub psi2: Vec<f64>,
    /// `a_{i,ε}`: two-well values solve `Σ aᵢπ(Ωᵢ) = 0`,
    /// `Σ aᵢ²π(Ωᵢ) = 1`; for J ≥ 3 they are basin averages of ψ₂.
    pub a_coefficients: Vec<f64>,
    /// `sup_K |ψ₂|`; `None` when the potential has fewer than two wells.
    pub c_psi: Option<f64>,
    pub well_count: usize,
    pub config_hash: String,
}

struct Pencil1d {
    nodes: Vec<f64>,
    /// Conductances `c_j` between nodes j and j+1 (length n-1).
    conduct: Vec<f64>,
    /// Lumped masses `D_j` (length n).
    mass: Vec<f64>,
    /// Symmetrized operator `A = D^{-1/2} S D^{-1/2}` (same spectrum as
    /// the pencil, but uniformly scaled entries ~ ε/h², so factorizations
    /// stay clean where the raw pencil spans hundreds of orders of
    /// magnitude).
    sym_diag: Vec<f64>,
    sym_off: Vec<f64>,
}

fn assemble_1d(pot: &Potential, eps: f64, grid: &GridSpec) -> Pencil1d {
    let nodes = grid.axis_nodes(0);
    let n = nodes.len();
    let h = nodes[1] - nodes[0];
    let mut conduct = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let mid = 0.5 * (nodes[j] + nodes[j + 1]);
        conduct.push(eps * (-pot.energy_unchecked(&[mid]) / eps).exp() / h);
    }
    let mut mass = Vec::with_capacity(n);
    for (j, &x) in nodes.iter().enumerate() {
        let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
        mass.push(w * (-pot.energy_unchecked(&[x]) / eps).exp());
    }
    let mut sym_diag = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i > 0 { conduct[i - 1] } else { 0.0 };
        let right = if i < n - 1 { conduct[i] } else { 0.0 };
        sym_diag.push((left + right) / mass[i]);
    }
    let mut sym_off = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        sym_off.push(-conduct[i] / (mass[i] * mass[i + 1]).sqrt());
    }
    Pencil1d {
        nodes,
        conduct,
        mass,
        sym_diag,
        sym_off,
    }
}

impl Pencil1d {
    fn n(&self) -> usize {
        self.mass.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm count on the
    /// symmetrized tridiagonal).
    fn count_below(&self, x: f64) -> usize {
        let n = self.n();
        let mut count = 0usize;
        let mut prev = 0.0f64;
        for i in 0..n {
            let mut d = self.sym_diag[i] - x;
            if i > 0 {
                d -= self.sym_off[i - 1] * self.sym_off[i - 1] / prev;
            }
            if d == 0.0 || d.is_nan() {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
            prev = d;
        }
        count
    }

    fn gershgorin(&self) -> f64 {
        let mut bound = 0.0f64;
        for i in 0..self.n() {
            let off = if i > 0 { self.sym_off[i - 1].abs() } else { 0.0 }
                + if i < self.n() - 1 {
                    self.sym_off[i].abs()
                } else {
                    0.0
                };
            bound = bound.max(self.sym_diag[i] + off);
        }
        bound
    }

    /// k-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let scale = self.gershgorin();
        let mut lo = -1e-10 * scale;
        let mut hi = scale * (1.0 + 1e-12);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) >= k + 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            let width = hi - lo;
            if width <= 1e-14 * hi.abs().max(lo.abs()) || width <= 1e-18 * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(A - shift·I) y = rhs` on the symmetrized operator by
    /// tridiagonal LU with partial pivoting (one superdiagonal of
    /// fill-in).
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.n();
        let mut d = vec![0.0f64; n]; // diagonal
        let mut du = vec![0.0f64; n]; // first superdiagonal (du[i]: row i, col i+1)
        let mut du2 = vec![0.0f64; n]; // fill-in second superdiagonal
        let mut dl = vec![0.0f64; n]; // subdiagonal (dl[i]: row i+1, col i)
        for i in 0..n {
            d[i] = self.sym_diag[i] - shift;
            if i + 1 < n {
                du[i] = self.sym_off[i];
                dl[i] = self.sym_off[i];
            }
        }
        let mut b = rhs.to_vec();
        for i in 0..n - 1 {
            if dl[i].abs() > d[i].abs() {
                // Swap rows i and i+1, then eliminate.
                let m = if dl[i] != 0.0 { d[i] / dl[i] } else { 0.0 };
                d[i] = dl[i];
                let old_di1 = d[i + 1];
                let old_dui1 = if i + 1 < n - 1 { du[i + 1] } else { 0.0 };
                d[i + 1] = du[i] - m * old_di1;
                du[i] = old_di1;
                du2[i] = old_dui1;
                if i + 1 < n - 1 {
                    du[i + 1] = -m * old_dui1;
                }
                b.swap(i, i + 1);
                b[i + 1] -= m * b[i];
            } else {
                if d[i] == 0.0 {
                    d[i] = 1e-300;
                }
                let m = dl[i] / d[i];
                d[i + 1] -= m * du[i];
                du2[i] = 0.0;
                b[i + 1] -= m * b[i];
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = 1e-300;
        }
        let mut y = vec![0.0f64; n];
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= du[i] * y[i + 1];
            }
            if i + 2 < n {
                acc -= du2[i] * y[i + 2];
            }
            y[i] = acc / d[i];
            if !y[i].is_finite() {
                return None;
            }
        }
        Some(y)
    }

    fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `∫ a b dπ̂` with the normalized discrete masses (ψ-space inner
    /// product).
    fn d_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let total = self.total_mass();
        a.iter()
            .zip(b)
            .zip(&self.mass)
            .map(|((x, y), m)| x * y * m / total)
            .sum()
    }

    /// Inverse iteration in the symmetrized basis at `shift`,
    /// l²-orthogonal to the φ-space modes in `prev`. Returns a unit-l²
    /// φ vector.
    fn eigenvector_sym(&self, shift: f64, prev: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.n();
        // Deterministic pseudo-random start.
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let h = (i as u64)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .rotate_left(17);
                (h % 2048) as f64 / 1024.0 - 1.0
            })
            .collect();
        orthonormalize_l2(&mut v, prev)?;
        let mut nudge = 1e-11;
        let scale = self.gershgorin();
        for _ in 0..60 {
            let effective_shift = shift + nudge * shift.abs().max(1e-14 * scale);
            match self.solve_shifted(effective_shift, &v) {
                Some(mut w) => match orthonormalize_l2(&mut w, prev) {
                    Ok(()) => {
                        let overlap: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
                        v = w;
                        if (overlap.abs() - 1.0).abs() < 1e-13 {
                            break;
                        }
                    }
                    Err(_) => {
                        nudge *= 16.0;
                    }
                },
                None => {
                    nudge *= 16.0;
                    if nudge > 1e-2 {
                        return Err(Error::Eigensolver(format!(
                            "inverse iteration stalled at shift {shift:.6e}"
                        )));
                    }
                }
            }
        }
        Ok(v)
    }
}

fn orthonormalize_l2(v: &mut [f64], prev: &[Vec<f64>]) -> Result<()> {
    for _ in 0..2 {
        for q in prev {
            let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
    let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 1e-150) {
        return Err(Error::Eigensolver(
            "orthogonalization annihilated the iterate".into(),
        ));
    }
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    Ok(())
}

/// Grid preparation: trim to the sublevel set `{U ≤ 120ε}` (keeps the
/// density's dynamic range inside what f64 factorizations tolerate while
/// leaving < e^{-120} of the mass outside), then push the boundary out if
/// it still carries more than 1e-10 of the discrete mass.
fn grid_with_boundary_check(pot: &Potential, eps: f64, grid: Option<GridSpec>) -> Result<GridSpec> {
    let mut grid = match grid {
        Some(g) => g,
        None => GridSpec::auto(pot, eps)?,
    };
    for _ in 0..8 {
        let cap = 120.0 * eps;
        let nodes = grid.axis_nodes(0);
        let first = nodes
            .iter()
            .position(|&x| pot.energy_unchecked(&[x]) <= cap);
        let last = nodes
            .iter()
            .rposition(|&x| pot.energy_unchecked(&[x]) <= cap);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::Eigensolver(
                "sublevel trim removed the whole grid".into(),
            ));
        };
        if last - first + 1 < 32 {
            return Err(Error::Eigensolver("trimmed grid has too few nodes".into()));
        }
        grid = GridSpec {
            lo: vec![nodes[first]],
            hi: vec![nodes[last]],
            nodes: vec![last - first + 1],
        };
        let p = assemble_1d(pot, eps, &grid);
        let total = p.total_mass();
        let boundary = p.mass[0] + p.mass[p.n() - 1];
        if boundary / total < 1e-10 {
            return Ok(grid);
        }
        let width = grid.hi[0] - grid.lo[0];
        grid.lo[0] -= 0.3 * width;
        grid.hi[0] += 0.3 * width;
        grid.nodes[0] = (grid.nodes[0] * 2 - 1).min(16385);
    }
    Err(Error::Eigensolver(
        "domain extension failed to push boundary mass below 1e-10".into(),
    ))
}

/// Solves for the lowest `n_modes` of the generator at temperature `eps`.
/// 1-d potentials get the full summary; 2-d tensor grids get eigenvalues
/// only (dense solve, capped grid).
pub fn spectral_solve(
    pot: &Potential,
    eps: f64,
    opts: &SpectralOptions,
) -> Result<SpectralSummary> {
    if opts.n_modes == 0 || opts.n_modes > 10 {
        return Err(Error::invalid("n_modes", "must be in 1..=10"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    match pot.dim() {
        1 => spectral_solve_1d(pot, eps, opts),
        2 => spectral_solve_2d(pot, eps, opts),
        d => Err(Error::UnsupportedDimension { max: 2, got: d }),
    }
}

fn spectral_solve_1d(
    pot: &Potential,
    eps: f64,
    opts: &SpectralOptions,
) -> Result<SpectralSummary> {
    let grid = grid_with_boundary_check(pot, eps, opts.grid.clone())?;
    let pencil = assemble_1d(pot, eps, &grid);

    let mut eigenvalues = Vec::with_capacity(opts.n_modes);
    for k in 0..opts.n_modes.min(pencil.n()) {
        eigenvalues.push(pencil.eigenvalue(k));
    }

    // Eigenvectors in the symmetrized basis φ = D^{1/2}ψ: φ₁ ∝ √D is
    // exact; higher modes by inverse iteration, deflating everything
    // already found.
    let n = pencil.n();
    let mut phi1: Vec<f64> = pencil.mass.iter().map(|&m| m.sqrt()).collect();
    orthonormalize_l2(&mut phi1, &[])?;
    let mut modes: Vec<Vec<f64>> = vec![phi1];
    for k in 1..opts.n_modes.min(n) {
        let v = pencil.eigenvector_sym(eigenvalues[k], &modes)?;
        modes.push(v);
    }

    // ψ₂ = φ₂/√D, normalized in L²(π̂). Where the discrete mass underflows
    // relative to the peak the back-transform is pure noise; those nodes
    // carry no measure and are zeroed.
    let mut psi2 = vec![0.0; n];
    if let Some(phi2) = modes.get(1) {
        let max_mass = pencil.mass.iter().cloned().fold(0.0f64, f64::max);
        for j in 0..n {
            if pencil.mass[j] > 1e-60 * max_mass {
                psi2[j] = phi2[j] / pencil.mass[j].sqrt();
            }
        }
        let norm = pencil.d_inner(&psi2, &psi2).sqrt();
        for v in psi2.iter_mut() {
            *v /= norm;
        }
    }

    let well_count = pot.minima().len();
    let mut a_coefficients = Vec::new();
    let mut c_psi = None;
    let mut landscape: Option<LandscapeSummary> = None;
    if well_count >= 2 {
        let ls = landscape_summary(pot, opts.alpha)?;
        // Sign convention: ψ₂ > 0 on the global-minimum basin, probed at
        // the node nearest the global minimum.
        let x_g = ls.minima[0].point[0];
        let nearest = pencil
            .nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - x_g).abs().partial_cmp(&(*b - x_g).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        if psi2[nearest] < 0.0 {
            for v in psi2.iter_mut() {
                *v = -*v;
            }
        }

        // Basin masses on this grid.
        let total = pencil.total_mass();
        let mut basin_mass = vec![0.0f64; well_count];
        let mut basin_psi = vec![0.0f64; well_count];
        for (j, &x) in pencil.nodes.iter().enumerate() {
            let b = ls.basin_index(pot, &[x])?;
            basin_mass[b] += pencil.mass[j] / total;
            basin_psi[b] += psi2[j] * pencil.mass[j] / total;
        }
        a_coefficients = if well_count == 2 {
            let a1 = (basin_mass[1] / basin_mass[0]).sqrt();
            vec![a1, -(basin_mass[0] / basin_mass[1]).sqrt()]
        } else {
            basin_psi
                .iter()
                .zip(&basin_mass)
                .map(|(p, m)| p / m)
                .collect()
        };

        let mut sup_k = 0.0f64;
        for (j, &x) in pencil.nodes.iter().enumerate() {
            if ls.in_k(pot, &[x])? {
                sup_k = sup_k.max(psi2[j].abs());
            }
        }
        c_psi = Some(sup_k);
        landscape = Some(ls);
    }
    let _ = landscape;

    let lambda_gap = eigenvalues
        .get(well_count.max(1))
        .cloned()
        .unwrap_or(f64::INFINITY);

    let node_energy = pencil
        .nodes
        .iter()
        .map(|&x| pot.energy_unchecked(&[x]))
        .collect();

    Ok(SpectralSummary {
        potential_id: pot.id().to_string(),
        eps,
        eigenvalues,
        lambda_gap,
        nodes: pencil.nodes,
        node_energy,
        psi2,
        a_coefficients,
        c_psi,
        well_count,
        config_hash: String::new(),
    })
}

/// Dense 2-d tensor-grid solve (eigenvalues only).
fn spectral_solve_2d(
    pot: &Potential,
    eps: f64,
    opts: &SpectralOptions,
) -> Result<SpectralSummary> {
    let mut grid = match &opts.grid {
        Some(g) => g.clone(),
        None => GridSpec::auto(pot, eps)?,
    };
    for n in grid.nodes.iter_mut() {
        if *n > opts.max_nodes_2d {
            *n = if opts.max_nodes_2d % 2 == 1 {
                opts.max_nodes_2d
            } else {
                opts.max_nodes_2d + 1
            };
        }
    }
    let xs = grid.axis_nodes(0);
    let ys = grid.axis_nodes(1);
    let (nx, ny) = (xs.len(), ys.len());
    let hx = xs[1] - xs[0];
    let hy = ys[1] - ys[0];
    let total = nx * ny;
    let flat = |i: usize, j: usize| i * ny + j;

    let wx = |i: usize| if i == 0 || i == nx - 1 { 0.5 * hx } else { hx };
    let wy = |j: usize| if j == 0 || j == ny - 1 { 0.5 * hy } else { hy };

    let mut mass = vec![0.0f64; total];
    for i in 0..nx {
        for j in 0..ny {
            let u = pot.energy_unchecked(&[xs[i], ys[j]]);
            mass[flat(i, j)] = wx(i) * wy(j) * (-u / eps).exp();
        }
    }
    let mut s = nalgebra::DMatrix::<f64>::zeros(total, total);
    // x-direction edges
    for i in 0..nx - 1 {
        for j in 0..ny {
            let mid = [(xs[i] + xs[i + 1]) * 0.5, ys[j]];
            let c = eps * (-pot.energy_unchecked(&mid) / eps).exp() * wy(j) / hx;
            let (a, b) = (flat(i, j), flat(i + 1, j));
            s[(a, a)] += c;
            s[(b, b)] += c;
            s[(a, b)] -= c;
            s[(b, a)] -= c;
        }
    }
    // y-direction edges
    for i in 0..nx {
        for j in 0..ny - 1 {
            let mid = [xs[i], (ys[j] + ys[j + 1]) * 0.5];
            let c = eps * (-pot.energy_unchecked(&mid) / eps).exp() * wx(i) / hy;
            let (a, b) = (flat(i, j), flat(i, j + 1));
            s[(a, a)] += c;
            s[(b, b)] += c;
            s[(a, b)] -= c;
            s[(b, a)] -= c;
        }
    }
    // Symmetrized dense problem D^{-1/2} S D^{-1/2}.
    for i in 0..total {
        for j in 0..total {
            if s[(i, j)] != 0.0 {
                s[(i, j)] /= (mass[i] * mass[j]).sqrt();
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(s);
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigenvalues.truncate(opts.n_modes);

    let well_count = pot.minima().len();
    let lambda_gap = eigenvalues
        .get(well_count.max(1))
        .cloned()
        .unwrap_or(f64::INFINITY);
    Ok(SpectralSummary {
        potential_id: pot.id().to_string(),
        eps,
        eigenvalues,
        lambda_gap,
        nodes: Vec::new(),
        node_energy: Vec::new(),
        psi2: Vec::new(),
        a_coefficients: Vec::new(),
        c_psi: None,
        well_count,
        config_hash: String::new(),
    })
}

/// The metastable gap `λ_2` via the flow-form pencil, reliable down to
/// exponentially small values (1-d only).
pub fn spectral_gap(pot: &Potential, eps: f64, grid: Option<GridSpec>) -> Result<f64> {
    if pot.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            max: 1,
            got: pot.dim(),
        });
    }
    let grid = grid_with_boundary_check(pot, eps, grid)?;
    let p = assemble_1d(pot, eps, &grid);
    let n = p.n();
    // T = B D^{-1} B^T (size n-1), mass C^{-1} = diag(1/c_j).
    let t_diag: Vec<f64> = (0..n - 1)
        .map(|j| 1.0 / p.mass[j] + 1.0 / p.mass[j + 1])
        .collect();
    let t_off: Vec<f64> = (1..n - 1).map(|j| -1.0 / p.mass[j]).collect();
    let m_inv: Vec<f64> = p.conduct.iter().map(|&c| 1.0 / c).collect();

    let count_below = |x: f64| -> usize {
        let mut count = 0usize;
        let mut prev = 0.0f64;
        for i in 0..n - 1 {
            let mut d = t_diag[i] - x * m_inv[i];
            if i > 0 {
                d -= t_off[i - 1] * t_off[i - 1] / prev;
            }
            if d == 0.0 || d.is_nan() {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
            prev = d;
        }
        count
    };

    let mut hi = 0.0f64;
    for i in 0..n - 1 {
        let off = if i > 0 { t_off[i - 1].abs() } else { 0.0 }
            + if i < n - 2 { t_off[i].abs() } else { 0.0 };
        hi = hi.max((t_diag[i] + off) / m_inv[i]);
    }
    hi *= 1.0 + 1e-10;
    let mut lo = hi * 1e-40;
    let mut guard = 0;
    while count_below(lo) > 0 && guard < 100 {
        lo *= 1e-6;
        guard += 1;
    }
    if count_below(lo) > 0 {
        return Err(Error::Eigensolver("failed to bracket the gap".into()));
    }
    // Log-space bisection: relative accuracy independent of magnitude.
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-11 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// `max_i sup_{nodes ∈ B_i} |ψ₂ - a_i|`: how flat the second
/// eigenfunction is on the deep wells.
pub fn eigenfunction_flatness(summary: &SpectralSummary, ls: &LandscapeSummary) -> Result<f64> {
    if summary.nodes.is_empty() || summary.a_coefficients.is_empty() {
        return Err(Error::Eigensolver(
            "summary carries no eigenfunction data (2-d or single-well solve?)".into(),
        ));
    }
    let mut worst = 0.0f64;
    for ((x, u), psi) in summary
        .nodes
        .iter()
        .zip(&summary.node_energy)
        .zip(&summary.psi2)
    {
        // B_i membership from the stored node energies and the 1-d cuts.
        let basin = basin_from_cuts(ls, *x);
        if u - ls.minima[basin].energy <= ls.b_threshold {
            worst = worst.max((psi - summary.a_coefficients[basin]).abs());
        }
    }
    Ok(worst)
}

fn basin_from_cuts(ls: &LandscapeSummary, x: f64) -> usize {
    let cuts: Vec<f64> = ls.saddles.iter().map(|s| s.point[0]).collect();
    let slot = cuts.iter().take_while(|&&c| x > c).count();
    // Position-ordered minima: recover index by ordering minima by x.
    let mut order: Vec<usize> = (0..ls.minima.len()).collect();
    order.sort_by(|&a, &b| {
        ls.minima[a].point[0]
            .partial_cmp(&ls.minima[b].point[0])
            .unwrap()
    });
    order[slot]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_spectrum_is_integer_ladder() {
        // L = -ε∂² + ωx∂ has eigenvalues kω independent of ε.
        let pot = Potential::quadratic(1.0);
        for eps in [1.0, 0.5] {
            let s = spectral_solve(&pot, eps, &SpectralOptions::default()).unwrap();
            assert!(s.eigenvalues[0].abs() < 1e-6, "{:?}", s.eigenvalues);
            for k in 1..4 {
                assert!(
                    (s.eigenvalues[k] - k as f64).abs() < 0.01 * k as f64,
                    "ε={eps}: {:?}",
                    s.eigenvalues
                );
            }
        }
    }

    #[test]
    fn constant_mode_is_exact_kernel() {
        let pot = Potential::quartic();
        let s = spectral_solve(&pot, 0.2, &SpectralOptions::default()).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-9 * s.eigenvalues[3]);
    }

    #[test]
    fn psi2_is_normalized_centered_and_signed() {
        let pot = Potential::quartic();
        let s = spectral_solve(&pot, 0.12, &SpectralOptions::default()).unwrap();
        // Rebuild the discrete masses to check the integrals.
        let grid = GridSpec {
            lo: vec![s.nodes[0]],
            hi: vec![*s.nodes.last().unwrap()],
            nodes: vec![s.nodes.len()],
        };
        let p = assemble_1d(&pot, 0.12, &grid);
        let total = p.total_mass();
        let mut norm = 0.0;
        let mut mean = 0.0;
        for j in 0..p.n() {
            norm += s.psi2[j] * s.psi2[j] * p.mass[j] / total;
            mean += s.psi2[j] * p.mass[j] / total;
        }
        assert!((norm - 1.0).abs() < 1e-6, "norm² = {norm}");
        assert!(mean.abs() < 1e-6, "mean = {mean}");
        // positive on the left (global-minimum) basin
        let left_idx = s.nodes.iter().position(|&x| x > -1.0).unwrap();
        assert!(s.psi2[left_idx] > 0.0);
    }

    #[test]
    fn symmetric_quartic_a_coefficients_are_plus_minus_one() {
        // Equal masses force a = (1, -1); the node on the basin cut keeps
        // the discrete masses from being exactly equal, so allow O(h·π(0)).
        let pot = Potential::quartic();
        let s = spectral_solve(&pot, 0.1, &SpectralOptions::default()).unwrap();
        assert!((s.a_coefficients[0] - 1.0).abs() < 1e-5, "{:?}", s.a_coefficients);
        assert!((s.a_coefficients[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        // ⟨ψ_i, ψ_j⟩_{π} = δ_ij for i,j ≤ 4, including the nearly
        // degenerate pair (λ₃, λ₄) that deflation has to separate.
        let pot = Potential::quartic();
        let eps = 0.15;
        let grid = grid_with_boundary_check(&pot, eps, None).unwrap();
        let p = assemble_1d(&pot, eps, &grid);
        let mut evs = Vec::new();
        for k in 0..4 {
            evs.push(p.eigenvalue(k));
        }
        let mut phi1: Vec<f64> = p.mass.iter().map(|&m| m.sqrt()).collect();
        orthonormalize_l2(&mut phi1, &[]).unwrap();
        let mut modes: Vec<Vec<f64>> = vec![phi1];
        for k in 1..4 {
            modes.push(p.eigenvector_sym(evs[k], &modes).unwrap());
        }
        // φ-orthonormality in l² is exactly ψ-orthonormality in L²(π̂).
        for i in 0..4 {
            for j in 0..4 {
                let ip: f64 = modes[i].iter().zip(&modes[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-6, "⟨ψ{i},ψ{j}⟩ = {ip}");
            }
        }
    }

    #[test]
    fn gap_solver_matches_primal_at_moderate_temperature() {
        let pot = Potential::quartic();
        for eps in [0.25, 0.15, 0.1] {
            let s = spectral_solve(&pot, eps, &SpectralOptions::default()).unwrap();
            let gap = spectral_gap(&pot, eps, None).unwrap();
            assert!(
                ((gap - s.eigenvalues[1]) / s.eigenvalues[1]).abs() < 1e-6,
                "ε={eps}: dual {gap} vs primal {}",
                s.eigenvalues[1]
            );
        }
    }

    #[test]
    fn gap_follows_arrhenius_law_down_to_tiny_values() {
        // log λ₂ ≈ const - γ̂/ε with γ̂ = 1 for the quartic; check the local
        // slopes stay within 12% even where λ₂ ~ e^{-32}.
        let pot = Potential::quartic();
        let inv_eps = [4.0, 8.0, 16.0, 32.0];
        let mut logs = Vec::new();
        for &ie in &inv_eps {
            let gap = spectral_gap(&pot, 1.0 / ie, None).unwrap();
            assert!(gap > 0.0);
            logs.push(gap.ln());
        }
        for w in 0..inv_eps.len() - 1 {
            let slope = -(logs[w + 1] - logs[w]) / (inv_eps[w + 1] - inv_eps[w]);
            assert!(
                (slope - 1.0).abs() < 0.12,
                "local slope {slope} between 1/ε = {} and {}",
                inv_eps[w],
                inv_eps[w + 1]
            );
        }
    }

    #[test]
    fn two_well_gap_structure() {
        // λ₂ collapses, λ₃ stays order one.
        let pot = Potential::quartic();
        let s_big = spectral_solve(&pot, 0.2, &SpectralOptions::default()).unwrap();
        let s_small = spectral_solve(&pot, 0.06, &SpectralOptions::default()).unwrap();
        assert!(s_small.eigenvalues[1] < s_big.eigenvalues[1] / 50.0);
        assert!(s_small.eigenvalues[2] > 1.0);
        assert!(s_small.lambda_gap == s_small.eigenvalues[2]);
    }

    #[test]
    fn triple_well_has_two_low_modes() {
        let pot = Potential::triple_well();
        let s = spectral_solve(&pot, 0.07, &SpectralOptions::default()).unwrap();
        // exactly J-1 = 2 eigenvalues below the Λ gap
        assert!(s.eigenvalues[1] < 1e-3, "{:?}", s.eigenvalues);
        assert!(s.eigenvalues[2] < 1e-3, "{:?}", s.eigenvalues);
        assert!(s.eigenvalues[3] > 1.0, "{:?}", s.eigenvalues);
        assert_eq!(s.well_count, 3);
        assert!(s.lambda_gap == s.eigenvalues[3]);
    }

    #[test]
    fn two_d_solver_matches_separable_sum() {
        // U(x,y) = (x²-1)² + y²/2 separates: spectrum is {λx_i + k·1}.
        let pot2 = Potential::double_well_2d(1.0);
        let eps = 0.35;
        let opts2 = SpectralOptions {
            n_modes: 4,
            max_nodes_2d: 31,
            ..SpectralOptions::default()
        };
        let s2 = spectral_solve(&pot2, eps, &opts2).unwrap();

        let pot1 = Potential::quartic();
        let s1 = spectral_solve(&pot1, eps, &SpectralOptions::default()).unwrap();
        // lowest modes: 0, λx₂, min(λx₃, ω, λx₂+ω)…
        let mut expect = vec![
            0.0,
            s1.eigenvalues[1],
            (s1.eigenvalues[2]).min(1.0).min(s1.eigenvalues[1] + 1.0),
        ];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, e) in expect.iter().enumerate() {
            assert!(
                (s2.eigenvalues[k] - e).abs() < 0.05 * (1.0 + e),
                "mode {k}: 2d {} vs separable {e}",
                s2.eigenvalues[k]
            );
        }
    }

    #[test]
    fn flatness_improves_as_temperature_drops() {
        let pot = Potential::quartic();
        let ls = landscape_summary(&pot, 1.0).unwrap();
        let dev_warm = eigenfunction_flatness(
            &spectral_solve(&pot, 0.1, &SpectralOptions::default()).unwrap(),
            &ls,
        )
        .unwrap();
        let dev_cold = eigenfunction_flatness(
            &spectral_solve(&pot, 0.06, &SpectralOptions::default()).unwrap(),
            &ls,
        )
        .unwrap();
        assert!(
            dev_cold < dev_warm,
            "flatness must improve: {dev_cold} !< {dev_warm}"
        );
    }
}
