//! Piecewise-linear finite elements for
//! `-d²/dx² ⊗ 𝕀 + 𝕀 ⊗ diag(λ) + V(x)` on `[0, L]` with boundary data
//! constrained by a unitary in Robin form.
//!
//! Nodes are numbered left to right and levels interleaved per node
//! (`dof = node · n_levels + level`), so the bulk matrices are banded with
//! half-bandwidth `n_levels`. Boundary data enter through the weak form:
//!
//! ```text
//! ⟨Φ, -Ψ''⟩ = ∫ Φ̄' Ψ' dx - ⟨φ, ψ̇⟩_∂ ,   ψ̇ = A_U ψ  on W⊥,   ψ = 0 on W
//! ```
//!
//! so the boundary contributes `-A_U` on the trace space, and the Dirichlet
//! subspace `W` is removed by restricting the boundary dofs to an orthonormal
//! basis of `W⊥`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::entanglement::HybridState;
use crate::error::{Error, Result};
use crate::extension::{BoundaryUnitary, Geometry, RobinData};
use crate::linalg::{self, c, CMatrix, CVector};

pub type Potential = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct FemProblem {
    pub n_elements: usize,
    pub domain_length: f64,
    /// `Interval`: boundary data at both ends. `HalfLine`: boundary data at
    /// `x = 0`, hard Dirichlet at the truncation point `x = L`.
    pub geometry: Geometry,
    pub bulk_eigenvalues: Vec<f64>,
    pub robin: RobinData,
    pub potential: Option<Potential>,
}

impl std::fmt::Debug for FemProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FemProblem")
            .field("n_elements", &self.n_elements)
            .field("domain_length", &self.domain_length)
            .field("geometry", &self.geometry)
            .field("bulk_eigenvalues", &self.bulk_eigenvalues)
            .field("potential", &self.potential.is_some())
            .finish()
    }
}

impl FemProblem {
    pub fn new(
        geometry: Geometry,
        n_elements: usize,
        domain_length: f64,
        bulk_eigenvalues: Vec<f64>,
        robin: RobinData,
    ) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidArgument("need at least one element".into()));
        }
        if !(domain_length > 0.0) {
            return Err(Error::InvalidArgument("domain length must be positive".into()));
        }
        if bulk_eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("need at least one level".into()));
        }
        let expected = geometry.boundary_points() * bulk_eigenvalues.len();
        if robin.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: robin.dim(),
            });
        }
        Ok(Self {
            n_elements,
            domain_length,
            geometry,
            bulk_eigenvalues,
            robin,
            potential: None,
        })
    }

    /// `[0, 1]` with boundary data at both ends.
    pub fn interval(n_elements: usize, bulk_eigenvalues: Vec<f64>, robin: RobinData) -> Result<Self> {
        Self::new(Geometry::Interval, n_elements, 1.0, bulk_eigenvalues, robin)
    }

    /// `[0, L]` standing in for the half-line, Dirichlet at `L`.
    pub fn truncated_half_line(
        n_elements: usize,
        length: f64,
        bulk_eigenvalues: Vec<f64>,
        robin: RobinData,
    ) -> Result<Self> {
        Self::new(Geometry::HalfLine, n_elements, length, bulk_eigenvalues, robin)
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = Some(potential);
        self
    }

    /// Same problem on a different mesh.
    pub fn refined(&self, n_elements: usize) -> Self {
        Self {
            n_elements,
            ..self.clone()
        }
    }

    pub fn n_levels(&self) -> usize {
        self.bulk_eigenvalues.len()
    }

    pub fn h(&self) -> f64 {
        self.domain_length / self.n_elements as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    pub fn full_dim(&self) -> usize {
        self.n_levels() * self.n_nodes()
    }

    pub fn mesh(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.domain_length * i as f64 / self.n_elements as f64).collect()
    }

    pub fn dof(&self, node: usize, level: usize) -> usize {
        node * self.n_levels() + level
    }

    /// Dofs carrying boundary data, in boundary-vector (level-outer) order.
    fn boundary_dofs(&self) -> Vec<usize> {
        let points: Vec<usize> = match self.geometry {
            Geometry::Interval => vec![0, self.n_elements],
            Geometry::HalfLine => vec![0],
        };
        (0..self.n_levels())
            .flat_map(|level| points.iter().map(move |&node| (node, level)))
            .map(|(node, level)| self.dof(node, level))
            .collect()
    }

    /// Dofs pinned to zero regardless of the unitary (truncation end).
    fn pinned_dofs(&self) -> Vec<usize> {
        match self.geometry {
            Geometry::Interval => Vec::new(),
            Geometry::HalfLine => (0..self.n_levels()).map(|l| self.dof(self.n_elements, l)).collect(),
        }
    }
}

/// Hermitian band storage: entry `(i, j)` for `|i - j| <= half_bandwidth`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    dim: usize,
    half_bandwidth: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(dim: usize, half_bandwidth: usize) -> Self {
        Self {
            dim,
            half_bandwidth,
            data: vec![c(0.0, 0.0); dim * (2 * half_bandwidth + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let w = self.half_bandwidth;
        if i.abs_diff(j) > w || i >= self.dim || j >= self.dim {
            None
        } else {
            Some(i * (2 * w + 1) + (j + w - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.slot(i, j).map_or(c(0.0, 0.0), |k| self.data[k])
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// Largest `|i - j|` with a nonzero entry.
    pub fn occupied_bandwidth(&self) -> usize {
        let mut widest = 0;
        for i in 0..self.dim {
            let lo = i.saturating_sub(self.half_bandwidth);
            let hi = (i + self.half_bandwidth).min(self.dim - 1);
            for j in lo..=hi {
                if self.get(i, j).norm() > 0.0 {
                    widest = widest.max(i.abs_diff(j));
                }
            }
        }
        widest
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            let hi = (i + self.half_bandwidth).min(self.dim - 1);
            for j in i..=hi {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &CVector) -> CVector {
        let mut y = CVector::zeros(self.dim);
        for i in 0..self.dim {
            let lo = i.saturating_sub(self.half_bandwidth);
            let hi = (i + self.half_bandwidth).min(self.dim - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        y
    }
}

/// Bulk matrices on the full mesh plus the reduced dense pair actually solved.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    /// Stiffness + level shifts + potential, before boundary terms.
    pub bulk_stiffness: BandMatrix,
    pub mass: BandMatrix,
    /// `-A_U` in boundary-vector order.
    pub boundary_term: CMatrix,
    /// Columns map reduced coordinates to full dofs.
    pub reduction: Reduction,
    pub stiffness_reduced: CMatrix,
    pub mass_reduced: CMatrix,
}

/// Full dofs = interior dofs copied verbatim, boundary dofs = `Q c`, pinned
/// dofs = 0. Reduced coordinates list `c` first, then the interior dofs, so
/// on the truncated half-line the reduced pencil stays banded.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub full_dim: usize,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// Orthonormal basis of `W⊥`, boundary-vector order.
    pub free_basis: CMatrix,
}

impl Reduction {
    pub fn reduced_dim(&self) -> usize {
        self.interior.len() + self.free_basis.ncols()
    }

    pub fn expand(&self, reduced: &CVector) -> CVector {
        let mut full = CVector::zeros(self.full_dim);
        let nq = self.free_basis.ncols();
        for (k, &d) in self.interior.iter().enumerate() {
            full[d] = reduced[nq + k];
        }
        let coeffs = reduced.rows(0, nq);
        let values = &self.free_basis * coeffs;
        for (k, &d) in self.boundary.iter().enumerate() {
            full[d] = values[k];
        }
        full
    }
}

const GAUSS: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

pub fn assemble(problem: &FemProblem) -> AssembledSystem {
    let n_levels = problem.n_levels();
    let h = problem.h();
    let dim = problem.full_dim();

    // Element matrices in parallel, scattered in element order.
    let locals: Vec<([[f64; 2]; 2], [[f64; 2]; 2])> = (0..problem.n_elements)
        .into_par_iter()
        .map(|e| {
            let stiff = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
            let mut pot = [[0.0; 2]; 2];
            if let Some(v) = &problem.potential {
                let x0 = e as f64 * h;
                for (xi, w) in GAUSS {
                    let t = 0.5 * (xi + 1.0);
                    let shape = [1.0 - t, t];
                    let vx = v(x0 + t * h) * w * 0.5 * h;
                    for a in 0..2 {
                        for b in 0..2 {
                            pot[a][b] += vx * shape[a] * shape[b];
                        }
                    }
                }
            }
            let mut k = stiff;
            for a in 0..2 {
                for b in 0..2 {
                    k[a][b] += pot[a][b];
                }
            }
            (k, pot)
        })
        .collect();

    let mass_local = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let mut stiffness = BandMatrix::zeros(dim, n_levels);
    let mut mass = BandMatrix::zeros(dim, n_levels);
    for (e, (k_local, _)) in locals.iter().enumerate() {
        for (level, lambda) in problem.bulk_eigenvalues.iter().enumerate() {
            let nodes = [problem.dof(e, level), problem.dof(e + 1, level)];
            for a in 0..2 {
                for b in 0..2 {
                    stiffness.add(nodes[a], nodes[b], c(k_local[a][b] + lambda * mass_local[a][b], 0.0));
                    mass.add(nodes[a], nodes[b], c(mass_local[a][b], 0.0));
                }
            }
        }
    }

    let boundary = problem.boundary_dofs();
    let pinned = problem.pinned_dofs();
    let interior: Vec<usize> = (0..dim).filter(|d| !boundary.contains(d) && !pinned.contains(d)).collect();
    let reduction = Reduction {
        full_dim: dim,
        interior,
        boundary,
        free_basis: problem.robin.free_basis.clone(),
    };
    let boundary_term = -problem.robin.robin_matrix.clone();
    let stiffness_reduced = reduce(&stiffness, Some(&boundary_term), &reduction);
    let mass_reduced = reduce(&mass, None, &reduction);

    AssembledSystem {
        bulk_stiffness: stiffness,
        mass,
        boundary_term,
        reduction,
        stiffness_reduced,
        mass_reduced,
    }
}

/// `Tᴴ (B + E) T`, where `E` is the boundary block.
fn reduce(band: &BandMatrix, boundary_block: Option<&CMatrix>, r: &Reduction) -> CMatrix {
    let ni = r.interior.len();
    let q = &r.free_basis;
    let nq = q.ncols();
    let mut out = CMatrix::zeros(ni + nq, ni + nq);
    let w = band.half_bandwidth();

    // Interior rows are banded in the full numbering; only neighbours matter.
    let position: std::collections::HashMap<usize, usize> =
        r.interior.iter().enumerate().map(|(k, &d)| (d, nq + k)).collect();
    for (k, &d) in r.interior.iter().enumerate() {
        let lo = d.saturating_sub(w);
        let hi = (d + w).min(band.dim() - 1);
        for j in lo..=hi {
            if let Some(&col) = position.get(&j) {
                out[(nq + k, col)] = band.get(d, j);
            }
        }
    }
    if nq == 0 {
        return out;
    }
    // Interior/boundary coupling B_IB Q.
    let nb = r.boundary.len();
    let mut coupling = CMatrix::zeros(ni, nb);
    for (b, &d) in r.boundary.iter().enumerate() {
        let lo = d.saturating_sub(w);
        let hi = (d + w).min(band.dim() - 1);
        for j in lo..=hi {
            if let Some(&row) = position.get(&j) {
                coupling[(row - nq, b)] = band.get(j, d);
            }
        }
    }
    let cq = &coupling * q;
    out.view_mut((nq, 0), (ni, nq)).copy_from(&cq);
    out.view_mut((0, nq), (nq, ni)).copy_from(&cq.adjoint());

    let mut bb = CMatrix::from_fn(nb, nb, |a, b| band.get(r.boundary[a], r.boundary[b]));
    if let Some(e) = boundary_block {
        bb += e;
    }
    let corner = q.adjoint() * bb * q;
    let corner = (&corner + corner.adjoint()) * c(0.5, 0.0);
    out.view_mut((0, 0), (nq, nq)).copy_from(&corner);
    out
}

#[derive(Debug, Clone)]
pub struct FemEigenpairs {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Full-dof coefficient vectors, M-orthonormal.
    pub eigenvectors: Vec<CVector>,
    /// Reduced coordinates of the same vectors.
    pub reduced_eigenvectors: Vec<CVector>,
    pub mesh: Vec<f64>,
    pub n_levels: usize,
}

impl FemEigenpairs {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Nodal values of eigenvector `k` on `level`.
    pub fn level_values(&self, k: usize, level: usize) -> Vec<Complex64> {
        let v = &self.eigenvectors[k];
        (0..self.mesh.len()).map(|node| v[node * self.n_levels + level]).collect()
    }

    /// Nodal interpolant as a sampled state, normalized and phase fixed.
    pub fn state(&self, k: usize) -> Result<HybridState> {
        let values = CMatrix::from_fn(self.mesh.len(), self.n_levels, |node, level| {
            self.eigenvectors[k][node * self.n_levels + level]
        });
        Ok(HybridState::new(self.mesh.clone(), values)?.normalized()?.phase_fixed())
    }

    /// Boundary-condition residual of eigenvector `k` with second-order
    /// one-sided difference derivatives, relative to the largest nodal value.
    /// Needs at least two elements.
    pub fn boundary_residual(&self, k: usize, boundary: &BoundaryUnitary) -> f64 {
        let n = self.mesh.len() - 1;
        let h = self.mesh[1] - self.mesh[0];
        let points = boundary.n_points();
        let mut phi = CVector::zeros(boundary.dim());
        let mut dphi = CVector::zeros(boundary.dim());
        for level in 0..self.n_levels {
            let u = self.level_values(k, level);
            phi[boundary.index(level, 0)] = u[0];
            dphi[boundary.index(level, 0)] = -(u[0] * -3.0 + u[1] * 4.0 - u[2]) / (2.0 * h);
            if points == 2 {
                phi[boundary.index(level, 1)] = u[n];
                dphi[boundary.index(level, 1)] = (u[n] * 3.0 - u[n - 1] * 4.0 + u[n - 2]) / (2.0 * h);
            }
        }
        let lhs = &phi - &dphi * linalg::I;
        let rhs = boundary.matrix() * (&phi + &dphi * linalg::I);
        let scale = self.eigenvectors[k].iter().map(|z| z.norm()).fold(0.0, f64::max);
        (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
    }
}

/// The `k` lowest eigenpairs of `K x = E M x` on the reduced space.
pub fn solve_lowest(problem: &FemProblem, k: usize) -> Result<FemEigenpairs> {
    let system = assemble(problem);
    let dim = system.reduction.reduced_dim();
    if k > dim {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs from a system of size {dim}")));
    }
    let (values, vectors) = linalg::generalized_hermitian_eigen(&system.stiffness_reduced, &system.mass_reduced)?;
    let reduced: Vec<CVector> = (0..k).map(|j| vectors.column(j).into_owned()).collect();
    Ok(FemEigenpairs {
        eigenvalues: values[..k].to_vec(),
        eigenvectors: reduced.iter().map(|v| system.reduction.expand(v)).collect(),
        reduced_eigenvectors: reduced,
        mesh: problem.mesh(),
        n_levels: problem.n_levels(),
    })
}

/// The `k` lowest eigenvalues only. Narrow-banded pencils (the truncated
/// half-line) are solved by inertia counting, the rest densely.
pub fn lowest_eigenvalues(problem: &FemProblem, k: usize) -> Result<Vec<f64>> {
    let system = assemble(problem);
    let dim = system.reduction.reduced_dim();
    if k > dim {
        return Err(Error::InvalidArgument(format!("requested {k} eigenvalues from a system of size {dim}")));
    }
    let (ks, ms) = (&system.stiffness_reduced, &system.mass_reduced);
    let w = bandwidth(ks).max(bandwidth(ms));
    if (w + 1) * (w + 1) * 64 < dim {
        return banded_lowest(ks, ms, w, k);
    }
    let values = linalg::generalized_hermitian_eigenvalues(ks, ms)?;
    Ok(values[..k].to_vec())
}

fn bandwidth(m: &CMatrix) -> usize {
    let mut w = 0;
    for j in 0..m.ncols() {
        for i in (j + w + 1)..m.nrows() {
            if m[(i, j)].norm() > 0.0 {
                w = i - j;
            }
        }
    }
    w
}

/// Number of eigenvalues of `K x = E M x` below `shift`: negative pivots of
/// `K - shift·M = L D Lᴴ` (Sylvester's law of inertia, `M` positive definite).
fn inertia_below(k: &CMatrix, m: &CMatrix, w: usize, shift: f64) -> usize {
    let n = k.nrows();
    let a = |i: usize, j: usize| k[(i, j)] - m[(i, j)] * shift;
    // l[r][t] = L[r, r - 1 - t] for t < w.
    let mut l = vec![vec![c(0.0, 0.0); w]; n];
    let mut d = vec![0.0f64; n];
    let mut negative = 0;
    for j in 0..n {
        let lo = j.saturating_sub(w);
        let mut dj = a(j, j).re;
        for i in lo..j {
            dj -= l[j][j - 1 - i].norm_sqr() * d[i];
        }
        if dj == 0.0 {
            dj = f64::EPSILON * a(j, j).norm().max(1e-300);
        }
        d[j] = dj;
        if dj < 0.0 {
            negative += 1;
        }
        for r in (j + 1)..=(j + w).min(n - 1) {
            let mut v = a(r, j);
            for i in r.saturating_sub(w).max(lo)..j {
                v -= l[r][r - 1 - i] * l[j][j - 1 - i].conj() * d[i];
            }
            l[r][r - 1 - j] = v / dj;
        }
    }
    negative
}

fn banded_lowest(k: &CMatrix, m: &CMatrix, w: usize, count: usize) -> Result<Vec<f64>> {
    let below = |x: f64| inertia_below(k, m, w, x);
    let mut lo = -1.0;
    while below(lo) > 0 {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(Error::Numerical("no lower spectral bound".into()));
        }
    }
    let mut hi = 1.0;
    while below(hi) < count {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("no upper spectral bound".into()));
        }
    }
    Ok((0..count)
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if below(mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect())
}

/// Repeated Richardson extrapolation of the `k` lowest eigenvalues from the
/// meshes `finest / 2^j`, `j < levels`, assuming an even error expansion in `h`.
pub fn richardson_eigenvalues(problem: &FemProblem, k: usize, finest: usize, levels: usize) -> Result<Vec<f64>> {
    if levels == 0 || finest % (1 << (levels - 1)) != 0 {
        return Err(Error::InvalidArgument("finest mesh must be divisible by 2^(levels-1)".into()));
    }
    let mut table: Vec<Vec<f64>> = (0..levels)
        .rev()
        .map(|j| lowest_eigenvalues(&problem.refined(finest >> j), k))
        .collect::<Result<_>>()?;
    // table[0] coarsest .. table[levels-1] finest.
    let mut factor = 4.0;
    while table.len() > 1 {
        table = table
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(f, c)| (factor * f - c) / (factor - 1.0)).collect())
            .collect();
        factor *= 4.0;
    }
    Ok(table.pop().expect("one row left"))
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n_elements: usize,
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    /// `|E_h - E_ref|` per eigenvalue.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log err` against `log h`, per eigenvalue.
    pub observed_order: Vec<f64>,
}

/// Errors of the `k` lowest eigenvalues against `reference` over a sequence
/// of meshes.
pub fn convergence_study(
    problem: &FemProblem,
    k: usize,
    refinements: &[usize],
    reference: &[f64],
) -> Result<ConvergenceTable> {
    if reference.len() < k {
        return Err(Error::InvalidArgument("reference spectrum shorter than k".into()));
    }
    if refinements.len() < 2 {
        return Err(Error::InvalidArgument("need at least two meshes".into()));
    }
    let rows: Vec<ConvergenceRow> = refinements
        .iter()
        .map(|&n| {
            let p = problem.refined(n);
            let eigenvalues = lowest_eigenvalues(&p, k)?;
            let errors = eigenvalues.iter().zip(reference).map(|(a, b)| (a - b).abs()).collect();
            Ok(ConvergenceRow {
                n_elements: n,
                h: p.h(),
                eigenvalues,
                errors,
            })
        })
        .collect::<Result<_>>()?;
    let observed_order = (0..k)
        .map(|j| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), r.errors[j].max(1e-300).ln())).collect();
            slope(&pts)
        })
        .collect();
    Ok(ConvergenceTable { rows, observed_order })
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `|E_h - E| <= C h² (1 + ε)²` with `ε = max_b |E - λ_b|`, the largest
/// kinetic energy over the levels. For a single level at `λ = 0` this is
/// `C h² (1 + |E|)²`; measuring from the levels keeps the bound invariant
/// under a common shift of the spectrum, as the discretization error is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub constant: f64,
}

impl ErrorModel {
    /// Fits `C` as the worst ratio over the six lowest Dirichlet eigenvalues
    /// `(jπ)²` of a single level on `[0, 1]` at `n_elements`.
    pub fn calibrate(n_elements: usize) -> Result<Self> {
        let dirichlet = BoundaryUnitary::new(-CMatrix::identity(2, 2), 2, 1)?;
        let robin = crate::extension::cayley_to_robin(&dirichlet);
        let problem = FemProblem::interval(n_elements, vec![0.0], robin)?;
        let values = lowest_eigenvalues(&problem, 6)?;
        let h = problem.h();
        let constant = values
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let exact = ((j + 1) as f64 * std::f64::consts::PI).powi(2);
                (e - exact).abs() / (h * h * (1.0 + exact).powi(2))
            })
            .fold(0.0, f64::max);
        Ok(Self { constant })
    }

    pub fn tolerance(&self, h: f64, exact: f64, bulk_eigenvalues: &[f64]) -> f64 {
        let scale = if bulk_eigenvalues.is_empty() {
            exact.abs()
        } else {
            bulk_eigenvalues.iter().map(|l| (exact - l).abs()).fold(0.0, f64::max)
        };
        self.constant * h * h * (1.0 + scale).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{cayley_to_robin, make_quasi_periodic, tensor_boundary};
    use std::f64::consts::PI;

    fn interval_problem(u: CMatrix, levels: Vec<f64>, n: usize) -> FemProblem {
        let points = 2;
        let b = BoundaryUnitary::new(u, points, levels.len()).unwrap();
        FemProblem::interval(n, levels, cayley_to_robin(&b)).unwrap()
    }

    #[test]
    fn dirichlet_ground_state_converges_to_pi_squared() {
        let coarse = lowest_eigenvalues(&interval_problem(-CMatrix::identity(2, 2), vec![0.0], 100), 1).unwrap()[0];
        let fine = lowest_eigenvalues(&interval_problem(-CMatrix::identity(2, 2), vec![0.0], 200), 1).unwrap()[0];
        let target = PI * PI;
        assert!(coarse > target && fine > target);
        let ratio = (coarse - target) / (fine - target);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn neumann_ground_state_is_constant() {
        let pairs = solve_lowest(&interval_problem(CMatrix::identity(2, 2), vec![0.0], 50), 2).unwrap();
        assert!(pairs.eigenvalues[0].abs() < 1e-10);
        let v = pairs.level_values(0, 0);
        assert!(v.iter().all(|z| (z - v[0]).norm() < 1e-10));
        assert!(pairs.eigenvalues[1] > 9.0);
    }

    #[test]
    fn quasi_periodic_pairs_per_spin() {
        let u = tensor_boundary(&make_quasi_periodic(PI / 2.0), &CMatrix::identity(2, 2)).unwrap();
        let p = FemProblem::interval(400, vec![0.0, 0.0], cayley_to_robin(&u)).unwrap();
        let values = lowest_eigenvalues(&p, 4).unwrap();
        let want = [PI * PI / 4.0, PI * PI / 4.0, 9.0 * PI * PI / 4.0, 9.0 * PI * PI / 4.0];
        for (got, w) in values.iter().zip(want) {
            assert!((got - w).abs() < 2e-3, "{got} vs {w}");
        }
    }

    #[test]
    fn band_structure_and_definiteness() {
        let u = tensor_boundary(&make_quasi_periodic(0.4), &crate::linalg::random_unitary(2, &mut rand::rng())).unwrap();
        let p = FemProblem::interval(40, vec![1.0, -1.0], cayley_to_robin(&u)).unwrap();
        let sys = assemble(&p);
        assert!(sys.bulk_stiffness.occupied_bandwidth() <= p.n_levels());
        assert!(sys.mass.occupied_bandwidth() <= p.n_levels());
        assert!(sys.bulk_stiffness.hermiticity_defect() < 1e-12);
        assert!(linalg::hermiticity_defect(&sys.stiffness_reduced) < 1e-12);
        let (mass_eigs, _) = linalg::hermitian_eigen(&sys.mass_reduced);
        assert!(mass_eigs[0] > 0.0);
    }

    #[test]
    fn eigenpairs_are_mass_orthonormal_with_exact_rayleigh_quotients() {
        let u = tensor_boundary(&make_quasi_periodic(1.1), &crate::linalg::random_unitary(2, &mut rand::rng())).unwrap();
        let p = FemProblem::interval(60, vec![2.0, -2.0], cayley_to_robin(&u)).unwrap();
        let sys = assemble(&p);
        let pairs = solve_lowest(&p, 5).unwrap();
        for i in 0..5 {
            let xi = &pairs.reduced_eigenvectors[i];
            let rq = (xi.adjoint() * &sys.stiffness_reduced * xi)[0].re / (xi.adjoint() * &sys.mass_reduced * xi)[0].re;
            assert!((rq - pairs.eigenvalues[i]).abs() <= 1e-10 * pairs.eigenvalues[i].abs().max(1.0));
            for j in 0..5 {
                let g = (xi.adjoint() * &sys.mass_reduced * &pairs.reduced_eigenvectors[j])[0];
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn potential_shifts_spectrum() {
        let base = interval_problem(-CMatrix::identity(2, 2), vec![0.0], 200);
        let shifted = base.clone().with_potential(Arc::new(|_| 3.0));
        let a = lowest_eigenvalues(&base, 3).unwrap();
        let b = lowest_eigenvalues(&shifted, 3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn richardson_sharpens_robin_bound_state() {
        let robin = cayley_to_robin(&crate::halfline::boundary_unitary(&[2.0 * 1.5f64.atan()]).unwrap());
        let p = FemProblem::truncated_half_line(400, 40.0, vec![0.0], robin).unwrap();
        let plain = lowest_eigenvalues(&p, 1).unwrap()[0];
        let extrapolated = richardson_eigenvalues(&p, 1, 400, 3).unwrap()[0];
        let exact = -2.25;
        assert!((extrapolated - exact).abs() < 0.01 * (plain - exact).abs());
    }

    #[test]
    fn inertia_counting_matches_dense_solver() {
        let u = crate::extension::BoundaryUnitary::new(crate::linalg::random_unitary(2, &mut rand::rng()), 1, 2).unwrap();
        let p = FemProblem::truncated_half_line(300, 10.0, vec![1.0, -0.5], cayley_to_robin(&u)).unwrap();
        let sys = assemble(&p);
        let w = bandwidth(&sys.stiffness_reduced);
        assert!(w <= 2 * p.n_levels());
        let banded = banded_lowest(&sys.stiffness_reduced, &sys.mass_reduced, w, 5).unwrap();
        let dense = linalg::generalized_hermitian_eigenvalues(&sys.stiffness_reduced, &sys.mass_reduced).unwrap();
        for (a, b) in banded.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_mismatched_robin() {
        let b = BoundaryUnitary::new(CMatrix::identity(2, 2), 2, 1).unwrap();
        assert!(FemProblem::interval(10, vec![0.0, 1.0], cayley_to_robin(&b)).is_err());
        let p = FemProblem::interval(2, vec![0.0], cayley_to_robin(&b)).unwrap();
        assert!(solve_lowest(&p, 10).is_err());
    }
}
