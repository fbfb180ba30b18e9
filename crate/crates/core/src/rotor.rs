//! Exact spectrum of `-d²/dx² ⊗ 𝕀 + 𝕀 ⊗ diag(λ)` on `[0, 1]` for an arbitrary
//! boundary unitary, by matching the general solution to the boundary
//! condition.
//!
//! On each level the general solution is `a cos(κx) + b sin(κx)/κ` with
//! `κ² = E - λ`. Both basis functions are entire in `κ²`, so the matching
//! matrix is an entire function of `E` with no branch points; at `κ = 0` they
//! reduce to `{1, x}`. The plane-wave form `A e^{iκx} + B e^{-iκx}` is related
//! by `a = A + B`, `b = iκ(A - B)`.
//!
//! Deep below a level (`κ² < -1`) the pair is replaced by `e^{-|κ|x}` and
//! `e^{-|κ|(1-x)}`. The two bases span the same space, so the roots are
//! unchanged, but only the exponential pair stays well conditioned there.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::entanglement::HybridState;
use crate::error::{Error, Result};
use crate::extension::{make_quasi_periodic, tensor_boundary, BoundaryUnitary};
use crate::linalg::{self, c, cis, CMatrix, CVector};
use crate::roots;
use crate::spectrum::SpectralResult;

#[derive(Debug, Clone)]
pub struct MatchingProblem {
    /// Level energies `λ_ℓ` in boundary-vector order.
    pub bulk_eigenvalues: Vec<f64>,
    pub boundary: BoundaryUnitary,
}

impl MatchingProblem {
    pub fn new(bulk_eigenvalues: Vec<f64>, boundary: BoundaryUnitary) -> Result<Self> {
        let expected = 2 * bulk_eigenvalues.len();
        if bulk_eigenvalues.is_empty() || boundary.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: boundary.dim(),
            });
        }
        Ok(Self {
            bulk_eigenvalues,
            boundary,
        })
    }

    /// Rotor ⊗ spin with `H_B = μσ_z`: level 0 is spin up (`+μ`).
    pub fn rotor(mu: f64, boundary: BoundaryUnitary) -> Result<Self> {
        Self::new(vec![mu, -mu], boundary)
    }

    pub fn n_levels(&self) -> usize {
        self.bulk_eigenvalues.len()
    }

    /// Principal `κ_ℓ = √(E - λ_ℓ)`, `Im κ ≥ 0`.
    pub fn wavenumbers(&self, energy: f64) -> Vec<Complex64> {
        self.bulk_eigenvalues.iter().map(|l| c(energy - l, 0.0).sqrt()).collect()
    }
}

/// Quasi-periodic rotor with a diagonal spin factor `diag(e^{iα}, e^{-iα})`.
pub fn diagonal_family(delta: f64, alpha: f64) -> BoundaryUnitary {
    let ub = CMatrix::from_diagonal(&CVector::from_column_slice(&[cis(alpha), cis(-alpha)]));
    tensor_boundary(&make_quasi_periodic(delta), &ub).expect("unitary factors")
}

/// Quasi-periodic rotor with an anti-diagonal spin factor
/// `[[0, e^{iβ}], [e^{-iβ}, 0]]`.
pub fn antidiagonal_family(delta: f64, beta: f64) -> BoundaryUnitary {
    let zero = c(0.0, 0.0);
    let ub = CMatrix::from_row_slice(2, 2, &[zero, cis(beta), cis(-beta), zero]);
    tensor_boundary(&make_quasi_periodic(delta), &ub).expect("unitary factors")
}

/// Below this `κ² = q` the solution basis switches to decaying exponentials.
const EVANESCENT_SWITCH: f64 = -1.0;

/// Real solution basis for `κ² = q` and its x-derivatives,
/// `[f₁, f₂, f₁', f₂']`: `(cos κx, sin(κx)/κ)` for `q ≥ -1`, and
/// `(e^{-|κ|x}, e^{-|κ|(1-x)})` below, where `cosh` and `sinh/κ` become
/// numerically parallel on `[0, 1]`.
fn basis(q: f64, x: f64) -> [f64; 4] {
    if q < EVANESCENT_SWITCH {
        let k = (-q).sqrt();
        let left = (-k * x).exp();
        let right = (-k * (1.0 - x)).exp();
        return [left, right, -k * left, k * right];
    }
    let z = q * x * x;
    let (cv, sv) = if z.abs() < 1e-3 {
        // Series in z = q x²; truncation error below 1e-16 here.
        let cv = 1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0 + z * z * z * z / 40320.0;
        let sv = x * (1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0 + z * z * z * z / 362_880.0);
        (cv, sv)
    } else if q > 0.0 {
        let k = q.sqrt();
        ((k * x).cos(), (k * x).sin() / k)
    } else {
        let k = (-q).sqrt();
        ((k * x).cosh(), (k * x).sinh() / k)
    };
    // (cos κx)' = -κ² sin(κx)/κ, (sin(κx)/κ)' = cos κx.
    [cv, sv, -q * sv, cv]
}

/// Maps solution coefficients `(a_0, b_0, a_1, b_1, …)` to boundary data.
/// Returns `(φ, φ̇)` matrices, rows in boundary-vector order.
fn boundary_maps(problem: &MatchingProblem, energy: f64) -> (CMatrix, CMatrix) {
    let n = problem.n_levels();
    let dim = 2 * n;
    let mut phi = CMatrix::zeros(dim, dim);
    let mut dphi = CMatrix::zeros(dim, dim);
    for (level, lambda) in problem.bulk_eigenvalues.iter().enumerate() {
        let q = energy - lambda;
        let at0 = basis(q, 0.0);
        let at1 = basis(q, 1.0);
        let r0 = problem.boundary.index(level, 0);
        let r1 = problem.boundary.index(level, 1);
        for j in 0..2 {
            let col = 2 * level + j;
            phi[(r0, col)] = c(at0[j], 0.0);
            phi[(r1, col)] = c(at1[j], 0.0);
            // Outward normal derivative: -Φ'(0) and +Φ'(1).
            dphi[(r0, col)] = c(-at0[2 + j], 0.0);
            dphi[(r1, col)] = c(at1[2 + j], 0.0);
        }
    }
    (phi, dphi)
}

/// `M(E) = T₋(E) - U T₊(E)`, with `T∓` sending coefficients to `φ ∓ iφ̇`.
/// Singular exactly at eigenvalues.
pub fn matching_matrix(energy: f64, problem: &MatchingProblem) -> CMatrix {
    let (phi, dphi) = boundary_maps(problem, energy);
    let minus = &phi - &dphi * linalg::I;
    let plus = &phi + &dphi * linalg::I;
    minus - problem.boundary.matrix() * plus
}

/// Smallest singular value of the matching matrix.
pub fn spectral_indicator(energy: f64, problem: &MatchingProblem) -> f64 {
    linalg::min_singular_value(&matching_matrix(energy, problem))
}

/// A number no larger than the lowest eigenvalue. With `a` the largest
/// eigenvalue of the Robin matrix and `|f(p)|² ≤ (1 + 1/ε)‖f‖² + ε‖f'‖²` at
/// each endpoint, `ε = 1/(2a)` gives `E ≥ min λ - 4a² - 2a`.
pub fn spectral_lower_bound(problem: &MatchingProblem) -> f64 {
    let robin = crate::extension::cayley_to_robin(&problem.boundary);
    let (values, _) = linalg::hermitian_eigen(&robin.robin_matrix);
    let a = values.last().copied().unwrap_or(0.0).max(0.5);
    let lambda_min = problem.bulk_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    lambda_min - 4.0 * a * a - 2.0 * a - 1.0
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub step: f64,
    /// Root refinement width.
    pub tolerance: f64,
    /// Relative singular value threshold for nullity.
    pub nullity_threshold: f64,
    /// Relative indicator value a refined minimum must reach to count as a root.
    pub acceptance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            tolerance: 1e-10,
            nullity_threshold: 1e-7,
            acceptance: 1e-8,
        }
    }
}

/// Scans `[e_min, e_max]`, brackets local minima of the indicator, refines
/// them by golden section, and keeps the ones that are true zeros. At most
/// `k_max` distinct eigenvalues, ascending.
pub fn find_eigenvalues(problem: &MatchingProblem, e_min: f64, e_max: f64, k_max: usize) -> Result<SpectralResult> {
    find_eigenvalues_with(problem, e_min, e_max, k_max, ScanOptions::default())
}

pub fn find_eigenvalues_with(
    problem: &MatchingProblem,
    e_min: f64,
    e_max: f64,
    k_max: usize,
    options: ScanOptions,
) -> Result<SpectralResult> {
    if !(e_min < e_max) {
        return Err(Error::InvalidArgument(format!("empty window [{e_min}, {e_max}]")));
    }
    if !(options.step > 0.0) {
        return Err(Error::InvalidArgument("scan step must be positive".into()));
    }
    let grid = roots::grid(e_min, e_max, options.step);
    let values: Vec<f64> = grid.par_iter().map(|&e| spectral_indicator(e, problem)).collect();

    let mut result = SpectralResult::default();
    for (lo, hi) in roots::local_minima(&values) {
        if result.eigenvalues.len() >= k_max {
            break;
        }
        let f = |e: f64| spectral_indicator(e, problem);
        let (root, value) = roots::golden_section(f, grid[lo], grid[hi], options.tolerance);
        let s = linalg::singular_values(&matching_matrix(root, problem));
        let scale = s[0].max(1.0);
        if value > options.acceptance * scale {
            continue;
        }
        if let Some(&last) = result.eigenvalues.last() {
            if (root - last).abs() < options.step {
                continue;
            }
        }
        let nullity = s.iter().filter(|&&x| x < options.nullity_threshold * scale).count().max(1);
        result.eigenvalues.push(root);
        result.multiplicities.push(nullity);
    }
    Ok(result)
}

/// A solution of the matching problem at an eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigenmode {
    pub energy: f64,
    /// `(a_0, b_0, a_1, b_1, …)`, scaled so the mode has unit L² norm on the
    /// sampling grid and its largest sample is real positive.
    pub coefficients: CVector,
    bulk: Vec<f64>,
}

impl Eigenmode {
    pub fn value(&self, x: f64, level: usize) -> Complex64 {
        let b = basis(self.energy - self.bulk[level], x);
        self.coefficients[2 * level] * b[0] + self.coefficients[2 * level + 1] * b[1]
    }

    pub fn derivative(&self, x: f64, level: usize) -> Complex64 {
        let b = basis(self.energy - self.bulk[level], x);
        self.coefficients[2 * level] * b[2] + self.coefficients[2 * level + 1] * b[3]
    }

    /// `max |(φ - iφ̇) - U(φ + iφ̇)|` from the analytic boundary data.
    pub fn boundary_residual(&self, boundary: &BoundaryUnitary) -> f64 {
        let n = self.bulk.len();
        let mut phi = CVector::zeros(2 * n);
        let mut dphi = CVector::zeros(2 * n);
        for level in 0..n {
            phi[boundary.index(level, 0)] = self.value(0.0, level);
            phi[boundary.index(level, 1)] = self.value(1.0, level);
            dphi[boundary.index(level, 0)] = -self.derivative(0.0, level);
            dphi[boundary.index(level, 1)] = self.derivative(1.0, level);
        }
        let lhs = &phi - &dphi * linalg::I;
        let rhs = boundary.matrix() * (&phi + &dphi * linalg::I);
        (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |-Φ'' + λΦ - EΦ|` at `x`, with `Φ''` from a fourth-order central
    /// difference of the analytic form at spacing `h`.
    pub fn ode_residual(&self, x: f64, h: f64) -> f64 {
        (0..self.bulk.len())
            .map(|level| {
                let f = |t: f64| self.value(t, level);
                let second = (-f(x - 2.0 * h) + f(x - h) * 16.0 - f(x) * 30.0 + f(x + h) * 16.0 - f(x + 2.0 * h))
                    / (12.0 * h * h);
                (-second + f(x) * (self.bulk[level] - self.energy)).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn sample(&self, m: usize) -> Result<HybridState> {
        HybridState::sample(1.0, m, self.bulk.len(), |x, b| self.value(x, b))
    }
}

/// Orthonormal eigenmodes spanning the null space of `M(E)`. `multiplicity`
/// caps the count; pass `None` to take every singular value below the
/// nullity threshold.
pub fn assemble_eigenmodes(
    energy: f64,
    problem: &MatchingProblem,
    m: usize,
    multiplicity: Option<usize>,
) -> Result<Vec<Eigenmode>> {
    let options = ScanOptions::default();
    let matrix = matching_matrix(energy, problem);
    let (values, vectors) = linalg::right_singular_pairs(&matrix);
    let scale = values.last().copied().unwrap_or(0.0).max(1.0);
    if values[0] > options.nullity_threshold * scale {
        return Err(Error::NotAnEigenvalue {
            energy,
            indicator: values[0],
        });
    }
    let nullity = values.iter().filter(|&&s| s < options.nullity_threshold * scale).count();
    let count = multiplicity.map_or(nullity, |d| d.min(nullity).max(1));

    let raw: Vec<Eigenmode> = vectors
        .into_iter()
        .take(count)
        .map(|v| Eigenmode {
            energy,
            coefficients: v,
            bulk: problem.bulk_eigenvalues.clone(),
        })
        .collect();
    // Orthonormalize on the sampling grid, then fix each phase; both act on
    // the coefficients so analytic and sampled forms agree.
    let sampled = raw.iter().map(|mode| mode.sample(m)).collect::<Result<Vec<_>>>()?;
    let gram = CMatrix::from_fn(count, count, |i, j| sampled[i].inner(&sampled[j]));
    let chol = gram.cholesky().ok_or(Error::ZeroNorm)?;
    let coefficients = CMatrix::from_columns(&raw.iter().map(|r| r.coefficients.clone()).collect::<Vec<_>>());
    let orthonormal = chol
        .l()
        .adjoint()
        .solve_upper_triangular(&CMatrix::identity(count, count))
        .map(|inv| coefficients * inv)
        .ok_or(Error::ZeroNorm)?;

    let mut modes = Vec::with_capacity(count);
    for column in orthonormal.column_iter() {
        let mode = Eigenmode {
            energy,
            coefficients: column.into_owned(),
            bulk: problem.bulk_eigenvalues.clone(),
        };
        let pivot = mode
            .sample(m)?
            .values()
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("non-empty");
        let factor = pivot.conj() / pivot.norm();
        modes.push(Eigenmode {
            coefficients: mode.coefficients * factor,
            ..mode
        });
    }
    Ok(modes)
}

/// The first null vector at `energy`, sampled on `m` points of `[0, 1]`.
pub fn assemble_eigenfunction(energy: f64, problem: &MatchingProblem, m: usize) -> Result<HybridState> {
    let modes = assemble_eigenmodes(energy, problem, m, Some(1))?;
    modes[0].sample(m)
}

/// Eigenvalues in the window together with sampled eigenfunctions.
pub fn solve(problem: &MatchingProblem, e_min: f64, e_max: f64, k_max: usize, m: usize) -> Result<SpectralResult> {
    solve_with(problem, e_min, e_max, k_max, m, ScanOptions::default())
}

pub fn solve_with(
    problem: &MatchingProblem,
    e_min: f64,
    e_max: f64,
    k_max: usize,
    m: usize,
    options: ScanOptions,
) -> Result<SpectralResult> {
    let mut result = find_eigenvalues_with(problem, e_min, e_max, k_max, options)?;
    for (k, (&e, &mult)) in result.eigenvalues.iter().zip(&result.multiplicities).enumerate() {
        for mode in assemble_eigenmodes(e, problem, m, Some(mult))? {
            result.eigenfunctions.push(mode.sample(m)?);
            result.eigenvalue_index.push(k);
        }
    }
    Ok(result)
}

/// `√(E²-μ²) cos√(E-μ) cos√(E+μ) - E sin√(E-μ) sin√(E+μ) - √(E-μ)√(E+μ) cos 2δ`
/// with `√(E²-μ²)` read as `√(E-μ)√(E+μ)`; it vanishes at the spectrum of the
/// anti-diagonal family for every `β`.
///
/// The expression is real for `|E| > μ` and purely imaginary for `|E| < μ`;
/// the non-vanishing component is returned.
pub fn sigma_beta_closed_form(energy: f64, mu: f64, delta: f64) -> Result<f64> {
    if (energy - mu).abs() < 1e-9 || (energy + mu).abs() < 1e-9 {
        return Err(Error::InvalidArgument(format!("energy {energy} is a branch point")));
    }
    let km = c(energy - mu, 0.0).sqrt();
    let kp = c(energy + mu, 0.0).sqrt();
    // km·kp equals the principal √(E²-μ²) for E > -μ and continues it
    // analytically below -μ, where the principal root has the wrong sign.
    let root = km * kp;
    let z = root * km.cos() * kp.cos() - km.sin() * kp.sin() * energy - km * kp * (2.0 * delta).cos();
    Ok(if energy.abs() > mu { z.re } else { z.im })
}

/// Zeros of [`sigma_beta_closed_form`] in `[e_min, e_max]`, excluding its
/// trivial zeros at `E = ±μ`. Sign changes are bisected; touching zeros
/// (local minima of `|σ_β|`) are refined by golden section.
pub fn sigma_beta_roots(mu: f64, delta: f64, e_min: f64, e_max: f64, step: f64) -> Result<Vec<f64>> {
    let mu = mu.abs();
    let mut cuts = vec![e_min];
    for b in [-mu, mu] {
        if b > e_min && b < e_max && !cuts.contains(&b) {
            cuts.push(b);
        }
    }
    cuts.push(e_max);
    let margin = 1e-7;
    let f = |e: f64| sigma_beta_closed_form(e, mu, delta).unwrap_or(f64::NAN);

    let mut found = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0] + margin, w[1] - margin);
        if !(a < b) {
            continue;
        }
        let g = roots::grid(a, b, step);
        let v: Vec<f64> = g.iter().map(|&e| f(e)).collect();
        for i in 0..g.len() - 1 {
            if v[i] == 0.0 {
                found.push(g[i]);
            } else if v[i] * v[i + 1] < 0.0 {
                found.push(roots::bisect(f, g[i], g[i + 1], 1e-13));
            }
        }
        let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        for i in 1..g.len().saturating_sub(1) {
            let touching = abs[i] <= abs[i - 1] && abs[i] < abs[i + 1] && v[i - 1] * v[i + 1] > 0.0 && v[i - 1] * v[i] > 0.0;
            if touching {
                let (x, fx) = roots::golden_section(|e| f(e).abs(), g[i - 1], g[i + 1], 1e-13);
                let local = abs[i - 1].max(abs[i + 1]);
                if fx < 1e-10 * local.max(1.0) {
                    found.push(x);
                }
            }
        }
    }
    found.sort_by(|a, b| a.total_cmp(b));
    found.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(found)
}
