//! Schmidt analysis across the particle | level cut.
//!
//! A hybrid state is a map `x ↦ Φ(x) ∈ ℂⁿ` sampled on a grid; all integrals use
//! the trapezoid rule on that grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::spectrum::SpectralResult;

/// Entropy below which a state counts as a product state.
pub const SEPARABLE_ENTROPY: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HybridState {
    grid: Vec<f64>,
    /// `m × n_levels`, row `i` is `Φ(grid[i])`.
    values: CMatrix,
}

impl HybridState {
    pub fn new(grid: Vec<f64>, values: CMatrix) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidArgument("grid needs at least two points".into()));
        }
        if values.nrows() != grid.len() || values.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.nrows(),
            });
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on `m` uniform points of `[0, length]`.
    pub fn sample<F>(length: f64, m: usize, n_levels: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> Complex64,
    {
        let grid: Vec<f64> = (0..m).map(|i| length * i as f64 / (m - 1).max(1) as f64).collect();
        let values = CMatrix::from_fn(m, n_levels, |i, b| f(grid[i], b));
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn n_levels(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.grid)
    }

    /// `⟨self, other⟩ = ∫ Σ_b conj(self_b) other_b dx`.
    pub fn inner(&self, other: &HybridState) -> Complex64 {
        assert_eq!(self.values.shape(), other.values.shape(), "states on different grids");
        let w = self.weights();
        let mut acc = c(0.0, 0.0);
        for b in 0..self.n_levels() {
            for (i, wi) in w.iter().enumerate() {
                acc += self.values[(i, b)].conj() * other.values[(i, b)] * *wi;
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(c(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: &self.values * factor,
        }
    }

    /// Rotates the global phase so the largest-magnitude sample is real positive.
    pub fn phase_fixed(&self) -> Self {
        let pivot = self
            .values
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(c(1.0, 0.0));
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        self.scaled(pivot.conj() / pivot.norm())
    }

    /// Applies a level-space unitary `R` pointwise: `Φ(x) ↦ R Φ(x)`.
    pub fn rotate_levels(&self, r: &CMatrix) -> Self {
        Self {
            grid: self.grid.clone(),
            values: &self.values * r.transpose(),
        }
    }

    /// Keeps only level `level`, zeroing the others.
    pub fn project_level(&self, level: usize) -> Self {
        let mut values = CMatrix::zeros(self.values.nrows(), self.values.ncols());
        values.set_column(level, &self.values.column(level));
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// L² distance after aligning the global phase of `other` to `self`.
    pub fn phase_aligned_distance(&self, other: &HybridState) -> f64 {
        let overlap = other.inner(self);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c(1.0, 0.0)
        };
        let diff = Self {
            grid: self.grid.clone(),
            values: &self.values - &other.values * phase,
        };
        diff.norm()
    }
}

pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let m = grid.len();
    let mut w = vec![0.0; m];
    for i in 0..m.saturating_sub(1) {
        let h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

#[derive(Debug, Clone)]
pub struct EntanglementReport {
    pub reduced_density: CMatrix,
    /// Descending, summing to one.
    pub schmidt_coefficients: Vec<f64>,
    /// Natural log.
    pub entropy: f64,
    pub separable: bool,
}

/// `ρ_B[a][b] = ∫ Φ_a conj(Φ_b) dx`, normalized to unit trace.
pub fn reduced_density(state: &HybridState) -> Result<CMatrix> {
    let n = state.n_levels();
    let w = state.weights();
    let v = state.values();
    let mut rho = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut acc = c(0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                acc += v[(i, a)] * v[(i, b)].conj() * *wi;
            }
            rho[(a, b)] = acc;
            rho[(b, a)] = acc.conj();
        }
    }
    let trace = rho.trace().re;
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(rho / c(trace, 0.0))
}

/// Schmidt coefficients and von Neumann entropy of a unit-trace density.
pub fn entropy_of_density(rho: &CMatrix) -> (Vec<f64>, f64) {
    let (values, _) = linalg::hermitian_eigen(rho);
    let mut p: Vec<f64> = values.into_iter().map(|x| x.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|x| *x /= total);
    }
    p.sort_by(|a, b| b.total_cmp(a));
    let entropy = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum::<f64>().max(0.0);
    (p, entropy)
}

pub fn entanglement_entropy(state: &HybridState) -> Result<EntanglementReport> {
    let rho = reduced_density(state)?;
    let (schmidt_coefficients, entropy) = entropy_of_density(&rho);
    Ok(EntanglementReport {
        reduced_density: rho,
        schmidt_coefficients,
        entropy,
        separable: entropy < SEPARABLE_ENTROPY,
    })
}

/// Dominant Schmidt pair `(level vector, normalized particle profile)`.
pub fn leading_schmidt_pair(state: &HybridState) -> Result<(CVector, HybridState)> {
    let rho = reduced_density(state)?;
    let (_, vectors) = linalg::hermitian_eigen(&rho);
    let top = vectors.column(vectors.ncols() - 1).into_owned();
    let profile: Vec<Complex64> = (0..state.len())
        .map(|i| (0..state.n_levels()).map(|b| top[b].conj() * state.values()[(i, b)]).sum())
        .collect();
    let profile = HybridState::new(state.grid().to_vec(), CMatrix::from_column_slice(state.len(), 1, &profile))?
        .normalized()?;
    Ok((top, profile))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// An eigenfunction that is not a product state.
    Entangled { eigenfunction: usize, entropy: f64 },
    /// Two product eigenfunctions whose level factors are neither parallel
    /// nor orthogonal, so no common level eigenbasis exists.
    LevelMismatch { first: usize, second: usize, overlap: f64 },
    /// A particle profile of one level that is missing from another level's
    /// profile set; `overlap` is the best single overlap found.
    ProfileMismatch { first: usize, second: usize, overlap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsVerdict {
    Separable,
    NonSeparable(Witness),
}

impl DynamicsVerdict {
    pub fn is_separable(&self) -> bool {
        matches!(self, DynamicsVerdict::Separable)
    }
}

/// Basis of a degenerate block with the least total entanglement among the
/// candidates: the block as given, or its split along the level basis when
/// the block is invariant under the level projectors.
pub fn canonicalize_block(block: &[HybridState]) -> Result<Vec<HybridState>> {
    let d = block.len();
    if d <= 1 {
        return Ok(block.to_vec());
    }
    let n = block[0].n_levels();
    let mut split = Vec::new();
    for level in 0..n {
        let projected: Vec<HybridState> = block.iter().map(|s| s.project_level(level)).collect();
        let gram = CMatrix::from_fn(d, d, |i, j| projected[i].inner(&projected[j]));
        let (values, vectors) = linalg::hermitian_eigen(&gram);
        let scale = block.iter().map(|s| s.norm().powi(2)).fold(0.0, f64::max);
        for (k, &lambda) in values.iter().enumerate() {
            if lambda > 0.0 && lambda.sqrt() > 1e-10 * scale.sqrt() {
                let mut acc = CMatrix::zeros(block[0].len(), n);
                for (i, p) in projected.iter().enumerate() {
                    acc += p.values() * vectors[(i, k)];
                }
                let state = HybridState::new(block[0].grid().to_vec(), acc)?.normalized()?;
                split.push(state);
            }
        }
    }
    let total_entropy = |states: &[HybridState]| -> Result<f64> {
        states.iter().map(|s| entanglement_entropy(s).map(|r| r.entropy)).sum()
    };
    if split.len() == d && total_entropy(&split)? < total_entropy(block)? {
        Ok(split)
    } else {
        Ok(block.to_vec())
    }
}

/// Decides whether the spectral data admit a factorized eigenbasis
/// `ψ_l ⊗ ρ_b`: every eigenfunction must be a product state, the level
/// factors must fall into mutually orthogonal directions, and the particle
/// profiles attached to each level direction must coincide across levels.
pub fn dynamics_separability_verdict(result: &SpectralResult, tol: f64) -> Result<DynamicsVerdict> {
    let states = &result.eigenfunctions;
    if states.is_empty() {
        return Err(Error::InsufficientEigenfunctions {
            level: 0,
            needed: 2,
            got: 0,
        });
    }
    let n_levels = states[0].n_levels();

    // Canonicalize each degenerate block, keeping original positions for witnesses.
    let mut canonical: Vec<(usize, HybridState)> = Vec::with_capacity(states.len());
    let mut start = 0;
    while start < states.len() {
        let level = result.eigenvalue_index.get(start).copied().unwrap_or(start);
        let mut end = start + 1;
        while end < states.len() && result.eigenvalue_index.get(end).copied().unwrap_or(end) == level {
            end += 1;
        }
        let block = canonicalize_block(&states[start..end])?;
        canonical.extend(block.into_iter().enumerate().map(|(k, s)| (start + k, s)));
        start = end;
    }

    let mut factors = Vec::with_capacity(canonical.len());
    for (index, state) in &canonical {
        let report = entanglement_entropy(state)?;
        if report.entropy >= tol {
            return Ok(DynamicsVerdict::NonSeparable(Witness::Entangled {
                eigenfunction: *index,
                entropy: report.entropy,
            }));
        }
        let (level_vector, profile) = leading_schmidt_pair(state)?;
        factors.push((*index, level_vector, profile));
    }

    // Group by level-factor direction.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, (index, v, _)) in factors.iter().enumerate() {
        let mut home = None;
        for (g, members) in groups.iter().enumerate() {
            let (rep_index, rep, _) = &factors[members[0]];
            let overlap = rep.dotc(v).norm();
            if overlap > 1.0 - tol {
                home = Some(g);
                break;
            }
            if overlap > tol {
                return Ok(DynamicsVerdict::NonSeparable(Witness::LevelMismatch {
                    first: *rep_index,
                    second: *index,
                    overlap,
                }));
            }
        }
        match home {
            Some(g) => groups[g].push(k),
            None => groups.push(vec![k]),
        }
    }
    if groups.len() < n_levels {
        return Err(Error::InsufficientEigenfunctions {
            level: groups.len(),
            needed: 2,
            got: 0,
        });
    }
    if let Some((level, members)) = groups.iter().enumerate().find(|(_, m)| m.len() < 2) {
        return Err(Error::InsufficientEigenfunctions {
            level,
            needed: 2,
            got: members.len(),
        });
    }

    for a in 0..groups.len() {
        for b in 0..groups.len() {
            if a == b {
                continue;
            }
            let shared = groups[a].len().min(groups[b].len());
            let basis = orthonormal_profiles(groups[b].iter().map(|&k| &factors[k].2))?;
            for &k in groups[a].iter().take(shared) {
                let (index, _, profile) = &factors[k];
                let captured = basis.iter().map(|q| q.inner(profile).norm_sqr()).sum::<f64>().sqrt();
                if captured < 1.0 - tol {
                    let (second, overlap) = groups[b]
                        .iter()
                        .map(|&j| (factors[j].0, factors[j].2.inner(profile).norm()))
                        .max_by(|p, q| p.1.total_cmp(&q.1))
                        .expect("non-empty group");
                    return Ok(DynamicsVerdict::NonSeparable(Witness::ProfileMismatch {
                        first: *index,
                        second,
                        overlap,
                    }));
                }
            }
        }
    }
    Ok(DynamicsVerdict::Separable)
}

fn orthonormal_profiles<'a>(profiles: impl Iterator<Item = &'a HybridState>) -> Result<Vec<HybridState>> {
    let mut basis: Vec<HybridState> = Vec::new();
    for p in profiles {
        let mut v = p.clone();
        // Two passes of Gram-Schmidt.
        for _ in 0..2 {
            for q in &basis {
                let proj = q.inner(&v);
                v = HybridState::new(v.grid().to_vec(), v.values() - q.values() * proj)?;
            }
        }
        if v.norm() > 1e-8 {
            basis.push(v.normalized()?);
        }
    }
    Ok(basis)
}
