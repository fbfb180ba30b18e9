//! Self-adjoint extensions of `-d²/dx² ⊗ 𝕀 + 𝕀 ⊗ H_B` parameterized by a
//! unitary on boundary data.
//!
//! Boundary data are the trace `φ` and the outward normal derivative `φ̇` at
//! every boundary point, for every level. A unitary `U` selects the domain
//! `φ - iφ̇ = U (φ + iφ̇)`.
//!
//! All boundary vectors use [`Ordering::SpinMajor`]: the level index is the
//! outer (slow) index and the boundary point the inner one. For the interval
//! with two levels the layout is `(Φ↑(0), Φ↑(1), Φ↓(0), Φ↓(1))`, so a product
//! unitary `U_A ⊗ U_B` (point factor first, in the usual notation) is stored
//! as the Kronecker product `u_b ⊗ u_a`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, cis, CMatrix, CVector};

/// Unitarity tolerance enforced at construction.
pub const UNITARY_TOL: f64 = 1e-12;
/// `|λ + 1|` below this puts an eigenvector of `U` into the Dirichlet subspace.
pub const DIRICHLET_TOL: f64 = 1e-10;
/// Relative singular value cutoff for operator Schmidt rank.
pub const SCHMIDT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Level outer, boundary point inner.
    SpinMajor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// `[0, ∞)`, one boundary point at `x = 0`.
    HalfLine,
    /// `[0, 1]`, boundary points `x = 0` and `x = 1`.
    Interval,
}

impl Geometry {
    pub fn boundary_points(self) -> usize {
        match self {
            Geometry::HalfLine => 1,
            Geometry::Interval => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryUnitary {
    matrix: CMatrix,
    n_points: usize,
    n_levels: usize,
    ordering: Ordering,
}

impl BoundaryUnitary {
    pub fn new(matrix: CMatrix, n_points: usize, n_levels: usize) -> Result<Self> {
        if n_points == 0 || n_levels == 0 {
            return Err(Error::InvalidArgument("empty boundary".into()));
        }
        let dim = n_points * n_levels;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let deviation = linalg::unitarity_defect(&matrix);
        if !(deviation < UNITARY_TOL) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            matrix,
            n_points,
            n_levels,
            ordering: Ordering::SpinMajor,
        })
    }

    /// Boundary unitary on a single boundary point (one level per row).
    pub fn diagonal_phases(n_points: usize, phases: &[f64]) -> Result<Self> {
        if phases.is_empty() || phases.len() % n_points.max(1) != 0 {
            return Err(Error::InvalidArgument("phase count must be a multiple of n_points".into()));
        }
        let dim = phases.len();
        let m = CMatrix::from_diagonal(&CVector::from_iterator(dim, phases.iter().map(|&a| cis(a))));
        Self::new(m, n_points, dim / n_points)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Index of `(level, point)` in the boundary vector.
    pub fn index(&self, level: usize, point: usize) -> usize {
        level * self.n_points + point
    }

    /// Multiplies by a global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        Self {
            matrix: &self.matrix * cis(theta),
            ..self.clone()
        }
    }
}

/// Quasi-periodic unitary `[[0, e^{iδ}], [e^{-iδ}, 0]]` on `[0, 1]`, i.e.
/// `Φ(0) = e^{iδ} Φ(1)` and `Φ'(0) = e^{iδ} Φ'(1)`.
pub fn make_quasi_periodic(delta: f64) -> BoundaryUnitary {
    let zero = c(0.0, 0.0);
    let m = CMatrix::from_row_slice(2, 2, &[zero, cis(delta), cis(-delta), zero]);
    BoundaryUnitary::new(m, 2, 1).expect("quasi-periodic matrix is unitary")
}

/// `U_A ⊗ U_B` stored level-outer: the entries are `u_b ⊗ u_a`.
pub fn tensor_boundary(u_a: &BoundaryUnitary, u_b: &CMatrix) -> Result<BoundaryUnitary> {
    if u_b.nrows() != u_b.ncols() || u_b.nrows() == 0 {
        return Err(Error::InvalidArgument("level factor must be square".into()));
    }
    let deviation = linalg::unitarity_defect(u_b);
    if !(deviation < UNITARY_TOL) {
        return Err(Error::NotUnitary { deviation });
    }
    let n_levels = u_a
        .n_levels
        .checked_mul(u_b.nrows())
        .ok_or_else(|| Error::InvalidArgument("boundary dimension overflow".into()))?;
    n_levels
        .checked_mul(u_a.n_points)
        .ok_or_else(|| Error::InvalidArgument("boundary dimension overflow".into()))?;
    BoundaryUnitary::new(linalg::kron(u_b, &u_a.matrix), u_a.n_points, n_levels)
}

/// Robin form of a boundary unitary: `φ = 0` on the Dirichlet subspace `W`
/// (eigenvalue `-1` of `U`) and `φ̇ = A_U φ` on `W⊥`.
#[derive(Debug, Clone)]
pub struct RobinData {
    /// Orthogonal projector onto `W`.
    pub dirichlet_projector: CMatrix,
    /// `A_U`, Hermitian, supported on `W⊥` (zero on `W`).
    pub robin_matrix: CMatrix,
    /// Orthonormal basis of `W` (columns).
    pub dirichlet_basis: CMatrix,
    /// Orthonormal basis of `W⊥` (columns).
    pub free_basis: CMatrix,
}

impl RobinData {
    pub fn dim(&self) -> usize {
        self.robin_matrix.nrows()
    }

    pub fn dirichlet_dim(&self) -> usize {
        self.dirichlet_basis.ncols()
    }

    /// `U = -P_W + (𝕀 + iA)⁻¹(𝕀 - iA)` on `W⊥`.
    pub fn reconstruct_unitary(&self) -> CMatrix {
        let q = &self.free_basis;
        let k = q.ncols();
        let mut u = -&self.dirichlet_projector;
        if k > 0 {
            let a = q.adjoint() * &self.robin_matrix * q;
            let id = CMatrix::identity(k, k);
            let plus = &id + &a * linalg::I;
            let minus = &id - &a * linalg::I;
            let core = plus.lu().solve(&minus).expect("I + iA is invertible for Hermitian A");
            u += q * core * q.adjoint();
        }
        u
    }
}

/// Partial Cayley transform `A_U = -i(𝕀 + U)⁻¹(𝕀 - U)` on the complement of the
/// `-1` eigenspace. For `U = e^{iα}` this is `φ̇ = -tan(α/2) φ`.
pub fn cayley_to_robin(u: &BoundaryUnitary) -> RobinData {
    let m = u.matrix();
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    let plus = &id + m;
    // U is normal, so the singular values of 𝕀 + U are |1 + λ|.
    let (values, vectors) = linalg::right_singular_pairs(&plus);
    let (dirichlet, free): (Vec<_>, Vec<_>) = values
        .iter()
        .zip(vectors)
        .partition(|(s, _)| **s < DIRICHLET_TOL);
    let columns = |v: Vec<(&f64, CVector)>| -> CMatrix {
        if v.is_empty() {
            CMatrix::zeros(n, 0)
        } else {
            CMatrix::from_columns(&v.into_iter().map(|(_, x)| x).collect::<Vec<_>>())
        }
    };
    let dirichlet_basis = columns(dirichlet);
    let free_basis = columns(free);
    let projector = &dirichlet_basis * dirichlet_basis.adjoint();
    let complement = &id - &projector;

    // On W the shifted operator is the identity, on W⊥ it is 𝕀 + U.
    let shifted = &plus + &projector;
    let rhs = (&id - m) * &complement;
    let raw = shifted.lu().solve(&rhs).expect("shifted Cayley operator is invertible") * (-linalg::I);
    let restricted = &complement * raw * &complement;
    let robin = (&restricted + restricted.adjoint()) * c(0.5, 0.0);

    RobinData {
        dirichlet_projector: projector,
        robin_matrix: robin,
        dirichlet_basis,
        free_basis,
    }
}

#[derive(Debug, Clone)]
pub enum TensorStructure {
    /// `U = U_A ⊗ 𝕀`, global phase absorbed into `u_a`.
    ProductWithIdentity { u_a: CMatrix },
    /// `U = U_A ⊗ U_B` with `U_B` not a multiple of the identity. `u_b` is
    /// normalized so its largest entry is real positive; the phase sits in `u_a`.
    Product { u_a: CMatrix, u_b: CMatrix },
    /// Operator Schmidt rank at least two.
    NonProduct { schmidt_rank: usize },
}

impl TensorStructure {
    pub fn tag(&self) -> &'static str {
        match self {
            TensorStructure::ProductWithIdentity { .. } => "product-with-identity",
            TensorStructure::Product { .. } => "product",
            TensorStructure::NonProduct { .. } => "non-product",
        }
    }
}

/// Realigns `u` (level-outer layout) into the matrix
/// `R[(b, b'), (p, p')] = u[(b, p), (b', p')]`, whose rank is the operator
/// Schmidt rank across the level/point split.
pub fn realign(u: &CMatrix, n_points: usize, n_levels: usize) -> CMatrix {
    let mut r = CMatrix::zeros(n_levels * n_levels, n_points * n_points);
    for b in 0..n_levels {
        for bp in 0..n_levels {
            for p in 0..n_points {
                for pp in 0..n_points {
                    r[(b * n_levels + bp, p * n_points + pp)] = u[(b * n_points + p, bp * n_points + pp)];
                }
            }
        }
    }
    r
}

pub fn operator_schmidt_rank(u: &CMatrix, n_points: usize, n_levels: usize) -> usize {
    let s = linalg::singular_values(&realign(u, n_points, n_levels));
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > SCHMIDT_RANK_TOL * top).count()
}

pub fn classify_tensor_structure(u: &BoundaryUnitary, n_points: usize, n_levels: usize) -> Result<TensorStructure> {
    let expected = n_points * n_levels;
    if u.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: u.dim(),
        });
    }
    let r = realign(u.matrix(), n_points, n_levels);
    let svd = r.clone().svd(true, true);
    let mut s: Vec<(usize, f64)> = svd.singular_values.iter().copied().enumerate().collect();
    s.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top = s[0].1;
    let rank = s.iter().filter(|(_, x)| *x > SCHMIDT_RANK_TOL * top).count();
    if rank != 1 {
        return Ok(TensorStructure::NonProduct { schmidt_rank: rank });
    }

    let k = s[0].0;
    let left = svd.u.as_ref().expect("left vectors").column(k).into_owned();
    let right = svd.v_t.as_ref().expect("right vectors").row(k).into_owned();
    // R = σ x y^H with unit x, y; both factors unitary fixes the split of σ.
    let mut u_b = CMatrix::from_fn(n_levels, n_levels, |b, bp| left[b * n_levels + bp] * (n_levels as f64).sqrt());
    let mut u_a = CMatrix::from_fn(n_points, n_points, |p, pp| right[p * n_points + pp] * (n_points as f64).sqrt());

    let largest = *u_b
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let phase = largest / largest.norm();
    u_b /= phase;
    u_a *= phase;

    let trace = u_b.trace() / n_levels as f64;
    let scalar = CMatrix::identity(n_levels, n_levels) * trace;
    if linalg::max_abs(&(&u_b - scalar)) < 1e-10 {
        u_a *= trace;
        Ok(TensorStructure::ProductWithIdentity { u_a })
    } else {
        Ok(TensorStructure::Product { u_a, u_b })
    }
}

/// Full problem definition.
#[derive(Debug, Clone)]
pub struct ExtensionSpec {
    pub geometry: Geometry,
    pub n_levels: usize,
    /// Eigenvalues of `H_B`, descending.
    pub bulk_eigenvalues: Vec<f64>,
    pub boundary: BoundaryUnitary,
}

impl ExtensionSpec {
    pub fn new(geometry: Geometry, bulk_eigenvalues: Vec<f64>, boundary: BoundaryUnitary) -> Result<Self> {
        let n_levels = bulk_eigenvalues.len();
        if n_levels == 0 {
            return Err(Error::InvalidArgument("need at least one level".into()));
        }
        let expected = geometry.boundary_points() * n_levels;
        if boundary.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: boundary.dim(),
            });
        }
        if bulk_eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("bulk eigenvalues must be listed in descending order".into()));
        }
        let boundary = BoundaryUnitary {
            n_points: geometry.boundary_points(),
            n_levels,
            ..boundary
        };
        Ok(Self {
            geometry,
            n_levels,
            bulk_eigenvalues,
            boundary,
        })
    }

    pub fn tensor_structure(&self) -> TensorStructure {
        classify_tensor_structure(&self.boundary, self.geometry.boundary_points(), self.n_levels)
            .expect("validated at construction")
    }
}

/// Separable dynamics is predicted exactly for `U = U_A ⊗ 𝕀` up to phase.
pub fn predict_separable_dynamics(spec: &ExtensionSpec) -> bool {
    matches!(spec.tensor_structure(), TensorStructure::ProductWithIdentity { .. })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeficiencyIndices {
    pub n_plus: usize,
    pub n_minus: usize,
}

/// `𝒩_± = 𝒩_{A,±} ⊗ ℋ_B`: one dimension per boundary point and level.
pub fn deficiency_indices(spec: &ExtensionSpec) -> DeficiencyIndices {
    let n = spec.geometry.boundary_points() * spec.n_levels;
    DeficiencyIndices { n_plus: n, n_minus: n }
}
