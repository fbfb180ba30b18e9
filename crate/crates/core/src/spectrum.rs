use crate::entanglement::HybridState;

/// Eigenvalues with multiplicities and, optionally, sampled eigenfunctions.
#[derive(Debug, Clone, Default)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// One entry per eigenvector, so a level of multiplicity `d` contributes
    /// `d` consecutive entries.
    pub eigenfunctions: Vec<HybridState>,
    /// `eigenvalue_index[i]` is the position in `eigenvalues` of the level
    /// that `eigenfunctions[i]` belongs to.
    pub eigenvalue_index: Vec<usize>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&e, &m)| std::iter::repeat_n(e, m))
            .collect()
    }

    pub fn energy_of(&self, eigenfunction: usize) -> f64 {
        self.eigenvalues[self.eigenvalue_index[eigenfunction]]
    }
}
