//! Closed-form point spectrum of the half-line coupled to an n-level system
//! with boundary unitaries diagonal in the eigenbasis of `H_B`.
//!
//! Conventions:
//! - kinetic term `-d²/dx²`;
//! - angles enter through half-angles, `tan²(α/2)` throughout, including the
//!   multipartite chain and the sweep parameter `s = α₁/2`;
//! - a channel with angle `α` has the bound state `e^{-tan(α/2) x}` when
//!   `tan(α/2) > 0`, at energy `λ - tan²(α/2)`.
//!
//! The last point fixes the orientation of `α`: in the Cayley form
//! `φ - iφ̇ = U(φ + iφ̇)` with outward `φ̇ = -Φ'(0)`, that bound state belongs to
//! `U = e^{-iα}`. [`boundary_unitary`] performs this translation so the
//! angles here can be fed to the finite-element solver.

use num_complex::Complex64;

use crate::entanglement::{entropy_of_density, HybridState};
use crate::error::{Error, Result};
use crate::extension::BoundaryUnitary;
use crate::linalg::{c, CMatrix};

/// Upper end of the sampled decay rate on the compatibility curve, unless
/// `2√σ` is larger. Past this, `tan²` is too steep to evaluate the curve's
/// defining relation to 1e-12 from stored angles.
pub const DEFAULT_MAX_DECAY: f64 = 8.0;

/// `tan(α/2)`, or `None` at the Dirichlet point `α ≡ π`.
fn half_tan(alpha: f64) -> Option<f64> {
    let half = 0.5 * alpha;
    if half.cos().abs() < 1e-15 {
        None
    } else {
        Some(half.tan())
    }
}

/// Bound-state energy `λ - tan²(α/2)` of a single channel, if one exists.
pub fn bound_state_energy(lambda: f64, alpha: f64) -> Option<f64> {
    match half_tan(alpha) {
        Some(t) if t > 0.0 => Some(lambda - t * t),
        _ => None,
    }
}

/// Boundary unitary `diag(e^{-iα_a})` realizing the channel angles under the
/// Cayley convention (see module docs).
pub fn boundary_unitary(alphas: &[f64]) -> Result<BoundaryUnitary> {
    let negated: Vec<f64> = alphas.iter().map(|a| -a).collect();
    BoundaryUnitary::diagonal_phases(1, &negated)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateSolution {
    pub energy: f64,
    pub n_levels: usize,
    pub populated_levels: Vec<usize>,
    /// `κ_a`, aligned with `populated_levels`.
    pub decay_rates: Vec<f64>,
    /// `C_a`, aligned with `populated_levels`.
    pub amplitudes: Vec<Complex64>,
}

impl BoundStateSolution {
    /// `∫₀^∞ Σ|C_a|² e^{-2κ_a x} dx`.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.decay_rates)
            .map(|(a, k)| a.norm_sqr() / (2.0 * k))
            .sum()
    }

    /// Exact reduced density: `ρ[a][b] = C_a conj(C_b) / (κ_a + κ_b)`.
    pub fn reduced_density(&self) -> CMatrix {
        let mut rho = CMatrix::zeros(self.n_levels, self.n_levels);
        for (i, &a) in self.populated_levels.iter().enumerate() {
            for (j, &b) in self.populated_levels.iter().enumerate() {
                rho[(a, b)] = self.amplitudes[i] * self.amplitudes[j].conj() / (self.decay_rates[i] + self.decay_rates[j]);
            }
        }
        let trace = rho.trace();
        rho / trace
    }

    /// Entanglement entropy from the exact exponential overlaps.
    pub fn entropy(&self) -> f64 {
        entropy_of_density(&self.reduced_density()).1
    }

    pub fn value(&self, x: f64, level: usize) -> Complex64 {
        self.populated_levels
            .iter()
            .position(|&l| l == level)
            .map(|i| self.amplitudes[i] * (-self.decay_rates[i] * x).exp())
            .unwrap_or(c(0.0, 0.0))
    }

    /// Samples on `m` uniform points of the truncated domain `[0, length]`.
    pub fn sample(&self, length: f64, m: usize) -> Result<HybridState> {
        HybridState::sample(length, m, self.n_levels, |x, b| self.value(x, b))
    }
}

/// Normalized single-channel bound state on a one-level half-line.
pub fn bound_state(lambda: f64, alpha: f64) -> Option<BoundStateSolution> {
    let energy = bound_state_energy(lambda, alpha)?;
    let kappa = half_tan(alpha)?;
    Some(BoundStateSolution {
        energy,
        n_levels: 1,
        populated_levels: vec![0],
        decay_rates: vec![kappa],
        amplitudes: vec![c((2.0 * kappa).sqrt(), 0.0)],
    })
}

/// Bound states of `diag(e^{-iα_a})` (in the orientation of [`boundary_unitary`])
/// on the half-line with bulk energies `lambdas`: one per channel with
/// `tan(α_a/2) > 0`, channels whose energies agree to `tol` merged into one
/// eigenspace entry. Sorted by energy.
pub fn diagonal_bound_states(lambdas: &[f64], alphas: &[f64], tol: f64) -> Result<Vec<(f64, Vec<usize>)>> {
    if lambdas.len() != alphas.len() {
        return Err(Error::DimensionMismatch {
            expected: lambdas.len(),
            got: alphas.len(),
        });
    }
    let mut levels: Vec<(f64, usize)> = lambdas
        .iter()
        .zip(alphas)
        .enumerate()
        .filter_map(|(a, (&l, &al))| bound_state_energy(l, al).map(|e| (e, a)))
        .collect();
    levels.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (e, a) in levels {
        match out.last_mut() {
            Some((e0, members)) if (e - *e0).abs() <= tol => members.push(a),
            _ => out.push((e, vec![a])),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CompatCurve {
    pub sigma: f64,
    /// `(α₁, α₂)` on the fundamental branch, ordered by `α₁`.
    pub points: Vec<(f64, f64)>,
}

impl CompatCurve {
    /// `|tan²(α₁/2) - tan²(α₂/2) - σ|` per point.
    pub fn residuals(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|&(a1, a2)| {
                let t1 = (0.5 * a1).tan();
                let t2 = (0.5 * a2).tan();
                (t1 * t1 - t2 * t2 - self.sigma).abs()
            })
            .collect()
    }

    /// The four images `(±α₁, ±α₂) mod 2π` of every point on the torus.
    pub fn torus_images(&self) -> Vec<[(f64, f64); 4]> {
        let tau = std::f64::consts::TAU;
        self.points
            .iter()
            .map(|&(a1, a2)| {
                let m1 = (tau - a1) % tau;
                let m2 = (tau - a2) % tau;
                [(a1, a2), (m1, a2), (a1, m2), (m1, m2)]
            })
            .collect()
    }
}

/// Samples `tan²(α₁/2) - tan²(α₂/2) = σ` with `s = α₁/2` uniform from
/// `arctan √σ` (where `α₂ = 0`) up to `arctan κ_max`, `κ_max = max(8, 2√σ)`.
pub fn compat_curve(sigma: f64, n_samples: usize) -> Result<CompatCurve> {
    compat_curve_to(sigma, n_samples, DEFAULT_MAX_DECAY.max(2.0 * sigma.sqrt()))
}

pub fn compat_curve_to(sigma: f64, n_samples: usize, max_decay: f64) -> Result<CompatCurve> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if n_samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if !(max_decay > sigma.sqrt()) {
        return Err(Error::InvalidArgument("max decay rate must exceed sqrt(sigma)".into()));
    }
    let s0 = sigma.sqrt().atan();
    let s1 = max_decay.atan();
    let points = (0..n_samples)
        .map(|i| {
            let s = s0 + (s1 - s0) * i as f64 / (n_samples - 1) as f64;
            (2.0 * s, partner_angle(s, sigma))
        })
        .collect();
    Ok(CompatCurve { sigma, points })
}

/// `α₂ = 2 arctan √(tan² s - σ)`, clamped at zero for rounding below threshold.
fn partner_angle(s: f64, sigma: f64) -> f64 {
    let t = s.tan();
    2.0 * (t * t - sigma).max(0.0).sqrt().atan()
}

/// Two-level bound state on the compatibility curve at `s = α₁/2`, with
/// amplitudes proportional to `(c1, c2)`. Energies are measured from `λ₂`
/// (so `λ₁ = σ`).
pub fn sweep_state(s: f64, sigma: f64, c1: Complex64, c2: Complex64) -> Result<BoundStateSolution> {
    if !(s > 0.0 && s < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("s must lie in (0, π/2), got {s}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let k1 = s.tan();
    let gap = k1 * k1 - sigma;
    let threshold = 1e-12 * sigma.max(1.0);
    if gap < -threshold {
        return Err(Error::BelowCompatibilityThreshold { tan2: k1 * k1, sigma });
    }
    let energy = sigma - k1 * k1;
    let (levels, rates, amps) = if gap <= threshold {
        // The second channel would be a non-normalizable zero mode.
        if c1.norm() == 0.0 {
            return Err(Error::ZeroNorm);
        }
        (vec![0], vec![k1], vec![c1])
    } else {
        let k2 = gap.sqrt();
        match (c1.norm() > 0.0, c2.norm() > 0.0) {
            (true, true) => (vec![0, 1], vec![k1, k2], vec![c1, c2]),
            (true, false) => (vec![0], vec![k1], vec![c1]),
            (false, true) => (vec![1], vec![k2], vec![c2]),
            (false, false) => return Err(Error::ZeroNorm),
        }
    };
    let mut state = BoundStateSolution {
        energy,
        n_levels: 2,
        populated_levels: levels,
        decay_rates: rates,
        amplitudes: amps,
    };
    let scale = 1.0 / state.norm_sq().sqrt();
    state.amplitudes.iter_mut().for_each(|a| *a *= scale);
    Ok(state)
}

/// Angles `α_l` making `Λ_l - tan²(α_l/2)` independent of `l`, given `α₁`.
pub fn multipartite_curve(big_lambdas: &[f64], alpha_1: f64) -> Result<Vec<f64>> {
    if big_lambdas.is_empty() {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    if big_lambdas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("levels must be in descending order".into()));
    }
    let t1 = half_tan(alpha_1).ok_or_else(|| Error::InvalidArgument("alpha_1 is the Dirichlet point".into()))?;
    let base = t1 * t1;
    big_lambdas
        .iter()
        .enumerate()
        .map(|(l, &lam)| {
            if l == 0 {
                return Ok(alpha_1);
            }
            let t2 = base - (big_lambdas[0] - lam);
            // Round-off at the threshold itself.
            let t2 = if t2 < 0.0 && t2 > -1e-12 * (1.0 + base) { 0.0 } else { t2 };
            if t2 < 0.0 {
                Err(Error::InfeasibleLevel { level: l, tan2: t2 })
            } else {
                Ok(2.0 * t2.sqrt().atan())
            }
        })
        .collect()
}
