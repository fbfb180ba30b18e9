use std::f64::consts::PI;

use bext_core::extension::{cayley_to_robin, make_quasi_periodic, tensor_boundary, BoundaryUnitary};
use bext_core::fem::{assemble, convergence_study, richardson_eigenvalues, solve_lowest, ErrorModel, FemProblem};
use bext_core::halfline::{self, bound_state_energy};
use bext_core::linalg::{self, random_unitary, CMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bulk_matrices_are_banded_hermitian_and_definite() {
    let mut r = ChaCha8Rng::seed_from_u64(31);
    for levels in [1usize, 2, 3] {
        let u = BoundaryUnitary::new(random_unitary(2 * levels, &mut r), 2, levels).unwrap();
        let bulk: Vec<f64> = (0..levels).map(|l| l as f64 - 1.0).collect();
        let p = FemProblem::interval(30, bulk, cayley_to_robin(&u)).unwrap();
        let sys = assemble(&p);
        assert!(sys.bulk_stiffness.occupied_bandwidth() <= levels);
        assert!(sys.mass.occupied_bandwidth() <= levels);
        assert!(2 * sys.bulk_stiffness.half_bandwidth() + 1 <= 2 * levels + 1);
        assert!(sys.bulk_stiffness.hermiticity_defect() < 1e-12);
        assert!(sys.mass.hermiticity_defect() < 1e-12);
        assert!(linalg::hermiticity_defect(&sys.stiffness_reduced) < 1e-12);
        let (mass_eigs, _) = linalg::hermitian_eigen(&sys.mass.to_dense());
        assert!(mass_eigs[0] > 0.0);
    }
}

#[test]
fn eigenvectors_are_mass_orthonormal() {
    let mut r = ChaCha8Rng::seed_from_u64(32);
    let u = BoundaryUnitary::new(random_unitary(4, &mut r), 2, 2).unwrap();
    let p = FemProblem::interval(80, vec![1.0, -1.0], cayley_to_robin(&u)).unwrap();
    let sys = assemble(&p);
    let pairs = solve_lowest(&p, 8).unwrap();
    for i in 0..8 {
        for j in 0..8 {
            let g = (pairs.reduced_eigenvectors[i].adjoint() * &sys.mass_reduced * &pairs.reduced_eigenvectors[j])[0];
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g.re - want).abs() < 1e-10 && g.im.abs() < 1e-10);
        }
    }
}

#[test]
fn reconstructed_eigenfunctions_satisfy_boundary_condition() {
    let mut r = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..5 {
        let u = BoundaryUnitary::new(random_unitary(4, &mut r), 2, 2).unwrap();
        let p = FemProblem::interval(200, vec![0.5, -0.5], cayley_to_robin(&u)).unwrap();
        let pairs = solve_lowest(&p, 4).unwrap();
        for k in 0..4 {
            let residual = pairs.boundary_residual(k, &u);
            assert!(residual < 10.0 * p.h(), "residual {residual} at h = {}", p.h());
        }
    }
}

#[test]
fn dirichlet_convergence_is_second_order() {
    let dirichlet = BoundaryUnitary::new(-CMatrix::identity(2, 2), 2, 1).unwrap();
    let p = FemProblem::interval(50, vec![0.0], cayley_to_robin(&dirichlet)).unwrap();
    let reference: Vec<f64> = (1..=4).map(|j| (j as f64 * PI).powi(2)).collect();
    let table = convergence_study(&p, 4, &[50, 100, 200, 400], &reference).unwrap();
    for p in &table.observed_order {
        assert!(*p >= 1.9, "observed order {p}");
    }
    let model = ErrorModel::calibrate(400).unwrap();
    assert!(model.constant > 1.0 / 12.0 - 1e-3 && model.constant < 0.1);
}

#[test]
fn quasi_periodic_spectrum_is_doubled() {
    let delta = PI / 4.0;
    let u = tensor_boundary(&make_quasi_periodic(delta), &CMatrix::identity(2, 2)).unwrap();
    let p = FemProblem::interval(400, vec![0.0, 0.0], cayley_to_robin(&u)).unwrap();
    let model = ErrorModel::calibrate(400).unwrap();
    let mut exact: Vec<f64> = (-3..=3).map(|n| (2.0 * PI * n as f64 - delta).powi(2)).collect();
    exact.sort_by(|a, b| a.total_cmp(b));
    let pairs = solve_lowest(&p, 6).unwrap();
    for (k, e) in exact.iter().take(3).enumerate() {
        for got in &pairs.eigenvalues[2 * k..2 * k + 2] {
            assert!((got - e).abs() <= model.tolerance(p.h(), *e, &[0.0, 0.0]));
        }
    }
}

#[test]
fn two_level_half_line_bound_state_on_compat_curve() {
    // tan s = 2 with σ = 1: both channels bind at E = λ₂ - 3 = -3.
    let sigma = 1.0;
    let a1 = 2.0 * 2f64.atan();
    let a2 = 2.0 * 3f64.sqrt().atan();
    let robin = cayley_to_robin(&halfline::boundary_unitary(&[a1, a2]).unwrap());
    let p = FemProblem::truncated_half_line(1600, 40.0, vec![sigma, 0.0], robin).unwrap();
    let values = richardson_eigenvalues(&p, 2, 1600, 3).unwrap();
    let e1 = bound_state_energy(sigma, a1).unwrap();
    let e2 = bound_state_energy(0.0, a2).unwrap();
    assert!((e1 - e2).abs() < 1e-12);
    for v in values {
        assert!((v - e1).abs() < 1e-6, "{v} vs {e1}");
    }
}
