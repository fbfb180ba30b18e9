use std::f64::consts::{FRAC_PI_2, PI};

use bext_core::extension::{cayley_to_robin, make_quasi_periodic, tensor_boundary};
use bext_core::fem::{lowest_eigenvalues, ErrorModel, FemProblem};
use bext_core::linalg::random_unitary;
use bext_core::rotor::{
    antidiagonal_family, assemble_eigenmodes, find_eigenvalues, solve, spectral_indicator, spectral_lower_bound, MatchingProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rotor(r: &mut ChaCha8Rng) -> MatchingProblem {
    let mu = r.random_range(0.0..3.0);
    let delta = r.random_range(-PI..PI);
    let u = tensor_boundary(&make_quasi_periodic(delta), &random_unitary(2, r)).unwrap();
    MatchingProblem::rotor(mu, u).unwrap()
}

#[test]
fn matching_agrees_with_fem_on_random_rotors() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let n = 200;
    let model = ErrorModel::calibrate(n).unwrap();
    for _ in 0..10 {
        let p = random_rotor(&mut r);
        let lower = spectral_lower_bound(&p);
        let exact: Vec<f64> = find_eigenvalues(&p, lower, 120.0, 6).unwrap().expanded().into_iter().take(6).collect();
        assert_eq!(exact.len(), 6);
        let fem = FemProblem::interval(n, p.bulk_eigenvalues.clone(), cayley_to_robin(&p.boundary)).unwrap();
        let got = lowest_eigenvalues(&fem, 6).unwrap();
        for (g, e) in got.iter().zip(&exact) {
            let tol = model.tolerance(fem.h(), *e, &p.bulk_eigenvalues);
            assert!((g - e).abs() <= tol, "fem {g} vs exact {e}, tolerance {tol}");
        }
    }
}

#[test]
fn eigenmodes_satisfy_boundary_condition_and_ode() {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let p = random_rotor(&mut r);
        let spectrum = find_eigenvalues(&p, spectral_lower_bound(&p), 80.0, 6).unwrap();
        for (&e, &mult) in spectrum.eigenvalues.iter().zip(&spectrum.multiplicities) {
            for mode in assemble_eigenmodes(e, &p, 401, Some(mult)).unwrap() {
                assert!(mode.boundary_residual(&p.boundary) < 1e-8);
                for x in [0.1, 0.37, 0.5, 0.81] {
                    assert!(mode.ode_residual(x, 1e-3) < 1e-6, "ODE residual at {x}");
                }
            }
        }
    }
}

#[test]
fn located_roots_are_sharp_zeros() {
    let mut r = ChaCha8Rng::seed_from_u64(23);
    let mut problems: Vec<MatchingProblem> = (0..3).map(|_| random_rotor(&mut r)).collect();
    problems.push(MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, FRAC_PI_2)).unwrap());
    for p in &problems {
        let spectrum = find_eigenvalues(p, spectral_lower_bound(p), 60.0, 20).unwrap();
        for &e in &spectrum.eigenvalues {
            assert!(spectral_indicator(e, p) < 1e-8);
            assert!(spectral_indicator(e - 0.01, p) > 1e-4);
            assert!(spectral_indicator(e + 0.01, p) > 1e-4);
        }
    }
}

#[test]
fn antidiagonal_roots_ignore_beta_but_modes_do_not() {
    let a = solve(&MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, 0.0)).unwrap(), -11.0, 80.0, 6, 401).unwrap();
    let b = solve(&MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, FRAC_PI_2)).unwrap(), -11.0, 80.0, 6, 401).unwrap();
    assert_eq!(a.eigenvalues.len(), b.eigenvalues.len());
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-8);
    }
    let spread = a.eigenfunctions.iter().zip(&b.eigenfunctions).map(|(x, y)| x.phase_aligned_distance(y)).fold(0.0, f64::max);
    assert!(spread > 1e-2);
}
