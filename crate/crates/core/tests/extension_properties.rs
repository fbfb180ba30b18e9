use bext_core::extension::{
    cayley_to_robin, classify_tensor_structure, deficiency_indices, make_quasi_periodic, tensor_boundary, BoundaryUnitary,
    ExtensionSpec, Geometry, TensorStructure,
};
use bext_core::linalg::{self, random_unitary, CMatrix, I};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn constructed_unitaries_are_unitary() {
    let mut r = rng(11);
    for _ in 0..20 {
        let delta = r.random_range(-3.0..3.0);
        let ub = random_unitary(3, &mut r);
        let u = tensor_boundary(&make_quasi_periodic(delta), &ub).unwrap();
        assert!(linalg::unitarity_defect(u.matrix()) < 1e-12);
        let w = BoundaryUnitary::new(random_unitary(6, &mut r), 2, 3).unwrap();
        assert!(linalg::unitarity_defect(w.matrix()) < 1e-12);
    }
}

#[test]
fn cayley_round_trip_away_from_minus_one() {
    let mut r = rng(12);
    let mut checked = 0;
    while checked < 30 {
        let u = random_unitary(4, &mut r);
        let near_minus_one = linalg::singular_values(&(CMatrix::identity(4, 4) + &u)).iter().any(|&s| s < 1e-6);
        if near_minus_one {
            continue;
        }
        let robin = cayley_to_robin(&BoundaryUnitary::new(u.clone(), 2, 2).unwrap());
        assert_eq!(robin.dirichlet_dim(), 0);
        let a = &robin.robin_matrix;
        assert!(linalg::hermiticity_defect(a) < 1e-10);
        let id = CMatrix::identity(4, 4);
        let back = (&id + a * I).lu().solve(&(&id - a * I)).unwrap();
        assert!(linalg::max_abs(&(back - &u)) < 1e-10);
        checked += 1;
    }
}

#[test]
fn cayley_round_trip_with_dirichlet_part() {
    let mut r = rng(13);
    for _ in 0..10 {
        let q = random_unitary(4, &mut r);
        let mut phases: Vec<f64> = (0..4).map(|_| r.random_range(-3.0..3.0)).collect();
        phases[0] = std::f64::consts::PI;
        let d = CMatrix::from_diagonal(&bext_core::linalg::CVector::from_iterator(4, phases.iter().map(|&p| linalg::cis(p))));
        let u = &q * d * q.adjoint();
        let robin = cayley_to_robin(&BoundaryUnitary::new(u.clone(), 2, 2).unwrap());
        assert_eq!(robin.dirichlet_dim(), 1);
        assert!(linalg::max_abs(&(robin.reconstruct_unitary() - u)) < 1e-10);
    }
}

#[test]
fn classification_is_phase_invariant() {
    let mut r = rng(14);
    let ua = BoundaryUnitary::new(random_unitary(2, &mut r), 2, 1).unwrap();
    let cases = [
        tensor_boundary(&ua, &CMatrix::identity(2, 2)).unwrap(),
        tensor_boundary(&ua, &random_unitary(2, &mut r)).unwrap(),
        BoundaryUnitary::new(random_unitary(4, &mut r), 2, 2).unwrap(),
    ];
    let tags: Vec<&str> = cases.iter().map(|u| classify_tensor_structure(u, 2, 2).unwrap().tag()).collect();
    assert_eq!(tags, ["product-with-identity", "product", "non-product"]);
    for _ in 0..100 {
        let theta = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        for (u, tag) in cases.iter().zip(&tags) {
            assert_eq!(classify_tensor_structure(&u.with_phase(theta), 2, 2).unwrap().tag(), *tag);
        }
    }
}

#[test]
fn product_factors_reassemble() {
    let mut r = rng(15);
    let ua = BoundaryUnitary::new(random_unitary(2, &mut r), 2, 1).unwrap();
    let ub = random_unitary(3, &mut r);
    let u = tensor_boundary(&ua, &ub).unwrap();
    match classify_tensor_structure(&u, 2, 3).unwrap() {
        TensorStructure::Product { u_a, u_b } => {
            let rebuilt = linalg::kron(&u_b, &u_a);
            assert!(linalg::max_abs(&(rebuilt - u.matrix())) < 1e-10);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn deficiency_indices_are_additive_in_levels() {
    for geometry in [Geometry::HalfLine, Geometry::Interval] {
        let points = geometry.boundary_points();
        let one = deficiency_indices(
            &ExtensionSpec::new(geometry, vec![0.0], BoundaryUnitary::new(CMatrix::identity(points, points), points, 1).unwrap())
                .unwrap(),
        );
        for k in 2..5 {
            let levels: Vec<f64> = (0..k).rev().map(|l| l as f64).collect();
            let dim = points * k;
            let spec =
                ExtensionSpec::new(geometry, levels, BoundaryUnitary::new(CMatrix::identity(dim, dim), points, k).unwrap()).unwrap();
            let many = deficiency_indices(&spec);
            assert_eq!(many.n_plus, k * one.n_plus);
            assert_eq!(many.n_minus, k * one.n_minus);
        }
    }
}
