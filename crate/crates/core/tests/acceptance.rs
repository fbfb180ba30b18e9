//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits nonzero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::process::ExitCode;

use bext_core::entanglement::{dynamics_separability_verdict, entanglement_entropy, DynamicsVerdict, Witness, SEPARABLE_ENTROPY};
use bext_core::extension::{cayley_to_robin, make_quasi_periodic, tensor_boundary, BoundaryUnitary};
use bext_core::fem::{lowest_eigenvalues, richardson_eigenvalues, ErrorModel, FemProblem};
use bext_core::halfline::{self, bound_state_energy, compat_curve, sweep_state};
use bext_core::linalg::{c, random_unitary, CMatrix};
use bext_core::rotor::{
    antidiagonal_family, diagonal_family, find_eigenvalues, sigma_beta_roots, solve, spectral_lower_bound, MatchingProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), bext_core::Error>;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn halfline_bound_state_vs_fem() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let lambda = rng.random_range(-5.0..10.0);
        let t: f64 = rng.random_range(0.3..3.0);
        let alpha = 2.0 * t.atan();
        let exact = bound_state_energy(lambda, alpha).expect("positive decay rate");
        let robin = cayley_to_robin(&halfline::boundary_unitary(&[alpha])?);
        let problem = FemProblem::truncated_half_line(1600, 40.0, vec![lambda], robin)?;
        let fem = richardson_eigenvalues(&problem, 1, 1600, 3)?[0];
        worst = worst.max((fem - exact).abs());
    }
    Ok((worst < 1e-6, format!("max |dE| = {worst:.3e} over 20 draws (L=40, n=1600)")))
}

fn compat_degeneracy() -> Outcome {
    let mut worst = 0.0f64;
    for sigma in [1.0, 5.0, 10.0] {
        let curve = compat_curve(sigma, 50)?;
        for &(a1, a2) in &curve.points {
            let e1 = sigma - (0.5 * a1).tan().powi(2);
            let e2 = 0.0 - (0.5 * a2).tan().powi(2);
            worst = worst.max((e1 - e2).abs());
        }
    }
    Ok((worst < 1e-12, format!("max channel energy gap = {worst:.3e} over 150 points")))
}

fn rotor_cross_oracle() -> Outcome {
    let boundary = antidiagonal_family(FRAC_PI_2, FRAC_PI_2);
    let matching = MatchingProblem::rotor(10.0, boundary.clone())?;
    let exact: Vec<f64> = find_eigenvalues(&matching, -11.0, 80.0, 6)?.expanded().into_iter().take(6).collect();
    if exact.len() < 6 {
        return Ok((false, format!("matching found only {} eigenvalues", exact.len())));
    }
    let robin = cayley_to_robin(&boundary);
    let coarse = FemProblem::interval(400, vec![10.0, -10.0], robin)?;
    let fine = coarse.refined(800);
    let e400 = lowest_eigenvalues(&coarse, 6)?;
    let e800 = lowest_eigenvalues(&fine, 6)?;
    let model = ErrorModel::calibrate(400)?;
    let mut ok = true;
    let mut ratios = Vec::new();
    for j in 0..6 {
        let gap = (e400[j] - exact[j]).abs();
        ok &= gap <= model.tolerance(coarse.h(), exact[j], &coarse.bulk_eigenvalues);
        let ratio = gap / (e800[j] - exact[j]).abs();
        ok &= (3.5..=4.5).contains(&ratio);
        ratios.push(ratio);
    }
    Ok((
        ok,
        format!(
            "C = {:.4}, gaps(n=400) = {:.2e}, refinement ratios = [{}]",
            model.constant,
            max_abs_diff(&e400, &exact),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn sigma_beta_vs_matching() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (mu, delta) in [(10.0, FRAC_PI_2), (3.0, 1.0)] {
        let closed = sigma_beta_roots(mu, delta, -mu - 1.0, 100.0, 0.01)?;
        let p = MatchingProblem::rotor(mu, antidiagonal_family(delta, 0.7))?;
        let matched = find_eigenvalues(&p, -mu - 1.0, 100.0, 1000)?.eigenvalues;
        let same = closed.len() == matched.len();
        let diff = if same { max_abs_diff(&closed, &matched) } else { f64::INFINITY };
        ok &= same && diff < 1e-8;
        notes.push(format!("(mu={mu}, delta={delta:.4}): {} roots, max diff {diff:.2e}", matched.len()));
    }
    Ok((ok, notes.join("; ")))
}

fn beta_independence() -> Outcome {
    let betas = [0.0, FRAC_PI_4, FRAC_PI_2, PI];
    let mut lists = Vec::new();
    for &beta in &betas {
        let p = MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, beta))?;
        lists.push(find_eigenvalues(&p, -11.0, 100.0, 1000)?.eigenvalues);
    }
    let mut spread = 0.0f64;
    let mut same_length = true;
    for l in &lists[1..] {
        same_length &= l.len() == lists[0].len();
        if same_length {
            spread = spread.max(max_abs_diff(l, &lists[0]));
        }
    }
    let a = solve(&MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, 0.0))?, -11.0, 100.0, 6, 401)?;
    let b = solve(&MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, FRAC_PI_2))?, -11.0, 100.0, 6, 401)?;
    let distance = a
        .eigenfunctions
        .iter()
        .zip(&b.eigenfunctions)
        .map(|(x, y)| x.phase_aligned_distance(y))
        .fold(0.0, f64::max);
    Ok((
        same_length && spread < 1e-8 && distance > 1e-2,
        format!("{} roots, max spread {spread:.2e}, max eigenfunction distance {distance:.3}", lists[0].len()),
    ))
}

fn diagonal_vs_antidiagonal() -> Outcome {
    let diag = solve(&MatchingProblem::rotor(10.0, diagonal_family(FRAC_PI_2, FRAC_PI_2))?, -11.0, 100.0, 10, 401)?;
    let diag_entropy = diag
        .eigenfunctions
        .iter()
        .take(6)
        .map(|s| entanglement_entropy(s).map(|r| r.entropy))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = dynamics_separability_verdict(&diag, SEPARABLE_ENTROPY)?;
    let profile_witness = matches!(verdict, DynamicsVerdict::NonSeparable(Witness::ProfileMismatch { .. }));
    let diag_max = diag_entropy.iter().copied().fold(0.0, f64::max);

    let anti = solve(&MatchingProblem::rotor(10.0, antidiagonal_family(FRAC_PI_2, FRAC_PI_2))?, -11.0, 80.0, 6, 401)?;
    let anti_entropy = anti
        .eigenfunctions
        .iter()
        .take(6)
        .map(|s| entanglement_entropy(s).map(|r| r.entropy))
        .collect::<Result<Vec<_>, _>>()?;
    let anti_max = anti_entropy.iter().copied().fold(0.0, f64::max);
    let imag = anti.eigenfunctions.iter().take(6).map(|s| s.phase_fixed().max_abs_imag()).fold(0.0, f64::max);

    let ok = diag_entropy.len() == 6 && diag_max < 1e-6 && profile_witness && anti_entropy.len() == 6 && anti_max > 0.1 && imag < 1e-8;
    Ok((
        ok,
        format!("diagonal: max S = {diag_max:.2e}, verdict {verdict:?}; anti-diagonal: max S = {anti_max:.3}, max |Im| = {imag:.2e}"),
    ))
}

fn verdict_for(boundary: BoundaryUnitary) -> Result<DynamicsVerdict, bext_core::Error> {
    let p = MatchingProblem::new(vec![1.0, -1.0], boundary)?;
    let lower = spectral_lower_bound(&p);
    let r = solve(&p, lower, 150.0, 8, 401)?;
    dynamics_separability_verdict(&r, SEPARABLE_ENTROPY)
}

fn product_structure_concordance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let identity = CMatrix::identity(2, 2);
    let (mut separable, mut product, mut non_product) = (0, 0, 0);
    for _ in 0..10 {
        let ua = BoundaryUnitary::new(random_unitary(2, &mut rng), 2, 1)?;
        if verdict_for(tensor_boundary(&ua, &identity)?)?.is_separable() {
            separable += 1;
        }
        let ub = random_unitary(2, &mut rng);
        if !verdict_for(tensor_boundary(&ua, &ub)?)?.is_separable() {
            product += 1;
        }
        let u = BoundaryUnitary::new(random_unitary(4, &mut rng), 2, 2)?;
        if !verdict_for(u)?.is_separable() {
            non_product += 1;
        }
    }
    Ok((
        separable == 10 && product == 10 && non_product == 10,
        format!("U_A x I separable {separable}/10, U_A x U_B non-separable {product}/10, non-product non-separable {non_product}/10"),
    ))
}

fn sweep_entanglement() -> Outcome {
    let sigma = 1.0f64;
    let amp = c(FRAC_1_SQRT_2, 0.0);
    let mut ok = true;
    let mut notes = Vec::new();
    for (tan2, want_low) in [(sigma, true), (4.0 * sigma, false)] {
        let s = tan2.sqrt().atan();
        let state = sweep_state(s, sigma, amp, amp)?;
        let closed = state.entropy();
        let quadrature = entanglement_entropy(&state.sample(40.0, 200_001)?)?.entropy;
        ok &= (closed - quadrature).abs() < 1e-8;
        ok &= if want_low { closed < 1e-10 && quadrature < 1e-10 } else { closed > 0.05 && quadrature > 0.05 };
        notes.push(format!("tan^2 s = {tan2}: S = {closed:.3e} (closed), {quadrature:.3e} (quadrature)"));
    }
    Ok((ok, notes.join("; ")))
}

fn known_spectra() -> Outcome {
    let model = ErrorModel::calibrate(400)?;
    let mut ok = true;
    let mut notes = Vec::new();

    let periodic = tensor_boundary(&make_quasi_periodic(0.0), &CMatrix::identity(2, 2))?;
    let p = MatchingProblem::rotor(0.0, periodic.clone())?;
    let r = find_eigenvalues(&p, -1.0, 16.0 * PI * PI + 1.0, 3)?;
    let want = [0.0, 4.0 * PI * PI, 16.0 * PI * PI];
    let matched = r.eigenvalues.len() == 3 && max_abs_diff(&r.eigenvalues, &want) < 1e-8 && r.multiplicities == [2, 4, 4];
    ok &= matched;
    notes.push(format!("periodic matching {:?} x {:?}", r.eigenvalues, r.multiplicities));

    let expected_periodic: Vec<f64> = want.iter().zip([2, 4, 4]).flat_map(|(&e, m)| std::iter::repeat_n(e, m)).collect();
    let fem = FemProblem::interval(400, vec![0.0, 0.0], cayley_to_robin(&periodic))?;
    let got = lowest_eigenvalues(&fem, 10)?;
    let fem_ok = got.iter().zip(&expected_periodic).all(|(g, e)| (g - e).abs() <= model.tolerance(fem.h(), *e, &fem.bulk_eigenvalues));
    ok &= fem_ok;
    notes.push(format!("periodic FEM max gap {:.2e}", max_abs_diff(&got, &expected_periodic)));

    for delta in [FRAC_PI_4, FRAC_PI_2] {
        let mut distinct: Vec<f64> = (-4..=4).map(|n| (2.0 * PI * n as f64 - delta).powi(2)).collect();
        distinct.sort_by(|a, b| a.total_cmp(b));
        distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let distinct: Vec<f64> = distinct.into_iter().take(4).collect();
        let u = tensor_boundary(&make_quasi_periodic(delta), &CMatrix::identity(2, 2))?;
        let p = MatchingProblem::rotor(0.0, u.clone())?;
        let r = find_eigenvalues(&p, -1.0, distinct[3] + 1.0, 4)?;
        let matched = r.eigenvalues.len() == 4 && max_abs_diff(&r.eigenvalues, &distinct) < 1e-8 && r.multiplicities.iter().all(|&m| m == 2);
        let expanded: Vec<f64> = distinct.iter().flat_map(|&e| [e, e]).collect();
        let fem = FemProblem::interval(400, vec![0.0, 0.0], cayley_to_robin(&u))?;
        let got = lowest_eigenvalues(&fem, 8)?;
        let fem_ok = got.iter().zip(&expanded).all(|(g, e)| (g - e).abs() <= model.tolerance(fem.h(), *e, &fem.bulk_eigenvalues));
        ok &= matched && fem_ok;
        notes.push(format!(
            "delta={delta:.4}: matching diff {:.2e}, FEM max gap {:.2e}",
            if r.eigenvalues.len() == 4 { max_abs_diff(&r.eigenvalues, &distinct) } else { f64::INFINITY },
            max_abs_diff(&got, &expanded)
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("half-line bound state vs truncated FEM", halfline_bound_state_vs_fem),
        ("compatibility curve degeneracy", compat_degeneracy),
        ("rotor matching vs FEM", rotor_cross_oracle),
        ("sigma_beta closed form vs matching", sigma_beta_vs_matching),
        ("beta independence of the rotor spectrum", beta_independence),
        ("diagonal vs anti-diagonal entanglement", diagonal_vs_antidiagonal),
        ("product structure vs separability verdict", product_structure_concordance),
        ("sweep entanglement generation", sweep_entanglement),
        ("known periodic and quasi-periodic spectra", known_spectra),
    ];
    let mut failures = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = std::time::Instant::now();
        let (passed, detail) = match check() {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {} {}: {} ({detail}) [{:.1}s]",
            k + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
