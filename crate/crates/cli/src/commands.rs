use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use bext_core::entanglement::{dynamics_separability_verdict, entanglement_entropy, HybridState, Witness, SEPARABLE_ENTROPY};
use bext_core::extension::{
    cayley_to_robin, classify_tensor_structure, make_quasi_periodic, predict_separable_dynamics, tensor_boundary,
    BoundaryUnitary, ExtensionSpec, Geometry,
};
use bext_core::fem::{convergence_study, richardson_eigenvalues, solve_lowest, ErrorModel, FemProblem};
use bext_core::halfline::{self, bound_state_energy, compat_curve, compat_curve_to, diagonal_bound_states, sweep_state};
use bext_core::linalg::{random_unitary, CMatrix};
use bext_core::rotor::{antidiagonal_family, diagonal_family, solve, spectral_lower_bound, MatchingProblem};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::output::{Cell, Report, Table};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl From<bext_core::Error> for CliError {
    fn from(e: bext_core::Error) -> Self {
        if e.is_invalid_input() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type CmdResult = Result<Report, CliError>;

fn input<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Input(msg.into()))
}

fn complex_json(values: impl Iterator<Item = Complex64> + Clone) -> Value {
    json!({
        "re": values.clone().map(|z| z.re).collect::<Vec<_>>(),
        "im": values.map(|z| z.im).collect::<Vec<_>>(),
    })
}

fn matrix_json(m: &CMatrix) -> Value {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
    };
    json!({"re": rows(|z| z.re), "im": rows(|z| z.im)})
}

fn state_json(state: &HybridState) -> Value {
    let levels: Vec<Value> = (0..state.n_levels())
        .map(|b| complex_json(state.values().column(b).iter().copied().collect::<Vec<_>>().into_iter()))
        .collect();
    json!({"x": state.grid(), "levels": levels})
}

pub fn compat_curve_cmd(sigmas: &[f64], samples: usize, max_decay: Option<f64>, torus: bool) -> CmdResult {
    if sigmas.is_empty() {
        return input("at least one sigma is required");
    }
    let mut curves = Vec::new();
    let mut rows = Vec::new();
    for &sigma in sigmas {
        let curve = match max_decay {
            Some(k) => compat_curve_to(sigma, samples, k)?,
            None => compat_curve(sigma, samples)?,
        };
        let residuals = curve.residuals();
        let images = curve.torus_images();
        for (i, (&(a1, a2), r)) in curve.points.iter().zip(&residuals).enumerate() {
            if torus {
                for (k, &(b1, b2)) in images[i].iter().enumerate() {
                    rows.push(vec![sigma.into(), k.into(), b1.into(), b2.into(), (*r).into()]);
                }
            } else {
                rows.push(vec![sigma.into(), 0usize.into(), a1.into(), a2.into(), (*r).into()]);
            }
        }
        let mut entry = json!({
            "sigma": sigma,
            "alpha1": curve.points.iter().map(|p| p.0).collect::<Vec<_>>(),
            "alpha2": curve.points.iter().map(|p| p.1).collect::<Vec<_>>(),
            "residual": residuals,
        });
        if torus {
            entry["torus_images"] = json!(images.iter().map(|im| im.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()).collect::<Vec<_>>());
        }
        curves.push(entry);
    }
    Ok(Report {
        config: json!({"command": "compat-curve", "sigma": sigmas, "samples": samples, "max_decay": max_decay, "torus": torus}),
        json: json!({"curves": curves}),
        table: Table {
            header: vec!["sigma", "image", "alpha1", "alpha2", "residual"],
            rows,
        },
    })
}

pub fn halfline_cmd(lambdas: &[f64], alphas: &[f64]) -> CmdResult {
    if lambdas.is_empty() || lambdas.len() != alphas.len() {
        return input(format!("need matching --lambda and --alpha lists, got {} and {}", lambdas.len(), alphas.len()));
    }
    let groups = diagonal_bound_states(lambdas, alphas, 1e-12)?;
    let mut channels = Vec::new();
    let mut rows = Vec::new();
    for (level, (&lambda, &alpha)) in lambdas.iter().zip(alphas).enumerate() {
        let energy = bound_state_energy(lambda, alpha);
        let decay = energy.map(|e| (lambda - e).sqrt());
        channels.push(json!({"level": level, "lambda": lambda, "alpha": alpha, "energy": energy, "decay_rate": decay}));
        rows.push(vec![level.into(), lambda.into(), alpha.into(), energy.into(), decay.into()]);
    }
    let degenerate: Vec<Value> = groups.iter().map(|(e, levels)| json!({"energy": e, "levels": levels})).collect();
    Ok(Report {
        config: json!({"command": "halfline", "lambda": lambdas, "alpha": alphas}),
        json: json!({"channels": channels, "bound_state_energies": degenerate}),
        table: Table {
            header: vec!["level", "lambda", "alpha", "energy", "decay_rate"],
            rows,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    Diag,
    Antidiag,
}

pub struct RotorArgs {
    pub mu: f64,
    pub delta: f64,
    pub family: Family,
    pub angle: f64,
    pub window: Option<(f64, f64)>,
    pub k: usize,
    pub samples: usize,
}

pub fn rotor_spectrum_cmd(a: &RotorArgs) -> CmdResult {
    let boundary = match a.family {
        Family::Diag => diagonal_family(a.delta, a.angle),
        Family::Antidiag => antidiagonal_family(a.delta, a.angle),
    };
    let problem = MatchingProblem::rotor(a.mu, boundary)?;
    let (lo, hi) = a.window.unwrap_or_else(|| {
        let lo = spectral_lower_bound(&problem);
        (lo, lo.max(0.0) + 200.0)
    });
    if a.samples < 2 {
        return input("need at least two samples");
    }
    let result = solve(&problem, lo, hi, a.k, a.samples)?;
    if a.k > 0 && result.is_empty() {
        return Err(CliError::Numerical(format!("no eigenvalue found in [{lo}, {hi}]")));
    }
    let mut functions = Vec::new();
    let mut rows = Vec::new();
    for (i, state) in result.eigenfunctions.iter().enumerate() {
        let energy = result.energy_of(i);
        let report = entanglement_entropy(state)?;
        let mut entry = state_json(state);
        entry["index"] = json!(i);
        entry["energy"] = json!(energy);
        entry["entropy"] = json!(report.entropy);
        entry["max_abs_imag"] = json!(state.max_abs_imag());
        functions.push(entry);
        for (j, &x) in state.grid().iter().enumerate() {
            let v = state.values();
            rows.push(vec![
                i.into(),
                energy.into(),
                report.entropy.into(),
                x.into(),
                v[(j, 0)].re.into(),
                v[(j, 0)].im.into(),
                v[(j, 1)].re.into(),
                v[(j, 1)].im.into(),
            ]);
        }
    }
    let family = match a.family {
        Family::Diag => "diag",
        Family::Antidiag => "antidiag",
    };
    Ok(Report {
        config: json!({
            "command": "rotor-spectrum", "mu": a.mu, "delta": a.delta, "family": family, "angle": a.angle,
            "window": [lo, hi], "k": a.k, "samples": a.samples,
        }),
        json: json!({
            "eigenvalues": result.eigenvalues,
            "multiplicities": result.multiplicities,
            "eigenfunctions": functions,
        }),
        table: Table {
            header: vec!["index", "energy", "entropy", "x", "up_re", "up_im", "down_re", "down_im"],
            rows,
        },
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    fn to_matrix(&self) -> Result<CMatrix, CliError> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return input("matrix must be square and non-empty");
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return input("imaginary part must match the real part's shape");
            }
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// Full boundary unitary, level-major.
    Matrix { matrix: MatrixSpec },
    /// Quasi-periodic point factor times a level factor (identity if absent).
    QuasiPeriodic { delta: f64, level_factor: Option<MatrixSpec> },
    Diagonal { delta: f64, alpha: f64 },
    Antidiagonal { delta: f64, beta: f64 },
    /// Half-line channel angles, realized as `diag(e^{-iα})`.
    Angles { alphas: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySpec {
    Interval,
    HalfLine,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FemConfig {
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub length: Option<f64>,
    pub n_elements: usize,
    pub bulk_eigenvalues: Vec<f64>,
    pub boundary: BoundarySpec,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub refinements: Vec<usize>,
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
    #[serde(default)]
    pub richardson_levels: Option<usize>,
    #[serde(default)]
    pub eigenvectors: bool,
}

fn default_k() -> usize {
    6
}

fn boundary_from_spec(spec: &BoundarySpec, geometry: Geometry, n_levels: usize) -> Result<BoundaryUnitary, CliError> {
    let points = geometry.boundary_points();
    Ok(match spec {
        BoundarySpec::Matrix { matrix } => BoundaryUnitary::new(matrix.to_matrix()?, points, n_levels)?,
        BoundarySpec::QuasiPeriodic { delta, level_factor } => {
            let ub = match level_factor {
                Some(m) => m.to_matrix()?,
                None => CMatrix::identity(n_levels, n_levels),
            };
            tensor_boundary(&make_quasi_periodic(*delta), &ub)?
        }
        BoundarySpec::Diagonal { delta, alpha } => diagonal_family(*delta, *alpha),
        BoundarySpec::Antidiagonal { delta, beta } => antidiagonal_family(*delta, *beta),
        BoundarySpec::Angles { alphas } => halfline::boundary_unitary(alphas)?,
    })
}

pub fn fem_cmd(config_path: &Path) -> CmdResult {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", config_path.display())))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid config: {e}")))?;
    let config: FemConfig = serde_json::from_value(raw.clone()).map_err(|e| CliError::Input(format!("invalid config: {e}")))?;

    let geometry = match config.geometry {
        GeometrySpec::Interval => Geometry::Interval,
        GeometrySpec::HalfLine => Geometry::HalfLine,
    };
    let n_levels = config.bulk_eigenvalues.len();
    let boundary = boundary_from_spec(&config.boundary, geometry, n_levels)?;
    if boundary.dim() != geometry.boundary_points() * n_levels {
        return input(format!(
            "boundary has dimension {}, expected {} for {n_levels} levels",
            boundary.dim(),
            geometry.boundary_points() * n_levels
        ));
    }
    let length = match (geometry, config.length) {
        (_, Some(l)) => l,
        (Geometry::Interval, None) => 1.0,
        (Geometry::HalfLine, None) => return input("half_line geometry needs a truncation length"),
    };
    let problem =
        FemProblem::new(geometry, config.n_elements, length, config.bulk_eigenvalues.clone(), cayley_to_robin(&boundary))?;
    let pairs = solve_lowest(&problem, config.k)?;
    let model = ErrorModel::calibrate(config.n_elements)?;
    let bounds: Vec<f64> =
        pairs.eigenvalues.iter().map(|&e| model.tolerance(problem.h(), e, &problem.bulk_eigenvalues)).collect();

    let mut result = json!({
        "h": problem.h(),
        "eigenvalues": pairs.eigenvalues,
        "error_model": {"constant": model.constant, "bounds": bounds},
    });
    if config.eigenvectors {
        let vectors: Vec<Value> = (0..pairs.len())
            .map(|k| {
                let levels: Vec<Value> =
                    (0..n_levels).map(|l| complex_json(pairs.level_values(k, l).into_iter())).collect();
                json!({"index": k, "x": pairs.mesh, "levels": levels})
            })
            .collect();
        result["eigenvectors"] = json!(vectors);
    }
    let extrapolated = match config.richardson_levels {
        Some(levels) => Some(richardson_eigenvalues(&problem, config.k, config.n_elements, levels)?),
        None => None,
    };
    if let Some(values) = &extrapolated {
        result["richardson"] = json!(values);
    }
    if !config.refinements.is_empty() {
        let reference = match &config.reference {
            Some(r) => r.clone(),
            None => {
                let finest = *config.refinements.iter().max().expect("non-empty");
                richardson_eigenvalues(&problem, config.k, finest, 2)?
            }
        };
        let table = convergence_study(&problem, config.k, &config.refinements, &reference)?;
        let rows: Vec<Value> = table
            .rows
            .iter()
            .map(|r| json!({"n_elements": r.n_elements, "h": r.h, "eigenvalues": r.eigenvalues, "errors": r.errors}))
            .collect();
        result["convergence"] = json!({"reference": reference, "rows": rows, "observed_order": table.observed_order});
    }

    let rows = pairs
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            vec![
                k.into(),
                e.into(),
                bounds[k].into(),
                extrapolated.as_ref().map(|v| v[k]).into(),
            ]
        })
        .collect();
    let mut config_json = raw;
    config_json["command"] = json!("fem");
    Ok(Report {
        config: config_json,
        json: result,
        table: Table {
            header: vec!["index", "eigenvalue", "error_bound", "richardson"],
            rows,
        },
    })
}

/// Reads a sampled state: JSON `{"x": [...], "levels": [{"re": [...], "im": [...]}, ...]}`
/// or CSV with header `x,re_0,im_0,re_1,im_1,...` (lines starting with `#` skipped).
pub fn read_state(path: &Path) -> Result<HybridState, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (grid, columns) = if is_json {
        #[derive(Deserialize)]
        struct Level {
            re: Vec<f64>,
            #[serde(default)]
            im: Option<Vec<f64>>,
        }
        #[derive(Deserialize)]
        struct StateFile {
            x: Vec<f64>,
            levels: Vec<Level>,
        }
        let file: StateFile = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid state file: {e}")))?;
        let columns: Vec<Vec<Complex64>> = file
            .levels
            .iter()
            .map(|l| {
                let im = l.im.clone().unwrap_or_else(|| vec![0.0; l.re.len()]);
                if im.len() != l.re.len() {
                    return input("re and im lengths differ");
                }
                Ok(l.re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect())
            })
            .collect::<Result<_, _>>()?;
        (file.x, columns)
    } else {
        let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| CliError::Input("empty state file".into()))?.split(',').collect();
        if header.first().map(|h| h.trim()) != Some("x") || header.len() < 3 || header.len() % 2 == 0 {
            return input("state CSV header must be x,re_0,im_0,...");
        }
        let n_levels = (header.len() - 1) / 2;
        let mut grid = Vec::new();
        let mut columns = vec![Vec::new(); n_levels];
        for (row, line) in lines.enumerate() {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Input(format!("row {}: {e}", row + 1)))?;
            if fields.len() != header.len() {
                return input(format!("row {} has {} fields, expected {}", row + 1, fields.len(), header.len()));
            }
            grid.push(fields[0]);
            for (b, col) in columns.iter_mut().enumerate() {
                col.push(Complex64::new(fields[1 + 2 * b], fields[2 + 2 * b]));
            }
        }
        (grid, columns)
    };
    if columns.is_empty() || columns.iter().any(|c| c.len() != grid.len()) {
        return input("every level needs one value per grid point");
    }
    let values = CMatrix::from_fn(grid.len(), columns.len(), |i, b| columns[b][i]);
    Ok(HybridState::new(grid, values)?)
}

pub fn entangle_cmd(path: &Path) -> CmdResult {
    let state = read_state(path)?;
    let report = entanglement_entropy(&state)?;
    let mut rows = vec![
        vec!["entropy".into(), report.entropy.into()],
        vec!["separable".into(), Cell::Int(report.separable as i64)],
    ];
    for (k, &p) in report.schmidt_coefficients.iter().enumerate() {
        rows.push(vec![Cell::Text(format!("schmidt_{k}")), p.into()]);
    }
    Ok(Report {
        config: json!({"command": "entangle", "input": path.display().to_string()}),
        json: json!({
            "n_levels": state.n_levels(),
            "n_samples": state.len(),
            "entropy": report.entropy,
            "separable": report.separable,
            "schmidt_coefficients": report.schmidt_coefficients,
            "reduced_density": matrix_json(&report.reduced_density),
        }),
        table: Table {
            header: vec!["quantity", "value"],
            rows,
        },
    })
}

pub struct SweepArgs {
    pub sigma: f64,
    pub s_start: Option<f64>,
    pub s_end: f64,
    pub steps: usize,
    pub c1: Complex64,
    pub c2: Complex64,
}

pub fn sweep_cmd(a: &SweepArgs) -> CmdResult {
    if !(a.sigma > 0.0) {
        return input(format!("sigma must be positive, got {}", a.sigma));
    }
    if a.steps < 2 {
        return input("need at least two steps");
    }
    let start = a.s_start.unwrap_or_else(|| a.sigma.sqrt().atan());
    if !(start > 0.0 && a.s_end < FRAC_PI_2 && start <= a.s_end) {
        return input(format!("need 0 < s-start <= s-end < pi/2, got [{start}, {}]", a.s_end));
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for i in 0..a.steps {
        // Pin the endpoints exactly so the threshold point stays on it.
        let s = if i + 1 == a.steps { a.s_end } else { start + (a.s_end - start) * i as f64 / (a.steps - 1) as f64 };
        let tan2 = s.tan().powi(2);
        match sweep_state(s, a.sigma, a.c1, a.c2) {
            Ok(state) => {
                let entropy = state.entropy();
                rows.push(vec![s.into(), tan2.into(), state.energy.into(), entropy.into(), "ok".into()]);
                points.push(json!({"s": s, "tan2": tan2, "energy": state.energy, "entropy": entropy, "status": "ok"}));
            }
            Err(bext_core::Error::BelowCompatibilityThreshold { .. }) => {
                rows.push(vec![s.into(), tan2.into(), Cell::Empty, Cell::Empty, "below_threshold".into()]);
                points.push(json!({"s": s, "tan2": tan2, "energy": null, "entropy": null, "status": "below_threshold"}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Report {
        config: json!({
            "command": "sweep", "sigma": a.sigma, "s_start": start, "s_end": a.s_end, "steps": a.steps,
            "c1": [a.c1.re, a.c1.im], "c2": [a.c2.re, a.c2.im],
        }),
        json: json!({"points": points}),
        table: Table {
            header: vec!["s", "tan2", "energy", "entropy", "status"],
            rows,
        },
    })
}

/// Random boundary unitaries of each tensor class on the two-level interval,
/// predicted separability against the eigenfunction verdict.
pub fn concordance_cmd(count: usize, seed: u64, samples: usize) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bulk = vec![1.0, -1.0];
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for trial in 0..count {
        let ua = BoundaryUnitary::new(random_unitary(2, &mut rng), 2, 1)?;
        let ub = random_unitary(2, &mut rng);
        let candidates = [
            tensor_boundary(&ua, &CMatrix::identity(2, 2))?,
            tensor_boundary(&ua, &ub)?,
            BoundaryUnitary::new(random_unitary(4, &mut rng), 2, 2)?,
        ];
        for u in candidates {
            let class = classify_tensor_structure(&u, 2, 2)?.tag();
            let spec = ExtensionSpec::new(Geometry::Interval, bulk.clone(), u.clone())?;
            let predicted = predict_separable_dynamics(&spec);
            let problem = MatchingProblem::new(bulk.clone(), u)?;
            let spectrum = solve(&problem, spectral_lower_bound(&problem), 150.0, 8, samples)?;
            let verdict = dynamics_separability_verdict(&spectrum, SEPARABLE_ENTROPY)?;
            let witness = match &verdict {
                bext_core::entanglement::DynamicsVerdict::Separable => "none",
                bext_core::entanglement::DynamicsVerdict::NonSeparable(w) => match w {
                    Witness::Entangled { .. } => "entangled",
                    Witness::LevelMismatch { .. } => "level_mismatch",
                    Witness::ProfileMismatch { .. } => "profile_mismatch",
                },
            };
            let agree = predicted == verdict.is_separable();
            rows.push(vec![
                trial.into(),
                class.into(),
                Cell::Int(predicted as i64),
                Cell::Int(verdict.is_separable() as i64),
                witness.into(),
                Cell::Int(agree as i64),
            ]);
            trials.push(json!({
                "trial": trial, "class": class, "predicted_separable": predicted,
                "verdict_separable": verdict.is_separable(), "witness": witness, "agree": agree,
            }));
        }
    }
    Ok(Report {
        config: json!({"command": "concordance", "count": count, "seed": seed, "samples": samples}),
        json: json!({"trials": trials}),
        table: Table {
            header: vec!["trial", "class", "predicted_separable", "verdict_separable", "witness", "agree"],
            rows,
        },
    })
}
