//! Bracketing and refinement for one-dimensional scans.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping when the
/// bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // Each step shrinks by 0.618; 200 steps cover any finite f64 bracket.
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(x1, f1), (x2, f2), (mid, fm)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("three candidates")
}

/// Bisection on a sign change `f(a) * f(b) <= 0`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Uniform grid over `[a, b]` with spacing at most `step`, endpoints included.
pub fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Indices of discrete local minima of `values` (endpoints count when they
/// are lower than their only neighbour). Returned as bracketing index pairs.
pub fn local_minima(values: &[f64]) -> Vec<(usize, usize)> {
    let n = values.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    if values[0] < values[1] {
        out.push((0, 1));
    }
    for i in 1..n - 1 {
        if values[i] <= values[i - 1] && values[i] < values[i + 1] {
            out.push((i - 1, i + 1));
        }
    }
    if values[n - 1] < values[n - 2] {
        out.push((n - 2, n - 1));
    }
    out
}
