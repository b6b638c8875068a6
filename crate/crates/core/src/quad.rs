//! Adaptive Simpson quadrature.
//!
//! Used for the analytic cross-checks (density normalization, continuum
//! spectral moments); the geometric cell quadratures have their own
//! special-purpose routines in [`crate::geometry`].

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 60;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Classic adaptive Simpson with Richardson correction. Integrable endpoint
/// singularities converge through the depth-limited bisection; the returned
/// error estimate is the accumulated panel defect.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> QuadResult {
    assert!(a.is_finite() && b.is_finite() && b > a);
    assert!(tol > 0.0);
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let mut err = 0.0;
    let value = simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut evals, &mut err);
    QuadResult { value, error_estimate: err, evaluations: evals }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals, err)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals, err)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; standard Chebyshev-angle
/// initial guesses converge in a handful of steps.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomial_exactly() {
        let r = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((r.value - 4.0).abs() < 1e-10);
    }

    #[test]
    fn integrates_oscillatory() {
        let r = adaptive_simpson(&|x| x.sin(), 0.0, PI, 1e-10);
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn handles_log_endpoint_singularity() {
        // int_0^1 ln(1/x) dx = 1; start a hair above zero.
        let r = adaptive_simpson(&|x| -(x.ln()), 1e-14, 1.0, 1e-9);
        assert!((r.value - 1.0).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn gauss_legendre_integrates_high_degree_polynomials() {
        // n nodes are exact through degree 2n - 1.
        let rule = gauss_legendre(5);
        let total_w: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((total_w - 2.0).abs() < 1e-13);
        let integral: f64 = rule.iter().map(|&(x, w)| w * x.powi(8)).sum();
        assert!((integral - 2.0 / 9.0).abs() < 1e-13, "{integral}");
    }
}
