//! Closed-form and semi-analytic Gaussian facts: the product-Gaussian density
//! and sign probability, expected gradient norms from spectral moments, the
//! Kac-Rice expected level-set measure, and the band-kernel estimator of the
//! conditional curvature law E[kappa | f = a] = -a E[|grad f|].

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{C2Field, SampledField};
use crate::geometry::{kappa_from_jet, Domain, GRADIENT_FLOOR};
use crate::linalg;
use crate::rng::CounterRng;
use crate::special::bessel_k0e;
use crate::spectral::SpectralMeasure;
use crate::stats;

/// Standard normal density.
pub fn standard_normal_pdf(a: f64) -> f64 {
    (-(a * a) / 2.0).exp() / (2.0 * PI).sqrt()
}

/// Parameters of the product Z = XY of standard Gaussians with correlation
/// rho. The density requires |rho| < 1; the sign probability extends to ±1
/// as limits.
#[derive(Debug, Clone, Copy)]
pub struct ProductGaussianParams {
    pub rho: f64,
}

impl ProductGaussianParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "correlation must lie in [-1, 1], got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    pub fn positive_prob(&self) -> f64 {
        product_positive_prob(self.rho).expect("validated at construction")
    }

    pub fn density(&self, z: f64) -> Result<f64> {
        product_density(self.rho, z)
    }
}

/// P(XY > 0) = (pi - arccos rho) / pi for standard Gaussians with
/// correlation rho in [-1, 1].
pub fn product_positive_prob(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    Ok((PI - rho.acos()) / PI)
}

/// Density of Z = XY at z != 0:
/// `psi(z) = exp(rho z / (1 - rho^2)) K0(|z| / (1 - rho^2)) / (pi sqrt(1 - rho^2))`.
///
/// Evaluated through the exponentially scaled K0, so large |z| underflows
/// gracefully instead of producing inf * 0.
pub fn product_density(rho: f64, z: f64) -> Result<f64> {
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "density requires |rho| < 1, got {rho}"
        )));
    }
    if z == 0.0 {
        return Err(Error::SingularAtZero);
    }
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("z must be finite, got {z}")));
    }
    let om = 1.0 - rho * rho;
    let exponent = (rho * z - z.abs()) / om;
    Ok(bessel_k0e(z.abs() / om) * exponent.exp() / (PI * om.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientNormMethod {
    /// Isotropic second moments in d = 2: E|G| = sqrt(c pi / 2) exactly.
    ClosedFormIsotropic,
    /// General covariance: Monte Carlo over `draws` samples.
    MonteCarlo { draws: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct GradientNormEstimate {
    pub value: f64,
    /// `None` for the closed form.
    pub standard_error: Option<f64>,
    pub method: GradientNormMethod,
}

const GRAD_NORM_MC_SEED: u64 = 0x47524144;

/// E|grad f| for the stationary field with spectral measure `m`: the mean
/// norm of N(0, Lambda) with Lambda the gradient second-moment matrix.
pub fn expected_gradient_norm(m: &SpectralMeasure, n_mc: usize) -> Result<GradientNormEstimate> {
    let report = m.validate_nondegenerate();
    if !report.pass {
        return Err(Error::DegenerateMeasure(report.to_string()));
    }
    let moments = m.second_moments();
    if m.dim() == 2 {
        if let Some(c) = moments.isotropic_scale(1e-12) {
            return Ok(GradientNormEstimate {
                value: (c * PI / 2.0).sqrt(),
                standard_error: None,
                method: GradientNormMethod::ClosedFormIsotropic,
            });
        }
    }
    let d = m.dim();
    let chol = linalg::cholesky(d, moments.second(), 1e-12).ok_or_else(|| {
        Error::DegenerateMeasure("second-moment matrix is numerically singular".into())
    })?;
    let rng = CounterRng::new(GRAD_NORM_MC_SEED);
    let norms: Vec<f64> = (0..n_mc)
        .map(|i| {
            let z: Vec<f64> = (0..d).map(|k| rng.normal(i as u64, k as u64)).collect();
            let g = linalg::lower_tri_mul(d, &chol, &z);
            g.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    Ok(GradientNormEstimate {
        value: stats::mean(&norms),
        standard_error: Some(stats::standard_error(&norms)),
        method: GradientNormMethod::MonteCarlo { draws: n_mc },
    })
}

/// Closed-form expected level-set measure via the stationary Kac-Rice
/// formula: `E H(f^{-1}(a) in D) = L^d(D) p(a) E|grad f|`.
#[derive(Debug, Clone)]
pub struct KacRiceOracle {
    grad_norm: GradientNormEstimate,
    dim: usize,
}

impl KacRiceOracle {
    pub fn new(m: &SpectralMeasure, n_mc: usize) -> Result<Self> {
        Ok(Self { grad_norm: expected_gradient_norm(m, n_mc)?, dim: m.dim() })
    }

    pub fn exp_grad_norm(&self) -> f64 {
        self.grad_norm.value
    }

    pub fn density_at(&self, a: f64) -> f64 {
        standard_normal_pdf(a)
    }

    pub fn expected_measure(&self, dom: &Domain, a: f64) -> Result<f64> {
        if dom.dim() != self.dim || self.dim != 2 {
            return Err(Error::InvalidParameter(
                "Kac-Rice expected measure is implemented for d = 2".into(),
            ));
        }
        Ok(dom.volume() * self.density_at(a) * self.grad_norm.value)
    }
}

pub fn kac_rice_expected_measure(m: &SpectralMeasure, dom: &Domain, a: f64) -> Result<f64> {
    KacRiceOracle::new(m, 200_000)?.expected_measure(dom, a)
}

/// Band-kernel conditional curvature estimate at one level.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalCurvatureEstimate {
    pub level: f64,
    pub bandwidth: f64,
    pub estimate: f64,
    /// Seed-level bootstrap standard error.
    pub standard_error: f64,
    pub accepted_points: u64,
    pub seeds: u64,
}

/// Estimate E[kappa | f = a] for each level by the hard band kernel
/// `mean[kappa 1_{|f - a| <= h}] / mean[1_{|f - a| <= h}]` over uniform
/// sample points of `n_seeds` independent realizations.
///
/// Points within the gradient floor of a critical point are excluded (a
/// measure-zero set). All levels share the same field evaluations. Errors
/// with an empty-band flag when no point lands in a level's band.
pub fn conditional_curvature_table(
    m: &SpectralMeasure,
    dom: &Domain,
    levels: &[f64],
    bandwidth: f64,
    n_seeds: u64,
    points_per_seed: u64,
    base_seed: u64,
) -> Result<Vec<ConditionalCurvatureEstimate>> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if levels.is_empty() || n_seeds == 0 || points_per_seed == 0 {
        return Err(Error::InvalidParameter(
            "need at least one level, one seed and one point per seed".into(),
        ));
    }
    let report = m.validate_nondegenerate();
    if !report.pass {
        return Err(Error::DegenerateMeasure(report.to_string()));
    }
    if m.dim() != 2 || dom.dim() != 2 {
        return Err(Error::InvalidParameter(
            "conditional curvature sampling is implemented for d = 2".into(),
        ));
    }

    // Per-seed (sum kappa, count) for each level.
    let parts: Vec<Vec<(f64, f64)>> = (0..n_seeds)
        .into_par_iter()
        .map(|s| {
            let seed = base_seed + s;
            let field = SampledField::draw(m, seed);
            let point_rng = CounterRng::new(seed ^ 0x504F_494E);
            let mut acc = vec![(0.0f64, 0.0f64); levels.len()];
            for i in 0..points_per_seed {
                let p = point_rng.point_in_square(i, dom.r());
                let jet = field.jet(p[0], p[1]);
                if jet.grad_norm() < GRADIENT_FLOOR {
                    continue;
                }
                let kappa = kappa_from_jet(&jet).expect("gradient above floor");
                for (li, &level) in levels.iter().enumerate() {
                    if (jet.f - level).abs() <= bandwidth {
                        acc[li].0 += kappa;
                        acc[li].1 += 1.0;
                    }
                }
            }
            acc
        })
        .collect();

    let mut out = Vec::with_capacity(levels.len());
    for (li, &level) in levels.iter().enumerate() {
        let level_parts: Vec<(f64, f64)> = parts.iter().map(|p| p[li]).collect();
        let num: f64 = level_parts.iter().map(|p| p.0).sum();
        let den: f64 = level_parts.iter().map(|p| p.1).sum();
        if den == 0.0 {
            return Err(Error::EmptySelection(format!(
                "no sample points within bandwidth {bandwidth} of level {level}"
            )));
        }
        let se = stats::bootstrap_ratio_se(&level_parts, 200, base_seed ^ 0xB007 ^ li as u64);
        out.push(ConditionalCurvatureEstimate {
            level,
            bandwidth,
            estimate: num / den,
            standard_error: se,
            accepted_points: den as u64,
            seeds: n_seeds,
        });
    }
    Ok(out)
}

/// Single-level convenience wrapper.
pub fn conditional_curvature_estimate(
    m: &SpectralMeasure,
    dom: &Domain,
    level: f64,
    bandwidth: f64,
    n_seeds: u64,
    points_per_seed: u64,
    base_seed: u64,
) -> Result<ConditionalCurvatureEstimate> {
    Ok(conditional_curvature_table(
        m,
        dom,
        &[level],
        bandwidth,
        n_seeds,
        points_per_seed,
        base_seed,
    )?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use approx::assert_relative_eq;

    #[test]
    fn positive_prob_reference_points() {
        assert_relative_eq!(product_positive_prob(0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(product_positive_prob(1.0).unwrap(), 1.0);
        assert!(product_positive_prob(-1.0).unwrap().abs() < 1e-16);
        assert_relative_eq!(
            product_positive_prob(0.5).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-14
        );
        assert!(product_positive_prob(1.5).is_err());
    }

    #[test]
    fn positive_prob_complement_and_monotonicity() {
        let mut last = -1.0;
        let mut rho = -1.0;
        while rho <= 1.0 {
            let p = product_positive_prob(rho).unwrap();
            let q = product_positive_prob(-rho).unwrap();
            assert!((p + q - 1.0).abs() < 1e-13, "rho {rho}");
            assert!(p >= last - 1e-15, "monotonicity at {rho}");
            last = p;
            rho += 0.01;
        }
    }

    #[test]
    fn arccos_root_expansion_near_one() {
        // arccos(x) = sqrt(2) sqrt(1-x) (1 + O(1-x)); 1% headroom covers the
        // correction from rho = 0.99 on.
        for rho in [0.99, 0.995, 0.999, 0.9999] {
            let tail = 1.0 - product_positive_prob(rho).unwrap();
            let bound = (2.0f64).sqrt() * (1.0 - rho).sqrt() / PI * 1.01;
            assert!(tail <= bound, "rho {rho}: {tail} > {bound}");
        }
    }

    #[test]
    fn params_wrapper_validates_and_delegates() {
        let p = ProductGaussianParams::new(0.5).unwrap();
        assert_relative_eq!(p.positive_prob(), 2.0 / 3.0, epsilon = 1e-14);
        assert!(p.density(1.0).unwrap() > 0.0);
        assert!(ProductGaussianParams::new(1.2).is_err());
    }

    #[test]
    fn density_is_even_for_uncorrelated_factors() {
        for z in [0.1, 1.0, 3.0] {
            let a = product_density(0.0, z).unwrap();
            let b = product_density(0.0, -z).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn density_rejects_edge_cases() {
        assert!(matches!(product_density(0.3, 0.0), Err(Error::SingularAtZero)));
        assert!(product_density(1.0, 1.0).is_err());
    }

    #[test]
    fn density_normalizes_to_one() {
        for rho in [0.0, 0.5, -0.8] {
            let f = |z: f64| product_density(rho, z).unwrap();
            let neg = adaptive_simpson(&f, -40.0, -1e-12, 1e-9);
            let pos = adaptive_simpson(&f, 1e-12, 40.0, 1e-9);
            let total = neg.value + pos.value;
            assert!((total - 1.0).abs() < 1e-6, "rho {rho}: mass {total}");
        }
    }

    #[test]
    fn positive_mass_matches_arccos_formula() {
        for rho in [0.0, 0.5, -0.8, 0.9] {
            let f = |z: f64| product_density(rho, z).unwrap();
            let pos = adaptive_simpson(&f, 1e-12, 80.0, 1e-9);
            let want = product_positive_prob(rho).unwrap();
            assert!(
                (pos.value - want).abs() < 1e-6,
                "rho {rho}: {} vs {want}",
                pos.value
            );
        }
    }

    #[test]
    fn gradient_norm_closed_forms() {
        // RPW: Lambda = I/2, E|grad| = sqrt(pi)/2.
        let m = SpectralMeasure::rpw_circle(64).unwrap();
        let e = expected_gradient_norm(&m, 0).unwrap();
        assert_eq!(e.method, GradientNormMethod::ClosedFormIsotropic);
        assert_relative_eq!(e.value, PI.sqrt() / 2.0, epsilon = 1e-14);
        assert_relative_eq!(e.value, 0.886227, max_relative = 1e-6);

        // Lambda = I via axis atoms of norm sqrt(2).
        let s = 2.0f64.sqrt();
        let m = SpectralMeasure::new(
            2,
            vec![vec![s, 0.0], vec![0.0, s]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let e = expected_gradient_norm(&m, 0).unwrap();
        assert_relative_eq!(e.value, (PI / 2.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn gradient_norm_rejects_degenerate() {
        let m = SpectralMeasure::new(2, vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert!(matches!(
            expected_gradient_norm(&m, 1000),
            Err(Error::DegenerateMeasure(_))
        ));
    }

    #[test]
    fn gradient_norm_monte_carlo_matches_quadrature() {
        // Anisotropic Lambda = diag(0.5, 0.125).
        let m = SpectralMeasure::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 0.5]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let e = expected_gradient_norm(&m, 2_000_000).unwrap();
        assert!(matches!(e.method, GradientNormMethod::MonteCarlo { .. }));

        // Independent oracle: nested quadrature of |g| against the product
        // density with std devs sqrt(0.5), sqrt(0.125).
        let (s1, s2) = (0.5f64.sqrt(), 0.125f64.sqrt());
        let inner = |x: f64| {
            adaptive_simpson(
                &|y: f64| {
                    x.hypot(y) * (-(y * y) / (2.0 * s2 * s2)).exp()
                        / (s2 * (2.0 * PI).sqrt())
                },
                -8.0 * s2,
                8.0 * s2,
                1e-10,
            )
            .value
        };
        let outer = adaptive_simpson(
            &|x: f64| inner(x) * (-(x * x) / (2.0 * s1 * s1)).exp() / (s1 * (2.0 * PI).sqrt()),
            -8.0 * s1,
            8.0 * s1,
            1e-8,
        );
        let se = e.standard_error.unwrap();
        assert!(
            (e.value - outer.value).abs() <= 3.0 * se + 1e-5,
            "mc {} vs quad {} (3se {})",
            e.value,
            outer.value,
            3.0 * se
        );
    }

    #[test]
    fn kac_rice_reference_value() {
        let m = SpectralMeasure::rpw_circle(64).unwrap();
        let dom = Domain::square(5.0, 512).unwrap();
        let kr = kac_rice_expected_measure(&m, &dom, 0.0).unwrap();
        // 100 * p(0) * sqrt(pi)/2 = 100 / (2 sqrt(2)).
        assert_relative_eq!(kr, 100.0 / (2.0 * 2.0f64.sqrt()), epsilon = 1e-9);
        assert_relative_eq!(kr, 35.3553, max_relative = 1e-5);
    }

    #[test]
    fn kac_rice_vanishes_at_extreme_levels() {
        let m = SpectralMeasure::rpw_circle(16).unwrap();
        let dom = Domain::square(5.0, 64).unwrap();
        let kr = kac_rice_expected_measure(&m, &dom, 40.0).unwrap();
        assert!(kr < 1e-300, "{kr}");
    }

    #[test]
    fn kac_rice_level_derivative_matches_density_factor() {
        let m = SpectralMeasure::rpw_circle(64).unwrap();
        let dom = Domain::square(5.0, 64).unwrap();
        let oracle = KacRiceOracle::new(&m, 0).unwrap();
        let a = 1.0;
        let h = 1e-4;
        let fd = (oracle.expected_measure(&dom, a + h).unwrap()
            - oracle.expected_measure(&dom, a - h).unwrap())
            / (2.0 * h);
        let want = -a * standard_normal_pdf(a) * dom.volume() * oracle.exp_grad_norm();
        assert_relative_eq!(fd, want, max_relative = 1e-6);
    }

    #[test]
    fn conditional_curvature_smoke() {
        let m = SpectralMeasure::rpw_circle(16).unwrap();
        let dom = Domain::square(4.0, 64).unwrap();
        let table = conditional_curvature_table(
            &m,
            &dom,
            &[-1.0, 0.0, 1.0],
            0.05,
            48,
            30_000,
            0,
        )
        .unwrap();
        // Zero level: estimate within 3 bootstrap SE of zero.
        let at0 = &table[1];
        assert!(
            at0.estimate.abs() <= 3.0 * at0.standard_error,
            "estimate {} se {}",
            at0.estimate,
            at0.standard_error
        );
        // Antisymmetry between the +/-1 levels.
        let (lo, hi) = (&table[0], &table[2]);
        let tol = 3.0 * (lo.standard_error + hi.standard_error);
        assert!(
            (lo.estimate + hi.estimate).abs() <= tol,
            "{} vs {}",
            lo.estimate,
            hi.estimate
        );
        assert!(lo.estimate > 0.0 && hi.estimate < 0.0);
    }

    #[test]
    fn conditional_curvature_flags_empty_band() {
        let m = SpectralMeasure::rpw_circle(8).unwrap();
        let dom = Domain::square(2.0, 64).unwrap();
        let err = conditional_curvature_estimate(&m, &dom, 50.0, 0.01, 2, 100, 0);
        assert!(matches!(err, Err(Error::EmptySelection(_))));
    }
}
