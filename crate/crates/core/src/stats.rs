//! Small statistics helpers shared by the experiment runners and tests.

use crate::rng::CounterRng;

/// Pairwise (tree) summation. Order-fixed, and much better conditioned than a
/// running sum for the long accumulations done by the quadrature loops.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&ss) / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Sample kurtosis m4/m2^2 (Gaussian -> 3).
pub fn kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let m2: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let m4: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let v2 = pairwise_sum(&m2) / xs.len() as f64;
    let v4 = pairwise_sum(&m4) / xs.len() as f64;
    v4 / (v2 * v2)
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&q));
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let t = pos - lo as f64;
        sorted[lo] * (1.0 - t) + sorted[hi] * t
    }
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Average ranks (1-based), ties get the mean of the tied rank range.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    pearson(&ranks(xs), &ranks(ys))
}

/// Ordinary least squares line fit with the usual slope standard error.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n: usize,
}

impl LineFit {
    /// Two-sided 95% confidence interval for the slope.
    pub fn slope_ci95(&self) -> (f64, f64) {
        let t = t_975(self.n.saturating_sub(2));
        (self.slope - t * self.slope_se, self.slope + t * self.slope_se)
    }
}

pub fn ols_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 3, "need at least 3 points for a slope standard error");
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        rss += r * r;
    }
    let sigma2 = rss / (n - 2) as f64;
    LineFit { slope, intercept, slope_se: (sigma2 / sxx).sqrt(), n }
}

/// Upper 97.5% quantile of Student's t. Standard tabulated values; the
/// regression fits here have small, known degrees of freedom.
pub fn t_975(df: usize) -> f64 {
    const TABLE: [(usize, f64); 16] = [
        (1, 12.706),
        (2, 4.303),
        (3, 3.182),
        (4, 2.776),
        (5, 2.571),
        (6, 2.447),
        (7, 2.365),
        (8, 2.306),
        (9, 2.262),
        (10, 2.228),
        (12, 2.179),
        (15, 2.131),
        (20, 2.086),
        (30, 2.042),
        (60, 2.000),
        (120, 1.980),
    ];
    if df == 0 {
        return f64::INFINITY;
    }
    for &(d, t) in TABLE.iter() {
        if df <= d {
            return t;
        }
    }
    1.960
}

/// Seed-level bootstrap standard error of a ratio-of-sums estimator.
///
/// `parts` holds per-group (numerator, denominator) sums; the estimator is
/// `sum(num) / sum(den)`. Groups are resampled with replacement.
pub fn bootstrap_ratio_se(parts: &[(f64, f64)], replicates: usize, seed: u64) -> f64 {
    let rng = CounterRng::new(seed);
    let n = parts.len();
    let mut reps = Vec::with_capacity(replicates);
    for b in 0..replicates {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let pick = (rng.uniform((b * n + i) as u64, 3) * n as f64) as usize;
            let (a, d) = parts[pick.min(n - 1)];
            num += a;
            den += d;
        }
        if den > 0.0 {
            reps.push(num / den);
        }
    }
    if reps.len() < 2 {
        return f64::NAN;
    }
    sample_variance(&reps).sqrt()
}
