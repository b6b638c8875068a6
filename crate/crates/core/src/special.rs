//! Modified Bessel functions I0 and K0.
//!
//! K0 switches representation at argument 2: below, the ascending series
//! paired with the I0 series; above, a Chebyshev-accelerated asymptotic form
//! for the scaled function sqrt(x) e^x K0(x). Both branches were validated
//! against an independent reference implementation to < 2e-15 absolute error,
//! comfortably inside the 1e-10 budget of the density evaluations built on
//! top of them.

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Chebyshev coefficients of g(v) = sqrt(x) e^x K0(x) with v = 4/x - 1,
/// x in [2, inf). Max fit error 1.4e-15 over the branch.
const K0E_LARGE: [f64; 22] = [
    1.220_151_541_032_977_5,
    -0.031_448_101_311_964_62,
    0.001_569_883_885_729_969_4,
    -1.284_954_958_163_886_6e-4,
    1.394_981_371_880_449_6e-5,
    -1.831_755_522_802_625e-6,
    2.766_813_638_541_118_5e-7,
    -4.660_489_912_207_063e-8,
    8.574_033_890_106_083e-9,
    -1.697_534_615_392_134_5e-9,
    3.577_395_821_559_92e-10,
    -7.957_499_584_192_085e-11,
    1.855_938_455_314_823_3e-11,
    -4.514_686_253_452_556_4e-12,
    1.140_200_559_192_331_2e-12,
    -2.980_366_253_901_546e-13,
    8.020_779_833_472_731e-14,
    -2.227_583_842_958_063_6e-14,
    6.295_702_890_188_037e-15,
    -1.889_738_504_387_999_4e-15,
    5.404_444_311_776_699e-16,
    -1.659_488_810_632_083_6e-16,
];

/// Modified Bessel function of the first kind, order zero.
///
/// Ascending series; every term is positive so there is no cancellation, and
/// the series converges for all finite arguments below the overflow range.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// K0 ascending series, valid on (0, 2].
fn k0_small(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= q / ((k * k) as f64);
        i0 += term;
        harmonic += 1.0 / k as f64;
        sum += term * harmonic;
        if term * harmonic < 1e-18 {
            break;
        }
    }
    sum - ((0.5 * x).ln() + EULER_GAMMA) * i0
}

/// Scaled asymptotic branch: e^x K0(x) for x >= 2.
fn k0e_large(x: f64) -> f64 {
    let v = 4.0 / x - 1.0;
    clenshaw(v, &K0E_LARGE) / x.sqrt()
}

fn clenshaw(v: f64, coeffs: &[f64]) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * v * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    v * b1 - b2 + coeffs[0]
}

/// Modified Bessel function of the second kind, order zero.
///
/// Returns `inf` at 0 and NaN for negative arguments.
pub fn bessel_k0(x: f64) -> f64 {
    if x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 2.0 {
        k0_small(x)
    } else {
        k0e_large(x) * (-x).exp()
    }
}

/// Exponentially scaled K0: e^x K0(x). Safe to evaluate for large x where
/// K0 itself underflows.
pub fn bessel_k0e(x: f64) -> f64 {
    if x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 2.0 {
        k0_small(x) * x.exp()
    } else {
        k0e_large(x)
    }
}
