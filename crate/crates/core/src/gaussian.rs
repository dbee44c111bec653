//! Standard normal density, distribution and quantile functions.
//!
//! The distribution function is evaluated through a positive-term series
//! for `erf` near the origin and a continued fraction for `erfc` in the
//! tails, so the lower tail keeps full relative precision down to the
//! underflow threshold. The quantile starts from Acklam's rational
//! approximation and is polished with Halley steps against [`cdf`].
//!
//! The unchecked kernels ([`cdf`], [`pdf`], [`quantile`]) are what the
//! rest of the crate calls in inner loops; the `std_normal_*` functions
//! validate their arguments and return [`Result`].

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability<T>(T);

impl<T: Real> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Probability(value))
        } else {
            Err(Error::domain("probability", value.as_f64(), "in [0, 1]"))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// `erf(t)` for `0 <= t`, via `2/sqrt(pi) e^{-t^2} sum 2^n t^{2n+1} / (2n+1)!!`.
fn erf_series<T: Real>(t: T, exp_neg_t2: T) -> T {
    let two_t2 = T::lit(2.0) * t * t;
    let mut term = t;
    let mut sum = t;
    let mut n = 0u32;
    while n < 500 {
        n += 1;
        term = term * two_t2 / T::lit(f64::from(2 * n + 1));
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * exp_neg_t2 * sum
}

/// `erfc(t)` for `t >= 2`, via the continued fraction
/// `e^{-t^2}/sqrt(pi) / (t + (1/2)/(t + 1/(t + (3/2)/(t + ...))))`
/// evaluated with the modified Lentz algorithm.
fn erfc_fraction<T: Real>(t: T, exp_neg_t2: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let half = T::lit(0.5);
    let mut f = t;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..1000u32 {
        let a = half * T::lit(f64::from(n));
        d = t + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = t + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    exp_neg_t2 / (T::PI().sqrt() * f)
}

/// Standard normal distribution function `N(x)`. NaN propagates.
pub fn cdf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let half = T::lit(0.5);
    let t = x.abs() * T::FRAC_1_SQRT_2();
    let exp_neg_t2 = (-half * x * x).exp();
    if t < T::lit(2.0) {
        let e = erf_series(t, exp_neg_t2);
        if x.is_sign_negative() {
            half * (T::one() - e)
        } else {
            half * (T::one() + e)
        }
    } else {
        let tail = half * erfc_fraction(t, exp_neg_t2);
        if x.is_sign_negative() {
            tail
        } else {
            T::one() - tail
        }
    }
}

/// Standard normal density `exp(-x^2/2) / sqrt(2 pi)`.
#[inline]
pub fn pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    inv_sqrt_2pi * (-T::lit(0.5) * x * x).exp()
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn horner<T: Real>(x: T, coeffs: &[f64]) -> T {
    coeffs
        .iter()
        .fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Acklam's approximation for `0 < p <= 1/2` (relative error about 1e-9).
fn acklam_lower<T: Real>(p: T) -> T {
    if p < T::lit(0.024_25) {
        let r = (-T::lit(2.0) * p.ln()).sqrt();
        horner(r, &ACKLAM_C) / (horner(r, &ACKLAM_D) * r + T::one())
    } else {
        let q = p - T::lit(0.5);
        let r = q * q;
        horner(r, &ACKLAM_A) * q / (horner(r, &ACKLAM_B) * r + T::one())
    }
}

/// Quantile for `0 < p <= 1/2`, where the lower tail is evaluated without
/// cancellation.
fn quantile_lower<T: Real>(p: T) -> T {
    let mut x = acklam_lower(p);
    let sqrt_2pi = (T::lit(2.0) * T::PI()).sqrt();
    for _ in 0..2 {
        let err = cdf(x) - p;
        let u = err * sqrt_2pi * (T::lit(0.5) * x * x).exp();
        if !u.is_finite() {
            break;
        }
        x = x - u / (T::one() + T::lit(0.5) * x * u);
    }
    x
}

/// Standard normal quantile `N^{-1}(p)`. Returns `-inf`/`+inf` at 0 and 1,
/// NaN outside `[0, 1]`.
pub fn quantile<T: Real>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    let half = T::lit(0.5);
    if p <= half {
        quantile_lower(p)
    } else {
        -quantile_lower(T::one() - p)
    }
}

fn require_finite<T: Real>(x: T) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain("x", x.as_f64(), "finite"))
    }
}

pub fn std_normal_cdf<T: Real>(x: T) -> Result<Probability<T>> {
    Ok(Probability(cdf(require_finite(x)?)))
}

pub fn std_normal_pdf<T: Real>(x: T) -> Result<T> {
    Ok(pdf(require_finite(x)?))
}

/// `N^{-1}(p)` on the open interval; `p` equal to 0 or 1 is a domain error.
pub fn std_normal_quantile<T: Real>(p: Probability<T>) -> Result<T> {
    let v = p.value();
    if v <= T::zero() || v >= T::one() {
        return Err(Error::domain("p", v.as_f64(), "in the open interval (0, 1)"));
    }
    Ok(quantile(v))
}
