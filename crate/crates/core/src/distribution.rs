//! Large-network loss distributions.
//!
//! With `u = N^{-1}(x)` and `H` the inverse wave map for the requested
//! wave (identity for the first wave, `h_k` for wave `k`, `h` once the
//! cascade is exhausted),
//!
//! ```text
//! A(x) = (sqrt(1 - rho) H(u) - N^{-1}(q)) / sqrt(rho)
//! F(x) = N(A(x))
//! p(x) = sqrt((1 - rho) / rho) H'(u) phi(A(x)) / phi(u)
//! ```
//!
//! The first-wave law is the Vasicek distribution. For `kappa > kappa_0`
//! the exhausted-cascade law has no mass on `(N(x1), N(x2))` and its
//! density jumps at `N(x2)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{g_k_prime, h_k, TotalLossInverse, Wave};
use crate::error::{Error, Result};
use crate::gaussian::{cdf, quantile};
use crate::scalar::Real;

/// Lower edge of the evaluation domain; `[CLAMP, 1 - CLAMP]` is evaluated,
/// outside it the CDF reports 0 or 1 and the density 0.
pub const CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec<T> {
    pub idiosyncratic_q: T,
    pub rho: T,
    pub kappa: T,
    pub wave: Wave,
}

impl<T: Real> DistributionSpec<T> {
    pub fn new(idiosyncratic_q: T, rho: T, kappa: T, wave: Wave) -> Result<Self> {
        if !(idiosyncratic_q > T::zero() && idiosyncratic_q < T::one()) {
            return Err(Error::domain("q", idiosyncratic_q.as_f64(), "in (0, 1)"));
        }
        if !(rho > T::zero() && rho < T::one()) {
            return Err(Error::domain("rho", rho.as_f64(), "in (0, 1)"));
        }
        if !(kappa >= T::zero() && kappa.is_finite()) {
            return Err(Error::domain("kappa", kappa.as_f64(), "finite and >= 0"));
        }
        if wave == Wave::Finite(0) {
            return Err(Error::domain("waves", 0.0, "an integer >= 1 or \"inf\""));
        }
        Ok(DistributionSpec {
            idiosyncratic_q,
            rho,
            kappa,
            wave,
        })
    }

    /// The first-wave (Vasicek) spec with the same `q` and `rho`.
    pub fn vasicek(idiosyncratic_q: T, rho: T) -> Result<Self> {
        Self::new(idiosyncratic_q, rho, T::zero(), Wave::Finite(1))
    }
}

#[derive(Debug, Clone, Copy)]
enum InverseMap<T> {
    Identity,
    Waves { kappa: T, k: u32 },
    Total(TotalLossInverse<T>),
}

impl<T: Real> InverseMap<T> {
    fn value_and_slope(&self, y: T) -> Result<(T, T)> {
        match *self {
            InverseMap::Identity => Ok((y, T::one())),
            InverseMap::Waves { kappa, k } => {
                let x = h_k(y, kappa, k, T::zero())?;
                Ok((x, g_k_prime(x, kappa, k).recip()))
            }
            InverseMap::Total(ref inv) => Ok((inv.value(y), inv.derivative(y))),
        }
    }
}

/// Support gap and density jump of the exhausted-cascade law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap<T> {
    /// `N(x1)`
    pub lo: T,
    /// `N(x2)`
    pub hi: T,
}

/// Evaluator for one [`DistributionSpec`], with the wave inverse and the
/// fold geometry resolved once.
#[derive(Debug, Clone, Copy)]
pub struct LossDistribution<T> {
    spec: DistributionSpec<T>,
    inverse: InverseMap<T>,
    sqrt_rho: T,
    sqrt_1m_rho: T,
    quantile_q: T,
    gap: Option<Gap<T>>,
}

impl<T: Real> LossDistribution<T> {
    pub fn new(spec: DistributionSpec<T>) -> Result<Self> {
        let spec = DistributionSpec::new(spec.idiosyncratic_q, spec.rho, spec.kappa, spec.wave)?;
        let (inverse, gap) = match spec.wave {
            _ if spec.kappa == T::zero() => (InverseMap::Identity, None),
            Wave::Finite(1) => (InverseMap::Identity, None),
            Wave::Finite(k) => (
                InverseMap::Waves {
                    kappa: spec.kappa,
                    k,
                },
                None,
            ),
            Wave::Infinite => {
                let inv = TotalLossInverse::new(spec.kappa)?;
                let gap = inv.folds().map(|fp| Gap {
                    lo: cdf(fp.x1),
                    hi: cdf(fp.x2),
                });
                (InverseMap::Total(inv), gap)
            }
        };
        Ok(LossDistribution {
            spec,
            inverse,
            sqrt_rho: spec.rho.sqrt(),
            sqrt_1m_rho: (T::one() - spec.rho).sqrt(),
            quantile_q: quantile(spec.idiosyncratic_q),
            gap,
        })
    }

    pub fn spec(&self) -> &DistributionSpec<T> {
        &self.spec
    }

    /// `(N(x1), N(x2))` when the law has a support gap.
    pub fn gap(&self) -> Option<Gap<T>> {
        self.gap
    }

    fn check(x: T) -> Result<()> {
        if x > T::zero() && x < T::one() {
            Ok(())
        } else {
            Err(Error::domain("x", x.as_f64(), "a loss fraction in (0, 1)"))
        }
    }

    fn clamped(x: T) -> Option<T> {
        let lo = T::lit(CLAMP);
        if x <= lo {
            Some(T::zero())
        } else if x >= T::one() - lo {
            Some(T::one())
        } else {
            None
        }
    }

    fn transform(&self, h: T) -> T {
        (self.sqrt_1m_rho * h - self.quantile_q) / self.sqrt_rho
    }

    /// `A(x)`; the loss is below `x` exactly when the market factor
    /// exceeds `-A(x)`.
    pub fn a_transform(&self, x: T) -> Result<T> {
        Self::check(x)?;
        let u = quantile(x);
        let (h, _) = self.inverse.value_and_slope(u)?;
        Ok(self.transform(h))
    }

    pub fn cdf(&self, x: T) -> Result<T> {
        Self::check(x)?;
        if let Some(edge) = Self::clamped(x) {
            return Ok(edge);
        }
        Ok(cdf(self.a_transform(x)?))
    }

    /// Density. At the jump `N(x2)` the right limit is returned.
    pub fn pdf(&self, x: T) -> Result<T> {
        Self::check(x)?;
        if Self::clamped(x).is_some() {
            return Ok(T::zero());
        }
        let u = match (&self.inverse, self.gap) {
            (InverseMap::Total(inv), Some(gap)) if x == gap.hi => {
                inv.folds().map(|fp| fp.x2).unwrap_or_else(|| quantile(x))
            }
            _ => quantile(x),
        };
        let (h, slope) = self.inverse.value_and_slope(u)?;
        if slope == T::zero() {
            return Ok(T::zero());
        }
        let a = self.transform(h);
        let half = T::lit(0.5);
        let ratio = (half * (u * u - a * a)).exp();
        Ok(self.sqrt_1m_rho / self.sqrt_rho * slope * ratio)
    }

    /// Left and right density limits at the jump `N(x2)`.
    pub fn jump(&self) -> Result<Option<Jump<T>>> {
        let Some(gap) = self.gap else {
            return Ok(None);
        };
        Ok(Some(Jump {
            at: gap.hi,
            pdf_left: T::zero(),
            pdf_right: self.pdf(gap.hi)?,
        }))
    }

    pub fn tabulate(&self, grid_points: usize, x_min: T, x_max: T) -> Result<LossCurve<T>> {
        if grid_points < 2 {
            return Err(Error::domain("grid_points", grid_points as f64, ">= 2"));
        }
        if !(x_min > T::zero() && x_min < x_max && x_max < T::one()) {
            return Err(Error::domain(
                "x_min",
                x_min.as_f64(),
                "0 < x_min < x_max < 1",
            ));
        }
        let last = T::lit((grid_points - 1) as f64);
        let grid = (0..grid_points)
            .into_par_iter()
            .map(|i| {
                let x = if i + 1 == grid_points {
                    x_max
                } else {
                    x_min + (x_max - x_min) * T::lit(i as f64) / last
                };
                Ok(CurvePoint {
                    x,
                    cdf: self.cdf(x)?,
                    pdf: self.pdf(x)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LossCurve {
            grid,
            gap: self.gap,
            jump: self.jump()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump<T> {
    pub at: T,
    pub pdf_left: T,
    pub pdf_right: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint<T> {
    pub x: T,
    pub cdf: T,
    pub pdf: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossCurve<T> {
    pub grid: Vec<CurvePoint<T>>,
    pub gap: Option<Gap<T>>,
    pub jump: Option<Jump<T>>,
}

pub fn a_transform<T: Real>(x: T, spec: &DistributionSpec<T>) -> Result<T> {
    LossDistribution::new(*spec)?.a_transform(x)
}

pub fn loss_cdf<T: Real>(x: T, spec: &DistributionSpec<T>) -> Result<T> {
    LossDistribution::new(*spec)?.cdf(x)
}

pub fn loss_pdf<T: Real>(x: T, spec: &DistributionSpec<T>) -> Result<T> {
    LossDistribution::new(*spec)?.pdf(x)
}

pub fn vasicek_cdf<T: Real>(x: T, q: T, rho: T) -> Result<T> {
    LossDistribution::new(DistributionSpec::vasicek(q, rho)?)?.cdf(x)
}

pub fn vasicek_pdf<T: Real>(x: T, q: T, rho: T) -> Result<T> {
    LossDistribution::new(DistributionSpec::vasicek(q, rho)?)?.pdf(x)
}

pub fn tabulate<T: Real>(
    spec: &DistributionSpec<T>,
    grid_points: usize,
    x_min: T,
    x_max: T,
) -> Result<LossCurve<T>> {
    LossDistribution::new(*spec)?.tabulate(grid_points, x_min, x_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::bifurcation_geometry;

    fn spec(q: f64, rho: f64, kappa: f64, wave: Wave) -> DistributionSpec<f64> {
        DistributionSpec::new(q, rho, kappa, wave).unwrap()
    }

    #[test]
    fn a_one_at_x_equal_q() {
        for &rho in &[0.05, 0.3, 0.8] {
            for &q in &[0.01, 0.2, 0.7] {
                let a = a_transform(q, &spec(q, rho, 0.0, Wave::Finite(1))).unwrap();
                let expected = ((1.0 - rho).sqrt() - 1.0) * quantile(q);
                assert_eq!(a.signum(), expected.signum());
            }
        }
    }

    #[test]
    fn a_one_known_value() {
        let a: f64 = a_transform(0.05, &spec(0.02, 0.1, 0.0, Wave::Finite(1))).unwrap();
        // mpmath: 1.5599634188317412505
        assert!((a - 1.560).abs() < 1e-3);
        assert!((a - 1.559_963_418_831_741_3).abs() < 1e-13);
        let f: f64 = vasicek_cdf(0.05, 0.02, 0.1).unwrap();
        assert!((f - 0.941).abs() < 1e-3);
        assert!((f - 0.940_615_736_949_983_6).abs() < 1e-13);
    }

    #[test]
    fn zero_kappa_is_vasicek_for_every_wave() {
        for wave in [Wave::Finite(1), Wave::Finite(4), Wave::Infinite] {
            let d = LossDistribution::new(spec(0.05, 0.2, 0.0, wave)).unwrap();
            for i in 1..200 {
                let x = f64::from(i) / 200.0;
                assert_eq!(d.cdf(x).unwrap(), vasicek_cdf(x, 0.05, 0.2).unwrap());
                assert_eq!(d.pdf(x).unwrap(), vasicek_pdf(x, 0.05, 0.2).unwrap());
            }
        }
    }

    #[test]
    fn median_where_a_vanishes() {
        let (q, rho) = (0.05_f64, 0.2_f64);
        let x = cdf(quantile(q) / (1.0 - rho).sqrt());
        assert!((vasicek_cdf(x, q, rho).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn vasicek_pdf_is_cdf_slope() {
        for i in 1..40 {
            let x = f64::from(i) * 0.01;
            let h = 1e-5 * x;
            let fd = (vasicek_cdf(x + h, 0.05, 0.2).unwrap() - vasicek_cdf(x - h, 0.05, 0.2).unwrap())
                / (2.0 * h);
            let p = vasicek_pdf(x, 0.05, 0.2).unwrap();
            assert!(((fd - p) / p).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn gap_and_jump_for_strong_feedback() {
        let d = LossDistribution::new(spec(0.05, 0.2, 4.0, Wave::Infinite)).unwrap();
        let gap = d.gap().unwrap();
        let fp = bifurcation_geometry(4.0_f64).unwrap().folds.unwrap();
        // mpmath: N(x1) = 0.16682079483690714, N(x2) = 0.98998698704219281
        assert!((gap.lo - 0.166_820_794_836_907_14).abs() < 1e-9);
        assert!((gap.hi - 0.989_986_987_042_192_8).abs() < 1e-9);
        assert_eq!(gap.lo, cdf(fp.x1));
        let mid = 0.5 * (gap.lo + gap.hi);
        assert_eq!(d.pdf(mid).unwrap(), 0.0);
        let c_lo = d.cdf(gap.lo + 1e-9).unwrap();
        let c_hi = d.cdf(gap.hi - 1e-9).unwrap();
        assert_eq!(c_lo, c_hi);
        let jump = d.jump().unwrap().unwrap();
        assert_eq!(jump.pdf_left, 0.0);
        assert!(jump.pdf_right > 0.0);
        assert!(d.pdf(gap.hi - 1e-9).unwrap() == 0.0);
        assert!(d.pdf(gap.hi + 1e-9).unwrap() > 0.0);
    }

    #[test]
    fn no_gap_below_threshold_or_for_finite_waves() {
        assert!(LossDistribution::new(spec(0.05, 0.2, 2.0, Wave::Infinite)).unwrap().gap().is_none());
        assert!(LossDistribution::new(spec(0.05, 0.2, 4.0, Wave::Finite(10))).unwrap().gap().is_none());
    }

    #[test]
    fn waves_only_add_loss() {
        for &kappa in &[1.0, 4.0] {
            let laws: Vec<_> = [1, 2, 3, 8, 30]
                .iter()
                .map(|&k| LossDistribution::new(spec(0.05, 0.2, kappa, Wave::Finite(k))).unwrap())
                .chain(std::iter::once(
                    LossDistribution::new(spec(0.05, 0.2, kappa, Wave::Infinite)).unwrap(),
                ))
                .collect();
            for i in 1..100 {
                let x = f64::from(i) / 100.0;
                let cdfs: Vec<f64> = laws.iter().map(|l| l.cdf(x).unwrap()).collect();
                for w in cdfs.windows(2) {
                    assert!(w[1] <= w[0] + 1e-14, "kappa {kappa} x {x}: {cdfs:?}");
                }
            }
        }
    }

    #[test]
    fn clamp_and_domain() {
        let d = LossDistribution::new(spec(0.05, 0.2, 1.0, Wave::Infinite)).unwrap();
        assert_eq!(d.cdf(1e-11).unwrap(), 0.0);
        assert_eq!(d.cdf(1.0 - 1e-11).unwrap(), 1.0);
        assert_eq!(d.pdf(1e-11).unwrap(), 0.0);
        assert!(d.cdf(0.0).is_err());
        assert!(d.pdf(1.0).is_err());
        assert!(d.a_transform(-0.1).is_err());
        assert!(DistributionSpec::new(0.05, 0.0, 1.0, Wave::Infinite).is_err());
        assert!(DistributionSpec::new(0.05, 1.0, 1.0, Wave::Infinite).is_err());
        assert!(DistributionSpec::new(0.0, 0.2, 1.0, Wave::Infinite).is_err());
        assert!(DistributionSpec::new(0.05, 0.2, -1.0, Wave::Infinite).is_err());
    }

    #[test]
    fn tabulation() {
        let flat = tabulate(&spec(0.05, 0.2, 0.0, Wave::Infinite), 50, 0.001, 0.6).unwrap();
        assert!(flat.gap.is_none() && flat.jump.is_none());
        assert_eq!(flat.grid.len(), 50);
        assert_eq!(flat.grid[0].x, 0.001);
        assert_eq!(flat.grid[49].x, 0.6);

        let curve = tabulate(&spec(0.05, 0.2, 4.0, Wave::Infinite), 400, 0.001, 0.999).unwrap();
        let gap = curve.gap.unwrap();
        assert!(curve.grid.windows(2).all(|w| w[1].cdf >= w[0].cdf));
        assert!(curve.grid.iter().all(|p| p.pdf >= 0.0));
        for p in curve.grid.iter().filter(|p| p.x > gap.lo && p.x < gap.hi) {
            assert_eq!(p.pdf, 0.0);
        }
        assert_eq!(curve.jump.unwrap().at, gap.hi);
        assert!(tabulate(&spec(0.05, 0.2, 4.0, Wave::Infinite), 1, 0.1, 0.2).is_err());
        assert!(tabulate(&spec(0.05, 0.2, 4.0, Wave::Infinite), 10, 0.3, 0.2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn tabulated_cdf_nondecreasing(
            q in 0.005_f64..0.4,
            rho in 0.02_f64..0.9,
            kappa in 0.0_f64..6.0,
            k in 0u32..6,
        ) {
            let wave = if k == 0 { Wave::Infinite } else { Wave::Finite(k) };
            let curve = tabulate(&spec(q, rho, kappa, wave), 60, 1e-4, 0.9999).unwrap();
            proptest::prop_assert!(curve.grid.windows(2).all(|w| w[1].cdf >= w[0].cdf));
            proptest::prop_assert!(curve.grid.iter().all(|p| p.pdf >= 0.0 && p.pdf.is_finite()));
        }
    }
}
