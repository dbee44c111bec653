//! The default-cascade map `F(x) = delta_1 + kappa N(x)`, its orbits and
//! fixed points, the fold geometry of `f(x) = x - kappa N(x)`, and the
//! wave maps `g_k`, `h_k = g_k^{-1}`, `g` and `h` built from them.
//!
//! Every economic parameterization reduces to the pair `(delta_1, kappa)`
//! carried by [`CascadeMap`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{cdf, pdf, quantile};
use crate::roots::find_root;
use crate::scalar::Real;

/// Default root and orbit tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default orbit iteration cap.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Threshold `sqrt(2 pi)` above which `f(x) = x - kappa N(x)` loses
/// monotonicity.
pub fn kappa_0<T: Real>() -> T {
    (T::lit(2.0) * T::PI()).sqrt()
}

/// How a node's initial solvency is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceSheet<T> {
    /// Pre-shock assets `A` and liabilities `L`, with `0 < L < A`.
    Sheet { assets: T, liabilities: T },
    /// Stand-alone default probability `q` in `(0, 1)`.
    Idiosyncratic { q: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Mean log asset return.
    pub mu: T,
    /// Log return volatility.
    pub sigma: T,
    /// Pairwise return correlation.
    pub rho: T,
    /// Fire-sale impact: assets are discounted by `exp(-a q)`.
    pub a: T,
    pub balance: BalanceSheet<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite()) {
            return Err(Error::domain("mu", self.mu.as_f64(), "finite"));
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(Error::domain("sigma", self.sigma.as_f64(), "finite and > 0"));
        }
        if !(self.rho >= T::zero() && self.rho < T::one()) {
            return Err(Error::domain("rho", self.rho.as_f64(), "in [0, 1)"));
        }
        if !(self.a >= T::zero() && self.a.is_finite()) {
            return Err(Error::domain("a", self.a.as_f64(), "finite and >= 0"));
        }
        match self.balance {
            BalanceSheet::Sheet {
                assets,
                liabilities,
            } => {
                if !(assets > T::zero() && assets.is_finite()) {
                    return Err(Error::domain("assets", assets.as_f64(), "finite and > 0"));
                }
                if !(liabilities > T::zero() && liabilities < assets) {
                    return Err(Error::domain(
                        "liabilities",
                        liabilities.as_f64(),
                        "in (0, assets)",
                    ));
                }
            }
            BalanceSheet::Idiosyncratic { q } => {
                if !(q > T::zero() && q < T::one()) {
                    return Err(Error::domain("q", q.as_f64(), "in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    /// Default probability of an isolated node, `N((ln(L/A) - mu) / sigma)`.
    pub fn idiosyncratic_q(&self) -> T {
        match self.balance {
            BalanceSheet::Sheet {
                assets,
                liabilities,
            } => cdf(((liabilities / assets).ln() - self.mu) / self.sigma),
            BalanceSheet::Idiosyncratic { q } => q,
        }
    }

    /// `kappa = a / (sigma sqrt(1 - rho))`.
    pub fn kappa(&self) -> T {
        self.a / (self.sigma * (T::one() - self.rho).sqrt())
    }
}

/// Quantities derived from [`ModelParams`] for one market factor draw `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioParams<T> {
    pub alpha: T,
    pub beta: T,
    pub kappa: T,
    pub delta_1: T,
    pub z: T,
}

impl<T: Real> ScenarioParams<T> {
    pub fn map(&self) -> CascadeMap<T> {
        CascadeMap {
            delta_1: self.delta_1,
            kappa: self.kappa,
        }
    }
}

pub fn derive_scenario<T: Real>(params: &ModelParams<T>, z: T) -> Result<ScenarioParams<T>> {
    params.validate()?;
    if !z.is_finite() {
        return Err(Error::domain("z", z.as_f64(), "finite"));
    }
    let sqrt_rho = params.rho.sqrt();
    let sqrt_1m_rho = (T::one() - params.rho).sqrt();
    let alpha = params.sigma * sqrt_1m_rho;
    let beta = params.mu + params.sigma * sqrt_rho * z;
    let delta_1 = match params.balance {
        BalanceSheet::Sheet {
            assets,
            liabilities,
        } => ((liabilities / assets).ln() - beta) / alpha,
        BalanceSheet::Idiosyncratic { q } => (quantile(q) - sqrt_rho * z) / sqrt_1m_rho,
    };
    Ok(ScenarioParams {
        alpha,
        beta,
        kappa: params.a / alpha,
        delta_1,
        z,
    })
}

/// The cascade map reduced to its two parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeMap<T> {
    pub delta_1: T,
    pub kappa: T,
}

impl<T: Real> From<ScenarioParams<T>> for CascadeMap<T> {
    fn from(s: ScenarioParams<T>) -> Self {
        s.map()
    }
}

impl<T: Real> CascadeMap<T> {
    pub fn new(delta_1: T, kappa: T) -> Result<Self> {
        if !delta_1.is_finite() {
            return Err(Error::domain("delta_1", delta_1.as_f64(), "finite"));
        }
        check_kappa(kappa)?;
        Ok(CascadeMap { delta_1, kappa })
    }

    /// `F(x) = delta_1 + kappa N(x)`.
    #[inline]
    pub fn apply(&self, x: T) -> T {
        self.delta_1 + self.kappa * cdf(x)
    }

    /// `F'(x) = kappa phi(x)`.
    #[inline]
    pub fn slope(&self, x: T) -> T {
        self.kappa * pdf(x)
    }
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if kappa >= T::zero() && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("kappa", kappa.as_f64(), "finite and >= 0"))
    }
}

/// `f(x) = x - kappa N(x)`; fixed points of the cascade solve `f(x) = delta_1`.
#[inline]
pub fn reduced_f<T: Real>(x: T, kappa: T) -> T {
    x - kappa * cdf(x)
}

/// `F(x)` for a scenario.
pub fn map_f<T: Real>(x: T, map: impl Into<CascadeMap<T>>) -> T {
    map.into().apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitStep<T> {
    /// Wave index, starting at 1.
    pub k: usize,
    pub delta: T,
    pub q: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeTrajectory<T> {
    pub steps: Vec<OrbitStep<T>>,
    pub converged: bool,
    pub delta_inf: Option<T>,
    /// Number of map applications performed.
    pub iterations_used: usize,
}

impl<T: Real> CascadeTrajectory<T> {
    pub fn last(&self) -> &OrbitStep<T> {
        self.steps.last().expect("orbit has at least one step")
    }
}

/// Iterates `delta_{k+1} = F(delta_k)` from `delta_1` until successive
/// iterates differ by less than `tol` or `max_iter` applications are spent.
/// Near a fold the approach is critically slow; an unconverged orbit is
/// returned flagged rather than as an error.
pub fn run_orbit<T: Real>(
    map: impl Into<CascadeMap<T>>,
    tol: T,
    max_iter: usize,
) -> Result<CascadeTrajectory<T>> {
    let map = map.into();
    if !(tol > T::zero()) {
        return Err(Error::domain("tol", tol.as_f64(), "> 0"));
    }
    if max_iter == 0 {
        return Err(Error::domain("max_iter", 0.0, ">= 1"));
    }
    let mut prev = map.delta_1;
    let mut prev_q = cdf(prev);
    let mut steps = vec![OrbitStep {
        k: 1,
        delta: prev,
        q: prev_q,
    }];
    for it in 1..=max_iter {
        // the orbit is nondecreasing; clamp away ulp-level rounding in N
        let next = map.apply(prev).max(prev);
        let next_q = cdf(next).max(prev_q);
        steps.push(OrbitStep {
            k: it + 1,
            delta: next,
            q: next_q,
        });
        if next - prev < tol {
            return Ok(CascadeTrajectory {
                steps,
                converged: true,
                delta_inf: Some(next),
                iterations_used: it,
            });
        }
        prev = next;
        prev_q = next_q;
    }
    Ok(CascadeTrajectory {
        steps,
        converged: false,
        delta_inf: None,
        iterations_used: max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// Tangency: `F'(x) = 1`, where a stable/unstable pair merges.
    Neutral,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint<T> {
    pub x: T,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointSet<T> {
    /// Sorted ascending; one to three entries.
    pub points: Vec<FixedPoint<T>>,
    /// Limit of the orbit started at `delta_1`: the smallest fixed point.
    pub selected: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `kappa <= kappa_0`: `f` is nondecreasing, one fixed point.
    Single,
    /// `kappa > kappa_0`: up to three fixed points, two folds.
    Multi,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Single => "single",
            Regime::Multi => "multi",
        })
    }
}

/// Local extrema of `f` in the multi regime.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Extrema<T> {
    x0: T,
    x1: T,
    y0: T,
    y1: T,
}

fn extrema<T: Real>(kappa: T) -> Option<Extrema<T>> {
    if kappa <= kappa_0() {
        return None;
    }
    let x0 = (T::lit(2.0) * (kappa / kappa_0()).ln()).sqrt();
    let x1 = -x0;
    Some(Extrema {
        x0,
        x1,
        y0: reduced_f(x0, kappa),
        y1: reduced_f(x1, kappa),
    })
}

/// Fold locations of the multi regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldPoints<T> {
    /// Local minimum of `f`, `sqrt(2 ln(kappa / kappa_0))`.
    pub x0: T,
    /// Local maximum of `f`, `-x0`.
    pub x1: T,
    pub y0: T,
    pub y1: T,
    /// Abscissa right of `x0` with `f(x2) = y1`: where `g` lands after its jump.
    pub x2: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationGeometry<T> {
    pub kappa: T,
    pub kappa_0: T,
    pub regime: Regime,
    pub folds: Option<FoldPoints<T>>,
}

pub fn bifurcation_geometry<T: Real>(kappa: T) -> Result<BifurcationGeometry<T>> {
    check_kappa(kappa)?;
    let folds = match extrema(kappa) {
        None => None,
        Some(e) => {
            let x2 = find_root(
                |x| reduced_f(x, kappa) - e.y1,
                e.x0,
                e.x0 + kappa,
                T::zero(),
                T::zero(),
            )?;
            Some(FoldPoints {
                x0: e.x0,
                x1: e.x1,
                y0: e.y0,
                y1: e.y1,
                x2,
            })
        }
    };
    Ok(BifurcationGeometry {
        kappa,
        kappa_0: kappa_0(),
        regime: if folds.is_some() {
            Regime::Multi
        } else {
            Regime::Single
        },
        folds,
    })
}

fn solve_f<T: Real>(map: &CascadeMap<T>, lo: T, hi: T, tol: T) -> Result<T> {
    find_root(
        |x| reduced_f(x, map.kappa) - map.delta_1,
        lo,
        hi,
        tol,
        T::zero(),
    )
}

fn single_stability<T: Real>(map: &CascadeMap<T>, x: T) -> Stability {
    if T::one() - map.slope(x) <= T::lit(4.0) * T::epsilon() {
        Stability::Neutral
    } else {
        Stability::Stable
    }
}

/// All solutions of `x - kappa N(x) = delta_1`.
///
/// In the multi regime `f` is monotone on `(-inf, x1]`, `[x1, x0]` and
/// `[x0, inf)`, so each branch is bracketed directly from the extrema;
/// this isolates roots that sit arbitrarily close to a tangency.
pub fn fixed_points<T: Real>(map: impl Into<CascadeMap<T>>, tol: T) -> Result<FixedPointSet<T>> {
    let map = map.into();
    if !(tol >= T::zero()) {
        return Err(Error::domain("tol", tol.as_f64(), ">= 0"));
    }
    let d = map.delta_1;
    let k = map.kappa;
    let points = match extrema(k) {
        None => {
            let x = solve_f(&map, d, d + k + T::one(), tol)?;
            vec![FixedPoint {
                x,
                stability: single_stability(&map, x),
            }]
        }
        Some(e) => {
            let mut points = Vec::with_capacity(3);
            if d == e.y1 {
                points.push(FixedPoint {
                    x: e.x1,
                    stability: Stability::Neutral,
                });
            } else if d < e.y1 {
                points.push(FixedPoint {
                    x: solve_f(&map, d, e.x1, tol)?,
                    stability: Stability::Stable,
                });
                if d > e.y0 {
                    points.push(FixedPoint {
                        x: solve_f(&map, e.x1, e.x0, tol)?,
                        stability: Stability::Unstable,
                    });
                }
            }
            if d == e.y0 {
                points.push(FixedPoint {
                    x: e.x0,
                    stability: Stability::Neutral,
                });
            } else if d > e.y0 {
                points.push(FixedPoint {
                    x: solve_f(&map, e.x0, d + k + T::one(), tol)?,
                    stability: Stability::Stable,
                });
            }
            points
        }
    };
    let selected = points[0].x;
    Ok(FixedPointSet { points, selected })
}

/// `g(delta_1)`: the limit `delta_inf` of the orbit started at `delta_1`.
///
/// In the multi regime this is the left branch up to and including
/// `delta_1 = y1` (where it equals `x1`) and jumps to the right branch,
/// at or beyond `x2`, immediately after.
pub fn total_loss_map_g<T: Real>(delta_1: T, kappa: T, tol: T) -> Result<T> {
    let map = CascadeMap::new(delta_1, kappa)?;
    if kappa == T::zero() {
        return Ok(delta_1);
    }
    match extrema(kappa) {
        None => solve_f(&map, delta_1, delta_1 + kappa + T::one(), tol),
        Some(e) if delta_1 == e.y1 => Ok(e.x1),
        Some(e) if delta_1 < e.y1 => solve_f(&map, delta_1, e.x1, tol),
        Some(e) => solve_f(&map, e.x0, delta_1 + kappa + T::one(), tol),
    }
}

/// Which iterate of the cascade a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wave {
    /// After `k >= 1` default waves.
    Finite(u32),
    /// After the cascade has exhausted itself.
    Infinite,
}

impl Wave {
    pub fn finite(k: u32) -> Result<Self> {
        if k == 0 {
            Err(Error::domain("waves", 0.0, "an integer >= 1 or \"inf\""))
        } else {
            Ok(Wave::Finite(k))
        }
    }
}

impl fmt::Display for Wave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wave::Finite(k) => write!(f, "{k}"),
            Wave::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Wave {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Wave::Infinite);
        }
        match s.parse::<u32>() {
            Ok(k) => Wave::finite(k),
            Err(_) => Err(Error::domain("waves", f64::NAN, "an integer >= 1 or \"inf\"")),
        }
    }
}

/// `g_k(t)` and `g_k'(t)`, with `g_1(t) = t` and
/// `g_k(t) = t + kappa N(g_{k-1}(t))`.
pub fn g_k_with_derivative<T: Real>(t: T, kappa: T, k: u32) -> (T, T) {
    let mut g = t;
    let mut dg = T::one();
    for _ in 1..k {
        let next = t + kappa * cdf(g);
        dg = T::one() + kappa * pdf(g) * dg;
        g = next;
    }
    (g, dg)
}

pub fn g_k<T: Real>(t: T, kappa: T, k: u32) -> T {
    g_k_with_derivative(t, kappa, k).0
}

pub fn g_k_prime<T: Real>(t: T, kappa: T, k: u32) -> T {
    g_k_with_derivative(t, kappa, k).1
}

fn check_wave_index(k: u32) -> Result<()> {
    if k == 0 {
        Err(Error::domain("k", 0.0, ">= 1"))
    } else {
        Ok(())
    }
}

/// `h_k(y) = g_k^{-1}(y)`. `tol` bounds the residual `|g_k(x) - y|` (and,
/// since `g_k' >= 1`, the error in `x`); zero solves to working precision.
pub fn h_k<T: Real>(y: T, kappa: T, k: u32, tol: T) -> Result<T> {
    check_kappa(kappa)?;
    check_wave_index(k)?;
    if !y.is_finite() {
        return Err(Error::domain("y", y.as_f64(), "finite"));
    }
    if k == 1 || kappa == T::zero() {
        return Ok(y);
    }
    // g_k(x) lies in [x, x + kappa], so the preimage of y lies in [y - kappa, y];
    // the extra unit of slack absorbs rounding in the lower endpoint.
    find_root(|x| g_k(x, kappa, k) - y, y - kappa - T::one(), y, T::zero(), tol)
}

/// `h_k'(y) = 1 / g_k'(h_k(y))`.
pub fn h_k_prime<T: Real>(y: T, kappa: T, k: u32, tol: T) -> Result<T> {
    let x = h_k(y, kappa, k, tol)?;
    Ok(g_k_prime(x, kappa, k).recip())
}

/// The limit `h` of the `h_k`: `f(y) = y - kappa N(y)` with, in the multi
/// regime, the stretch over `(x1, x2)` replaced by the level `y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalLossInverse<T> {
    kappa: T,
    folds: Option<FoldPoints<T>>,
}

impl<T: Real> TotalLossInverse<T> {
    pub fn new(kappa: T) -> Result<Self> {
        let geometry = bifurcation_geometry(kappa)?;
        Ok(TotalLossInverse {
            kappa,
            folds: geometry.folds,
        })
    }

    pub fn folds(&self) -> Option<&FoldPoints<T>> {
        self.folds.as_ref()
    }

    fn on_plateau(&self, y: T) -> Option<T> {
        self.folds
            .filter(|fp| y > fp.x1 && y < fp.x2)
            .map(|fp| fp.y1)
    }

    pub fn value(&self, y: T) -> T {
        self.on_plateau(y)
            .unwrap_or_else(|| reduced_f(y, self.kappa))
    }

    /// `h'(y)`; zero on the open plateau, right limit `f'(x2)` at `x2`.
    pub fn derivative(&self, y: T) -> T {
        match self.on_plateau(y) {
            Some(_) => T::zero(),
            None => T::one() - self.kappa * pdf(y),
        }
    }
}

pub fn h<T: Real>(y: T, kappa: T) -> Result<T> {
    if !y.is_finite() {
        return Err(Error::domain("y", y.as_f64(), "finite"));
    }
    Ok(TotalLossInverse::new(kappa)?.value(y))
}

pub fn h_prime<T: Real>(y: T, kappa: T) -> Result<T> {
    if !y.is_finite() {
        return Err(Error::domain("y", y.as_f64(), "finite"));
    }
    Ok(TotalLossInverse::new(kappa)?.derivative(y))
}
