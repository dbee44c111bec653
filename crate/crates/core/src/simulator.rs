//! Finite-network Monte Carlo of the cascade.
//!
//! Each trial draws one market factor and `n` idiosyncratic shocks, fails
//! every node whose shocked assets do not cover its liabilities, then
//! repeatedly marks the shocked assets down by `exp(-a q)`, where `q` is the
//! cumulative defaulted fraction, until a wave produces no new default.
//!
//! Trial `i` draws from the ChaCha8 stream `i` of `master_seed`, so an
//! ensemble is bit-identical under any thread count or schedule.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkBalance {
    Homogeneous { assets: f64, liabilities: f64 },
    /// One `(assets, liabilities)` pair per node.
    PerNode(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n: usize,
    pub balance: NetworkBalance,
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub a: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Condition every trial on this market factor instead of drawing it.
    pub fixed_z: Option<f64>,
}

impl NetworkConfig {
    /// Homogeneous network with `A = 1` and `L` set so an isolated node
    /// defaults with probability `q`: `L = exp(mu + sigma N^{-1}(q))`.
    #[allow(clippy::too_many_arguments)]
    pub fn homogeneous_from_q(
        n: usize,
        q: f64,
        mu: f64,
        sigma: f64,
        rho: f64,
        a: f64,
        trials: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain("q", q, "in (0, 1)"));
        }
        let liabilities = (mu + sigma * crate::gaussian::quantile(q)).exp();
        let config = NetworkConfig {
            n,
            balance: NetworkBalance::Homogeneous {
                assets: 1.0,
                liabilities,
            },
            mu,
            sigma,
            rho,
            a,
            trials,
            master_seed,
            fixed_z: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n", 0.0, "an integer >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials", 0.0, "an integer >= 1"));
        }
        if !self.mu.is_finite() {
            return Err(Error::domain("mu", self.mu, "finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain("sigma", self.sigma, "finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::domain("rho", self.rho, "in [0, 1]"));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::domain("a", self.a, "finite and >= 0"));
        }
        if let Some(z) = self.fixed_z {
            if !z.is_finite() {
                return Err(Error::domain("z", z, "finite"));
            }
        }
        let check = |assets: f64, liabilities: f64| -> Result<()> {
            if !(assets > 0.0 && assets.is_finite()) {
                return Err(Error::domain("assets", assets, "finite and > 0"));
            }
            if !(liabilities > 0.0 && liabilities < assets) {
                return Err(Error::domain("liabilities", liabilities, "in (0, assets)"));
            }
            Ok(())
        };
        match &self.balance {
            NetworkBalance::Homogeneous {
                assets,
                liabilities,
            } => check(*assets, *liabilities),
            NetworkBalance::PerNode(nodes) => {
                if nodes.len() != self.n {
                    return Err(Error::domain(
                        "balance_sheets",
                        nodes.len() as f64,
                        "one (assets, liabilities) pair per node",
                    ));
                }
                nodes.iter().try_for_each(|&(a, l)| check(a, l))
            }
        }
    }

    fn sheet(&self, i: usize) -> (f64, f64) {
        match &self.balance {
            NetworkBalance::Homogeneous {
                assets,
                liabilities,
            } => (*assets, *liabilities),
            NetworkBalance::PerNode(nodes) => nodes[i],
        }
    }

    pub fn liabilities(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.sheet(i).1).collect()
    }

    /// Random stream for trial `index`.
    pub fn trial_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }
}

/// Market draw and post-shock assets `A_{i,1}` for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Shocks {
    pub z: f64,
    pub assets: Vec<f64>,
}

/// Draws `Z` (unless the config fixes it), then `eps_1..eps_n`, and returns
/// `A_{i,1} = A_i exp(mu + sigma (sqrt(rho) Z + sqrt(1 - rho) eps_i))`.
pub fn sample_shocks<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Shocks {
    let z = match config.fixed_z {
        Some(z) => z,
        None => rng.sample(StandardNormal),
    };
    let common = config.mu + config.sigma * config.rho.sqrt() * z;
    let idio = config.sigma * (1.0 - config.rho).sqrt();
    let assets = (0..config.n)
        .map(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            config.sheet(i).0 * (common + idio * eps).exp()
        })
        .collect();
    Shocks { z, assets }
}

/// Cumulative defaulted fraction after each productive wave.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeOutcome {
    /// `q_1` followed by one entry per wave that added defaults.
    pub wave_losses: Vec<f64>,
}

impl CascadeOutcome {
    pub fn waves(&self) -> usize {
        self.wave_losses.len()
    }

    pub fn q_final(&self) -> f64 {
        *self.wave_losses.last().expect("at least one wave")
    }

    /// Loss after `k` waves; a cascade that stopped earlier keeps its final loss.
    pub fn loss_after(&self, k: usize) -> f64 {
        let idx = k.max(1).min(self.wave_losses.len()) - 1;
        self.wave_losses[idx]
    }
}

/// Runs the default waves for fixed post-shock assets.
///
/// A node fails in a wave when `A_{i,1} exp(-a q) <= L_i`, with `q` the
/// fraction defaulted so far (zero in the first wave). The discount always
/// applies to the post-shock value, never compounding, and failures are
/// permanent.
pub fn run_cascade(post_shock_assets: &[f64], liabilities: &[f64], a: f64) -> CascadeOutcome {
    assert_eq!(
        post_shock_assets.len(),
        liabilities.len(),
        "one liability per node"
    );
    let n = post_shock_assets.len();
    let mut nodes: Vec<(f64, f64)> = post_shock_assets
        .iter()
        .copied()
        .zip(liabilities.iter().copied())
        .collect();
    // Ascending coverage ratio, so each wave's failures are a prefix of
    // the survivors.
    nodes.sort_unstable_by(|x, y| (x.0 / x.1).total_cmp(&(y.0 / y.1)));

    let total = n as f64;
    let mut defaulted = 0usize;
    let mut discount = 1.0_f64;
    let mut wave_losses = Vec::new();
    loop {
        let before = defaulted;
        while defaulted < n {
            let (assets, liab) = nodes[defaulted];
            if assets * discount <= liab {
                defaulted += 1;
            } else {
                break;
            }
        }
        if defaulted == before && !wave_losses.is_empty() {
            break;
        }
        let q = defaulted as f64 / total;
        wave_losses.push(q);
        if defaulted == before || a == 0.0 {
            break;
        }
        discount = (-a * q).exp();
    }
    CascadeOutcome { wave_losses }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub z: f64,
    pub wave_losses: Vec<f64>,
    pub waves: usize,
    pub q_final: f64,
}

impl TrialResult {
    pub fn loss_after(&self, k: usize) -> f64 {
        let idx = k.max(1).min(self.wave_losses.len()) - 1;
        self.wave_losses[idx]
    }
}

/// One full trial on stream `index`.
pub fn run_trial(config: &NetworkConfig, liabilities: &[f64], index: u64) -> TrialResult {
    let mut rng = config.trial_rng(index);
    let shocks = sample_shocks(config, &mut rng);
    let outcome = run_cascade(&shocks.assets, liabilities, config.a);
    TrialResult {
        z: shocks.z,
        waves: outcome.waves(),
        q_final: outcome.q_final(),
        wave_losses: outcome.wave_losses,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    /// `(level, empirical quantile)` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

pub const SUMMARY_LEVELS: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 0.999];

impl Summary {
    pub fn from_samples(samples: &[f64]) -> Summary {
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let variance = if samples.len() > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let quantiles = SUMMARY_LEVELS
            .iter()
            .map(|&p| {
                let rank = ((p * m).ceil() as usize).clamp(1, sorted.len());
                (p, sorted[rank - 1])
            })
            .collect();
        Summary {
            mean,
            variance,
            quantiles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub trials: Vec<TrialResult>,
    /// `q_final` of every trial, in trial order.
    pub samples: Vec<f64>,
    pub summary: Summary,
    pub ks_vs_analytic: Option<f64>,
}

/// Runs every trial on the current rayon pool. Results are in trial order
/// and do not depend on the pool size.
pub fn run_ensemble(config: &NetworkConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let liabilities = config.liabilities();
    let trials: Vec<TrialResult> = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(config, &liabilities, i))
        .collect();
    let samples: Vec<f64> = trials.iter().map(|t| t.q_final).collect();
    let summary = Summary::from_samples(&samples);
    Ok(EnsembleResult {
        trials,
        samples,
        summary,
        ks_vs_analytic: None,
    })
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(config: &NetworkConfig, threads: usize) -> Result<EnsembleResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| run_ensemble(config))
}

/// Kolmogorov-Smirnov distance `sup_x |F_m(x) - F(x)|` between the
/// empirical law of `samples` and a continuous `cdf`, checking both sides
/// of every step of the empirical distribution.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("samples", 0.0, "non-empty"));
    }
    if let Some(bad) = samples.iter().find(|s| s.is_nan()) {
        return Err(Error::domain("samples", *bad, "free of NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        let below = i as f64 / m;
        let at = j as f64 / m;
        d = d.max((f - below).abs()).max((at - f).abs());
        i = j;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{derive_scenario, total_loss_map_g, BalanceSheet, ModelParams};
    use crate::gaussian::{cdf, quantile};

    fn base(n: usize, a: f64) -> NetworkConfig {
        NetworkConfig::homogeneous_from_q(n, 0.05, 0.0, 0.25, 0.2, a, 10, 7).unwrap()
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let mut cfg = base(50, 0.1);
        cfg.sigma = 0.0;
        cfg.mu = 0.03;
        let shocks = sample_shocks(&cfg, &mut cfg.trial_rng(0));
        assert!(shocks.assets.iter().all(|&a| a == 0.03_f64.exp()));
    }

    #[test]
    fn independent_returns_when_rho_zero() {
        let mut cfg = base(100_000, 0.0);
        cfg.rho = 0.0;
        let r1: Vec<f64> = sample_shocks(&cfg, &mut cfg.trial_rng(0)).assets.iter().map(|a| a.ln()).collect();
        let r2: Vec<f64> = sample_shocks(&cfg, &mut cfg.trial_rng(1)).assets.iter().map(|a| a.ln()).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (m1, m2) = (mean(&r1), mean(&r2));
        let cov: f64 = r1.iter().zip(&r2).map(|(a, b)| (a - m1) * (b - m2)).sum::<f64>();
        let v1: f64 = r1.iter().map(|a| (a - m1).powi(2)).sum();
        let v2: f64 = r2.iter().map(|b| (b - m2).powi(2)).sum();
        let corr = cov / (v1 * v2).sqrt();
        assert!(corr.abs() < 5.0 / (cfg.n as f64).sqrt());
    }

    #[test]
    fn mean_return_law_of_large_numbers() {
        let n = 1_000_000;
        let mut cfg = base(n, 0.0);
        cfg.mu = 0.02;
        cfg.fixed_z = Some(0.0);
        let returns: Vec<f64> = sample_shocks(&cfg, &mut cfg.trial_rng(3)).assets.iter().map(|a| a.ln()).collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        assert!((mean - cfg.mu).abs() < 5.0 * cfg.sigma / (n as f64).sqrt());
    }

    #[test]
    fn no_feedback_means_one_wave() {
        let assets = [0.5, 0.8, 1.2, 0.9];
        let liab = [1.0; 4];
        let out = run_cascade(&assets, &liab, 0.0);
        assert_eq!(out.wave_losses, vec![0.75]);
        assert_eq!(out.q_final(), 0.75);
    }

    #[test]
    fn no_trigger_means_no_loss() {
        let a = 0.5_f64;
        let liab = [1.0; 3];
        let assets = [1.0 * a.exp() * 1.01, 2.0, 5.0];
        let out = run_cascade(&assets, &liab, a);
        assert_eq!(out.wave_losses, vec![0.0]);
        assert_eq!(out.waves(), 1);
    }

    #[test]
    fn exact_insolvency_defaults() {
        let out = run_cascade(&[1.0, 2.0], &[1.0, 1.0], 0.0);
        assert_eq!(out.q_final(), 0.5);
    }

    #[test]
    fn discount_applies_to_post_shock_assets() {
        // Discounts after waves 1..3 are exp(-a q_k) = exp(-1/4), exp(-1/2),
        // exp(-3/4). Compounding them would sink the last node as well.
        let liab = [1.0; 4];
        let assets = [0.9, 1.2, 1.5, 2.2];
        let out = run_cascade(&assets, &liab, 1.0);
        assert!(2.2 * (-0.75_f64).exp() > 1.0);
        assert!(2.2 * (-0.25_f64 - 0.5 - 0.75).exp() <= 1.0);
        assert_eq!(out.wave_losses, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn ensemble_is_reproducible_across_pools() {
        let cfg = NetworkConfig::homogeneous_from_q(2000, 0.05, 0.0, 0.25, 0.2, 0.3, 64, 99).unwrap();
        let one = run_ensemble_with_threads(&cfg, 1).unwrap();
        let four = run_ensemble_with_threads(&cfg, 4).unwrap();
        assert_eq!(one, four);
        let again = run_ensemble(&cfg).unwrap();
        assert_eq!(one.samples, again.samples);
        let single = NetworkConfig { trials: 1, ..cfg.clone() };
        let first = run_ensemble(&single).unwrap();
        assert_eq!(first.trials[0], run_trial(&cfg, &cfg.liabilities(), 0));
        assert_eq!(first.trials[0], one.trials[0]);
    }

    #[test]
    fn trial_invariants_with_heterogeneous_sheets() {
        let n = 500;
        let nodes: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let assets = 1.0 + (i % 7) as f64 * 0.1;
                (assets, assets * (0.7 + (i % 5) as f64 * 0.04))
            })
            .collect();
        let cfg = NetworkConfig {
            n,
            balance: NetworkBalance::PerNode(nodes),
            mu: 0.0,
            sigma: 0.3,
            rho: 0.4,
            a: 2.0,
            trials: 50,
            master_seed: 5,
            fixed_z: None,
        };
        let result = run_ensemble(&cfg).unwrap();
        assert_eq!(result.samples.len(), 50);
        for t in &result.trials {
            assert!(t.wave_losses.windows(2).all(|w| w[1] > w[0]));
            assert!(t.waves <= n + 1);
            assert_eq!(t.q_final, *t.wave_losses.last().unwrap());
            assert!((0.0..=1.0).contains(&t.q_final));
        }
    }

    #[test]
    fn conditional_loss_tracks_analytic_limit() {
        // a chosen so that kappa = 1
        let (q, rho, sigma) = (0.05, 0.2_f64, 0.25);
        let a = sigma * (1.0 - rho).sqrt();
        let n = 100_000;
        let mut cfg = NetworkConfig::homogeneous_from_q(n, q, 0.0, sigma, rho, a, 1, 11).unwrap();
        cfg.fixed_z = Some(0.5);
        let params = ModelParams {
            mu: 0.0,
            sigma,
            rho,
            a,
            balance: BalanceSheet::Idiosyncratic { q },
        };
        let s = derive_scenario(&params, 0.5).unwrap();
        assert!((s.kappa - 1.0).abs() < 1e-12);
        let expected = cdf(total_loss_map_g(s.delta_1, s.kappa, 1e-12).unwrap());
        let trial = run_trial(&cfg, &cfg.liabilities(), 0);
        let band = 3.0 * (expected * (1.0 - expected) / n as f64).sqrt();
        // the cascade amplifies binomial noise by 1 / (1 - F'(delta_inf))
        let amplification = 1.0 / (1.0 - s.kappa * crate::gaussian::pdf(quantile(expected)));
        assert!(
            (trial.q_final - expected).abs() < band * amplification,
            "{} vs {expected}",
            trial.q_final
        );
    }

    #[test]
    fn ks_geometry() {
        let phi = |x: f64| cdf(x);
        let c = 0.3;
        let d = ks_distance(&[c; 10], phi).unwrap();
        assert!((d - cdf(c).max(1.0 - cdf(c))).abs() < 1e-15);

        let samples: Vec<f64> = (0..1000).map(|i| quantile((i as f64 + 0.5) / 1000.0)).collect();
        let d1 = ks_distance(&samples, phi).unwrap();
        let doubled: Vec<f64> = samples.iter().chain(samples.iter()).copied().collect();
        assert_eq!(ks_distance(&doubled, phi).unwrap(), d1);
        assert!(d1 <= 0.5 / 1000.0 + 1e-12);
        assert!(ks_distance(&[], phi).is_err());
    }

    #[test]
    fn ks_of_inverse_transform_samples() {
        let m = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<f64> = (0..m).map(|_| quantile(rng.random::<f64>())).collect();
        let d = ks_distance(&samples, cdf).unwrap();
        assert!(d < 1.63 / (m as f64).sqrt());
    }

    #[test]
    fn config_validation_names_the_field() {
        let mut cfg = base(10, 0.1);
        cfg.trials = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("trials"));
        let err = NetworkConfig::homogeneous_from_q(10, 0.7, 0.0, 0.25, 0.2, 0.1, 1, 0).unwrap_err();
        assert!(err.to_string().contains("liabilities"));
        let mut cfg = base(10, 0.1);
        cfg.balance = NetworkBalance::PerNode(vec![(1.0, 0.5); 3]);
        assert!(cfg.validate().is_err());
    }
}
