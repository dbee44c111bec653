//! Command-line front end.
//!
//! Parameters come from flags and, optionally, a JSON file given with
//! `--config`; flags win. Results go to `--output` (or stdout) as CSV with
//! 17 significant digits; a one-line summary goes to stderr. Exit status
//! is 0 on success, 1 for usage or validation errors and 2 for numerical
//! failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::cascade::{
    bifurcation_geometry, derive_scenario, fixed_points, run_orbit, total_loss_map_g,
    BalanceSheet, BifurcationGeometry, CascadeMap, ModelParams, Wave, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::distribution::{DistributionSpec, LossDistribution};
use crate::error::Error;
use crate::gaussian::cdf;
use crate::simulator::{
    ks_distance, run_ensemble, run_ensemble_with_threads, EnsembleResult, NetworkBalance,
    NetworkConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "banknet",
    version,
    about = "Default cascades in banking networks driven by fire-sale asset discounts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Direct and total loss for one market draw.
    Solve(Params),
    /// The orbit delta_1, F(delta_1), ... as `k,delta_k,q_k`.
    Orbit(Params),
    /// All fixed points of the cascade map with their stability.
    FixedPoints(Params),
    /// Fold geometry for one kappa or a kappa scan.
    Bifurcation(Params),
    /// Tabulated loss CDF and PDF.
    Distribution(Params),
    /// Monte Carlo ensemble, one row per trial.
    Simulate(Params),
    /// KS distance between a Monte Carlo ensemble and the analytic law.
    Compare(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Orbit(_) => "orbit",
            Command::FixedPoints(_) => "fixed-points",
            Command::Bifurcation(_) => "bifurcation",
            Command::Distribution(_) => "distribution",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
        }
    }

    fn params(&self) -> &Params {
        match self {
            Command::Solve(p)
            | Command::Orbit(p)
            | Command::FixedPoints(p)
            | Command::Bifurcation(p)
            | Command::Distribution(p)
            | Command::Simulate(p)
            | Command::Compare(p) => p,
        }
    }
}

/// Every tunable, shared by all subcommands. JSON config keys use the
/// field names.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// JSON file with parameters; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Fire-sale impact constant.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub assets: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub liabilities: Option<f64>,
    /// Idiosyncratic default probability.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Market factor draw.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// First-wave threshold; with --kappa, bypasses the economic inputs.
    #[arg(long = "delta1", allow_hyphen_values = true)]
    #[serde(alias = "delta1")]
    pub delta_1: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Wave index k, or `inf` for the exhausted cascade.
    #[arg(long)]
    pub waves: Option<String>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads for Monte Carlo trials (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub kappa_steps: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),* $(,)?) => {
        Params { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Params {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Params) -> Params {
        overlay!(
            self, top, config, mu, sigma, rho, a, assets, liabilities, q, z, kappa, delta_1, n,
            trials, seed, waves, grid_points, x_min, x_max, output, threads, tol, max_iter,
            kappa_min, kappa_max, kappa_steps,
        )
    }
}

/// A parsed subcommand with file and flag parameters merged.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let flags = cli.command.params().clone();
        let params = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                let file: Params = serde_json::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("invalid config {}: {e}", path.display()))
                })?;
                file.overlay(flags)
            }
            None => flags,
        };
        Ok(RunConfig {
            command: cli.command,
            params,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } => CliError::Usage(e.to_string()),
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

/// CSV body and stderr summary produced by one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub csv: String,
    pub summary: String,
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn required<T: Copy>(value: Option<T>, name: &str, range: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{name}: must be {range}")))
}

fn wave(p: &Params) -> Result<Wave, CliError> {
    match &p.waves {
        None => Ok(Wave::Infinite),
        Some(s) => s.parse().map_err(|_| {
            CliError::Usage(format!(
                "invalid waves = {s}: must be an integer >= 1 or \"inf\""
            ))
        }),
    }
}

fn model(p: &Params) -> Result<ModelParams<f64>, CliError> {
    let balance = match (p.q, p.assets, p.liabilities) {
        (Some(q), None, None) => BalanceSheet::Idiosyncratic { q },
        (None, Some(assets), Some(liabilities)) => BalanceSheet::Sheet {
            assets,
            liabilities,
        },
        (Some(_), _, _) => {
            return Err(CliError::Usage(
                "give either --q or --assets/--liabilities, not both".into(),
            ))
        }
        _ => {
            return Err(CliError::Usage(
                "missing --q (in (0, 1)) or --assets with --liabilities (0 < liabilities < assets)"
                    .into(),
            ))
        }
    };
    let params = ModelParams {
        mu: p.mu.unwrap_or(0.0),
        sigma: required(p.sigma, "sigma", "finite and > 0")?,
        rho: required(p.rho, "rho", "in [0, 1)")?,
        a: required(p.a, "a", "finite and >= 0")?,
        balance,
    };
    params.validate()?;
    Ok(params)
}

fn cascade_map(p: &Params) -> Result<CascadeMap<f64>, CliError> {
    if let Some(delta_1) = p.delta_1 {
        let kappa = required(p.kappa, "kappa", "finite and >= 0")?;
        return Ok(CascadeMap::new(delta_1, kappa)?);
    }
    let params = model(p)?;
    Ok(derive_scenario(&params, p.z.unwrap_or(0.0))?.map())
}

fn tol(p: &Params) -> Result<f64, CliError> {
    let tol = p.tol.unwrap_or(DEFAULT_TOL);
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(Error::domain("tol", tol, "finite and > 0").into())
    }
}

fn fold_summary(g: &BifurcationGeometry<f64>) -> String {
    match g.folds {
        Some(fp) => format!(" y0={} y1={} x2={}", num(fp.y0), num(fp.y1), num(fp.x2)),
        None => String::new(),
    }
}

fn solve(p: &Params) -> Result<Output, CliError> {
    let map = cascade_map(p)?;
    let tol = tol(p)?;
    let delta_inf = total_loss_map_g(map.delta_1, map.kappa, tol)?;
    let geometry = bifurcation_geometry(map.kappa)?;
    let (q_1, q_inf) = (cdf(map.delta_1), cdf(delta_inf));
    let csv = format!(
        "delta_1,kappa,delta_inf,q_1,q_inf,regime\n{},{},{},{},{},{}\n",
        num(map.delta_1),
        num(map.kappa),
        num(delta_inf),
        num(q_1),
        num(q_inf),
        geometry.regime
    );
    let summary = format!(
        "delta_1={} kappa={} delta_inf={} q_1={} q_inf={} regime={}{}",
        num(map.delta_1),
        num(map.kappa),
        num(delta_inf),
        num(q_1),
        num(q_inf),
        geometry.regime,
        fold_summary(&geometry)
    );
    Ok(Output { csv, summary })
}

fn orbit(p: &Params) -> Result<Output, CliError> {
    let map = cascade_map(p)?;
    let max_iter = p.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let t = run_orbit(map, tol(p)?, max_iter)?;
    let mut csv = String::from("k,delta_k,q_k\n");
    for s in &t.steps {
        let _ = writeln!(csv, "{},{},{}", s.k, num(s.delta), num(s.q));
    }
    let geometry = bifurcation_geometry(map.kappa)?;
    let summary = format!(
        "delta_1={} kappa={} converged={} iterations={} delta_inf={} q_inf={} regime={}{}",
        num(map.delta_1),
        num(map.kappa),
        t.converged,
        t.iterations_used,
        t.delta_inf.map(num).unwrap_or_else(|| "none".into()),
        t.delta_inf.map(|d| num(cdf(d))).unwrap_or_else(|| "none".into()),
        geometry.regime,
        fold_summary(&geometry)
    );
    Ok(Output { csv, summary })
}

fn fixed_points_cmd(p: &Params) -> Result<Output, CliError> {
    let map = cascade_map(p)?;
    let set = fixed_points(map, tol(p)?)?;
    let mut csv = String::from("x,stability,slope,selected\n");
    for fp in &set.points {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(fp.x),
            fp.stability,
            num(map.slope(fp.x)),
            fp.x == set.selected
        );
    }
    let geometry = bifurcation_geometry(map.kappa)?;
    let summary = format!(
        "delta_1={} kappa={} count={} delta_inf={} q_inf={} regime={}{}",
        num(map.delta_1),
        num(map.kappa),
        set.points.len(),
        num(set.selected),
        num(cdf(set.selected)),
        geometry.regime,
        fold_summary(&geometry)
    );
    Ok(Output { csv, summary })
}

fn geometry_row(csv: &mut String, g: &BifurcationGeometry<f64>) {
    match g.folds {
        Some(fp) => {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                num(g.kappa),
                g.regime,
                num(fp.x0),
                num(fp.x1),
                num(fp.y0),
                num(fp.y1),
                num(fp.x2)
            );
        }
        None => {
            let _ = writeln!(csv, "{},{},,,,,", num(g.kappa), g.regime);
        }
    }
}

fn bifurcation(p: &Params) -> Result<Output, CliError> {
    let mut csv = String::from("kappa,regime,x0,x1,y0,y1,x2\n");
    let single_kappa = match (p.kappa, p.kappa_min, p.kappa_max) {
        (Some(k), _, _) => Some(k),
        (None, None, None) => Some(model(p)?.kappa()),
        _ => None,
    };
    let summary = match single_kappa {
        Some(kappa) => {
            let g = bifurcation_geometry(kappa)?;
            geometry_row(&mut csv, &g);
            let folds = match g.folds {
                Some(fp) => format!(
                    " x0={} x1={} y0={} y1={} x2={}",
                    num(fp.x0),
                    num(fp.x1),
                    num(fp.y0),
                    num(fp.y1),
                    num(fp.x2)
                ),
                None => String::new(),
            };
            format!(
                "kappa={} kappa_0={} regime={}{}",
                num(kappa),
                num(g.kappa_0),
                g.regime,
                folds
            )
        }
        None => {
            let lo = required(p.kappa_min, "kappa-min", "finite and >= 0")?;
            let hi = required(p.kappa_max, "kappa-max", "finite and >= kappa-min")?;
            let steps = p.kappa_steps.unwrap_or(50);
            if steps < 2 {
                return Err(Error::domain("kappa_steps", steps as f64, "an integer >= 2").into());
            }
            if !(hi >= lo) {
                return Err(Error::domain("kappa_max", hi, "finite and >= kappa_min").into());
            }
            let mut multi = 0;
            for i in 0..steps {
                let kappa = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
                let g = bifurcation_geometry(kappa)?;
                if g.folds.is_some() {
                    multi += 1;
                }
                geometry_row(&mut csv, &g);
            }
            format!(
                "kappa_min={} kappa_max={} steps={steps} multi_rows={multi} kappa_0={}",
                num(lo),
                num(hi),
                num(crate::cascade::kappa_0::<f64>())
            )
        }
    };
    Ok(Output { csv, summary })
}

fn distribution_spec(p: &Params) -> Result<DistributionSpec<f64>, CliError> {
    let rho = required(p.rho, "rho", "in (0, 1)")?;
    let q = match (p.q, p.assets, p.liabilities) {
        (Some(q), None, None) => q,
        _ => model(p)?.idiosyncratic_q(),
    };
    let kappa = match p.kappa {
        Some(k) => k,
        None => model(p)?.kappa(),
    };
    Ok(DistributionSpec::new(q, rho, kappa, wave(p)?)?)
}

fn distribution(p: &Params) -> Result<Output, CliError> {
    let spec = distribution_spec(p)?;
    let law = LossDistribution::new(spec)?;
    let curve = law.tabulate(
        p.grid_points.unwrap_or(200),
        p.x_min.unwrap_or(1e-3),
        p.x_max.unwrap_or(0.999),
    )?;
    let mut csv = String::new();
    if let (Some(gap), Some(jump)) = (curve.gap, curve.jump) {
        let _ = writeln!(
            csv,
            "# gap_lo={}, gap_hi={}, jump_at={}",
            num(gap.lo),
            num(gap.hi),
            num(jump.at)
        );
    }
    csv.push_str("x,cdf,pdf\n");
    for pt in &curve.grid {
        let _ = writeln!(csv, "{},{},{}", num(pt.x), num(pt.cdf), num(pt.pdf));
    }
    let mut summary = format!(
        "q={} rho={} kappa={} waves={} points={}",
        num(spec.idiosyncratic_q),
        num(spec.rho),
        num(spec.kappa),
        spec.wave,
        curve.grid.len()
    );
    if let (Some(gap), Some(jump)) = (curve.gap, curve.jump) {
        let _ = write!(
            summary,
            " gap_lo={} gap_hi={} jump_pdf_right={}",
            num(gap.lo),
            num(gap.hi),
            num(jump.pdf_right)
        );
    }
    Ok(Output { csv, summary })
}

fn network(p: &Params) -> Result<NetworkConfig, CliError> {
    let n = p.n.unwrap_or(1000);
    let trials = p.trials.unwrap_or(1000);
    let seed = p.seed.unwrap_or(0);
    let sigma = required(p.sigma, "sigma", "finite and >= 0")?;
    let rho = required(p.rho, "rho", "in [0, 1]")?;
    let a = required(p.a, "a", "finite and >= 0")?;
    let mu = p.mu.unwrap_or(0.0);
    let mut config = match (p.q, p.assets, p.liabilities) {
        (Some(q), None, None) => {
            NetworkConfig::homogeneous_from_q(n, q, mu, sigma, rho, a, trials, seed)?
        }
        (None, Some(assets), Some(liabilities)) => NetworkConfig {
            n,
            balance: NetworkBalance::Homogeneous {
                assets,
                liabilities,
            },
            mu,
            sigma,
            rho,
            a,
            trials,
            master_seed: seed,
            fixed_z: None,
        },
        _ => {
            return Err(CliError::Usage(
                "give either --q (in (0, 1)) or --assets with --liabilities (0 < liabilities < assets)"
                    .into(),
            ))
        }
    };
    config.fixed_z = p.z;
    config.validate()?;
    Ok(config)
}

fn ensemble(p: &Params, config: &NetworkConfig) -> Result<EnsembleResult, CliError> {
    Ok(match p.threads {
        Some(0) => return Err(Error::domain("threads", 0.0, "an integer >= 1").into()),
        Some(t) => run_ensemble_with_threads(config, t)?,
        None => run_ensemble(config)?,
    })
}

fn simulate(p: &Params) -> Result<Output, CliError> {
    let config = network(p)?;
    let result = ensemble(p, &config)?;
    let mut csv = String::from("trial,z,waves,q_final\n");
    for (i, t) in result.trials.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{},{}", num(t.z), t.waves, num(t.q_final));
    }
    let mut summary = format!(
        "n={} trials={} seed={} mean={} variance={}",
        config.n,
        config.trials,
        config.master_seed,
        num(result.summary.mean),
        num(result.summary.variance)
    );
    for (level, value) in &result.summary.quantiles {
        let _ = write!(summary, " q{level}={}", num(*value));
    }
    Ok(Output { csv, summary })
}

fn compare(p: &Params) -> Result<Output, CliError> {
    let config = network(p)?;
    let spec = distribution_spec(p)?;
    let law = LossDistribution::new(spec)?;
    let result = ensemble(p, &config)?;
    let samples: Vec<f64> = match spec.wave {
        Wave::Infinite => result.samples.clone(),
        Wave::Finite(k) => result
            .trials
            .iter()
            .map(|t| t.loss_after(k as usize))
            .collect(),
    };
    let analytic = |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            law.cdf(x).unwrap_or(f64::NAN)
        }
    };
    let ks = ks_distance(&samples, analytic)?;
    if !ks.is_finite() {
        return Err(CliError::Numerical("analytic CDF evaluation failed".into()));
    }
    let csv = format!(
        "n,trials,seed,waves,q,rho,kappa,ks,mean,variance\n{},{},{},{},{},{},{},{},{},{}\n",
        config.n,
        config.trials,
        config.master_seed,
        spec.wave,
        num(spec.idiosyncratic_q),
        num(spec.rho),
        num(spec.kappa),
        num(ks),
        num(result.summary.mean),
        num(result.summary.variance)
    );
    let summary = format!(
        "ks={} n={} trials={} seed={} waves={} kappa={} regime={}",
        num(ks),
        config.n,
        config.trials,
        config.master_seed,
        spec.wave,
        num(spec.kappa),
        bifurcation_geometry(spec.kappa)?.regime
    );
    Ok(Output { csv, summary })
}

/// Runs one validated configuration.
pub fn execute(config: &RunConfig) -> Result<Output, CliError> {
    let p = &config.params;
    match config.command {
        Command::Solve(_) => solve(p),
        Command::Orbit(_) => orbit(p),
        Command::FixedPoints(_) => fixed_points_cmd(p),
        Command::Bifurcation(_) => bifurcation(p),
        Command::Distribution(_) => distribution(p),
        Command::Simulate(_) => simulate(p),
        Command::Compare(_) => compare(p),
    }
}

/// Parses `args` (program name first), executes, writes CSV and summary,
/// and returns the process exit status.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|config| {
        let out = execute(&config)?;
        match &config.params.output {
            Some(path) => std::fs::write(path, &out.csv).map_err(|e| {
                CliError::Usage(format!("cannot write output {}: {e}", path.display()))
            })?,
            None => stdout
                .write_all(out.csv.as_bytes())
                .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))?,
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            let _ = writeln!(stderr, "{}", out.summary);
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("banknet").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 2.0_f64.sqrt();
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn overlay_prefers_top() {
        let base = Params {
            sigma: Some(0.1),
            rho: Some(0.3),
            ..Params::default()
        };
        let top = Params {
            sigma: Some(0.2),
            ..Params::default()
        };
        let merged = base.overlay(top);
        assert_eq!(merged.sigma, Some(0.2));
        assert_eq!(merged.rho, Some(0.3));
    }

    #[test]
    fn validation_errors_name_the_field() {
        let (code, _, err) = run_args(&["solve", "--q", "0.05", "--rho", "1.5", "--sigma", "0.25", "--a", "0.2"]);
        assert_eq!(code, 1);
        assert!(err.contains("rho") && err.contains("[0, 1)"), "{err}");
        let (code, _, err) = run_args(&["solve", "--q", "0.05", "--rho", "0.2", "--a", "0.2"]);
        assert_eq!(code, 1);
        assert!(err.contains("sigma") && err.contains("> 0"), "{err}");
        let (code, _, err) = run_args(&["distribution", "--q", "0.05", "--rho", "0.2", "--kappa", "1", "--waves", "0"]);
        assert_eq!(code, 1);
        assert!(err.contains("waves"), "{err}");
        let (code, _, _) = run_args(&["solve", "--bogus", "1"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, _, err) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(err.contains("bifurcation"));
    }

    #[test]
    fn reduced_form_orbit() {
        let (code, out, err) = run_args(&["orbit", "--delta1", "0", "--kappa", "1"]);
        assert_eq!(code, 0, "{err}");
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("k,delta_k,q_k"));
        assert!(lines.next().unwrap().starts_with("1,0.0000000000000000e0,5.0000000000000000e-1"));
        assert!(err.contains("converged=true"));
    }
}
