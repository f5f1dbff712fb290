//! Monte Carlo bench: the simulation designs, selection and estimation
//! metrics, an empirical rate check for the oracle estimator and the
//! simulation-based QQ lack-of-fit diagnostic.
//!
//! Design: `X̃ ~ N_{p+2}(0, Σ)` with `Σ_jk = 0.5^{|j-k|}`, `X_1 = √12 Φ(X̃_1)`,
//! `X_j = X̃_j` for `j = 2..24`, the remaining linear columns are
//! `X̃_27..X̃_{p+2}`, and `Z_1 = Φ(X̃_25)`, `Z_2 = Φ(X̃_26)`. The response is
//! `Y = X_6 β_1 + X_12 β_2 + X_15 β_3 + X_20 β_4 + sin(2π Z_1) + Z_2³ + ε`
//! with `β_k ~ U[0.5, 1.5]` drawn per replication.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::fit::{fit_oracle, FitResult, KktReport, ModelSpec};
use crate::multi_quantile::{fit_group_path, fit_independent_paths, fit_multi_oracle, union_selection, MultiTauSpec};
use crate::penalties::{PenaltyFamily, PenaltySpec};
use crate::spline_basis::{empirical_quantile, KnotRule, SplineBasis};
use crate::tuning::{fit_path, Criterion, PathOptions};
use crate::{Error, Result};

/// Zero-based linear columns carrying signal.
pub const SIGNAL_COLUMNS: [usize; 4] = [5, 11, 14, 19];
/// Smallest `p` the design supports.
pub const MIN_P: usize = 27;

/// Paths stop once a fit selects more than this many linear covariates.
pub const DEFAULT_MAX_ACTIVE: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    Gaussian,
    T3,
    /// `ε = X_1 ζ` with `ζ ~ N(0, 0.7²)`. `X_1 >= 0`, so the `τ` quantile
    /// gains the linear term `0.7 Φ⁻¹(τ) X_1`.
    Heteroscedastic,
}

impl std::str::FromStr for ErrorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "t3" => Ok(Self::T3),
            "heteroscedastic" | "hetero" => Ok(Self::Heteroscedastic),
            other => Err(Error::Config(format!("unknown error model '{other}'"))),
        }
    }
}

const HETERO_SD: f64 = 0.7;

/// Spline settings for the fitted nonparametric components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub order: usize,
    pub k_n: usize,
    /// Use `⌊n^{1/5}⌋` internal knots instead of `k_n`.
    pub grow_with_n: bool,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            order: 3,
            k_n: 0,
            grow_with_n: false,
        }
    }
}

impl BasisConfig {
    pub fn bases(&self, n: usize) -> Result<Vec<SplineBasis<f64>>> {
        let k_n = if self.grow_with_n {
            (n as f64).powf(0.2).floor() as usize
        } else {
            self.k_n
        };
        let b = SplineBasis::new(self.order, k_n, KnotRule::Uniform, None)?;
        Ok(vec![b.clone(), b])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub error_model: ErrorModel,
    pub tau: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub basis: BasisConfig,
    pub penalty: PenaltyFamily,
    /// Penalty shape; the family default when `None`.
    pub a: Option<f64>,
    pub criterion: Criterion,
    pub n_lambda: usize,
    pub max_active: Option<usize>,
}

impl SimConfig {
    pub fn new(n: usize, p: usize, error_model: ErrorModel, tau: f64, n_reps: usize, seed: u64) -> Result<Self> {
        let c = Self {
            n,
            p,
            error_model,
            tau,
            n_reps,
            seed,
            basis: BasisConfig::default(),
            penalty: PenaltyFamily::Scad,
            a: None,
            criterion: Criterion::Qbic,
            n_lambda: 50,
            max_active: Some(DEFAULT_MAX_ACTIVE),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::Config(format!("n must be at least 10, got {}", self.n)));
        }
        if self.p < MIN_P {
            return Err(Error::Config(format!("p must be at least {MIN_P}, got {}", self.p)));
        }
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }

    pub fn penalty_spec(&self) -> Result<PenaltySpec<f64>> {
        let a = self.a.unwrap_or_else(|| self.penalty.default_a());
        PenaltySpec::new(self.penalty, 0.0, a)
    }

    fn path_options(&self, rep: usize) -> PathOptions<f64> {
        PathOptions {
            n_lambda: self.n_lambda,
            seed: self.seed ^ (rep as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            max_active: self.max_active,
            ..PathOptions::default()
        }
    }
}

/// One simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: Array2<f64>,
    pub z: Array2<f64>,
    /// Signal coefficients on [`SIGNAL_COLUMNS`].
    pub signal: [f64; 4],
    /// Empirically centered `sin(2π z_1)` and `z_2³` at the sample.
    pub g_components: [Vec<f64>; 2],
    pub error_model: ErrorModel,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Linear coefficients of the `τ` conditional quantile.
    pub fn true_beta(&self, tau: f64) -> Vec<f64> {
        let mut beta = vec![0.0; self.p()];
        for (k, &c) in SIGNAL_COLUMNS.iter().enumerate() {
            beta[c] = self.signal[k];
        }
        if self.error_model == ErrorModel::Heteroscedastic {
            beta[0] = HETERO_SD * std_normal().inverse_cdf(tau);
        }
        beta
    }

    pub fn support(&self, tau: f64) -> Vec<usize> {
        let beta = self.true_beta(tau);
        (0..self.p()).filter(|&j| beta[j] != 0.0).collect()
    }

    /// `g_1(z_i1) + g_2(z_i2)`, each empirically centered.
    pub fn g_centered(&self, i: usize) -> f64 {
        self.g_components[0][i] + self.g_components[1][i]
    }
}

/// Random stream for replication `rep`.
pub fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Draws replication `rep` of the design in `config`.
pub fn generate(config: &SimConfig, rep: usize) -> Result<Dataset> {
    config.validate()?;
    let mut rng = rep_rng(config.seed, rep);
    let (n, p) = (config.n, config.p);
    let mut signal = [0.0; 4];
    for b in &mut signal {
        *b = rng.gen_range(0.5..1.5);
    }
    let phi = std_normal();
    let rho: f64 = 0.5;
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    let mut z = Array2::zeros((n, 2));
    let mut raw = vec![0.0; p + 2];
    let t3 = StudentT::new(3.0).expect("valid degrees of freedom");
    let mut y = vec![0.0; n];
    for i in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        raw[0] = e;
        for j in 1..p + 2 {
            let e: f64 = rng.sample(StandardNormal);
            raw[j] = rho * raw[j - 1] + innov * e;
        }
        x[[i, 0]] = 12f64.sqrt() * phi.cdf(raw[0]);
        for j in 1..24 {
            x[[i, j]] = raw[j];
        }
        for j in 24..p {
            x[[i, j]] = raw[j + 2];
        }
        z[[i, 0]] = phi.cdf(raw[24]);
        z[[i, 1]] = phi.cdf(raw[25]);
        let eps = match config.error_model {
            ErrorModel::Gaussian => rng.sample(StandardNormal),
            ErrorModel::T3 => t3.sample(&mut rng),
            ErrorModel::Heteroscedastic => {
                let zeta: f64 = rng.sample(StandardNormal);
                x[[i, 0]] * HETERO_SD * zeta
            }
        };
        let lin: f64 = SIGNAL_COLUMNS
            .iter()
            .zip(&signal)
            .map(|(&c, &b)| x[[i, c]] * b)
            .sum();
        y[i] = lin + (2.0 * std::f64::consts::PI * z[[i, 0]]).sin() + z[[i, 1]].powi(3) + eps;
    }
    let center = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.into_iter().map(|a| a - m).collect::<Vec<_>>()
    };
    let g1 = center((0..n).map(|i| (2.0 * std::f64::consts::PI * z[[i, 0]]).sin()).collect());
    let g2 = center((0..n).map(|i| z[[i, 1]].powi(3)).collect());
    Ok(Dataset {
        y,
        x,
        z,
        signal,
        g_components: [g1, g2],
        error_model: config.error_model,
    })
}

/// Model specification for a simulated data set.
pub fn model_spec(data: &Dataset, config: &SimConfig) -> Result<ModelSpec<f64>> {
    ModelSpec::new(
        data.y.clone(),
        data.x.clone(),
        data.z.view(),
        &config.basis.bases(data.n())?,
        config.tau,
        config.penalty_spec()?,
    )
}

/// Outcome of one replication for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub selected: Vec<usize>,
    pub support: Vec<usize>,
    /// One coefficient vector per quantile level.
    pub beta_hat: Vec<Vec<f64>>,
    pub beta_true: Vec<Vec<f64>>,
    /// `n⁻¹ Σ_i |ĝ(z_i) - g_0(z_i)|`, averaged over levels.
    pub aade: f64,
    pub lambda: Option<f64>,
    pub kkt: Option<KktReport<f64>>,
    pub converged: bool,
}

impl RepRecord {
    pub fn false_positives(&self) -> usize {
        self.selected.iter().filter(|j| !self.support.contains(j)).count()
    }

    pub fn true_positives(&self) -> usize {
        self.selected.iter().filter(|j| self.support.contains(j)).count()
    }

    pub fn exact(&self) -> bool {
        self.false_positives() == 0 && self.true_positives() == self.support.len()
    }

    /// `‖β̂ - β_0‖²` averaged over levels.
    pub fn squared_error(&self) -> f64 {
        let m = self.beta_hat.len() as f64;
        self.beta_hat
            .iter()
            .zip(&self.beta_true)
            .map(|(b, t)| b.iter().zip(t).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
            .sum::<f64>()
            / m
    }
}

fn aade(data: &Dataset, fit: &FitResult<f64>) -> f64 {
    let n = data.n();
    (0..n)
        .map(|i| (fit.g.centered_sum(i) - data.g_centered(i)).abs())
        .sum::<f64>()
        / n as f64
}

/// Means over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "FV")]
    pub fv: f64,
    #[serde(rename = "TV")]
    pub tv: f64,
    #[serde(rename = "True")]
    pub true_rate: f64,
    /// Share of replications selecting `X_1`.
    #[serde(rename = "P")]
    pub p_x1: f64,
    #[serde(rename = "AADE")]
    pub aade: f64,
    /// Mean `‖β̂ - β_0‖²`; for several levels this is the L2 error
    /// `M⁻¹ Σ_m ‖β̂^{(m)} - β_0^{(m)}‖²`.
    #[serde(rename = "MSE")]
    pub mse: f64,
    pub n_reps: usize,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "FV,TV,True,P,AADE,MSE";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.fv, self.tv, self.true_rate, self.p_x1, self.aade, self.mse
        )
    }
}

pub fn score(records: &[RepRecord]) -> MetricsReport {
    let r = records.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RepRecord) -> f64| records.iter().map(f).sum::<f64>() / r;
    MetricsReport {
        fv: mean(&|x| x.false_positives() as f64),
        tv: mean(&|x| x.true_positives() as f64),
        true_rate: mean(&|x| f64::from(u8::from(x.exact()))),
        p_x1: mean(&|x| f64::from(u8::from(x.selected.contains(&0)))),
        aade: mean(&|x| x.aade),
        mse: mean(&RepRecord::squared_error),
        n_reps: records.len(),
    }
}

/// Runs `f` on every replication index, in parallel, keeping index order.
pub fn replicate<R, F>(n_reps: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    (0..n_reps).into_par_iter().map(f).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub report: MetricsReport,
    pub records: Vec<RepRecord>,
}

/// Penalized single-level fits tuned by `config.criterion`.
pub fn run_single(config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    let records = replicate(config.n_reps, |rep| {
        let data = generate(config, rep)?;
        let spec = model_spec(&data, config)?;
        let path = fit_path(&spec, None, config.criterion, &config.path_options(rep))?;
        let fit = path.selected_fit();
        Ok(RepRecord {
            rep,
            selected: fit.active_set.clone(),
            support: data.support(config.tau),
            beta_hat: vec![fit.beta.clone()],
            beta_true: vec![data.true_beta(config.tau)],
            aade: aade(&data, fit),
            lambda: Some(path.selected_lambda()),
            kkt: fit.kkt_report.clone(),
            converged: fit.status == crate::fit::FitStatus::Converged,
        })
    })?;
    Ok(SimRun {
        report: score(&records),
        records,
    })
}

/// Oracle fits on the true support.
pub fn run_oracle(config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    let records = replicate(config.n_reps, |rep| {
        let data = generate(config, rep)?;
        let spec = model_spec(&data, config)?;
        let support = data.support(config.tau);
        let fit = fit_oracle(&spec, &support)?;
        Ok(RepRecord {
            rep,
            selected: fit.active_set.clone(),
            support,
            beta_hat: vec![fit.beta.clone()],
            beta_true: vec![data.true_beta(config.tau)],
            aade: aade(&data, &fit),
            lambda: None,
            kkt: None,
            converged: true,
        })
    })?;
    Ok(SimRun {
        report: score(&records),
        records,
    })
}

/// Group-penalized, separately tuned and oracle fits at several levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRun {
    pub taus: Vec<f64>,
    pub group: SimRun,
    /// Union of the separately selected sets.
    pub individual: SimRun,
    pub oracle: SimRun,
}

pub fn run_multi(config: &SimConfig, taus: &[f64]) -> Result<MultiRun> {
    config.validate()?;
    let triples = replicate(config.n_reps, |rep| {
        let data = generate(config, rep)?;
        let base = model_spec(&data, config)?;
        let spec = MultiTauSpec::from_spec(&base, taus.to_vec())?;
        let support = data.support(taus[0]);
        let truth: Vec<Vec<f64>> = taus.iter().map(|&t| data.true_beta(t)).collect();
        let mean_aade =
            |fits: &[&FitResult<f64>]| fits.iter().map(|f| aade(&data, f)).sum::<f64>() / fits.len() as f64;
        let record = |fits: Vec<&FitResult<f64>>, selected: Vec<usize>, lambda: Option<f64>| RepRecord {
            rep,
            selected,
            support: support.clone(),
            beta_hat: fits.iter().map(|f| f.beta.clone()).collect(),
            beta_true: truth.clone(),
            aade: mean_aade(&fits),
            lambda,
            kkt: None,
            converged: fits.iter().all(|f| f.status == crate::fit::FitStatus::Converged),
        };
        let opts = config.path_options(rep);
        let group = fit_group_path(&spec, None, &opts)?;
        let best = group.selected_fit();
        let g = record(best.fits.iter().collect(), best.active_set.clone(), Some(best.lambda));
        let paths = fit_independent_paths(&spec, Criterion::Qbic, &opts)?;
        let ind_fits: Vec<FitResult<f64>> = paths.iter().map(|p| p.selected_fit().clone()).collect();
        let ind = record(ind_fits.iter().collect(), union_selection(&ind_fits), None);
        let oracle_fits = fit_multi_oracle(&spec, &support)?;
        let ora = record(oracle_fits.iter().collect(), support.clone(), None);
        Ok((g, ind, ora))
    })?;
    let mut g = Vec::new();
    let mut i = Vec::new();
    let mut o = Vec::new();
    for (a, b, c) in triples {
        g.push(a);
        i.push(b);
        o.push(c);
    }
    let run = |records: Vec<RepRecord>| SimRun {
        report: score(&records),
        records,
    };
    Ok(MultiRun {
        taus: taus.to_vec(),
        group: run(g),
        individual: run(i),
        oracle: run(o),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// Mean `‖β̂_S - β_{0S}‖²` over the fitted set `S`.
    pub beta_mse: f64,
    /// Mean `n⁻¹ Σ_i (ĝ(z_i) - g_0(z_i))²`.
    pub g_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log beta_mse` on `log n`.
    pub slope: f64,
}

/// Oracle error against sample size. The oracle set is the true support plus
/// the first `extra_nulls` zero-coefficient columns.
pub fn rate_check(ns: &[usize], template: &SimConfig, extra_nulls: usize) -> Result<RateTable> {
    if ns.len() < 2 {
        return Err(Error::Config("rate check needs at least two sample sizes".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let config = SimConfig {
            n,
            ..template.clone()
        };
        config.validate()?;
        let errs = replicate(config.n_reps, |rep| {
            let data = generate(&config, rep)?;
            let spec = model_spec(&data, &config)?;
            let mut set = data.support(config.tau);
            let nulls: Vec<usize> = (0..data.p())
                .filter(|j| !set.contains(j))
                .take(extra_nulls)
                .collect();
            set.extend(nulls);
            let fit = fit_oracle(&spec, &set)?;
            let truth = data.true_beta(config.tau);
            let b: f64 = set.iter().map(|&j| (fit.beta[j] - truth[j]).powi(2)).sum();
            let g = (0..n)
                .map(|i| (fit.g.centered_sum(i) - data.g_centered(i)).powi(2))
                .sum::<f64>()
                / n as f64;
            Ok((b, g))
        })?;
        let r = errs.len() as f64;
        rows.push(RateRow {
            n,
            beta_mse: errs.iter().map(|e| e.0).sum::<f64>() / r,
            g_mse: errs.iter().map(|e| e.1).sum::<f64>() / r,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.beta_mse.ln()))
        .collect();
    Ok(RateTable {
        slope: ls_slope(&pts),
        rows,
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Fitted conditional quantiles at one level: `fitted[i]` is the fit at row `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub tau: f64,
    pub fitted: Vec<f64>,
}

impl LevelFit {
    pub fn from_fit(spec: &ModelSpec<f64>, fit: &FitResult<f64>) -> Self {
        Self {
            tau: fit.tau,
            fitted: (0..spec.n()).map(|i| spec.fitted(i, &fit.beta, &fit.xi)).collect(),
        }
    }
}

/// Tuned penalized fits at each level of `taus`, as inputs to the QQ
/// diagnostic.
pub fn fit_levels(
    spec: &ModelSpec<f64>,
    taus: &[f64],
    criterion: Criterion,
    opts: &PathOptions<f64>,
) -> Result<Vec<(LevelFit, FitResult<f64>)>> {
    taus.par_iter()
        .map(|&tau| {
            let s = spec.with_tau(tau)?;
            let path = fit_path(&s, None, criterion, opts)?;
            let fit = path.selected_fit().clone();
            Ok((LevelFit::from_fit(&s, &fit), fit))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqTable {
    /// Plotting positions `(k - 1/2) / K`, `K = min(n_draws, n_obs)`.
    pub probs: Vec<f64>,
    pub simulated: Vec<f64>,
    pub observed: Vec<f64>,
}

impl QqTable {
    /// Largest `|simulated - observed|` over positions in `[lo, hi]`.
    pub fn max_abs_deviation(&self, lo: f64, hi: f64) -> f64 {
        self.probs
            .iter()
            .zip(self.simulated.iter().zip(&self.observed))
            .filter(|(&p, _)| p >= lo && p <= hi)
            .map(|(_, (s, o))| (s - o).abs())
            .fold(0.0, f64::max)
    }
}

/// Draws `n_draws` responses: pick a row uniformly and `τ̃ ~ U(0, 1)`, snap
/// `τ̃` to the nearest fitted level (ties to the lower one) and return that
/// level's fitted value at the row.
pub fn simulate_responses(levels: &[LevelFit], n_draws: usize, seed: u64) -> Result<Vec<f64>> {
    let mut sorted: Vec<&LevelFit> = levels.iter().collect();
    sorted.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let rows = sorted.first().map_or(0, |l| l.fitted.len());
    if rows == 0 || sorted.iter().any(|l| l.fitted.len() != rows) {
        return Err(Error::Dimension("every level needs fitted values for the same rows".into()));
    }
    let taus: Vec<f64> = sorted.iter().map(|l| l.tau).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_draws)
        .map(|_| {
            let u: f64 = rng.gen();
            let row = rng.gen_range(0..rows);
            let k = taus.partition_point(|&t| t < u);
            let k = if k == 0 {
                0
            } else if k == taus.len() || u - taus[k - 1] <= taus[k] - u {
                k - 1
            } else {
                k
            };
            sorted[k].fitted[row]
        })
        .collect())
}

/// Simulated against observed response quantiles.
pub fn qq_diagnostic(levels: &[LevelFit], observed: &[f64], n_draws: usize, seed: u64) -> Result<QqTable> {
    if observed.is_empty() || n_draws == 0 {
        return Err(Error::Config("QQ diagnostic needs observations and at least one draw".into()));
    }
    let mut sim = simulate_responses(levels, n_draws, seed)?;
    sim.sort_by(f64::total_cmp);
    let mut obs = observed.to_vec();
    obs.sort_by(f64::total_cmp);
    let k = n_draws.min(obs.len());
    let probs: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
    Ok(QqTable {
        simulated: probs.iter().map(|&q| empirical_quantile(&sim, q)).collect(),
        observed: probs.iter().map(|&q| empirical_quantile(&obs, q)).collect(),
        probs,
    })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Interquartile range of a sample.
pub fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    empirical_quantile(&v, 0.75) - empirical_quantile(&v, 0.25)
}
