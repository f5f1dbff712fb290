//! Tuning-parameter selection along a decreasing λ path.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit::{fit_oracle_with, fit_penalized, FitOptions, FitResult, FitStatus, ModelSpec};
use crate::wqr_solver::check_loss;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Qbic,
    Cv,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qbic" => Ok(Self::Qbic),
            "cv" => Ok(Self::Cv),
            other => Err(Error::Config(format!("unknown criterion '{other}'"))),
        }
    }
}

/// `log Σ ρ_τ(r_i) + ν log(p) log(log n) / (2n)`, with `ν` the number of
/// interpolated observations. A perfect fit scores `-∞`.
pub fn qbic<T: Scalar>(check_loss_sum: T, df: usize, p: usize, n: usize) -> T {
    let nf = T::of_usize(n);
    let pf = T::of_usize(p.max(1));
    check_loss_sum.ln() + T::of_usize(df) * pf.ln() * nf.ln().ln() / (T::of(2.0) * nf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOptions<T: Scalar> {
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of `λ_max`.
    pub lambda_min_ratio: T,
    pub folds: usize,
    pub seed: u64,
    pub fit: FitOptions<T>,
    /// Also count interpolated observations of the unpenalized refit on each
    /// active set.
    pub refit_df: bool,
    /// Stop the path after the first fit with more active covariates.
    pub max_active: Option<usize>,
}

impl<T: Scalar> Default for PathOptions<T> {
    fn default() -> Self {
        Self {
            n_lambda: 50,
            lambda_min_ratio: T::of(0.01),
            folds: 5,
            seed: 0,
            fit: FitOptions::default(),
            refit_df: false,
            max_active: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LambdaPath<T: Scalar> {
    pub criterion: Criterion,
    /// Decreasing.
    pub lambdas: Vec<T>,
    pub fits: Vec<FitResult<T>>,
    /// Criterion value per λ; `+∞` marks an excluded fit.
    pub scores: Vec<T>,
    pub selected: usize,
    /// Interpolated counts of the unpenalized refits, when requested.
    pub refit_df: Option<Vec<usize>>,
}

impl<T: Scalar> LambdaPath<T> {
    pub fn selected_fit(&self) -> &FitResult<T> {
        &self.fits[self.selected]
    }

    pub fn selected_lambda(&self) -> T {
        self.lambdas[self.selected]
    }
}

/// `max_j |s_j|` at the fit without linear covariates: the smallest λ at
/// which the first LLA step keeps every coefficient at zero.
pub fn lambda_max<T: Scalar>(spec: &ModelSpec<T>) -> Result<T> {
    let opts = FitOptions {
        compute_kkt: false,
        ..FitOptions::default()
    };
    let null = fit_oracle_with(spec, &[], &opts)?;
    if null.check_loss_sum == T::zero() {
        return Ok(T::zero());
    }
    let nn = T::of_usize(spec.n());
    let x = spec.x();
    let mut best = T::zero();
    for j in 0..spec.p() {
        let s: T = (0..spec.n()).map(|i| x[[i, j]] * null.scores[i]).sum();
        best = best.max((s / nn).abs());
    }
    Ok(best)
}

/// Log-spaced grid from `λ_max` down to `ratio λ_max`.
pub fn log_grid<T: Scalar>(lambda_max: T, n_lambda: usize, ratio: T) -> Result<Vec<T>> {
    if !(lambda_max > T::zero()) || !lambda_max.is_finite() {
        return Err(Error::DegeneratePath(format!(
            "lambda_max = {lambda_max}: the null model already fits exactly"
        )));
    }
    if n_lambda == 0 || !(ratio > T::zero() && ratio < T::one()) {
        return Err(Error::Config("grid needs n_lambda >= 1 and ratio in (0, 1)".into()));
    }
    if n_lambda == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ratio.ln() / T::of_usize(n_lambda - 1);
    Ok((0..n_lambda)
        .map(|k| lambda_max * (step * T::of_usize(k)).exp())
        .collect())
}

/// Default grid for `spec`: `n_lambda` log-spaced values down to
/// `lambda_min_ratio λ_max`. The top point sits a hair above `λ_max`: at
/// exactly `λ_max` the optimum need not be unique and a vertex solver may
/// return a nonzero coefficient.
pub fn auto_grid<T: Scalar>(spec: &ModelSpec<T>, opts: &PathOptions<T>) -> Result<Vec<T>> {
    let nudge = T::of(1e-6).max(T::epsilon() * T::of(8.0));
    let top = lambda_max(spec)? * (T::one() + nudge);
    log_grid(top, opts.n_lambda, opts.lambda_min_ratio)
}

fn check_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|l| !(*l >= T::zero()) || !l.is_finite()) {
        return Err(Error::Config("lambda grid must be nonempty, finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Config("lambda grid must be decreasing".into()));
    }
    Ok(())
}

/// Fits along a decreasing grid, warm-starting each solve from the previous
/// λ's final basis. LLA restarts from zero at every λ.
pub(crate) fn path_fits<T: Scalar>(
    spec: &ModelSpec<T>,
    grid: &[T],
    fit_opts: &FitOptions<T>,
    max_active: Option<usize>,
) -> Result<Vec<FitResult<T>>> {
    let mut opts = fit_opts.clone();
    let mut fits = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let fit = fit_penalized(spec, lambda, &opts)?;
        opts.warm_basis.clone_from(&fit.basis_keys);
        let stop = max_active.is_some_and(|cap| fit.active_set.len() > cap);
        fits.push(fit);
        if stop {
            break;
        }
    }
    Ok(fits)
}

/// Index of the smallest finite score; ties go to the larger λ.
pub(crate) fn argmin_score<T: Scalar>(scores: &[T]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (k, &s) in scores.iter().enumerate() {
        if s.is_nan() || s == T::infinity() {
            continue;
        }
        if best.is_none_or(|b| s < scores[b]) {
            best = Some(k);
        }
    }
    best.ok_or_else(|| Error::DegeneratePath("no fit on the path has a finite score".into()))
}

fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|f| {
            let lo = f * n / folds;
            let hi = (f + 1) * n / folds;
            let mut rows = order[lo..hi].to_vec();
            rows.sort_unstable();
            rows
        })
        .collect()
}

/// Held-out check loss summed over `folds` random folds, one value per λ.
pub fn cv_scores<T: Scalar>(
    spec: &ModelSpec<T>,
    grid: &[T],
    opts: &PathOptions<T>,
) -> Result<Vec<T>> {
    let n = spec.n();
    if opts.folds < 2 || opts.folds > n {
        return Err(Error::Config(format!("cannot split {n} rows into {} folds", opts.folds)));
    }
    let folds = fold_assignment(n, opts.folds, opts.seed);
    let mut fit_opts = opts.fit.clone();
    fit_opts.compute_kkt = false;
    let per_fold: Vec<Result<Vec<T>>> = folds
        .par_iter()
        .map(|test| {
            let mut in_test = vec![false; n];
            for &i in test {
                in_test[i] = true;
            }
            let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let fits = path_fits(&spec.subset(&train)?, grid, &fit_opts, None)?;
            Ok(fits
                .iter()
                .map(|fit| {
                    if fit.status == FitStatus::Degenerate {
                        return T::infinity();
                    }
                    test.iter()
                        .map(|&i| check_loss(spec.y()[i] - spec.fitted(i, &fit.beta, &fit.xi), spec.tau()))
                        .sum()
                })
                .collect())
        })
        .collect();
    let mut total = vec![T::zero(); grid.len()];
    for fold in per_fold {
        for (t, v) in total.iter_mut().zip(fold?) {
            *t += v;
        }
    }
    Ok(total)
}

/// Penalized fits over `grid` (or the automatic grid) and the λ minimising
/// `criterion`.
pub fn fit_path<T: Scalar>(
    spec: &ModelSpec<T>,
    grid: Option<Vec<T>>,
    criterion: Criterion,
    opts: &PathOptions<T>,
) -> Result<LambdaPath<T>> {
    let mut lambdas = match grid {
        Some(g) => g,
        None => auto_grid(spec, opts)?,
    };
    check_grid(&lambdas)?;
    let fits = path_fits(spec, &lambdas, &opts.fit, opts.max_active)?;
    lambdas.truncate(fits.len());
    let refit_df = if opts.refit_df {
        let mut o = opts.fit.clone();
        o.compute_kkt = false;
        Some(
            fits.iter()
                .map(|f| fit_oracle_with(spec, &f.active_set, &o).map(|r| r.df()))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let scores = match criterion {
        Criterion::Qbic => fits
            .iter()
            .map(|f| {
                if f.status == FitStatus::Degenerate {
                    T::infinity()
                } else {
                    qbic(f.check_loss_sum, f.df(), spec.p(), spec.n())
                }
            })
            .collect(),
        Criterion::Cv => cv_scores(spec, &lambdas, opts)?,
    };
    let selected = argmin_score(&scores)?;
    Ok(LambdaPath {
        criterion,
        lambdas,
        fits,
        scores,
        selected,
        refit_df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalties::PenaltySpec;
    use crate::spline_basis::{KnotRule, SplineBasis};
    use ndarray::Array2;
    use rand::Rng;

    fn sparse_spec(n: usize, p: usize, seed: u64) -> ModelSpec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Array2<f64> = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
        let z: Array2<f64> = Array2::from_shape_fn((n, 1), |_| rng.gen_range(0.0..1.0));
        let y = (0..n)
            .map(|i| 1.5 * x[[i, 0]] - x[[i, 1]] + z[[i, 0]].powi(2) + 0.2 * rng.gen_range(-1.0..1.0f64))
            .collect();
        let basis = SplineBasis::new(3, 0, KnotRule::Uniform, None).unwrap();
        ModelSpec::new(y, x, z.view(), &[basis], 0.5, PenaltySpec::scad(0.1).unwrap()).unwrap()
    }

    #[test]
    fn qbic_reference_values() {
        let v: f64 = qbic(10.0, 5, 100, 300);
        let expect = 10f64.ln() + 5.0 * 100f64.ln() * 300f64.ln().ln() / 600.0;
        assert!((v - expect).abs() < 1e-14);
        assert_eq!(qbic(0.0f64, 3, 10, 50), f64::NEG_INFINITY);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(2.0f64, 5, 0.01).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-15 && (g[4] - 0.02).abs() < 1e-14);
        for w in g.windows(3) {
            assert!((w[0] / w[1] - w[1] / w[2]).abs() < 1e-12);
        }
        assert!(log_grid(0.0f64, 5, 0.01).is_err());
    }

    #[test]
    fn ties_go_to_larger_lambda_and_nonfinite_is_skipped() {
        assert_eq!(argmin_score(&[3.0, 1.0, 1.0, 2.0]).unwrap(), 1);
        assert_eq!(argmin_score(&[f64::NAN, f64::INFINITY, 4.0]).unwrap(), 2);
        assert_eq!(argmin_score(&[f64::NEG_INFINITY, -1.0]).unwrap(), 0);
        assert!(argmin_score(&[f64::INFINITY, f64::NAN]).is_err());
    }

    #[test]
    fn lambda_max_zeroes_everything() {
        let spec = sparse_spec(60, 6, 1);
        let lmax = lambda_max(&spec).unwrap();
        let fit = fit_penalized(&spec, lmax * 1.0001, &FitOptions::default()).unwrap();
        assert!(fit.active_set.is_empty());
        let fit = fit_penalized(&spec, lmax * 0.9, &FitOptions::default()).unwrap();
        assert!(!fit.active_set.is_empty());
    }

    #[test]
    fn constant_response_grid_is_flagged() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i + j) as f64);
        let z = Array2::<f64>::zeros((10, 0));
        let spec =
            ModelSpec::new(vec![1.0; 10], x, z.view(), &[], 0.5, PenaltySpec::scad(0.1).unwrap())
                .unwrap();
        assert!(matches!(
            auto_grid(&spec, &PathOptions::default()),
            Err(Error::DegeneratePath(_))
        ));
    }

    #[test]
    fn qbic_path_recovers_support() {
        let spec = sparse_spec(200, 60, 2);
        let mut opts = PathOptions::default();
        opts.n_lambda = 10;
        opts.refit_df = true;
        let path = fit_path(&spec, None, Criterion::Qbic, &opts).unwrap();
        assert_eq!(path.selected_fit().active_set, vec![0, 1]);
        assert_eq!(path.refit_df.as_ref().unwrap().len(), 10);
        assert!(path.fits[0].active_set.is_empty());
    }

    #[test]
    fn cv_is_reproducible() {
        let spec = sparse_spec(80, 5, 3);
        let mut opts = PathOptions::default();
        opts.n_lambda = 8;
        opts.seed = 7;
        let a = fit_path(&spec, None, Criterion::Cv, &opts).unwrap();
        let b = fit_path(&spec, None, Criterion::Cv, &opts).unwrap();
        assert_eq!(a.scores, b.scores);
        assert!(a.selected_fit().active_set.contains(&0));
    }

    #[test]
    fn folds_partition_rows() {
        let folds = fold_assignment(23, 5, 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
    }

    #[test]
    fn active_cap_truncates_path() {
        let spec = sparse_spec(100, 20, 4);
        let mut opts = PathOptions::default();
        opts.n_lambda = 30;
        opts.max_active = Some(5);
        let path = fit_path(&spec, None, Criterion::Qbic, &opts).unwrap();
        assert_eq!(path.lambdas.len(), path.fits.len());
        assert!(path.fits.len() < 30);
        assert!(path.fits.last().unwrap().active_set.len() > 5);
        assert!(path.fits[..path.fits.len() - 1].iter().all(|f| f.active_set.len() <= 5));
    }
}
