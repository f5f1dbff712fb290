//! Joint fits at several quantile levels sharing one sparsity pattern.
//!
//! The group penalty `Σ_j p_λ(Σ_m |β_j^{(m)}|)` ties each covariate's
//! coefficients across levels. Its LLA majorizer is separable in `m` with the
//! shared weight `p'_λ(Σ_m |β_j^{(m)}|)`, so each step is one augmented solve
//! per level.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::fit::{finish, fit_oracle_with, solve_step, FitOptions, FitResult, FitStatus, ModelSpec};
use crate::penalties::PenaltySpec;
use crate::spline_basis::SplineBasis;
use crate::tuning::{argmin_score, lambda_max, log_grid, qbic, Criterion, LambdaPath, PathOptions};
use crate::tuning::fit_path;
use crate::{Error, Result, Scalar};

/// One data set fitted at increasing quantile levels `τ_1 < ... < τ_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTauSpec<T: Scalar> {
    taus: Vec<T>,
    specs: Vec<ModelSpec<T>>,
}

impl<T: Scalar> MultiTauSpec<T> {
    pub fn new(
        y: Vec<T>,
        x: Array2<T>,
        z: ArrayView2<T>,
        bases: &[SplineBasis<T>],
        taus: Vec<T>,
        penalty: PenaltySpec<T>,
    ) -> Result<Self> {
        let first = *taus
            .first()
            .ok_or_else(|| Error::Config("at least one quantile level is required".into()))?;
        let base = ModelSpec::new(y, x, z, bases, first, penalty)?;
        Self::from_spec(&base, taus)
    }

    /// Reuses the data of `base` at each level in `taus`.
    pub fn from_spec(base: &ModelSpec<T>, taus: Vec<T>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::Config("at least one quantile level is required".into()));
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("quantile levels must be strictly increasing".into()));
        }
        let specs = taus
            .iter()
            .map(|&t| base.with_tau(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { taus, specs })
    }

    pub fn taus(&self) -> &[T] {
        &self.taus
    }

    pub fn specs(&self) -> &[ModelSpec<T>] {
        &self.specs
    }

    pub fn n(&self) -> usize {
        self.specs[0].n()
    }

    pub fn p(&self) -> usize {
        self.specs[0].p()
    }

    pub fn penalty(&self) -> &PenaltySpec<T> {
        self.specs[0].penalty()
    }

    /// `n⁻¹ Σ_m Σ_i ρ_{τ_m}(r_i^{(m)}) + Σ_j p_λ(Σ_m |β_j^{(m)}|)`.
    pub fn group_objective(&self, betas: &[Vec<T>], xis: &[Vec<T>], lambda: T) -> Result<T> {
        let penalty = self.penalty().with_lambda(lambda)?;
        let nn = T::of_usize(self.n());
        let loss: T = self
            .specs
            .iter()
            .zip(betas.iter().zip(xis))
            .map(|(s, (b, x))| s.check_loss_sum(&s.residuals(b, x)))
            .sum();
        let pen: T = group_norms(betas, self.p())
            .into_iter()
            .map(|g| penalty.penalty(g))
            .sum();
        Ok(loss / nn + pen)
    }
}

fn group_norms<T: Scalar>(betas: &[Vec<T>], p: usize) -> Vec<T> {
    (0..p)
        .map(|j| betas.iter().map(|b| b[j].abs()).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MultiFitResult<T: Scalar> {
    pub taus: Vec<T>,
    pub lambda: T,
    /// Per-level fits at the final coefficients.
    pub fits: Vec<FitResult<T>>,
    /// `Σ_m |β_j^{(m)}|`.
    pub group_norms: Vec<T>,
    /// Covariates with a nonzero coefficient at any level.
    pub active_set: Vec<usize>,
    /// Group-penalized objective at the returned coefficients.
    pub objective: T,
    pub objective_trace: Vec<T>,
    pub lla_iterations: usize,
    pub status: FitStatus,
}

impl<T: Scalar> MultiFitResult<T> {
    pub fn check_loss_sum(&self) -> T {
        self.fits.iter().map(|f| f.check_loss_sum).sum()
    }

    pub fn df(&self) -> usize {
        self.fits.iter().map(FitResult::df).sum()
    }
}

/// Group-penalized fit at `lambda` by local linear approximation.
pub fn fit_group_penalized<T: Scalar>(
    spec: &MultiTauSpec<T>,
    lambda: T,
    opts: &FitOptions<T>,
) -> Result<MultiFitResult<T>> {
    let warm = vec![opts.warm_basis.clone(); spec.taus.len()];
    group_fit(spec, lambda, opts, warm)
}

fn group_fit<T: Scalar>(
    spec: &MultiTauSpec<T>,
    lambda: T,
    opts: &FitOptions<T>,
    mut warm: Vec<Vec<usize>>,
) -> Result<MultiFitResult<T>> {
    let penalty = spec.penalty().with_lambda(lambda)?;
    let p = spec.p();
    let levels = spec.taus.len();
    let cols: Vec<usize> = (0..p).collect();
    let l_n = spec.specs[0].design().l_n();
    let mut betas = vec![vec![T::zero(); p]; levels];
    let mut xis = vec![vec![T::zero(); l_n]; levels];
    let mut trace = vec![spec.group_objective(&betas, &xis, lambda)?];
    let mut iterations = 0;
    let mut converged = false;
    let mut steps = Vec::new();
    while iterations < opts.max_lla_iters.max(1) {
        iterations += 1;
        let weights: Vec<T> = group_norms(&betas, p)
            .into_iter()
            .map(|g| penalty.penalty_deriv(g))
            .collect();
        steps = spec
            .specs
            .iter()
            .zip(&warm)
            .map(|(s, w)| solve_step(s, &cols, Some(&weights), w, &opts.solver))
            .collect::<Result<Vec<_>>>()?;
        let mut change = T::zero();
        for (m, step) in steps.iter().enumerate() {
            for j in 0..p {
                change += (step.beta[j] - betas[m][j]).abs();
            }
            betas[m].clone_from(&step.beta);
            xis[m].clone_from(&step.xi);
            warm[m].clone_from(&step.basis_keys);
        }
        trace.push(spec.group_objective(&betas, &xis, lambda)?);
        if change < opts.lla_tol {
            converged = true;
            break;
        }
    }
    let fits = spec
        .specs
        .iter()
        .zip(steps)
        .map(|(s, step)| {
            let objective = trace[trace.len() - 1];
            finish(s, lambda, step, iterations, vec![objective], converged, false)
        })
        .collect::<Result<Vec<_>>>()?;
    let norms = group_norms(&betas, p);
    let active_set = (0..p).filter(|&j| norms[j] != T::zero()).collect();
    let status = fits
        .iter()
        .map(|f| f.status)
        .find(|&s| s != FitStatus::Converged)
        .unwrap_or(FitStatus::Converged);
    Ok(MultiFitResult {
        taus: spec.taus.clone(),
        lambda,
        fits,
        group_norms: norms,
        active_set,
        objective: trace[trace.len() - 1],
        objective_trace: trace,
        lla_iterations: iterations,
        status,
    })
}

/// Unpenalized fits on `active` at every level.
pub fn fit_multi_oracle<T: Scalar>(
    spec: &MultiTauSpec<T>,
    active: &[usize],
) -> Result<Vec<FitResult<T>>> {
    spec.specs
        .iter()
        .map(|s| fit_oracle_with(s, active, &FitOptions::default()))
        .collect()
}

/// Covariates selected at any level.
pub fn union_selection<T: Scalar>(fits: &[FitResult<T>]) -> Vec<usize> {
    let mut all: Vec<usize> = fits.iter().flat_map(|f| f.active_set.iter().copied()).collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Separate single-level paths, one per `τ_m`, each tuned on its own.
pub fn fit_independent_paths<T: Scalar>(
    spec: &MultiTauSpec<T>,
    criterion: Criterion,
    opts: &PathOptions<T>,
) -> Result<Vec<LambdaPath<T>>> {
    spec.specs
        .iter()
        .map(|s| fit_path(s, None, criterion, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GroupPath<T: Scalar> {
    pub lambdas: Vec<T>,
    pub fits: Vec<MultiFitResult<T>>,
    /// `log Σ_m Σ_i ρ_{τ_m}(r_i) + ν log(p) log(log n) / (2n)` with `ν` the
    /// interpolation count summed over levels.
    pub scores: Vec<T>,
    pub selected: usize,
}

impl<T: Scalar> GroupPath<T> {
    pub fn selected_fit(&self) -> &MultiFitResult<T> {
        &self.fits[self.selected]
    }
}

/// Group-penalized fits along `grid` (or an automatic grid topped by the
/// largest single-level `λ_max`), selected by the summed QBIC.
pub fn fit_group_path<T: Scalar>(
    spec: &MultiTauSpec<T>,
    grid: Option<Vec<T>>,
    opts: &PathOptions<T>,
) -> Result<GroupPath<T>> {
    let mut lambdas = match grid {
        Some(g) => g,
        None => {
            let mut top = T::zero();
            for s in &spec.specs {
                top = top.max(lambda_max(s)?);
            }
            log_grid(top, opts.n_lambda, opts.lambda_min_ratio)?
        }
    };
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Config("lambda grid must be nonempty and decreasing".into()));
    }
    let mut warm = vec![opts.fit.warm_basis.clone(); spec.taus.len()];
    let mut fits = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let fit = group_fit(spec, lambda, &opts.fit, warm.clone())?;
        warm = fit.fits.iter().map(|f| f.basis_keys.clone()).collect();
        let stop = opts
            .max_active
            .is_some_and(|cap| fit.active_set.len() > cap);
        fits.push(fit);
        if stop {
            break;
        }
    }
    lambdas.truncate(fits.len());
    let scores: Vec<T> = fits
        .iter()
        .map(|f| {
            if f.status == FitStatus::Degenerate {
                T::infinity()
            } else {
                qbic(f.check_loss_sum(), f.df(), spec.p(), spec.n())
            }
        })
        .collect();
    let selected = argmin_score(&scores)?;
    Ok(GroupPath {
        lambdas,
        fits,
        scores,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_penalized;
    use crate::spline_basis::KnotRule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(n: usize, p: usize, taus: Vec<f64>, seed: u64) -> MultiTauSpec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Array2<f64> = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
        let z: Array2<f64> = Array2::from_shape_fn((n, 1), |_| rng.gen_range(0.0..1.0));
        let y = (0..n)
            .map(|i| x[[i, 0]] - 0.8 * x[[i, 2]] + z[[i, 0]] + 0.3 * rng.gen_range(-1.0..1.0f64))
            .collect();
        let basis = SplineBasis::new(2, 1, KnotRule::Uniform, None).unwrap();
        MultiTauSpec::new(y, x, z.view(), &[basis], taus, PenaltySpec::scad(0.1).unwrap()).unwrap()
    }

    #[test]
    fn rejects_unsorted_levels() {
        let s = spec(20, 3, vec![0.5], 0);
        assert!(MultiTauSpec::from_spec(&s.specs[0], vec![0.5, 0.3]).is_err());
        assert!(MultiTauSpec::from_spec(&s.specs[0], vec![]).is_err());
    }

    #[test]
    fn single_level_group_fit_is_the_ordinary_fit() {
        let s = spec(60, 6, vec![0.4], 1);
        let g = fit_group_penalized(&s, 0.05, &FitOptions::default()).unwrap();
        let f = fit_penalized(&s.specs[0], 0.05, &FitOptions::default()).unwrap();
        assert_eq!(g.active_set, f.active_set);
        assert!((g.objective - f.objective).abs() < 1e-9);
    }

    #[test]
    fn group_objective_decreases() {
        let s = spec(60, 8, vec![0.25, 0.5, 0.75], 2);
        let g = fit_group_penalized(&s, 0.05, &FitOptions::default()).unwrap();
        for w in g.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", g.objective_trace);
        }
        assert_eq!(g.status, FitStatus::Converged);
    }

    #[test]
    fn group_selection_is_shared() {
        let s = spec(80, 10, vec![0.3, 0.5, 0.7], 3);
        let mut opts = PathOptions::default();
        opts.n_lambda = 15;
        let path = fit_group_path(&s, None, &opts).unwrap();
        let best = path.selected_fit();
        assert!(best.active_set.contains(&0) && best.active_set.contains(&2));
        for f in &best.fits {
            assert_eq!(f.active_set, best.active_set);
        }
    }

    #[test]
    fn union_collects_levels() {
        let s = spec(40, 4, vec![0.3, 0.7], 4);
        let fits = fit_multi_oracle(&s, &[1, 3]).unwrap();
        assert_eq!(union_selection(&fits), vec![1, 3]);
        let mut a = fits[0].clone();
        a.active_set = vec![0];
        assert_eq!(union_selection(&[a, fits[1].clone()]), vec![0, 1, 3]);
    }
}
