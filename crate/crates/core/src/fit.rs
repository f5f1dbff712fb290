//! Oracle and penalized estimators.
//!
//! The penalized fit runs local linear approximation: starting from `β = 0`,
//! each step minimises `n⁻¹ Σ ρ_τ(r_i) + Σ_j p'_λ(|β_j^{t-1}|) |β_j|`. Using
//! `|β_j| = ρ_τ(β_j) + ρ_τ(-β_j)`, the step is a single weighted quantile
//! regression on the data plus two pseudo-observations per penalized
//! coordinate, `(0, e_j)` and `(0, -e_j)`, each carrying weight
//! `n p'_λ(|β_j^{t-1}|)` against unit weights on the real rows.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::penalties::PenaltySpec;
use crate::spline_basis::{AdditiveDesign, CenteredComponents, SplineBasis};
use crate::wqr_solver::{check_loss, solve_wqr, SolveStatus, SolverOptions, WqrProblem};
use crate::{Error, Result, Scalar};

/// Pseudo-observations whose weight `p'_λ` falls below this are dropped.
const MIN_PSEUDO_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct ModelData<T: Scalar> {
    y: Vec<T>,
    x: Array2<T>,
    design: AdditiveDesign<T>,
}

/// Data, basis and penalty for one quantile level.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T: Scalar> {
    tau: T,
    penalty: PenaltySpec<T>,
    data: Arc<ModelData<T>>,
}

impl<T: Scalar> ModelSpec<T> {
    /// `x` is n x p (linear part), `z` is n x d with entries in `[0, 1]`.
    pub fn new(
        y: Vec<T>,
        x: Array2<T>,
        z: ArrayView2<T>,
        bases: &[SplineBasis<T>],
        tau: T,
        penalty: PenaltySpec<T>,
    ) -> Result<Self> {
        let design = AdditiveDesign::build(bases, z)?;
        Self::from_design(y, x, design, tau, penalty)
    }

    pub fn from_design(
        y: Vec<T>,
        x: Array2<T>,
        design: AdditiveDesign<T>,
        tau: T,
        penalty: PenaltySpec<T>,
    ) -> Result<Self> {
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::InvalidProblem(format!("tau must lie in (0, 1), got {tau}")));
        }
        let n = y.len();
        if x.nrows() != n || design.n_obs() != n {
            return Err(Error::Dimension(format!(
                "response has {n} rows, linear block {}, spline design {}",
                x.nrows(),
                design.n_obs()
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("response and covariates must be finite".into()));
        }
        Ok(Self {
            tau,
            penalty,
            data: Arc::new(ModelData { y, x, design }),
        })
    }

    pub fn with_tau(&self, tau: T) -> Result<Self> {
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::InvalidProblem(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(Self {
            tau,
            penalty: self.penalty,
            data: Arc::clone(&self.data),
        })
    }

    pub fn with_penalty(&self, penalty: PenaltySpec<T>) -> Self {
        Self {
            tau: self.tau,
            penalty,
            data: Arc::clone(&self.data),
        }
    }

    /// Restriction to a subset of observations (basis and knots unchanged).
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let d = &self.data;
        let y = rows.iter().map(|&i| d.y[i]).collect();
        let x = d.x.select(ndarray::Axis(0), rows);
        let design = d.design.select_rows(rows);
        Self::from_design(y, x, design, self.tau, self.penalty)
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn penalty(&self) -> &PenaltySpec<T> {
        &self.penalty
    }

    pub fn y(&self) -> &[T] {
        &self.data.y
    }

    pub fn x(&self) -> &Array2<T> {
        &self.data.x
    }

    pub fn design(&self) -> &AdditiveDesign<T> {
        &self.data.design
    }

    pub fn n(&self) -> usize {
        self.data.y.len()
    }

    /// Number of linear covariates `p_n`.
    pub fn p(&self) -> usize {
        self.data.x.ncols()
    }

    /// `x_i'β + Π(z_i)'ξ` for observation `i`.
    pub fn fitted(&self, i: usize, beta: &[T], xi: &[T]) -> T {
        let d = &self.data;
        let lin = d
            .x
            .row(i)
            .iter()
            .zip(beta)
            .fold(T::zero(), |s, (&a, &b)| s + a * b);
        let nonlin = d
            .design
            .matrix()
            .row(i)
            .iter()
            .zip(xi)
            .fold(T::zero(), |s, (&a, &b)| s + a * b);
        lin + nonlin
    }

    /// `Y_i - x_i'β - Π(z_i)'ξ` for every observation.
    pub fn residuals(&self, beta: &[T], xi: &[T]) -> Vec<T> {
        (0..self.n())
            .map(|i| self.data.y[i] - self.fitted(i, beta, xi))
            .collect()
    }

    /// Exact penalized objective `n⁻¹ Σ ρ_τ(r_i) + Σ_j p_λ(|β_j|)`.
    pub fn penalized_objective(&self, beta: &[T], xi: &[T]) -> T {
        let loss = self.check_loss_sum(&self.residuals(beta, xi));
        loss / T::of_usize(self.n())
            + beta.iter().map(|&b| self.penalty.penalty(b)).sum::<T>()
    }

    pub(crate) fn check_loss_sum(&self, residuals: &[T]) -> T {
        residuals.iter().map(|&r| check_loss(r, self.tau)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// LLA stopped at `max_lla_iters`; the last iterate is returned.
    MaxLlaIter,
    /// The final linear program hit its pivot cap.
    SolverMaxIter,
    /// The final linear program was rank deficient.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T: Scalar> {
    pub max_lla_iters: usize,
    pub lla_tol: T,
    pub solver: SolverOptions<T>,
    /// Starting basis for the first linear program, as stable row keys
    /// (see [`FitResult::basis_keys`]).
    pub warm_basis: Vec<usize>,
    /// LLA starting point; zero when `None`.
    pub init_beta: Option<Vec<T>>,
    pub compute_kkt: bool,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_lla_iters: 100,
            lla_tol: T::lla_tol(),
            solver: SolverOptions::default(),
            warm_basis: Vec::new(),
            init_beta: None,
            compute_kkt: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FitResult<T: Scalar> {
    pub tau: T,
    pub lambda: T,
    pub beta: Vec<T>,
    /// Spline coefficients, length `L_n`; the first column of each block is
    /// absorbed by the intercept and reported as zero.
    pub xi: Vec<T>,
    pub g: CenteredComponents<T>,
    pub residuals: Vec<T>,
    pub active_set: Vec<usize>,
    /// Exact penalized objective at the returned coefficients.
    pub objective: T,
    /// `Σ_i ρ_τ(r_i)` over the real observations.
    pub check_loss_sum: T,
    /// Real observations interpolated by the final linear program.
    pub interpolated: Vec<usize>,
    /// Subgradient certificate `ψ_i` for each real observation.
    pub scores: Vec<T>,
    pub lla_iterations: usize,
    /// Penalized objective at the start and after every LLA step.
    pub objective_trace: Vec<T>,
    pub status: FitStatus,
    /// Final basis as stable keys: `i` for observation `i`, `n + j` and
    /// `n + p + j` for the pseudo-observations of coordinate `j`.
    pub basis_keys: Vec<usize>,
    pub kkt_report: Option<KktReport<T>>,
}

impl<T: Scalar> FitResult<T> {
    /// Degrees of freedom used by QBIC: the number of interpolated fits.
    pub fn df(&self) -> usize {
        self.interpolated.len()
    }
}

// Output of one weighted solve, mapped back to model coordinates.
pub(crate) struct StepOutput<T: Scalar> {
    pub beta: Vec<T>,
    pub xi: Vec<T>,
    pub interpolated: Vec<usize>,
    pub scores: Vec<T>,
    pub basis_keys: Vec<usize>,
    pub status: SolveStatus,
}

/// How the penalty rows enter the weighted problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PseudoRows {
    /// `(0, e_j)` and `(0, -e_j)` at level `τ`, weight `n p'_j` each.
    Pair,
    /// The pair folded into one row `(0, e_j)` at level 1/2 with weight
    /// `2 n p'_j`. Same objective, since `ρ_τ(u) + ρ_τ(-u) = 2 ρ_{1/2}(u)`,
    /// but without the two zero residuals a pair has whenever `β_j = 0`,
    /// which would otherwise stall the simplex in degenerate pivots.
    Folded,
}

/// Augmented weighted problem for given per-coordinate weights `p'_λ`.
pub(crate) struct Augmented<T: Scalar> {
    pub problem: WqrProblem<T>,
    pub keys: Vec<usize>,
}

pub(crate) fn augmented_problem<T: Scalar>(
    spec: &ModelSpec<T>,
    linear_cols: &[usize],
    pen_weights: Option<&[T]>,
    layout: PseudoRows,
) -> Result<Augmented<T>> {
    let n = spec.n();
    let p = spec.p();
    let spline_cols = spec.design().identifiable_columns();
    let m = linear_cols.len() + spline_cols.len();
    let min_w = T::of(MIN_PSEUDO_WEIGHT);
    let pseudo: Vec<(usize, T)> = match pen_weights {
        Some(w) => linear_cols
            .iter()
            .enumerate()
            .filter(|&(_, &j)| w[j] >= min_w)
            .map(|(k, &j)| (k, w[j]))
            .collect(),
        None => Vec::new(),
    };
    let per = match layout {
        PseudoRows::Pair => 2,
        PseudoRows::Folded => 1,
    };
    let rows = n + per * pseudo.len();
    let mut u = Array2::zeros((rows, m));
    let x = spec.x();
    let pi = spec.design().matrix();
    for i in 0..n {
        for (k, &j) in linear_cols.iter().enumerate() {
            u[[i, k]] = x[[i, j]];
        }
        for (k, &c) in spline_cols.iter().enumerate() {
            u[[i, linear_cols.len() + k]] = pi[[i, c]];
        }
    }
    let mut y = spec.y().to_vec();
    y.resize(rows, T::zero());
    let mut w = vec![T::one(); rows];
    let mut keys: Vec<usize> = (0..n).collect();
    let nn = T::of_usize(n);
    let q = pseudo.len();
    for (s, &(k, wt)) in pseudo.iter().enumerate() {
        u[[n + s, k]] = T::one();
        w[n + s] = nn * wt;
        keys.push(n + linear_cols[k]);
    }
    if layout == PseudoRows::Pair {
        for (s, &(k, wt)) in pseudo.iter().enumerate() {
            u[[n + q + s, k]] = -T::one();
            w[n + q + s] = nn * wt;
            keys.push(n + p + linear_cols[k]);
        }
    }
    let mut problem = WqrProblem::new(y, u, w, spec.tau())?;
    if layout == PseudoRows::Folded && q > 0 {
        let half = T::of(0.5);
        let mut taus = vec![spec.tau(); n];
        taus.resize(rows, half);
        let w: Vec<T> = problem
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &v)| if i < n { v } else { v + v })
            .collect();
        problem = WqrProblem::new(problem.y().to_vec(), problem.design().clone(), w, spec.tau())?
            .with_row_taus(taus)?;
    }
    Ok(Augmented { problem, keys })
}

pub(crate) fn solve_step<T: Scalar>(
    spec: &ModelSpec<T>,
    linear_cols: &[usize],
    pen_weights: Option<&[T]>,
    warm_keys: &[usize],
    solver: &SolverOptions<T>,
) -> Result<StepOutput<T>> {
    let n = spec.n();
    let aug = augmented_problem(spec, linear_cols, pen_weights, PseudoRows::Folded)?;
    let mut index_of = std::collections::HashMap::with_capacity(aug.keys.len());
    for (row, &key) in aug.keys.iter().enumerate() {
        index_of.insert(key, row);
    }
    let mut opts = solver.clone();
    opts.warm_start = warm_keys.iter().filter_map(|k| index_of.get(k).copied()).collect();
    let sol = solve_wqr(&aug.problem, &opts);

    let mut beta = vec![T::zero(); spec.p()];
    for (k, &j) in linear_cols.iter().enumerate() {
        beta[j] = sol.theta[k];
    }
    let mut xi = vec![T::zero(); spec.design().l_n()];
    for (k, c) in spec.design().identifiable_columns().into_iter().enumerate() {
        xi[c] = sol.theta[linear_cols.len() + k];
    }
    Ok(StepOutput {
        beta,
        xi,
        interpolated: sol.interpolated.into_iter().filter(|&i| i < n).collect(),
        scores: sol.scores[..n].to_vec(),
        basis_keys: sol.basis.iter().map(|&r| aug.keys[r]).collect(),
        status: sol.status,
    })
}

pub(crate) fn finish<T: Scalar>(
    spec: &ModelSpec<T>,
    lambda: T,
    step: StepOutput<T>,
    lla_iterations: usize,
    objective_trace: Vec<T>,
    converged: bool,
    compute_kkt: bool,
) -> Result<FitResult<T>> {
    let residuals = spec.residuals(&step.beta, &step.xi);
    let g = spec.design().center_g(&step.xi)?;
    let active_set = (0..spec.p())
        .filter(|&j| step.beta[j] != T::zero())
        .collect();
    let status = match step.status {
        SolveStatus::MaxIter => FitStatus::SolverMaxIter,
        SolveStatus::Degenerate => FitStatus::Degenerate,
        SolveStatus::Optimal if !converged => FitStatus::MaxLlaIter,
        SolveStatus::Optimal => FitStatus::Converged,
    };
    let penalty = spec.penalty().with_lambda(lambda)?;
    let objective = spec.check_loss_sum(&residuals) / T::of_usize(spec.n())
        + step.beta.iter().map(|&b| penalty.penalty(b)).sum::<T>();
    let mut fit = FitResult {
        tau: spec.tau(),
        lambda,
        check_loss_sum: spec.check_loss_sum(&residuals),
        beta: step.beta,
        xi: step.xi,
        g,
        residuals,
        active_set,
        objective,
        interpolated: step.interpolated,
        scores: step.scores,
        lla_iterations,
        objective_trace,
        status,
        basis_keys: step.basis_keys,
        kkt_report: None,
    };
    if compute_kkt {
        fit.kkt_report = Some(kkt_check(spec, &fit, lambda));
    }
    Ok(fit)
}

/// Unpenalized fit on the linear columns in `active` plus the spline part.
pub fn fit_oracle<T: Scalar>(spec: &ModelSpec<T>, active: &[usize]) -> Result<FitResult<T>> {
    fit_oracle_with(spec, active, &FitOptions::default())
}

pub fn fit_oracle_with<T: Scalar>(
    spec: &ModelSpec<T>,
    active: &[usize],
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let mut cols = active.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if let Some(&j) = cols.iter().find(|&&j| j >= spec.p()) {
        return Err(Error::Dimension(format!(
            "active index {j} out of range for {} linear covariates",
            spec.p()
        )));
    }
    let step = solve_step(spec, &cols, None, &opts.warm_basis, &opts.solver)?;
    let objective = spec.penalized_objective(&step.beta, &step.xi);
    finish(
        spec,
        spec.penalty().lambda(),
        step,
        1,
        vec![objective],
        true,
        opts.compute_kkt,
    )
}

/// Penalized fit at `lambda` by local linear approximation.
pub fn fit_penalized<T: Scalar>(
    spec: &ModelSpec<T>,
    lambda: T,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let penalty = spec.penalty().with_lambda(lambda)?;
    let spec = spec.with_penalty(penalty);
    let p = spec.p();
    let cols: Vec<usize> = (0..p).collect();
    let mut beta_prev = match &opts.init_beta {
        Some(b) if b.len() == p => b.clone(),
        Some(b) => {
            return Err(Error::Dimension(format!(
                "initial beta has length {}, expected {p}",
                b.len()
            )))
        }
        None => vec![T::zero(); p],
    };
    let xi0 = vec![T::zero(); spec.design().l_n()];
    let mut trace = vec![spec.penalized_objective(&beta_prev, &xi0)];
    let mut warm = opts.warm_basis.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut last = None;
    while iterations < opts.max_lla_iters.max(1) {
        iterations += 1;
        let weights: Vec<T> = beta_prev
            .iter()
            .map(|&b| penalty.penalty_deriv(b.abs()))
            .collect();
        let step = solve_step(&spec, &cols, Some(&weights), &warm, &opts.solver)?;
        trace.push(spec.penalized_objective(&step.beta, &step.xi));
        let change: T = step
            .beta
            .iter()
            .zip(&beta_prev)
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        beta_prev.clone_from(&step.beta);
        warm.clone_from(&step.basis_keys);
        let stop = change < opts.lla_tol;
        last = Some(step);
        if stop {
            converged = true;
            break;
        }
    }
    let step = last.expect("at least one LLA step");
    finish(
        &spec,
        lambda,
        step,
        iterations,
        trace,
        converged,
        opts.compute_kkt,
    )
}

/// Evaluates the majorized LLA objective at `(beta, xi)` two ways: directly,
/// `n⁻¹ Σ ρ_τ(r_i) + Σ_j p'_λ(|β_prev_j|) |β_j|`, and as `n⁻¹` times the
/// weighted check loss of the augmented data set.
pub fn lla_step_objective_check<T: Scalar>(
    spec: &ModelSpec<T>,
    prev_beta: &[T],
    beta: &[T],
    xi: &[T],
) -> Result<(T, T)> {
    let n = T::of_usize(spec.n());
    let penalty = spec.penalty();
    let weights: Vec<T> = prev_beta
        .iter()
        .map(|&b| penalty.penalty_deriv(b.abs()))
        .collect();
    let direct = spec.check_loss_sum(&spec.residuals(beta, xi)) / n
        + weights
            .iter()
            .zip(beta)
            .map(|(&w, &b)| w * b.abs())
            .sum::<T>();
    let cols: Vec<usize> = (0..spec.p()).collect();
    let aug = augmented_problem(spec, &cols, Some(&weights), PseudoRows::Pair)?;
    let mut theta = beta.to_vec();
    for c in spec.design().identifiable_columns() {
        theta.push(xi[c]);
    }
    // columns absorbed by the intercept are folded into it exactly
    let absorbed: Vec<usize> = (0..spec.design().d())
        .map(|j| spec.design().block(j).start)
        .collect();
    if absorbed.iter().any(|&c| xi[c] != T::zero()) {
        return Err(Error::InvalidProblem(
            "xi must be zero on the columns absorbed by the intercept".into(),
        ));
    }
    let augmented = aug.problem.objective(&theta) / n;
    Ok((direct, augmented))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordKind {
    /// Nonzero linear coefficient.
    Active,
    /// Zero linear coefficient.
    Inactive,
    /// Spline coefficient (never penalized).
    Spline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KktCoordinate<T: Scalar> {
    pub index: usize,
    pub kind: CoordKind,
    /// Fitted coefficient.
    pub value: T,
    /// `s_j` evaluated with the solver's certificate `ψ`.
    pub s: T,
    /// Range of `s_j` when every zero-residual `ψ_i` is free in `[τ-1, τ]`.
    pub interval: (T, T),
    pub zero_in_interval: bool,
    /// `p'_λ(|β_j|)` for linear coordinates, zero for spline ones.
    pub weight: T,
    /// Violation of the stationarity condition for this coordinate.
    pub gap: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KktReport<T: Scalar> {
    pub lambda: T,
    pub linear: Vec<KktCoordinate<T>>,
    pub spline: Vec<KktCoordinate<T>>,
    /// `max |s_j| / λ` over inactive coordinates.
    pub max_inactive_ratio: T,
    /// Linear indices whose gap exceeds `tol`.
    pub violations: Vec<usize>,
    pub tol: T,
}

impl<T: Scalar> KktReport<T> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.spline.iter().all(|c| c.zero_in_interval)
    }

    /// Necessary conditions for a local minimiser that do not depend on the
    /// concave part: `0` lies in the subgradient interval of every coordinate
    /// with `|β_j| > aλ`, and `|s_j| <= λ + tol` on every zero coordinate.
    pub fn local_conditions_hold(&self, a: T, tol: T) -> bool {
        let flat = a * self.lambda;
        self.linear.iter().all(|c| match c.kind {
            CoordKind::Active if c.value.abs() > flat => c.zero_in_interval,
            CoordKind::Inactive => c.s.abs() <= self.lambda + tol,
            _ => true,
        })
    }
}

/// Subgradient conditions for a local minimiser of the penalized objective:
/// on nonzero coordinates `s_j = -p'_λ(|β_j|) sgn(β_j)`, on zero coordinates
/// `|s_j| <= λ`, and `s_j = 0` on every spline coordinate, where
/// `s_j = -n⁻¹ Σ_i x_ij ψ_i`.
pub fn kkt_check<T: Scalar>(spec: &ModelSpec<T>, fit: &FitResult<T>, lambda: T) -> KktReport<T> {
    let n = spec.n();
    let nn = T::of_usize(n);
    let tau = spec.tau();
    let penalty = spec
        .penalty()
        .with_lambda(lambda)
        .unwrap_or(*spec.penalty());
    let zero: Vec<bool> = (0..n)
        .map(|i| fit.residuals[i].abs() <= T::zero_tol() * (T::one() + spec.y()[i].abs()))
        .collect();
    let tol = T::of(1e-6) * (T::one() + lambda);
    let column = |values: &mut dyn FnMut(usize) -> T| {
        let mut s = T::zero();
        let mut lo = T::zero();
        let mut hi = T::zero();
        for i in 0..n {
            let v = values(i);
            if v == T::zero() {
                continue;
            }
            s -= v * fit.scores[i];
            if zero[i] {
                let a = -v * tau;
                let b = -v * (tau - T::one());
                lo += a.min(b);
                hi += a.max(b);
            } else {
                let psi = if fit.residuals[i] < T::zero() {
                    tau - T::one()
                } else {
                    tau
                };
                lo -= v * psi;
                hi -= v * psi;
            }
        }
        (s / nn, (lo / nn, hi / nn))
    };
    let x = spec.x();
    let mut linear = Vec::with_capacity(spec.p());
    let mut violations = Vec::new();
    let mut max_ratio = T::zero();
    for j in 0..spec.p() {
        let (s, interval) = column(&mut |i| x[[i, j]]);
        let b = fit.beta[j];
        let weight = penalty.penalty_deriv(b.abs());
        let (kind, gap) = if b != T::zero() {
            (CoordKind::Active, (s + weight * b.signum()).abs())
        } else {
            if lambda > T::zero() {
                max_ratio = max_ratio.max(s.abs() / lambda);
            }
            (CoordKind::Inactive, (s.abs() - weight).max(T::zero()))
        };
        if gap > tol {
            violations.push(j);
        }
        linear.push(KktCoordinate {
            index: j,
            kind,
            value: b,
            s,
            zero_in_interval: interval.0 <= tol && interval.1 >= -tol,
            interval,
            weight,
            gap,
        });
    }
    let pi = spec.design().matrix();
    let spline = (0..spec.design().l_n())
        .map(|c| {
            let (s, interval) = column(&mut |i| pi[[i, c]]);
            KktCoordinate {
                index: c,
                kind: CoordKind::Spline,
                value: fit.xi[c],
                s,
                zero_in_interval: interval.0 <= tol && interval.1 >= -tol,
                interval,
                weight: T::zero(),
                gap: s.abs(),
            }
        })
        .collect();
    KktReport {
        lambda,
        linear,
        spline,
        max_inactive_ratio: max_ratio,
        violations,
        tol,
    }
}
