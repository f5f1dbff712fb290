//! Exact minimisation of weighted check-loss objectives
//! `Σ_i w_i ρ_τ(y_i - u_i'θ)`.
//!
//! The problem is the linear program
//! `min Σ w_i (τ a_i + (1 - τ) b_i)` s.t. `y - Uθ = a - b`, `a, b >= 0`.
//! Its vertices are the fits that interpolate `m` observations, so the solver
//! walks from vertex to vertex: a basis is a set of `m` interpolated rows,
//! an edge releases one of them above or below the fit, and the step length
//! along the edge is found by a weighted-median scan over the residual sign
//! changes it causes (several bound flips per pivot). Pricing is Dantzig's
//! most negative reduced cost; after a run of zero-length steps the solver
//! switches to Bland's lowest-index rule.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result, Scalar};

/// `ρ_τ(u) = u (τ - 1{u < 0})`.
#[inline]
pub fn check_loss<T: Scalar>(u: T, tau: T) -> T {
    if u < T::zero() {
        u * (tau - T::one())
    } else {
        u * tau
    }
}

/// One weighted quantile-regression instance.
#[derive(Debug, Clone, PartialEq)]
pub struct WqrProblem<T: Scalar> {
    y: Vec<T>,
    u: Array2<T>,
    w: Vec<T>,
    tau: T,
    // per-row quantile levels overriding `tau`
    row_tau: Option<Vec<T>>,
}

impl<T: Scalar> WqrProblem<T> {
    pub fn new(y: Vec<T>, u: Array2<T>, w: Vec<T>, tau: T) -> Result<Self> {
        let (n, m) = u.dim();
        if y.len() != n || w.len() != n {
            return Err(Error::Dimension(format!(
                "design has {n} rows, response {} and weights {}",
                y.len(),
                w.len()
            )));
        }
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::InvalidProblem(format!("tau must lie in (0, 1), got {tau}")));
        }
        if w.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidProblem("weights must be finite and nonnegative".into()));
        }
        if y.iter().chain(u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("response and design must be finite".into()));
        }
        let positive = w.iter().filter(|&&v| v > T::zero()).count();
        if positive < m {
            return Err(Error::InsufficientRows {
                needed: m,
                found: positive,
            });
        }
        Ok(Self {
            y,
            u,
            w,
            tau,
            row_tau: None,
        })
    }

    /// All weights one.
    pub fn unweighted(y: Vec<T>, u: Array2<T>, tau: T) -> Result<Self> {
        let n = y.len();
        Self::new(y, u, vec![T::one(); n], tau)
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn design(&self) -> &Array2<T> {
        &self.u
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// Gives every row its own level: row `i` contributes
    /// `w_i ρ_{τ_i}(y_i - u_i'θ)`.
    pub fn with_row_taus(mut self, taus: Vec<T>) -> Result<Self> {
        if taus.len() != self.y.len() {
            return Err(Error::Dimension(format!(
                "{} row levels for {} rows",
                taus.len(),
                self.y.len()
            )));
        }
        if let Some(t) = taus.iter().find(|&&t| !(t > T::zero() && t < T::one())) {
            return Err(Error::InvalidProblem(format!("tau must lie in (0, 1), got {t}")));
        }
        self.row_tau = Some(taus);
        Ok(self)
    }

    /// Quantile level of row `i`.
    #[inline]
    pub fn tau_at(&self, i: usize) -> T {
        self.row_tau.as_ref().map_or(self.tau, |t| t[i])
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.u.ncols()
    }

    pub fn residual(&self, i: usize, theta: &[T]) -> T {
        let row = self.u.row(i);
        self.y[i]
            - row
                .iter()
                .zip(theta)
                .fold(T::zero(), |s, (&a, &b)| s + a * b)
    }

    /// `Σ_i w_i ρ_τ(y_i - u_i'θ)`.
    pub fn objective(&self, theta: &[T]) -> T {
        (0..self.n_rows())
            .map(|i| self.w[i] * check_loss(self.residual(i, theta), self.tau_at(i)))
            .sum()
    }

    fn zero_tol(&self, i: usize, tol: T) -> T {
        tol * (T::one() + self.y[i].abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PivotRule {
    /// Most negative reduced cost, with a Bland fallback after repeated
    /// zero-length steps.
    Dantzig,
    /// Lowest row index throughout.
    Bland,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T: Scalar> {
    /// Relative tolerance for counting a residual as interpolated.
    pub zero_tol: T,
    /// Pivot cap; `None` means `50 (n + m)`.
    pub max_iter: Option<usize>,
    pub pivot_rule: PivotRule,
    /// Rows tried first when assembling the starting basis.
    pub warm_start: Vec<usize>,
    /// Rebuild the basis inverse after this many pivots.
    pub refactor_every: usize,
    /// Consecutive zero-length steps tolerated before switching to Bland.
    pub bland_after: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            zero_tol: T::zero_tol(),
            max_iter: None,
            pivot_rule: PivotRule::Dantzig,
            warm_start: Vec::new(),
            refactor_every: 64,
            bland_after: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    /// The design is rank deficient on the positively weighted rows; the
    /// least-norm minimiser among the optimal fits is returned.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WqrSolution<T: Scalar> {
    pub theta: Vec<T>,
    pub objective: T,
    /// Positively weighted rows with `|r_i| <= zero_tol (1 + |y_i|)`.
    pub interpolated: Vec<usize>,
    /// Rows of the final basis, in basis order.
    pub basis: Vec<usize>,
    /// Element `ψ_i` of `∂ρ_τ(r_i)` certifying optimality:
    /// `Σ_i w_i ψ_i u_i = 0`. Equals `τ - 1{r_i < 0}` off the basis.
    pub scores: Vec<T>,
    pub residuals: Vec<T>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub rank: usize,
}

/// Per-column interval of attainable `s_j = -n⁻¹ Σ_i w_i u_ij ψ_i` when the
/// zero-residual rows may take any `ψ_i ∈ [τ - 1, τ]`.
pub fn subgradient<T: Scalar>(problem: &WqrProblem<T>, theta: &[T], zero_tol: T) -> Vec<(T, T)> {
    let (n, m) = problem.u.dim();
    let mut lo = vec![T::zero(); m];
    let mut hi = vec![T::zero(); m];
    for i in 0..n {
        let w = problem.w[i];
        if w == T::zero() {
            continue;
        }
        let r = problem.residual(i, theta);
        let row = problem.u.row(i);
        let tau = problem.tau_at(i);
        if r.abs() <= problem.zero_tol(i, zero_tol) {
            for j in 0..m {
                let a = -w * row[j] * tau;
                let b = -w * row[j] * (tau - T::one());
                lo[j] += a.min(b);
                hi[j] += a.max(b);
            }
        } else {
            let psi = if r < T::zero() { tau - T::one() } else { tau };
            for j in 0..m {
                let v = -w * row[j] * psi;
                lo[j] += v;
                hi[j] += v;
            }
        }
    }
    let nn = T::of_usize(n.max(1));
    lo.into_iter()
        .zip(hi)
        .map(|(a, b)| (a / nn, b / nn))
        .collect()
}

/// Solves the weighted quantile regression to a vertex.
pub fn solve_wqr<T: Scalar>(problem: &WqrProblem<T>, opts: &SolverOptions<T>) -> WqrSolution<T> {
    let (n, m) = problem.u.dim();
    let active: Vec<usize> = (0..n).filter(|&i| problem.w[i] > T::zero()).collect();
    let mut local_of = vec![usize::MAX; n];
    for (l, &i) in active.iter().enumerate() {
        local_of[i] = l;
    }
    let mut order: Vec<usize> = Vec::with_capacity(active.len());
    let mut seen = vec![false; active.len()];
    for &i in &opts.warm_start {
        if i < n && local_of[i] != usize::MAX && !seen[local_of[i]] {
            seen[local_of[i]] = true;
            order.push(local_of[i]);
        }
    }
    order.extend((0..active.len()).filter(|&l| !seen[l]));

    let all_cols: Vec<usize> = (0..m).collect();
    let full = Csr::build(problem, &active, &all_cols);
    let selection = select_basis(&full, m, &order);
    let rank = selection.rows.len();

    let (kept, csr, basis) = if rank == m {
        (all_cols, full, selection.rows)
    } else {
        let mut kept = selection.pivots.clone();
        kept.sort_unstable();
        let csr = Csr::build(problem, &active, &kept);
        (kept, csr, selection.rows)
    };

    let max_iter = opts.max_iter.unwrap_or(50 * (n + m));
    let mut state = Simplex::new(problem, &active, csr, basis, opts);
    let (iterations, hit_cap) = state.run(max_iter);

    let mut theta = vec![T::zero(); m];
    for (k, &c) in kept.iter().enumerate() {
        theta[c] = state.theta[k];
    }
    let mut status = if hit_cap {
        SolveStatus::MaxIter
    } else {
        SolveStatus::Optimal
    };
    if rank < m {
        least_norm(problem, &active, &kept, &state, &mut theta);
        if status == SolveStatus::Optimal {
            status = SolveStatus::Degenerate;
        }
    }

    let residuals: Vec<T> = (0..n).map(|i| problem.residual(i, &theta)).collect();
    let objective = (0..n)
        .map(|i| problem.w[i] * check_loss(residuals[i], problem.tau_at(i)))
        .sum();
    let interpolated = (0..n)
        .filter(|&i| {
            problem.w[i] > T::zero() && residuals[i].abs() <= problem.zero_tol(i, opts.zero_tol)
        })
        .collect();
    let mut scores: Vec<T> = residuals
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let tau = problem.tau_at(i);
            if r < T::zero() {
                tau - T::one()
            } else {
                tau
            }
        })
        .collect();
    let h = state.reduced_costs();
    for (l, &row) in active.iter().enumerate() {
        let tau = state.taus[l];
        if let Some(k) = state.position[l] {
            let a = -h[k] / state.w[l];
            scores[row] = a.max(tau - T::one()).min(tau);
        } else {
            scores[row] = state.side_value(l);
        }
    }
    WqrSolution {
        theta,
        objective,
        interpolated,
        basis: state.basis.iter().map(|&l| active[l]).collect(),
        scores,
        residuals,
        iterations,
        status,
        rank,
    }
}

// Rows of the active problem restricted to a column subset, stored sparsely.
struct Csr<T> {
    start: Vec<usize>,
    col: Vec<usize>,
    val: Vec<T>,
    y: Vec<T>,
    w: Vec<T>,
    m: usize,
}

impl<T: Scalar> Csr<T> {
    fn build(problem: &WqrProblem<T>, active: &[usize], cols: &[usize]) -> Self {
        let mut start = Vec::with_capacity(active.len() + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        start.push(0);
        for &i in active {
            let row = problem.u.row(i);
            for (k, &c) in cols.iter().enumerate() {
                let v = row[c];
                if v != T::zero() {
                    col.push(k);
                    val.push(v);
                }
            }
            start.push(col.len());
        }
        Self {
            start,
            col,
            val,
            y: active.iter().map(|&i| problem.y[i]).collect(),
            w: active.iter().map(|&i| problem.w[i]).collect(),
            m: cols.len(),
        }
    }

    fn rows(&self) -> usize {
        self.y.len()
    }

    #[inline]
    fn row(&self, l: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.start[l], self.start[l + 1]);
        (&self.col[a..b], &self.val[a..b])
    }

    #[inline]
    fn dot(&self, l: usize, x: &[T]) -> T {
        let (c, v) = self.row(l);
        c.iter().zip(v).fold(T::zero(), |s, (&j, &a)| s + a * x[j])
    }

    // dot with a strided column `binv[j * m + k]`
    #[inline]
    fn dot_col(&self, l: usize, binv: &[T], k: usize) -> T {
        let (c, v) = self.row(l);
        let m = self.m;
        c.iter()
            .zip(v)
            .fold(T::zero(), |s, (&j, &a)| s + a * binv[j * m + k])
    }

    fn inf_norm(&self, l: usize) -> T {
        self.row(l).1.iter().fold(T::zero(), |s, v| s.max(v.abs()))
    }
}

struct Selection {
    rows: Vec<usize>,
    pivots: Vec<usize>,
}

// Greedy choice of linearly independent rows in the given order: rows with a
// single nonzero go first, then the rest by elimination against the rows
// already taken.
fn select_basis<T: Scalar>(csr: &Csr<T>, m: usize, order: &[usize]) -> Selection {
    let tol = T::pivot_tol();
    let mut covered = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    let mut pivots = Vec::with_capacity(m);
    for &l in order {
        if rows.len() == m {
            break;
        }
        let (c, _) = csr.row(l);
        if c.len() == 1 && !covered[c[0]] {
            covered[c[0]] = true;
            rows.push(l);
            pivots.push(c[0]);
        }
    }
    let single = covered.clone();
    // reduced dense rows (restricted to uncovered columns) of the general rows
    let mut reduced: Vec<(usize, Vec<T>)> = Vec::new();
    let mut x = vec![T::zero(); m];
    for &l in order {
        if rows.len() == m {
            break;
        }
        let (c, v) = csr.row(l);
        if c.len() <= 1 {
            continue;
        }
        x.iter_mut().for_each(|e| *e = T::zero());
        for (&j, &a) in c.iter().zip(v) {
            if !single[j] {
                x[j] = a;
            }
        }
        let scale = csr.inf_norm(l);
        for (p, r) in &reduced {
            let f = x[*p];
            if f != T::zero() {
                let f = f / r[*p];
                for (xj, &rj) in x.iter_mut().zip(r) {
                    *xj -= f * rj;
                }
                x[*p] = T::zero();
            }
        }
        let (mut piv, mut best) = (usize::MAX, T::zero());
        for j in 0..m {
            if !covered[j] && x[j].abs() > best {
                best = x[j].abs();
                piv = j;
            }
        }
        if piv != usize::MAX && best > tol * scale {
            covered[piv] = true;
            rows.push(l);
            pivots.push(piv);
            reduced.push((piv, x.clone()));
        }
    }
    Selection { rows, pivots }
}

// Inverse of the basis matrix, `binv[c * m + k]`, so that θ = binv · y_B.
// Single-nonzero rows make the basis block triangular; only the block of the
// remaining rows on the uncovered columns is inverted densely.
fn basis_inverse<T: Scalar>(csr: &Csr<T>, basis: &[usize]) -> Option<Vec<T>> {
    let m = csr.m;
    let tol = T::pivot_tol();
    let mut col_single = vec![usize::MAX; m];
    let mut singles = Vec::new();
    let mut general = Vec::new();
    for (pos, &l) in basis.iter().enumerate() {
        let (c, _) = csr.row(l);
        if c.len() == 1 && col_single[c[0]] == usize::MAX {
            col_single[c[0]] = pos;
            singles.push(pos);
        } else {
            general.push(pos);
        }
    }
    let free: Vec<usize> = (0..m).filter(|&c| col_single[c] == usize::MAX).collect();
    let k = free.len();
    if k != general.len() {
        return dense_inverse(csr, basis, tol);
    }
    let mut free_idx = vec![usize::MAX; m];
    for (q, &c) in free.iter().enumerate() {
        free_idx[c] = q;
    }
    // R_R: general rows on free columns, R_S: general rows on covered columns
    let mut rr = vec![T::zero(); k * k];
    for (q, &pos) in general.iter().enumerate() {
        let (c, v) = csr.row(basis[pos]);
        for (&j, &a) in c.iter().zip(v) {
            if free_idx[j] != usize::MAX {
                rr[q * k + free_idx[j]] = a;
            }
        }
    }
    let rr_inv = linalg::invert(&rr, k, tol)?;
    let mut binv = vec![T::zero(); m * m];
    for (q, &pos) in general.iter().enumerate() {
        for (qc, &c) in free.iter().enumerate() {
            binv[c * m + pos] = rr_inv[qc * k + q];
        }
    }
    // column c of the general rows, for every covered column c
    let mut col_vals = vec![T::zero(); k];
    for &pos in &singles {
        let (c, v) = csr.row(basis[pos]);
        let (c, v) = (c[0], v[0]);
        binv[c * m + pos] = T::one() / v;
        col_vals.iter_mut().for_each(|e| *e = T::zero());
        let mut any = false;
        for (q, &gpos) in general.iter().enumerate() {
            let (gc, gv) = csr.row(basis[gpos]);
            if let Ok(idx) = gc.binary_search(&c) {
                col_vals[q] = gv[idx];
                any = true;
            }
        }
        if !any {
            continue;
        }
        for (qc, &fc) in free.iter().enumerate() {
            let s: T = (0..k).fold(T::zero(), |s, q| s + rr_inv[qc * k + q] * col_vals[q]);
            binv[fc * m + pos] = -s / v;
        }
    }
    Some(binv)
}

fn dense_inverse<T: Scalar>(csr: &Csr<T>, basis: &[usize], tol: T) -> Option<Vec<T>> {
    let m = csr.m;
    let mut ub = vec![T::zero(); m * m];
    for (pos, &l) in basis.iter().enumerate() {
        let (c, v) = csr.row(l);
        for (&j, &a) in c.iter().zip(v) {
            ub[pos * m + j] = a;
        }
    }
    // inverse of U_B is (m x m) with rows = coefficients, cols = basis positions
    linalg::invert(&ub, m, tol)
}

struct Simplex<T: Scalar> {
    csr: Csr<T>,
    taus: Vec<T>,
    w: Vec<T>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<T>,
    theta: Vec<T>,
    r: Vec<T>,
    // +1 / -1: which side of the kink a nonbasic row sits on
    side: Vec<i8>,
    grad: Vec<T>,
    rule: PivotRule,
    opts_rule: PivotRule,
    bland_after: usize,
    refactor_every: usize,
    row_scale: Vec<T>,
}

impl<T: Scalar> Simplex<T> {
    fn new(
        problem: &WqrProblem<T>,
        active: &[usize],
        csr: Csr<T>,
        basis: Vec<usize>,
        opts: &SolverOptions<T>,
    ) -> Self {
        let rows = csr.rows();
        let mut position = vec![None; rows];
        for (k, &l) in basis.iter().enumerate() {
            position[l] = Some(k);
        }
        let row_scale = (0..rows).map(|l| csr.inf_norm(l)).collect();
        let w = csr.w.clone();
        let mut s = Self {
            csr,
            taus: active.iter().map(|&i| problem.tau_at(i)).collect(),
            w,
            basis,
            position,
            binv: Vec::new(),
            theta: Vec::new(),
            r: vec![T::zero(); rows],
            side: vec![1; rows],
            grad: Vec::new(),
            rule: opts.pivot_rule,
            opts_rule: opts.pivot_rule,
            bland_after: opts.bland_after.max(1),
            refactor_every: opts.refactor_every.max(1),
            row_scale,
        };
        s.refactor(true);
        s
    }

    fn m(&self) -> usize {
        self.csr.m
    }

    #[inline]
    fn side_value(&self, l: usize) -> T {
        if self.side[l] > 0 {
            self.taus[l]
        } else {
            self.taus[l] - T::one()
        }
    }

    // Rebuild inverse, coefficients, residuals and the nonbasic gradient sum.
    fn refactor(&mut self, reset_sides: bool) {
        let m = self.m();
        self.binv = basis_inverse(&self.csr, &self.basis)
            .or_else(|| dense_inverse(&self.csr, &self.basis, T::pivot_tol()))
            .unwrap_or_else(|| panic!("singular basis {:?} m={} rows={}", self.basis, m, self.csr.rows()));
        let yb: Vec<T> = self.basis.iter().map(|&l| self.csr.y[l]).collect();
        self.theta = (0..m)
            .map(|c| linalg::dot(&self.binv[c * m..(c + 1) * m], &yb))
            .collect();
        for l in 0..self.csr.rows() {
            if self.position[l].is_some() {
                self.r[l] = T::zero();
                continue;
            }
            let r = self.csr.y[l] - self.csr.dot(l, &self.theta);
            self.r[l] = r;
            let tol = T::zero_tol() * (T::one() + self.csr.y[l].abs());
            if reset_sides || r.abs() > tol {
                self.side[l] = if r < T::zero() { -1 } else { 1 };
            }
        }
        self.grad = vec![T::zero(); m];
        for l in 0..self.csr.rows() {
            if self.position[l].is_none() {
                let f = self.w[l] * self.side_value(l);
                self.add_row(l, f);
            }
        }
    }

    #[inline]
    fn add_row(&mut self, l: usize, f: T) {
        let (c, v) = self.csr.row(l);
        for (&j, &a) in c.iter().zip(v) {
            self.grad[j] += f * a;
        }
    }

    // h = binvᵀ · grad; basic row k has dual value -h_k / w_k.
    fn reduced_costs(&self) -> Vec<T> {
        let m = self.m();
        let mut h = vec![T::zero(); m];
        for c in 0..m {
            let g = self.grad[c];
            if g == T::zero() {
                continue;
            }
            let row = &self.binv[c * m..(c + 1) * m];
            for (hk, &b) in h.iter_mut().zip(row) {
                *hk += b * g;
            }
        }
        h
    }

    // Best improving edge as (basis position, direction sign, reduced cost).
    fn price(&self) -> Option<(usize, i8, T)> {
        let h = self.reduced_costs();
        let tol = T::opt_tol();
        let m = self.m();
        let mut norms = vec![T::zero(); m];
        for c in 0..m {
            for (nk, &b) in norms.iter_mut().zip(&self.binv[c * m..(c + 1) * m]) {
                *nk += b * b;
            }
        }
        let mut best: Option<(usize, i8, T)> = None;
        let mut best_key = T::zero();
        let mut consider = |k: usize, sigma: i8, d: T, scale: T| {
            if d < -tol * scale {
                match self.rule {
                    PivotRule::Dantzig => {
                        let key = d / norms[k].sqrt();
                        if best.is_none() || key < best_key {
                            best = Some((k, sigma, d));
                            best_key = key;
                        }
                    }
                    PivotRule::Bland => {
                        let better = match best {
                            None => true,
                            Some((bk, _, _)) => self.basis[k] < self.basis[bk],
                        };
                        if better {
                            best = Some((k, sigma, d));
                        }
                    }
                }
            }
        };
        for (k, &hk) in h.iter().enumerate() {
            let wk = self.w[self.basis[k]];
            let tau = self.taus[self.basis[k]];
            let scale = wk + hk.abs();
            consider(k, 1, -hk + wk * (T::one() - tau), scale);
            consider(k, -1, hk + wk * tau, scale);
        }
        best
    }

    // Runs pivots until optimal or the cap; returns (pivots, hit_cap).
    fn run(&mut self, max_iter: usize) -> (usize, bool) {
        let mut iters = 0;
        let mut since_refactor = 0;
        let mut stalled = 0;
        loop {
            let Some((k, sigma, d0)) = self.price() else {
                if since_refactor == 0 {
                    return (iters, false);
                }
                // confirm with a fresh factorization
                self.refactor(false);
                since_refactor = 0;
                continue;
            };
            if iters >= max_iter {
                return (iters, true);
            }
            iters += 1;
            let step = self.pivot(k, sigma, d0);
            since_refactor += 1;
            match step {
                Some(t) if t > T::zero() => {
                    stalled = 0;
                    if self.opts_rule == PivotRule::Dantzig {
                        self.rule = PivotRule::Dantzig;
                    }
                }
                Some(_) => {
                    stalled += 1;
                    if stalled >= self.bland_after {
                        self.rule = PivotRule::Bland;
                    }
                }
                None => {
                    // no breakpoint found: refactor and retry once in Bland mode
                    self.refactor(false);
                    since_refactor = 0;
                    if self.rule == PivotRule::Bland {
                        return (iters, true);
                    }
                    self.rule = PivotRule::Bland;
                }
            }
            if since_refactor >= self.refactor_every {
                self.refactor(false);
                since_refactor = 0;
            }
        }
    }

    // Moves along edge (k, sigma); returns the step length, or None if the
    // line search found no breakpoint.
    fn pivot(&mut self, k: usize, sigma: i8, d0: T) -> Option<T> {
        let m = self.m();
        let rows = self.csr.rows();
        let sg = if sigma > 0 { T::one() } else { -T::one() };
        let d: Vec<T> = (0..m).map(|c| self.binv[c * m + k]).collect();
        let dnorm = d.iter().fold(T::zero(), |s, v| s.max(v.abs()));
        let ptol = T::pivot_tol();

        let mut g = vec![T::zero(); rows];
        let mut cand: Vec<(T, usize, T)> = Vec::new();
        for l in 0..rows {
            if self.position[l].is_some() {
                continue;
            }
            let gl = self.csr.dot(l, &d);
            g[l] = gl;
            let delta = -sg * gl;
            if delta.abs() <= ptol * self.row_scale[l] * dnorm {
                continue;
            }
            let t = if self.side[l] > 0 && delta < T::zero() {
                self.r[l].max(T::zero()) / -delta
            } else if self.side[l] < 0 && delta > T::zero() {
                (-self.r[l]).max(T::zero()) / delta
            } else {
                continue;
            };
            cand.push((t, l, self.w[l] * delta.abs()));
        }
        cand.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite breakpoints")
                .then(a.1.cmp(&b.1))
        });

        let mut slope = d0;
        let mut total = d0.abs();
        let mut enter = None;
        let mut passed = 0;
        for (idx, &(t, l, inc)) in cand.iter().enumerate() {
            slope += inc;
            total += inc;
            if slope >= -T::opt_tol() * total {
                enter = Some((t, l));
                passed = idx;
                break;
            }
        }
        let (t, e) = enter?;

        for c in 0..m {
            self.theta[c] += sg * t * d[c];
        }
        for l in 0..rows {
            if self.position[l].is_none() {
                self.r[l] -= sg * t * g[l];
            }
        }
        for &(_, l, _) in &cand[..passed] {
            let f = if self.side[l] > 0 { -self.w[l] } else { self.w[l] };
            self.side[l] = -self.side[l];
            self.add_row(l, f);
        }
        // entering row leaves the nonbasic sum
        let f = -self.w[e] * self.side_value(e);
        self.add_row(e, f);
        self.r[e] = T::zero();
        let leaving = self.basis[k];
        self.side[leaving] = -sigma;
        self.r[leaving] = -sg * t;
        let f = self.w[leaving] * self.side_value(leaving);
        self.add_row(leaving, f);

        // Sherman-Morrison replacement of basis row k by row e
        let mut rho = vec![T::zero(); m];
        {
            let (c, v) = self.csr.row(e);
            for (&j, &a) in c.iter().zip(v) {
                let row = &self.binv[j * m..(j + 1) * m];
                for (rk, &b) in rho.iter_mut().zip(row) {
                    *rk += a * b;
                }
            }
        }
        let ge = rho[k];
        debug_assert!((ge - self.csr.dot_col(e, &self.binv, k)).abs() <= T::of(1e-6) * (T::one() + ge.abs()));
        rho[k] -= T::one();
        for c in 0..m {
            let f = d[c] / ge;
            if f == T::zero() {
                continue;
            }
            let row = &mut self.binv[c * m..(c + 1) * m];
            for (b, &rj) in row.iter_mut().zip(&rho) {
                *b -= f * rj;
            }
        }
        self.position[leaving] = None;
        self.position[e] = Some(k);
        self.basis[k] = e;
        Some(t)
    }
}

// Replace θ by the minimum-norm vector with the same fitted values. Dropped
// columns are combinations of kept ones: u_c = U_kept α_c.
fn least_norm<T: Scalar>(
    problem: &WqrProblem<T>,
    active: &[usize],
    kept: &[usize],
    state: &Simplex<T>,
    theta: &mut [T],
) {
    let m = problem.u.ncols();
    let r = kept.len();
    let mut is_kept = vec![false; m];
    kept.iter().for_each(|&c| is_kept[c] = true);
    let dropped: Vec<usize> = (0..m).filter(|&c| !is_kept[c]).collect();
    // null vectors v_c = e_c - Σ α_c,p e_p
    let mut null: Vec<Vec<T>> = Vec::with_capacity(dropped.len());
    for &c in &dropped {
        let ub: Vec<T> = state
            .basis
            .iter()
            .map(|&l| problem.u[[active[l], c]])
            .collect();
        let mut v = vec![T::zero(); m];
        v[c] = T::one();
        for (q, &pc) in kept.iter().enumerate() {
            let alpha = linalg::dot(&state.binv[q * r..(q + 1) * r], &ub);
            v[pc] = -alpha;
        }
        null.push(v);
    }
    let k = null.len();
    let mut gram = vec![T::zero(); k * k];
    let mut rhs = vec![T::zero(); k];
    for a in 0..k {
        for b in 0..k {
            gram[a * k + b] = linalg::dot(&null[a], &null[b]);
        }
        rhs[a] = linalg::dot(&null[a], theta);
    }
    if let Some(coef) = linalg::solve(&gram, &rhs, T::pivot_tol()) {
        for (a, v) in null.iter().enumerate() {
            for (t, &x) in theta.iter_mut().zip(v) {
                *t -= coef[a] * x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn solve(p: &WqrProblem<f64>) -> WqrSolution<f64> {
        solve_wqr(p, &SolverOptions::default())
    }

    #[test]
    fn check_loss_values() {
        assert_eq!(check_loss(2.0, 0.5), 1.0);
        assert!((check_loss(-1.0f64, 0.7) - 0.3).abs() < 1e-15);
        assert_eq!(check_loss(0.0, 0.3), 0.0);
    }

    #[test]
    fn median_of_three() {
        let p = WqrProblem::unweighted(vec![1.0, 2.0, 3.0], Array2::ones((3, 1)), 0.5).unwrap();
        let s = solve(&p);
        assert_eq!(s.theta, vec![2.0]);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lower_quartile_takes_low_vertex() {
        let p = WqrProblem::unweighted(vec![1.0, 2.0, 3.0, 4.0], Array2::ones((4, 1)), 0.25)
            .unwrap();
        assert_eq!(solve(&p).theta, vec![1.0]);
    }

    #[test]
    fn two_points_interpolated() {
        let u = array![[1.0, 0.0], [1.0, 1.0]];
        let p = WqrProblem::unweighted(vec![0.0, 1.0], u, 0.3).unwrap();
        let s = solve(&p);
        assert!(s.objective.abs() < 1e-15);
        assert_eq!(s.interpolated, vec![0, 1]);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let p = WqrProblem::new(
            vec![1.0, 2.0, 3.0, 100.0],
            Array2::ones((4, 1)),
            vec![1.0, 1.0, 1.0, 0.0],
            0.5,
        )
        .unwrap();
        let s = solve(&p);
        assert_eq!(s.theta, vec![2.0]);
        assert!(!s.interpolated.contains(&3));
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = Array2::<f64>::ones((2, 1));
        assert!(WqrProblem::unweighted(vec![1.0, 2.0], u.clone(), 1.0).is_err());
        assert!(WqrProblem::new(vec![1.0, 2.0], u.clone(), vec![1.0, -1.0], 0.5).is_err());
        assert!(matches!(
            WqrProblem::new(vec![1.0, 2.0], Array2::ones((2, 3)), vec![1.0, 1.0], 0.5),
            Err(Error::InsufficientRows { needed: 3, found: 2 })
        ));
    }

    #[test]
    fn subgradient_examples() {
        let p = WqrProblem::unweighted(vec![1.0, 2.0, 3.0], Array2::ones((3, 1)), 0.5).unwrap();
        let s: Vec<(f64, f64)> = subgradient(&p, &[1.5], 1e-8);
        assert!((s[0].0 + 1.0 / 6.0).abs() < 1e-15 && s[0].0 == s[0].1);
        let s: Vec<(f64, f64)> = subgradient(&p, &[50.0], 1e-8);
        assert!((s[0].0 - 0.5).abs() < 1e-15);
        let at_opt = subgradient(&p, &[2.0], 1e-8);
        assert!(at_opt[0].0 <= 0.0 && at_opt[0].1 >= 0.0);
    }

    #[test]
    fn duplicated_column_is_degenerate_least_norm() {
        let u = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
        let p = WqrProblem::unweighted(vec![2.0, 4.1, 5.9, 8.0], u, 0.5).unwrap();
        let s = solve(&p);
        assert_eq!(s.status, SolveStatus::Degenerate);
        assert_eq!(s.rank, 1);
        assert!((s.theta[0] - s.theta[1]).abs() < 1e-12);
        assert!((s.theta[0] + s.theta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scores_certify_optimality() {
        let u = array![[1.0, 0.3], [1.0, 1.2], [1.0, -0.7], [1.0, 2.2], [1.0, 0.1], [1.0, 1.7]];
        let y = vec![0.4, 2.0, -1.1, 3.9, 0.0, 2.2];
        let p = WqrProblem::new(y, u.clone(), vec![1.0, 2.0, 0.5, 1.0, 3.0, 1.0], 0.3).unwrap();
        let s = solve(&p);
        for j in 0..2 {
            let g: f64 = (0..6).map(|i| p.weights()[i] * u[[i, j]] * s.scores[i]).sum();
            assert!(g.abs() < 1e-12, "{g}");
        }
        assert!(s.scores.iter().all(|&a| (-0.7..=0.3).contains(&a)));
    }

    #[test]
    fn single_precision_median() {
        let p = WqrProblem::<f32>::unweighted(vec![3.0, 1.0, 2.0], Array2::ones((3, 1)), 0.5)
            .unwrap();
        let s = solve_wqr(&p, &SolverOptions::default());
        assert_eq!(s.theta, vec![2.0f32]);
    }

    #[test]
    fn bland_rule_reaches_same_objective() {
        let u = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0], [1.0, 4.0]];
        let y = vec![0.0, 1.0, 1.0, 1.0, 5.0];
        let p = WqrProblem::unweighted(y, u, 0.5).unwrap();
        let a = solve(&p);
        let opts = SolverOptions {
            pivot_rule: PivotRule::Bland,
            ..SolverOptions::default()
        };
        let b = solve_wqr(&p, &opts);
        assert!((a.objective - b.objective).abs() < 1e-12);
    }
}
