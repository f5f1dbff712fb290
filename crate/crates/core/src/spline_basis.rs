//! Clamped B-spline bases on `[0, 1]` and the additive spline design
//! `Π(z) = (1, π(z_1)', ..., π(z_d)')'`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Placement of the internal knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnotRule {
    /// `j / (k_n + 1)` for `j = 1..=k_n`.
    Uniform,
    /// Empirical `j / (k_n + 1)` quantiles of a data column (linear
    /// interpolation between order statistics).
    SampleQuantile,
}

/// Normalized B-spline basis of a given order (degree `order - 1`) with
/// boundary knots of multiplicity `order` at 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SplineBasis<T: Scalar> {
    order: usize,
    internal_knots: Vec<T>,
    knots: Vec<T>,
}

impl<T: Scalar> SplineBasis<T> {
    /// Builds a basis with `k_n` internal knots placed by `rule`.
    ///
    /// `data` is required for [`KnotRule::SampleQuantile`] and must lie in
    /// `[0, 1]`.
    pub fn new(order: usize, k_n: usize, rule: KnotRule, data: Option<&[T]>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidBasis("spline order must be at least 1".into()));
        }
        let internal = match rule {
            KnotRule::Uniform => (1..=k_n)
                .map(|j| T::of_usize(j) / T::of_usize(k_n + 1))
                .collect(),
            KnotRule::SampleQuantile => {
                let data = data.ok_or_else(|| {
                    Error::InvalidBasis("sample-quantile knots need a data column".into())
                })?;
                quantile_knots(k_n, data)?
            }
        };
        Self::with_knots(order, internal)
    }

    /// Builds a basis from explicit internal knots.
    pub fn with_knots(order: usize, internal_knots: Vec<T>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidBasis("spline order must be at least 1".into()));
        }
        for w in internal_knots.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidBasis("internal knots must be nondecreasing".into()));
            }
        }
        if let Some(&k) = internal_knots
            .iter()
            .find(|&&k| !(k > T::zero() && k < T::one()))
        {
            return Err(Error::DegenerateKnots(format!(
                "internal knot {k} is not strictly inside (0, 1)"
            )));
        }
        // a knot repeated `order` times would disconnect the basis
        let mut run = 1;
        for w in internal_knots.windows(2) {
            if w[1] == w[0] {
                run += 1;
                if run >= order {
                    return Err(Error::DegenerateKnots(format!(
                        "knot {} repeated {run} times for order {order}",
                        w[0]
                    )));
                }
            } else {
                run = 1;
            }
        }
        let mut knots = vec![T::zero(); order];
        knots.extend_from_slice(&internal_knots);
        knots.extend(std::iter::repeat_n(T::one(), order));
        Ok(Self {
            order,
            internal_knots,
            knots,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn internal_knots(&self) -> &[T] {
        &self.internal_knots
    }

    /// Full clamped knot vector.
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.internal_knots.len() + self.order
    }

    /// All basis values at `t`.
    pub fn eval(&self, t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n_basis()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Writes all basis values at `t` into `out` (length `n_basis`).
    pub fn eval_into(&self, t: T, out: &mut [T]) -> Result<()> {
        let (first, vals) = self.eval_nonzero(t)?;
        out.iter_mut().for_each(|v| *v = T::zero());
        out[first..first + vals.len()].copy_from_slice(&vals);
        Ok(())
    }

    /// The `order` possibly nonzero basis values at `t`, starting at basis
    /// index `first`.
    pub fn eval_nonzero(&self, t: T) -> Result<(usize, Vec<T>)> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::Domain {
                value: t.as_f64(),
                context: "spline argument",
            });
        }
        let p = self.degree();
        let span = self.span(t);
        let u = &self.knots;
        let mut n = vec![T::zero(); p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        n[0] = T::one();
        for j in 1..=p {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = T::zero();
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        Ok((span - p, n))
    }

    // knot span index i with knots[i] <= t < knots[i + 1]; t = 1 maps to the last span
    fn span(&self, t: T) -> usize {
        let p = self.degree();
        let nb = self.n_basis();
        if t >= self.knots[nb] {
            return nb - 1;
        }
        let (mut lo, mut hi) = (p, nb);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }
}

fn quantile_knots<T: Scalar>(k_n: usize, data: &[T]) -> Result<Vec<T>> {
    if let Some(&v) = data.iter().find(|&&v| !(v >= T::zero() && v <= T::one())) {
        return Err(Error::Domain {
            value: v.as_f64(),
            context: "knot placement data",
        });
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    let mut distinct = sorted.clone();
    distinct.dedup();
    if k_n > distinct.len() {
        return Err(Error::DegenerateKnots(format!(
            "{k_n} internal knots requested but only {} distinct data values",
            distinct.len()
        )));
    }
    Ok((1..=k_n)
        .map(|j| empirical_quantile(&sorted, j as f64 / (k_n + 1) as f64))
        .collect())
}

/// Linear interpolation between order statistics of a sorted sample
/// (position `(n - 1) p`).
pub(crate) fn empirical_quantile<T: Scalar>(sorted: &[T], prob: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let frac = T::of(h - lo as f64);
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Additive spline design matrix: an intercept column followed by one block
/// of `n_basis` columns per nonlinear covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveDesign<T: Scalar> {
    bases: Vec<SplineBasis<T>>,
    n_basis: usize,
    matrix: Array2<T>,
}

impl<T: Scalar> AdditiveDesign<T> {
    /// Evaluates `Π(z_i)` for every row of `z` (n x d, entries in `[0, 1]`).
    pub fn build(bases: &[SplineBasis<T>], z: ArrayView2<T>) -> Result<Self> {
        let (n, d) = z.dim();
        if bases.len() != d {
            return Err(Error::Dimension(format!(
                "{} bases for {d} nonlinear covariates",
                bases.len()
            )));
        }
        let n_basis = bases.first().map_or(0, SplineBasis::n_basis);
        if bases.iter().any(|b| b.n_basis() != n_basis) {
            return Err(Error::InvalidBasis(
                "all nonlinear covariates must use the same number of basis functions".into(),
            ));
        }
        let mut matrix = Array2::zeros((n, 1 + d * n_basis));
        for i in 0..n {
            matrix[[i, 0]] = T::one();
            for (j, basis) in bases.iter().enumerate() {
                let (first, vals) = basis.eval_nonzero(z[[i, j]])?;
                let off = 1 + j * n_basis + first;
                for (k, v) in vals.into_iter().enumerate() {
                    matrix[[i, off + k]] = v;
                }
            }
        }
        Ok(Self {
            bases: bases.to_vec(),
            n_basis,
            matrix,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of nonlinear covariates.
    pub fn d(&self) -> usize {
        self.bases.len()
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    /// Total column count `d * n_basis + 1`.
    pub fn l_n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn bases(&self) -> &[SplineBasis<T>] {
        &self.bases
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    /// Design restricted to the given observations.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            bases: self.bases.clone(),
            n_basis: self.n_basis,
            matrix: self.matrix.select(ndarray::Axis(0), rows),
        }
    }

    /// Column range of covariate `j`'s block.
    pub fn block(&self, j: usize) -> std::ops::Range<usize> {
        let start = 1 + j * self.n_basis;
        start..start + self.n_basis
    }

    /// Columns kept when fitting. Each block sums to one, so its first column
    /// is collinear with the intercept and is left out (its coefficient is
    /// reported as zero).
    pub fn identifiable_columns(&self) -> Vec<usize> {
        let mut cols = vec![0];
        for j in 0..self.d() {
            cols.extend(self.block(j).skip(1));
        }
        cols
    }

    /// Splits `Π(z_i)'ξ` into an intercept and empirically centered components.
    pub fn center_g(&self, xi: &[T]) -> Result<CenteredComponents<T>> {
        if xi.len() != self.l_n() {
            return Err(Error::Dimension(format!(
                "xi has length {}, design has {} columns",
                xi.len(),
                self.l_n()
            )));
        }
        let n = self.n_obs();
        let mut components = Vec::with_capacity(self.d());
        let mut means = Vec::with_capacity(self.d());
        let mut intercept = xi[0];
        for j in 0..self.d() {
            let block = self.block(j);
            let raw: Vec<T> = (0..n)
                .map(|i| {
                    block
                        .clone()
                        .fold(T::zero(), |s, c| s + self.matrix[[i, c]] * xi[c])
                })
                .collect();
            let mean = if n == 0 {
                T::zero()
            } else {
                raw.iter().copied().sum::<T>() / T::of_usize(n)
            };
            intercept += mean;
            means.push(mean);
            components.push(raw.into_iter().map(|v| v - mean).collect());
        }
        Ok(CenteredComponents {
            intercept,
            components,
            means,
        })
    }
}

/// Fitted nonparametric part at the data: `ĝ_0 + Σ_j ĝ_j(z_ij)`, each `ĝ_j`
/// with empirical mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CenteredComponents<T: Scalar> {
    pub intercept: T,
    /// `components[j][i] = ĝ_j(z_ij)`.
    pub components: Vec<Vec<T>>,
    /// Means subtracted from each raw component.
    pub means: Vec<T>,
}

impl<T: Scalar> CenteredComponents<T> {
    /// `ĝ(z_i)` including the intercept.
    pub fn total(&self, i: usize) -> T {
        self.intercept + self.components.iter().map(|c| c[i]).sum::<T>()
    }

    /// `Σ_j ĝ_j(z_ij)` without the intercept.
    pub fn centered_sum(&self, i: usize) -> T {
        self.components.iter().map(|c| c[i]).sum()
    }
}

/// Evaluates the centered component `ĝ_j` on arbitrary points of `[0, 1]`.
pub fn eval_component<T: Scalar>(
    design: &AdditiveDesign<T>,
    centered: &CenteredComponents<T>,
    xi: &[T],
    j: usize,
    points: &[T],
) -> Result<Vec<T>> {
    let basis = &design.bases()[j];
    let block = design.block(j);
    points
        .iter()
        .map(|&t| {
            let vals = basis.eval(t)?;
            let raw = vals
                .iter()
                .zip(&xi[block.clone()])
                .fold(T::zero(), |s, (&b, &c)| s + b * c);
            Ok(raw - centered.means[j])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    // Cox-de Boor recursion straight from the definition, 0/0 := 0. At t = 1
    // only the last nonempty span is "on".
    fn cox_de_boor(knots: &[f64], i: usize, k: usize, t: f64, end_span: Option<usize>) -> f64 {
        if k == 1 {
            return match end_span {
                Some(s) => (i == s) as u8 as f64,
                None => (knots[i] <= t && t < knots[i + 1]) as u8 as f64,
            };
        }
        let mut v = 0.0;
        let d1 = knots[i + k - 1] - knots[i];
        if d1 > 0.0 {
            v += (t - knots[i]) / d1 * cox_de_boor(knots, i, k - 1, t, end_span);
        }
        let d2 = knots[i + k] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + k] - t) / d2 * cox_de_boor(knots, i + 1, k - 1, t, end_span);
        }
        v
    }

    fn brute(basis: &SplineBasis<f64>, t: f64) -> Vec<f64> {
        let knots = basis.knots();
        let end_span = if t == 1.0 {
            (0..knots.len() - 1).rev().find(|&s| knots[s] < knots[s + 1])
        } else {
            None
        };
        (0..basis.n_basis())
            .map(|i| cox_de_boor(knots, i, basis.order(), t, end_span))
            .collect()
    }

    #[test]
    fn cubic_without_knots_has_four_functions() {
        let b = SplineBasis::<f64>::new(4, 0, KnotRule::Uniform, None).unwrap();
        assert_eq!(b.n_basis(), 4);
    }

    #[test]
    fn uniform_knots_piecewise_constant() {
        let b = SplineBasis::<f64>::new(1, 3, KnotRule::Uniform, None).unwrap();
        assert_eq!(b.internal_knots(), &[0.25, 0.5, 0.75]);
        assert_eq!(b.n_basis(), 4);
    }

    #[test]
    fn sample_quantile_knots() {
        let data = [0.1, 0.2, 0.3, 0.9];
        let b = SplineBasis::new(2, 2, KnotRule::SampleQuantile, Some(&data[..])).unwrap();
        // positions (n-1)p = 1 and 2 hit the 2nd and 3rd order statistics
        assert_eq!(b.internal_knots(), &[0.2, 0.3]);
    }

    #[test]
    fn quantile_knots_need_distinct_values() {
        let data = [0.5, 0.5, 0.5];
        let err = SplineBasis::new(2, 2, KnotRule::SampleQuantile, Some(&data[..])).unwrap_err();
        assert!(matches!(err, Error::DegenerateKnots(_)));
    }

    #[test]
    fn quantile_knots_reject_out_of_range_data() {
        let data = [0.5, 1.5];
        let err = SplineBasis::new(2, 1, KnotRule::SampleQuantile, Some(&data[..])).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn piecewise_constant_indicator() {
        let b = SplineBasis::<f64>::new(1, 1, KnotRule::Uniform, None).unwrap();
        assert_eq!(b.eval(0.3).unwrap(), vec![1.0, 0.0]);
        assert_eq!(b.eval(0.7).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn eval_outside_unit_interval_fails() {
        let b = SplineBasis::<f64>::new(4, 2, KnotRule::Uniform, None).unwrap();
        assert!(matches!(b.eval(1.2), Err(Error::Domain { .. })));
        assert!(matches!(b.eval(-0.1), Err(Error::Domain { .. })));
        assert!(b.eval(f64::NAN).is_err());
    }

    #[test]
    fn cubic_matches_cox_de_boor_at_half() {
        let b = SplineBasis::<f64>::new(4, 3, KnotRule::Uniform, None).unwrap();
        let fast = b.eval(0.5).unwrap();
        let slow = brute(&b, 0.5);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-14, "{fast:?} vs {slow:?}");
        }
        // t = 0.5 is a knot; the cubic's three middle functions carry it
        assert!((fast.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn endpoints_match_cox_de_boor() {
        for order in 1..=5 {
            let b = SplineBasis::<f64>::new(order, 2, KnotRule::Uniform, None).unwrap();
            for &t in &[0.0, 1.0] {
                let fast = b.eval(t).unwrap();
                let slow = brute(&b, t);
                for (x, y) in fast.iter().zip(&slow) {
                    assert!((x - y).abs() < 1e-14, "order {order} t {t}");
                }
            }
        }
    }

    #[test]
    fn repeated_knot_allowed_below_order() {
        let b = SplineBasis::<f64>::with_knots(4, vec![0.3, 0.3, 0.6]).unwrap();
        let v = b.eval(0.3).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(SplineBasis::<f64>::with_knots(2, vec![0.3, 0.3]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let b = SplineBasis::<f32>::new(4, 3, KnotRule::Uniform, None).unwrap();
        let v = b.eval(0.37).unwrap();
        assert!((v.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn design_without_nonlinear_covariates_is_intercept() {
        let z = Array2::<f64>::zeros((3, 0));
        let d = AdditiveDesign::build(&[], z.view()).unwrap();
        assert_eq!(d.l_n(), 1);
        assert!(d.matrix().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn design_blocks_reconstruct_rows() {
        let basis = SplineBasis::<f64>::new(4, 0, KnotRule::Uniform, None).unwrap();
        let z = array![[0.1, 0.9], [0.5, 0.25], [1.0, 0.0]];
        let d = AdditiveDesign::build(&[basis.clone(), basis.clone()], z.view()).unwrap();
        assert_eq!(d.l_n(), 9);
        for i in 0..3 {
            assert_eq!(d.matrix()[[i, 0]], 1.0);
            for j in 0..2 {
                let expect = basis.eval(z[[i, j]]).unwrap();
                let got: Vec<f64> = d.block(j).map(|c| d.matrix()[[i, c]]).collect();
                assert_eq!(got, expect);
            }
        }
        assert_eq!(d.identifiable_columns(), vec![0, 2, 3, 4, 6, 7, 8]);
    }

    #[test]
    fn design_requires_equal_basis_sizes() {
        let a = SplineBasis::<f64>::new(4, 0, KnotRule::Uniform, None).unwrap();
        let b = SplineBasis::<f64>::new(4, 1, KnotRule::Uniform, None).unwrap();
        let z = array![[0.1, 0.2]];
        assert!(AdditiveDesign::build(&[a, b], z.view()).is_err());
    }

    #[test]
    fn design_rejects_out_of_range() {
        let a = SplineBasis::<f64>::new(3, 0, KnotRule::Uniform, None).unwrap();
        let z = array![[1.01]];
        assert!(matches!(
            AdditiveDesign::build(&[a], z.view()),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn centering_edge_cases() {
        let basis = SplineBasis::<f64>::new(3, 1, KnotRule::Uniform, None).unwrap();
        let z = array![[0.1], [0.4], [0.8]];
        let d = AdditiveDesign::build(&[basis], z.view()).unwrap();
        let zero = d.center_g(&vec![0.0; d.l_n()]).unwrap();
        assert_eq!(zero.intercept, 0.0);
        assert!(zero.components[0].iter().all(|&v| v == 0.0));
        let mut xi = vec![0.0; d.l_n()];
        xi[0] = 2.5;
        let c = d.center_g(&xi).unwrap();
        assert_eq!(c.intercept, 2.5);
        assert!(c.components[0].iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn partition_of_unity_local_support(
            order in 1usize..6,
            k_n in 0usize..8,
            t in 0.0f64..=1.0,
        ) {
            let b = SplineBasis::<f64>::new(order, k_n, KnotRule::Uniform, None).unwrap();
            let v = b.eval(t).unwrap();
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(v.iter().all(|&x| x >= 0.0 && x <= 1.0 + 1e-15));
            prop_assert!(v.iter().filter(|&&x| x != 0.0).count() <= order);
        }

        #[test]
        fn matches_recursive_definition(
            order in 1usize..5,
            knots in proptest::collection::vec(0.01f64..0.99, 0..5),
            t in 0.0f64..1.0,
        ) {
            let mut knots = knots;
            knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            knots.dedup();
            let b = SplineBasis::<f64>::with_knots(order, knots).unwrap();
            let fast = b.eval(t).unwrap();
            let slow = brute(&b, t);
            for (x, y) in fast.iter().zip(&slow) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn centering_reconstructs(
            xi in proptest::collection::vec(-3.0f64..3.0, 9),
            zs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 2..12),
        ) {
            let basis = SplineBasis::<f64>::new(4, 0, KnotRule::Uniform, None).unwrap();
            let mut z = Array2::zeros((zs.len(), 2));
            for (i, (a, b)) in zs.iter().enumerate() {
                z[[i, 0]] = *a;
                z[[i, 1]] = *b;
            }
            let d = AdditiveDesign::build(&[basis.clone(), basis], z.view()).unwrap();
            let c = d.center_g(&xi).unwrap();
            for comp in &c.components {
                let mean = comp.iter().sum::<f64>() / comp.len() as f64;
                prop_assert!(mean.abs() < 1e-12);
            }
            for i in 0..zs.len() {
                let direct: f64 = (0..9).map(|k| d.matrix()[[i, k]] * xi[k]).sum();
                prop_assert!((c.total(i) - direct).abs() < 1e-10);
            }
        }
    }
}
