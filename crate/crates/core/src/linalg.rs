//! Small dense helpers shared by the solver and the fitting layer.

use crate::Scalar;

/// Row-major square matrix inverse by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol * max|a|`.
pub(crate) fn invert<T: Scalar>(a: &[T], n: usize, tol: T) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if n == 0 {
        return Some(Vec::new());
    }
    if scale == T::zero() {
        return None;
    }
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in (col + 1)..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= tol * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
                inv.swap(col * n + k, piv * n + k);
            }
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == T::zero() {
                continue;
            }
            for k in 0..n {
                let mv = m[col * n + k];
                let iv = inv[col * n + k];
                m[r * n + k] -= f * mv;
                inv[r * n + k] -= f * iv;
            }
        }
    }
    Some(inv)
}

/// Solves `a x = b` for a row-major square `a`.
pub(crate) fn solve<T: Scalar>(a: &[T], b: &[T], tol: T) -> Option<Vec<T>> {
    let n = b.len();
    let inv = invert(a, n, tol)?;
    Some(
        (0..n)
            .map(|i| (0..n).map(|k| inv[i * n + k] * b[k]).sum())
            .collect(),
    )
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_small_matrix() {
        let a = [4.0f64, 7.0, 2.0, 6.0];
        let inv = invert(&a, 2, 1e-12).unwrap();
        let expect = [0.6, -0.7, -0.2, 0.4];
        for (x, y) in inv.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(invert(&a, 2, 1e-12).is_none());
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = [0.0, 1.0, 1.0, 0.0];
        let x = solve(&a, &[3.0, 5.0], 1e-12).unwrap();
        assert_eq!(x, vec![5.0, 3.0]);
    }
}
