//! Exhaustive vertex enumeration shared by the solver checks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

pub fn brute_force(y: &[f64], u: &Array2<f64>, w: &[f64], taus: &[f64]) -> f64 {
    let (n, m) = u.dim();
    let rows: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let mut best = f64::INFINITY;
    for s in subsets(rows.len(), m) {
        let a: Vec<Vec<f64>> = s.iter().map(|&k| u.row(rows[k]).to_vec()).collect();
        let b: Vec<f64> = s.iter().map(|&k| y[rows[k]]).collect();
        if let Some(theta) = gauss_solve(a, b) {
            let obj: f64 = (0..n)
                .map(|i| {
                    let r = y[i] - (0..m).map(|j| u[[i, j]] * theta[j]).sum::<f64>();
                    w[i] * if r < 0.0 { r * (taus[i] - 1.0) } else { r * taus[i] }
                })
                .sum();
            best = best.min(obj);
        }
    }
    best
}

pub fn random_instance(seed: u64) -> (Vec<f64>, Array2<f64>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=3);
    let n = rng.gen_range(m + 1..=12);
    let discrete = rng.gen_bool(0.3);
    let mut u = Array2::zeros((n, m));
    for i in 0..n {
        u[[i, 0]] = 1.0;
        for j in 1..m {
            u[[i, j]] = if discrete {
                rng.gen_range(-2..=2) as f64
            } else {
                rng.gen_range(-2.0..2.0)
            };
        }
    }
    let y = (0..n)
        .map(|_| {
            if discrete {
                rng.gen_range(-3..=3) as f64
            } else {
                rng.gen_range(-3.0..3.0)
            }
        })
        .collect();
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
    if rng.gen_bool(0.3) {
        w[0] = 0.0;
    }
    let tau = rng.gen_range(0.05..0.95);
    (y, u, w, tau)
}
