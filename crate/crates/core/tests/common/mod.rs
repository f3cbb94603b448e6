#![allow(dead_code)]

use nalgebra::DMatrix;
use noma_core::{C64, UserGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature on [a, b].
pub fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Ei(x) for x < 0 from its defining integral, written as
/// `-E1(z) = -e^{-z} int_0^inf e^{-u} / (z + u) du` with `u = e^v`.
pub fn ei_by_quadrature(x: f64) -> f64 {
    let z = -x;
    let f = |v: f64| {
        let u = v.exp();
        (-u).exp() * u / (z + u)
    };
    let lo = z.ln().min(0.0) - 40.0;
    let hi = 4.5;
    let mut total = 0.0;
    let pieces = 64;
    let w = (hi - lo) / pieces as f64;
    for i in 0..pieces {
        let a = lo + w * i as f64;
        total += simpson(&f, a, a + w, 1e-17);
    }
    -(-z).exp() * total
}

/// `E[log2(1 + eta X)]` by quadrature against the exponential density.
pub fn mean_log2_1p_by_quadrature(eta: f64) -> f64 {
    let f = |x: f64| (1.0 + eta * x).log2() * (-x).exp();
    (0..80).map(|i| simpson(&f, i as f64, i as f64 + 1.0, 1e-15)).sum()
}

/// Draws of `sum_i eta_i X_i`.
pub fn weighted_exp_samples(scales: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| scales.iter().map(|s| s * <Exp1 as Distribution<f64>>::sample(&Exp1, &mut r)).sum())
        .collect()
}

pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// Numerical rank from an SVD.
pub fn svd_rank(rows: &[Vec<C64>], cols: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let s = m.svd(false, false).singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&v| v > 1e-9 * top).count()
}

/// Independent evaluation of the signal-side and interference-side scale
/// lists straight from their branch definitions.
pub fn scale_lists(alpha: &UserGrid<f64>, rho: &UserGrid<f64>, p: &UserGrid<f64>, n: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let a = alpha[(n, k)];
    let mut eta = Vec::new();
    let mut beta = Vec::new();
    for q in 0..alpha.clusters() {
        let cluster_total: f64 = (0..alpha.users_per_cluster()).map(|l| p[(q, l)]).sum();
        if q == n {
            eta.push(a * (0..=k).map(|j| p[(n, j)]).sum::<f64>());
            if k > 0 {
                beta.push(a * (0..k).map(|j| p[(n, j)]).sum::<f64>());
            }
        } else {
            eta.push(a * (1.0 - rho[(n, k)]) * cluster_total);
            beta.push(a * (1.0 - rho[(n, k)]) * cluster_total);
        }
    }
    (eta, beta)
}

/// Exhaustive integer minimization of `sum_u c_u 2^{-b_u / d}` subject to
/// `sum_u b_u <= budget`.
pub fn brute_force_bits(c: &[f64], d: f64, budget: u32) -> (Vec<u32>, f64) {
    fn rec(c: &[f64], d: f64, left: u32, cur: &mut Vec<u32>, best: &mut (Vec<u32>, f64)) {
        if cur.len() == c.len() {
            let v: f64 = c.iter().zip(cur.iter()).map(|(c, &b)| c * (-(b as f64) / d).exp2()).sum();
            if v < best.1 {
                *best = (cur.clone(), v);
            }
            return;
        }
        for b in 0..=left {
            cur.push(b);
            rec(c, d, left - b, cur, best);
            cur.pop();
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    rec(c, d, budget, &mut Vec::new(), &mut best);
    best
}
