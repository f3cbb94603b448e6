//! Small dense complex linear algebra: just enough for null-space extraction.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;

use crate::C64;

/// `a^H b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(C64::norm_sqr).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Stacks the given vectors as rows.
    pub fn from_rows(cols: usize, rows: &[&[C64]]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "row length mismatch");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR with column pivoting of an `m x n` matrix.
///
/// Returns the full unitary factor `Q` (`m x m`) and the magnitudes of the
/// diagonal of `R`, which are non-increasing because of the pivoting.
pub fn pivoted_qr(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let m = a.rows();
    let n = a.cols();
    let mut r = a.clone();
    let mut q = CMatrix::identity(m);
    let steps = m.min(n);
    let mut diag = Vec::with_capacity(steps);
    let mut col_norms: Vec<f64> = (0..n).map(|j| norm_sqr(&r.column(j))).collect();

    for s in 0..steps {
        // pivot: remaining column with the largest trailing norm
        let (p, _) = col_norms
            .iter()
            .enumerate()
            .skip(s)
            .fold((s, -1.0), |best, (j, &v)| if v > best.1 { (j, v) } else { best });
        if p != s {
            for i in 0..m {
                let tmp = r[(i, s)];
                r[(i, s)] = r[(i, p)];
                r[(i, p)] = tmp;
            }
            col_norms.swap(s, p);
        }

        let x: Vec<C64> = (s..m).map(|i| r[(i, s)]).collect();
        let x_norm = norm(&x);
        if x_norm == 0.0 {
            diag.push(0.0);
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * x_norm;
        let mut v = x;
        v[0] -= alpha;
        let v_norm_sqr = norm_sqr(&v);
        if v_norm_sqr > 0.0 {
            // R <- H R on rows s.., columns s..
            for j in s..n {
                let dot: C64 = (s..m).map(|i| v[i - s].conj() * r[(i, j)]).sum();
                let f = dot * (2.0 / v_norm_sqr);
                for i in s..m {
                    r[(i, j)] -= v[i - s] * f;
                }
            }
            // Q <- Q H on columns s..
            for i in 0..m {
                let dot: C64 = (s..m).map(|c| q[(i, c)] * v[c - s]).sum();
                let f = dot * (2.0 / v_norm_sqr);
                for c in s..m {
                    q[(i, c)] -= f * v[c - s].conj();
                }
            }
        }
        diag.push(r[(s, s)].norm());
        for (j, cn) in col_norms.iter_mut().enumerate().skip(s + 1) {
            *cn = (*cn - r[(s, j)].norm_sqr()).max(0.0);
            // recompute when cancellation has eaten most of the value
            if *cn < 1e-10 * (1.0 + r[(s, j)].norm_sqr()) {
                *cn = ((s + 1)..m).map(|i| r[(i, j)].norm_sqr()).sum();
            }
        }
    }
    (q, diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn qr_reproduces_range_and_is_unitary() {
        let a = CMatrix::from_rows(
            3,
            &[
                &[c(1.0, 2.0), c(0.5, -1.0), c(3.0, 0.0)],
                &[c(0.0, 1.0), c(2.0, 2.0), c(-1.0, 0.5)],
            ],
        );
        let b = a.conj_transpose();
        let (q, diag) = pivoted_qr(&b);
        assert_eq!(diag.len(), 2);
        assert!(diag[0] >= diag[1]);
        for i in 0..3 {
            for j in 0..3 {
                let d = inner(&q.column(i), &q.column(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - c(expect, 0.0)).norm() < 1e-13);
            }
        }
        // the last column of Q is orthogonal to both columns of B
        let last = q.column(2);
        assert!(a.mul_vec(&last).iter().all(|z| z.norm() < 1e-12));
    }
}
