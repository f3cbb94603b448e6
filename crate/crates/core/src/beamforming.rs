//! Zero-forcing beams from estimated channels.
//!
//! The beam of cluster `i` lies in the null space of the complementary
//! matrix stacking the conjugated estimates of every user outside cluster
//! `i`, so it causes no interference to those users as seen by the
//! transmitter.

use alloc::vec::Vec;

use crate::cmat::{norm, pivoted_qr, CMatrix};
use crate::channel::SystemGeometry;
use crate::{Error, Result, UserGrid, C64};

/// Singular values at or below this fraction of the largest one count as zero.
pub const NULL_SPACE_RTOL: f64 = 1e-9;

/// Rows `h_hat[n][k]^H` of every user outside cluster `i`, in (cluster,
/// user) order. Has `(N-1)K` rows and `M` columns.
pub fn complementary_matrix(estimates: &UserGrid<Vec<C64>>, i: usize, antennas: usize) -> CMatrix {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for n in 0..estimates.clusters() {
        if n == i {
            continue;
        }
        for h in estimates.cluster(n) {
            rows.push(h.iter().map(C64::conj).collect());
        }
    }
    let refs: Vec<&[C64]> = rows.iter().map(Vec::as_slice).collect();
    CMatrix::from_rows(antennas, &refs)
}

/// Orthonormal basis of `{v : A v = 0}`.
///
/// Computed from a column-pivoted Householder QR of `A^H`: the trailing
/// columns of the unitary factor span the orthogonal complement of the row
/// space of `A`. Rank is decided by `|R_jj| <= tol * |R_11|`.
pub fn null_space_basis(a: &CMatrix, tol: f64) -> Result<Vec<Vec<C64>>> {
    let m = a.cols();
    if a.rows() >= m {
        return Err(Error::Geometry("complementary matrix has no guaranteed null space"));
    }
    if a.rows() == 0 {
        return Ok((0..m)
            .map(|j| {
                let mut v = alloc::vec![C64::new(0.0, 0.0); m];
                v[j] = C64::new(1.0, 0.0);
                v
            })
            .collect());
    }
    let (q, diag) = pivoted_qr(&a.conj_transpose());
    let lead = diag.first().copied().unwrap_or(0.0);
    let rank = diag.iter().take_while(|&&d| d > tol * lead && d > 0.0).count();
    Ok((rank..m).map(|j| q.column(j)).collect())
}

/// `(sum_j theta_j u_j) / |sum_j theta_j u_j|` for simplex weights `theta`.
pub fn build_beam(basis: &[Vec<C64>], weights: &[f64]) -> Result<Vec<C64>> {
    let first = basis.first().ok_or(Error::Geometry("empty null-space basis"))?;
    if weights.len() != basis.len() {
        return Err(Error::Shape {
            expected: basis.len(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|&w| !(w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("beam weights must be positive and sum to one"));
    }
    let mut w = alloc::vec![C64::new(0.0, 0.0); first.len()];
    for (u, &t) in basis.iter().zip(weights) {
        for (acc, z) in w.iter_mut().zip(u) {
            *acc += z * t;
        }
    }
    let s = norm(&w);
    if !(s > 0.0) {
        return Err(Error::Geometry("beam combination vanished"));
    }
    Ok(w.into_iter().map(|z| z / s).collect())
}

/// How the null-space basis vectors are weighted into a beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamWeights {
    /// `theta_j = 1 / N_u`.
    #[default]
    Uniform,
}

impl BeamWeights {
    fn weights(self, count: usize) -> Vec<f64> {
        match self {
            BeamWeights::Uniform => alloc::vec![1.0 / count as f64; count],
        }
    }
}

/// One unit-norm transmit beam per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    pub beams: Vec<Vec<C64>>,
    /// Null-space dimension used for the beams (the minimum over clusters).
    pub null_dim: usize,
}

/// Builds the zero-forcing beam of every cluster from `estimates`.
pub fn zf_beams(
    estimates: &UserGrid<Vec<C64>>,
    geometry: &SystemGeometry,
    policy: BeamWeights,
) -> Result<BeamSet> {
    let m = geometry.antennas();
    let mut beams = Vec::with_capacity(geometry.clusters());
    let mut null_dim = usize::MAX;
    for i in 0..geometry.clusters() {
        let a = complementary_matrix(estimates, i, m);
        let basis = null_space_basis(&a, NULL_SPACE_RTOL)?;
        if basis.is_empty() {
            return Err(Error::Geometry("zero-dimensional null space"));
        }
        null_dim = null_dim.min(basis.len());
        beams.push(build_beam(&basis, &policy.weights(basis.len()))?);
    }
    Ok(BeamSet { beams, null_dim })
}
