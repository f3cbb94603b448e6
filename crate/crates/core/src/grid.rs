//! Per-user tables indexed by (cluster, user).

use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Row-major `N x K` table holding one value per user.
///
/// Indices are zero-based: `(n, k)` is user `k` of cluster `n`. Within a
/// cluster, `k = 0` is the strongest user (largest large-scale gain).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UserGrid<T> {
    clusters: usize,
    users_per_cluster: usize,
    data: Vec<T>,
}

impl<T: Clone> UserGrid<T> {
    pub fn filled(clusters: usize, users_per_cluster: usize, value: T) -> Self {
        Self {
            clusters,
            users_per_cluster,
            data: alloc::vec![value; clusters * users_per_cluster],
        }
    }
}

impl<T> UserGrid<T> {
    pub fn from_fn(
        clusters: usize,
        users_per_cluster: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(clusters * users_per_cluster);
        for n in 0..clusters {
            for k in 0..users_per_cluster {
                data.push(f(n, k));
            }
        }
        Self {
            clusters,
            users_per_cluster,
            data,
        }
    }

    /// Builds a grid from nested rows, one row per cluster.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let clusters = rows.len();
        let users_per_cluster = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(clusters * users_per_cluster);
        for row in rows {
            if row.len() != users_per_cluster {
                return Err(Error::Shape {
                    expected: users_per_cluster,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            clusters,
            users_per_cluster,
            data,
        })
    }

    pub fn from_vec(clusters: usize, users_per_cluster: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != clusters * users_per_cluster {
            return Err(Error::Shape {
                expected: clusters * users_per_cluster,
                got: data.len(),
            });
        }
        Ok(Self {
            clusters,
            users_per_cluster,
            data,
        })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn users_per_cluster(&self) -> usize {
        self.users_per_cluster
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat position of user `(n, k)` in row-major order.
    pub fn flat_index(&self, n: usize, k: usize) -> usize {
        n * self.users_per_cluster + k
    }

    pub fn cluster(&self, n: usize) -> &[T] {
        let start = n * self.users_per_cluster;
        &self.data[start..start + self.users_per_cluster]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Iterates `((n, k), value)` in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let k_count = self.users_per_cluster.max(1);
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / k_count, i % k_count), v))
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> UserGrid<U> {
        UserGrid {
            clusters: self.clusters,
            users_per_cluster: self.users_per_cluster,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &UserGrid<U>) -> bool {
        self.clusters == other.clusters && self.users_per_cluster == other.users_per_cluster
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl UserGrid<f64> {
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Sum of the entries of cluster `n`.
    pub fn cluster_sum(&self, n: usize) -> f64 {
        self.cluster(n).iter().sum()
    }
}

impl<T> Index<(usize, usize)> for UserGrid<T> {
    type Output = T;

    fn index(&self, (n, k): (usize, usize)) -> &T {
        debug_assert!(n < self.clusters && k < self.users_per_cluster);
        &self.data[n * self.users_per_cluster + k]
    }
}

impl<T> IndexMut<(usize, usize)> for UserGrid<T> {
    fn index_mut(&mut self, (n, k): (usize, usize)) -> &mut T {
        debug_assert!(n < self.clusters && k < self.users_per_cluster);
        &mut self.data[n * self.users_per_cluster + k]
    }
}
