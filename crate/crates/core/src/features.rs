use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Fixed-dimension vector storing only its nonzero entries, sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector<T> {
    dim: usize,
    entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        SparseVector { dim, entries: Vec::new() }
    }

    /// Sums duplicate indices and drops zeros. Panics if an index is out of range.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, T)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, T)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            assert!(i < dim, "index {i} out of range for dimension {dim}");
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != T::zero());
        SparseVector { dim, entries: merged }
    }

    pub fn from_dense(values: &[T]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != T::zero())
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> T {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|at| self.entries[at].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// Dot product with a dense vector of at least `dim` entries.
    pub fn dot_dense(&self, dense: &[T]) -> T {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn dot(&self, other: &SparseVector<T>) -> T {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = T::zero();
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn norm_squared(&self) -> T {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Scales to unit L2 norm; the zero vector is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            for (_, v) in &mut self.entries {
                *v /= n;
            }
        }
        self
    }

    /// Cosine similarity; zero when either side is the zero vector.
    pub fn cosine(&self, other: &SparseVector<T>) -> T {
        let denom = self.norm() * other.norm();
        if denom > T::zero() {
            self.dot(other) / denom
        } else {
            T::zero()
        }
    }

    /// Appends `other`'s coordinates after this vector's.
    pub fn concat(mut self, other: &SparseVector<T>) -> Self {
        let offset = self.dim;
        self.entries
            .extend(other.entries.iter().map(|&(i, v)| (i + offset, v)));
        self.dim += other.dim;
        self
    }

    pub fn concat_dense(self, values: &[T]) -> Self {
        self.concat(&SparseVector::from_dense(values))
    }
}
