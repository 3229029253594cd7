//! Small sparse linear algebra kernel: CSR storage assembled from triplets and
//! an envelope (skyline) Cholesky factorization on a reverse Cuthill-McKee
//! ordering. Mesh matrices here are a few thousand rows at most, for which a
//! banded direct solve is both fast and bitwise deterministic.

use std::collections::VecDeque;

use crate::error::SolveError;

/// Square sparse matrix in compressed sparse row form with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of bounds for n = {n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Principal submatrix on the rows/columns mapped by `reduced`
    /// (`reduced[i] = Some(k)` keeps row `i` as row `k`).
    pub fn principal_submatrix(&self, reduced: &[Option<usize>], m: usize) -> CsrMatrix {
        let mut triplets = Vec::new();
        for i in 0..self.n {
            let Some(ri) = reduced[i] else { continue };
            for (j, v) in self.row(i) {
                if let Some(rj) = reduced[j] {
                    triplets.push((ri, rj, v));
                }
            }
        }
        CsrMatrix::from_triplets(m, triplets)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Reverse Cuthill-McKee ordering of the (symmetric) sparsity graph.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut neighbours = Vec::new();
    while order.len() < n {
        // Start each component from a minimum-degree vertex.
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]));
            neighbours.sort_by_key(|&j| (degree[j], j));
            for &j in &neighbours {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A P^T = L L^T` of a symmetric positive
/// definite matrix.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    /// Offset of each row's first stored entry in `data`.
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv_perm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let col = inv_perm[j];
                if col < first[new] {
                    first[new] = col;
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut len = 0;
        for (i, &f) in first.iter().enumerate() {
            offset.push(len);
            len += i - f + 1;
        }
        offset.push(len);
        let mut data = vec![0.0; len];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let col = inv_perm[j];
                if col <= new {
                    data[offset[new] + col - first[new]] += v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut sum = data[offset[i] + j - fi];
                for k in k0..j {
                    sum -= data[offset[i] + k - fi] * data[offset[j] + k - fj];
                }
                if j < i {
                    data[offset[i] + j - fi] = sum / data[offset[j] + j - fj];
                } else {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(SolveError::SingularSystem {
                            row: perm[i],
                            pivot: sum,
                        });
                    }
                    data[offset[i] + i - fi] = sum.sqrt();
                }
            }
        }
        Ok(Self {
            perm,
            inv_perm,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L z = P b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let mut sum = x[i];
            for k in fi..i {
                sum -= row[k - fi] * x[k];
            }
            x[i] = sum / row[i - fi];
        }
        // L^T w = z, column-oriented sweep over rows of L.
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
        (0..n).map(|old| x[self.inv_perm[old]]).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
