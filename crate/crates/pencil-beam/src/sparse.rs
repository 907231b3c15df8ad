//! Compressed sparse row matrices sized for meshes up to a few hundred
//! thousand unknowns, plus the operator abstraction shared by the direct
//! and Krylov solvers.

use crate::error::{Error, Result};
use std::path::Path;

/// Square or rectangular CSR matrix with deterministic storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    /// Row pointers, length `nrows + 1`.
    indptr: Vec<usize>,
    /// Column indices, sorted ascending within each row.
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Anything that can apply itself to a vector. Implemented by
/// `SparseMatrix` and by the matrix-free Kronecker operators.
pub trait LinOp {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// y = A x
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Diagonal of the operator, used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

impl SparseMatrix {
    /// Builds from unordered COO triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        // scatter into per-row buckets, then sort and merge duplicates
        let mut counts = vec![0usize; nrows];
        for &(r, _, _) in triplets {
            counts[r] += 1;
        }
        let mut start = vec![0usize; nrows + 1];
        for r in 0..nrows {
            start[r + 1] = start[r] + counts[r];
        }
        let mut rowbuf: Vec<(usize, f64)> = vec![(0, 0.0); triplets.len()];
        let mut cursor = start.clone();
        for &(r, c, v) in triplets {
            rowbuf[cursor[r]] = (c, v);
            cursor[r] += 1;
        }
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for r in 0..nrows {
            let slice = &mut rowbuf[start[r]..start[r + 1]];
            slice.sort_by_key(|&(c, _)| c);
            for &(c, v) in slice.iter() {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((*c, r, *v));
            }
        }
        SparseMatrix::from_triplets(self.ncols, self.nrows, &triplets)
            .expect("transpose of a valid matrix is valid")
    }

    /// alpha * self + beta * other. Panics on shape mismatch: mixing
    /// operator shapes is a programming error, not a runtime condition.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!(
            (self.nrows, self.ncols),
            (other.nrows, other.ncols),
            "add_scaled shape mismatch"
        );
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((r, *c, alpha * *v));
            }
            let (cols, vals) = other.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((r, *c, beta * *v));
            }
        }
        SparseMatrix::from_triplets(self.nrows, self.ncols, &triplets)
            .expect("shape preserved")
    }

    /// Sum of all stored entries (for mass-conservation audits).
    pub fn values_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Zeroes the listed rows in place.
    pub fn zero_rows(&mut self, rows: &[usize]) {
        for &r in rows {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            for v in &mut self.values[a..b] {
                *v = 0.0;
            }
        }
    }

    /// Sets diagonal entries of the listed rows to 1.0, inserting if absent.
    pub fn set_unit_diagonal(&self, rows: &[usize]) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.nnz() + rows.len());
        let mut is_unit = vec![false; self.nrows];
        for &r in rows {
            is_unit[r] = true;
        }
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            if is_unit[r] {
                triplets.push((r, r, 1.0));
            } else {
                for (c, v) in cols.iter().zip(vals) {
                    triplets.push((r, *c, *v));
                }
            }
        }
        SparseMatrix::from_triplets(self.nrows, self.ncols, &triplets)
            .expect("shape preserved")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                dense[r][*c] += *v;
            }
        }
        dense
    }

    /// Largest |A_ij - B_ij| over the union sparsity pattern.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0usize, 0usize);
            while i < ca.len() || j < cb.len() {
                let (c1, c2) = (
                    ca.get(i).copied().unwrap_or(usize::MAX),
                    cb.get(j).copied().unwrap_or(usize::MAX),
                );
                let d = if c1 == c2 {
                    let d = (va[i] - vb[j]).abs();
                    i += 1;
                    j += 1;
                    d
                } else if c1 < c2 {
                    i += 1;
                    va[i - 1].abs()
                } else {
                    j += 1;
                    vb[j - 1].abs()
                };
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Writes zero-based `row col value` coordinate triplets, one per line.
    pub fn export_coordinate(&self, path: &Path) -> Result<()> {
        use std::fmt::Write as _;
        let mut out = String::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(&mut out, "{} {} {}", r, c, v).expect("string write");
            }
        }
        crate::report::write_atomic(path, &out)
    }

    /// Symmetric adjacency of the sparsity pattern (self-loops removed).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        assert_eq!(self.nrows, self.ncols);
        let mut adj = vec![Vec::new(); self.nrows];
        for r in 0..self.nrows {
            let (cols, _) = self.row(r);
            for &c in cols {
                if c != r {
                    adj[r].push(c);
                    adj[c].push(r);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

impl LinOp for SparseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
