use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use super::LinalgError;

/// Ring operations needed by [`SparseMatrix`]. Implemented for `f64`,
/// `BigInt` and `BigRational` through the blanket impl.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + fmt::Debug
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
        + Send
        + Sync
{
}

/// Sparse vector: strictly increasing indices, no stored zeros.
pub type SparseVec<T> = Vec<(usize, T)>;

/// Column-compressed sparse matrix. Every column is sorted by row index and
/// holds no explicit zeros.
#[derive(Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    cols: Vec<SparseVec<T>>,
}

impl<T: Scalar> fmt::Debug for SparseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseMatrix({}x{}, nnz={})", self.nrows, self.ncols, self.nnz())
    }
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, cols: vec![Vec::new(); ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let cols = (0..n).map(|j| vec![(j, T::one())]).collect();
        Self { nrows: n, ncols: n, cols }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and resulting zeros dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut acc: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); ncols];
        for (r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(LinalgError::IndexOutOfBounds { row: r, col: c, nrows, ncols });
            }
            let slot = acc[c].entry(r).or_insert_with(T::zero);
            *slot = slot.clone() + v;
        }
        let cols = acc
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Ok(Self { nrows, ncols, cols })
    }

    /// Builds a matrix from sparse columns. Columns are normalized (sorted,
    /// duplicates summed, zeros removed).
    pub fn from_columns(nrows: usize, columns: Vec<SparseVec<T>>) -> Result<Self, LinalgError> {
        let ncols = columns.len();
        let mut cols = Vec::with_capacity(ncols);
        for (c, col) in columns.into_iter().enumerate() {
            if let Some(&(r, _)) = col.iter().find(|(r, _)| *r >= nrows) {
                return Err(LinalgError::IndexOutOfBounds { row: r, col: c, nrows, ncols });
            }
            cols.push(normalize(col));
        }
        Ok(Self { nrows, ncols, cols })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column(&self, j: usize) -> &[(usize, T)] {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[SparseVec<T>] {
        &self.cols
    }

    pub fn into_columns(self) -> Vec<SparseVec<T>> {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        match self.cols[c].binary_search_by_key(&r, |(i, _)| *i) {
            Ok(k) => self.cols[c][k].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    /// Iterates over stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (*r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut cols: Vec<SparseVec<T>> = vec![Vec::new(); self.nrows];
        for (c, col) in self.cols.iter().enumerate() {
            for (r, v) in col {
                cols[*r].push((c, v.clone()));
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, cols }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        let cols = self
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(r, v)| (*r, f(v)))
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, cols }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|v| v.clone() * s.clone())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &SparseMatrix<T>) -> Result<Self, LinalgError> {
        if self.ncols != other.nrows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: (self.nrows, self.ncols),
                right: (other.nrows, other.ncols),
            });
        }
        let cols = other.cols.iter().map(|col| self.apply_sparse(col)).collect();
        Ok(Self { nrows: self.nrows, ncols: other.ncols, cols })
    }

    /// Applies the matrix to a sparse vector.
    pub fn apply_sparse(&self, x: &[(usize, T)]) -> SparseVec<T> {
        let mut acc: BTreeMap<usize, T> = BTreeMap::new();
        for (k, xk) in x {
            for (r, a) in &self.cols[*k] {
                let slot = acc.entry(*r).or_insert_with(T::zero);
                *slot = slot.clone() + a.clone() * xk.clone();
            }
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        if x.len() != self.ncols {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: (self.nrows, self.ncols),
                right: (x.len(), 1),
            });
        }
        let mut y = vec![T::zero(); self.nrows];
        for (c, col) in self.cols.iter().enumerate() {
            if x[c].is_zero() {
                continue;
            }
            for (r, v) in col {
                y[*r] = y[*r].clone() + v.clone() * x[c].clone();
            }
        }
        Ok(y)
    }

    /// Kronecker product `a ⊗ b`: entry `(ra*b.nrows + rb, ca*b.ncols + cb)`
    /// equals `a[ra,ca] * b[rb,cb]`, so the index of `b` runs fastest.
    pub fn kron(a: &SparseMatrix<T>, b: &SparseMatrix<T>) -> Self {
        let nrows = a.nrows * b.nrows;
        let ncols = a.ncols * b.ncols;
        let mut cols = Vec::with_capacity(ncols);
        for acol in &a.cols {
            for bcol in &b.cols {
                let mut col = Vec::with_capacity(acol.len() * bcol.len());
                for (ra, va) in acol {
                    for (rb, vb) in bcol {
                        let v = va.clone() * vb.clone();
                        if !v.is_zero() {
                            col.push((ra * b.nrows + rb, v));
                        }
                    }
                }
                cols.push(col);
            }
        }
        Self { nrows, ncols, cols }
    }

    /// Horizontal concatenation `[a | b | ...]`.
    pub fn hstack(blocks: &[&SparseMatrix<T>]) -> Result<Self, LinalgError> {
        let nrows = blocks.first().map_or(0, |b| b.nrows);
        let mut cols = Vec::new();
        for b in blocks {
            if b.nrows != nrows {
                return Err(LinalgError::DimensionMismatch {
                    op: "hstack",
                    left: (nrows, 0),
                    right: (b.nrows, b.ncols),
                });
            }
            cols.extend(b.cols.iter().cloned());
        }
        Ok(Self { nrows, ncols: cols.len(), cols })
    }

    /// Vertical concatenation.
    pub fn vstack(blocks: &[&SparseMatrix<T>]) -> Result<Self, LinalgError> {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut cols: Vec<SparseVec<T>> = vec![Vec::new(); ncols];
        let mut offset = 0;
        for b in blocks {
            if b.ncols != ncols {
                return Err(LinalgError::DimensionMismatch {
                    op: "vstack",
                    left: (0, ncols),
                    right: (b.nrows, b.ncols),
                });
            }
            for (c, col) in b.cols.iter().enumerate() {
                cols[c].extend(col.iter().map(|(r, v)| (r + offset, v.clone())));
            }
            offset += b.nrows;
        }
        Ok(Self { nrows: offset, ncols, cols })
    }

    /// Keeps the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let out_cols = self.cols[cols.clone()]
            .iter()
            .map(|col| {
                col.iter()
                    .filter(|(r, _)| rows.contains(r))
                    .map(|(r, v)| (r - rows.start, v.clone()))
                    .collect()
            })
            .collect();
        Self { nrows: rows.len(), ncols: cols.len(), cols: out_cols }
    }

    pub fn to_dense(&self, f: impl Fn(&T) -> f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = f(v);
        }
        m
    }
}

impl SparseMatrix<f64> {
    pub fn to_dense_f64(&self) -> DMatrix<f64> {
        self.to_dense(|v| *v)
    }

    pub fn from_dense(m: &DMatrix<f64>, drop_below: f64) -> Self {
        let cols = (0..m.ncols())
            .map(|c| {
                (0..m.nrows())
                    .filter(|&r| m[(r, c)].abs() > drop_below)
                    .map(|r| (r, m[(r, c)]))
                    .collect()
            })
            .collect();
        Self { nrows: m.nrows(), ncols: m.ncols(), cols }
    }
}

fn normalize<T: Scalar>(mut col: SparseVec<T>) -> SparseVec<T> {
    col.sort_by_key(|(r, _)| *r);
    let mut out: SparseVec<T> = Vec::with_capacity(col.len());
    for (r, v) in col {
        match out.last_mut() {
            Some((lr, lv)) if *lr == r => *lv = lv.clone() + v,
            _ => out.push((r, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}
