use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{LinalgError, SparseMatrix};

/// Rank from singular values, counting those above `1e-10 * sigma_max`.
pub fn rank_float(m: &SparseMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 || m.is_zero() {
        return 0;
    }
    let d = m.to_dense_f64();
    let d = if d.nrows() < d.ncols() { d.transpose() } else { d };
    let sv = d.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = 1e-10 * smax;
    sv.iter().filter(|s| **s > cut).count()
}

/// Eigenpairs of `K x = lambda M x`, ascending.
#[derive(Clone, Debug)]
pub struct GenEig {
    pub values: Vec<f64>,
    /// Columns are M-orthonormal eigenvectors.
    pub vectors: DMatrix<f64>,
}

/// Symmetric generalized eigenproblem with `M` positive definite.
pub fn sym_gen_eig(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<GenEig, LinalgError> {
    if k.shape() != m.shape() || k.nrows() != k.ncols() {
        return Err(LinalgError::DimensionMismatch {
            op: "sym_gen_eig",
            left: k.shape(),
            right: m.shape(),
        });
    }
    let chol = m.clone().cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
    let l = chol.l();
    let linv_k = l.solve_lower_triangular(k).ok_or(LinalgError::NotPositiveDefinite)?;
    let a = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or(LinalgError::NotPositiveDefinite)?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(k.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(LinalgError::NotPositiveDefinite)?;
    Ok(GenEig { values, vectors })
}

/// Blocks of the symmetric saddle system `[[a, bᵀ], [b, c]]`.
#[derive(Clone, Debug)]
pub struct SaddleBlocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub x: DVector<f64>,
    /// Set when the system was numerically singular and the least-norm
    /// solution was returned instead.
    pub singular: bool,
}

/// Solves the symmetric saddle system with LU. When inverse iteration on
/// the factors finds an eigenvalue below `1e-11 ‖A‖_F`, returns the
/// least-norm solution from a truncated eigendecomposition instead.
pub fn solve_saddle(blocks: &SaddleBlocks, rhs: &DVector<f64>) -> Result<SaddleSolution, LinalgError> {
    let (n0, n1) = (blocks.a.nrows(), blocks.c.nrows());
    if blocks.a.ncols() != n0
        || blocks.c.ncols() != n1
        || blocks.b.shape() != (n1, n0)
        || rhs.len() != n0 + n1
    {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_saddle",
            left: (n0 + n1, n0 + n1),
            right: (rhs.len(), 1),
        });
    }
    let n = n0 + n1;
    let mut full = DMatrix::zeros(n, n);
    full.view_mut((0, 0), (n0, n0)).copy_from(&blocks.a);
    full.view_mut((n0, 0), (n1, n0)).copy_from(&blocks.b);
    full.view_mut((0, n0), (n0, n1)).copy_from(&blocks.b.transpose());
    full.view_mut((n0, n0), (n1, n1)).copy_from(&blocks.c);

    if n == 0 {
        return Ok(SaddleSolution { x: DVector::zeros(0), singular: false });
    }
    let lu = full.clone().lu();
    let scale = full.norm();
    if lu.is_invertible() && smallest_magnitude_estimate(&lu, n) > SINGULAR_RATIO * scale {
        if let Some(x) = lu.solve(rhs) {
            return Ok(SaddleSolution { x, singular: false });
        }
    }
    Ok(SaddleSolution { x: least_norm_symmetric(full, rhs), singular: true })
}

/// Relative size below which the smallest eigenvalue magnitude counts as
/// zero.
const SINGULAR_RATIO: f64 = 1e-11;

/// Upper estimate of the smallest eigenvalue magnitude of a symmetric
/// matrix by inverse iteration on its LU factors.
fn smallest_magnitude_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, n: usize) -> f64 {
    let mut x = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    x /= x.norm();
    let mut est = f64::INFINITY;
    for _ in 0..30 {
        let Some(y) = lu.solve(&x) else { return 0.0 };
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return 0.0;
        }
        est = est.min(1.0 / norm);
        x = y / norm;
    }
    est
}

/// Least-norm least-squares solution from the symmetric eigendecomposition,
/// dropping eigenvalues below `1e-10 * max |λ|`.
fn least_norm_symmetric(full: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(full);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let proj = eig.eigenvectors.transpose() * rhs;
    let mut coeffs = DVector::zeros(proj.len());
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > 1e-10 * lmax {
            coeffs[k] = proj[k] / lam;
        }
    }
    eig.eigenvectors * coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn float_rank_of_outer_product_is_one() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j, ((i + 1) * (j + 2)) as f64))),
        )
        .unwrap();
        assert_eq!(rank_float(&m), 1);
        assert_eq!(rank_float(&SparseMatrix::zeros(2, 4)), 0);
    }

    #[test]
    fn generalized_eigs_of_diagonal_pencil() {
        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![6.0, 1.0, 0.0]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 4.0]));
        let e = sym_gen_eig(&k, &m).unwrap();
        assert_relative_eq!(e.values[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[2], 3.0, epsilon = 1e-14);
        let gram = e.vectors.transpose() * &m * &e.vectors;
        assert_relative_eq!(gram, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert!(sym_gen_eig(&k, &(-m)).is_err());
    }

    #[test]
    fn saddle_regular_and_singular() {
        let blocks = SaddleBlocks {
            a: DMatrix::from_row_slice(1, 1, &[-1.0]),
            b: DMatrix::from_row_slice(1, 1, &[1.0]),
            c: DMatrix::from_row_slice(1, 1, &[1.0]),
        };
        let s = solve_saddle(&blocks, &DVector::from_vec(vec![1.0, 3.0])).unwrap();
        assert!(!s.singular);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.x[1], 2.0, epsilon = 1e-14);

        let sing = SaddleBlocks {
            a: DMatrix::from_row_slice(1, 1, &[1.0]),
            b: DMatrix::from_row_slice(1, 1, &[1.0]),
            c: DMatrix::from_row_slice(1, 1, &[1.0]),
        };
        let s = solve_saddle(&sing, &DVector::from_vec(vec![2.0, 2.0])).unwrap();
        assert!(s.singular);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 1.0, epsilon = 1e-12);
        assert!(solve_saddle(&sing, &DVector::from_vec(vec![1.0])).is_err());
    }
}
