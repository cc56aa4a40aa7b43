//! The hierarchical de Rham complex in level-`L` coordinates and the
//! dimensions of its cohomology.
//!
//! For Open boundary mode the reported `h0` is the raw kernel dimension of
//! grad (the constants), without quotienting by ℝ.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use thiserror::Error;

use crate::hierarchy::{FormBasis, RefinementDomains, Variant};
use crate::linalg::{common_denominator, rank_float, rank_integer_columns, scale_to_integer, ExactEchelon, SparseMatrix};
use crate::univariate::to_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DerhamError {
    #[error("grad of hierarchical 0-form {column} is not in the hierarchical 1-form space (residual {residual:e})")]
    ComplexViolated { column: usize, residual: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arithmetic {
    Exact,
    Float,
}

/// Embeddings of the three hierarchical spaces into level `L` and the
/// differential operators applied to them.
#[derive(Clone, Debug)]
pub struct ComplexMatrices<T: crate::linalg::Scalar> {
    /// Level-`L` coefficients of the X⁰, X¹, X² bases, one column per
    /// function.
    pub embeddings: [SparseMatrix<T>; 3],
    /// grad of each hierarchical 0-form, in level-`L` X¹ coordinates.
    pub grad: SparseMatrix<T>,
    /// curl of each hierarchical 1-form, in level-`L` X² coordinates.
    pub curl: SparseMatrix<T>,
}

impl<T: crate::linalg::Scalar> ComplexMatrices<T> {
    pub fn dimensions(&self) -> [usize; 3] {
        [0, 1, 2].map(|j| self.embeddings[j].ncols())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyReport {
    /// `(h0, h1, h2)`
    pub h: [usize; 3],
    pub dims: [usize; 3],
    pub rank_grad: usize,
    pub rank_curl: usize,
    pub arithmetic: Arithmetic,
}

impl CohomologyReport {
    fn from_ranks(dims: [usize; 3], rank_grad: usize, rank_curl: usize, arithmetic: Arithmetic) -> Self {
        let h = [dims[0] - rank_grad, dims[1] - rank_curl - rank_grad, dims[2] - rank_curl];
        Self { h, dims, rank_grad, rank_curl, arithmetic }
    }
}

/// Integer matrices: every column is a positive multiple of the true one,
/// and grad and curl share one scale so `curl · grad = 0` still holds.
pub fn build_complex_exact(domains: &RefinementDomains, variant: Variant) -> Result<ComplexMatrices<BigInt>, DerhamError> {
    let bases = [0, 1, 2].map(|j| FormBasis::integer(domains, j, variant));
    let lc = domains.level(domains.max_level());
    let g = lc.grad_matrix();
    let c = lc.curl_matrix();
    let scale = common_denominator(&[&g, &c]);
    let g = scale_to_integer(&g, &scale);
    let c = scale_to_integer(&c, &scale);
    let grad = g.matmul(bases[0].matrix()).expect("grad acts on X⁰");
    let curl = c.matmul(bases[1].matrix()).expect("curl acts on X¹");

    let mut span = ExactEchelon::new();
    for col in bases[1].matrix().columns() {
        span.insert(col);
    }
    for (j, col) in grad.columns().iter().enumerate() {
        if !span.contains(col) {
            return Err(DerhamError::ComplexViolated { column: j, residual: f64::NAN });
        }
    }
    let [b0, b1, b2] = bases;
    Ok(ComplexMatrices { embeddings: [b0.matrix().clone(), b1.matrix().clone(), b2.matrix().clone()], grad, curl })
}

fn least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(0, b.ncols());
    }
    a.clone().svd(true, true).solve(b, 1e-12).expect("both factors computed")
}

/// Float matrices without the span check of [`build_complex_float`].
pub fn complex_matrices_float(domains: &RefinementDomains, variant: Variant) -> ComplexMatrices<f64> {
    let bases = [0, 1, 2].map(|j| FormBasis::float(domains, j, variant));
    let lc = domains.level(domains.max_level());
    let g = lc.grad_matrix().map(to_f64);
    let c = lc.curl_matrix().map(to_f64);
    let grad = g.matmul(bases[0].matrix()).expect("grad acts on X⁰");
    let curl = c.matmul(bases[1].matrix()).expect("curl acts on X¹");
    let [b0, b1, b2] = bases;
    ComplexMatrices { embeddings: [b0.matrix().clone(), b1.matrix().clone(), b2.matrix().clone()], grad, curl }
}

/// Float matrices, checking by least squares that every gradient lies in
/// the 1-form span.
pub fn build_complex_float(domains: &RefinementDomains, variant: Variant) -> Result<ComplexMatrices<f64>, DerhamError> {
    let m = complex_matrices_float(domains, variant);
    let r1 = m.embeddings[1].to_dense_f64();
    let gd = m.grad.to_dense_f64();
    let x = least_squares(&r1, &gd);
    let res = &r1 * &x - &gd;
    for j in 0..gd.ncols() {
        let scale = gd.column(j).norm().max(1.0);
        let r = res.column(j).norm() / scale;
        if r > 1e-10 {
            return Err(DerhamError::ComplexViolated { column: j, residual: r });
        }
    }
    Ok(m)
}

pub fn cohomology_exact(m: &ComplexMatrices<BigInt>) -> CohomologyReport {
    let rg = rank_integer_columns(m.grad.columns().iter().map(|c| c.as_slice()));
    let rc = rank_integer_columns(m.curl.columns().iter().map(|c| c.as_slice()));
    CohomologyReport::from_ranks(m.dimensions(), rg, rc, Arithmetic::Exact)
}

pub fn cohomology_float(m: &ComplexMatrices<f64>) -> CohomologyReport {
    CohomologyReport::from_ranks(m.dimensions(), rank_float(&m.grad), rank_float(&m.curl), Arithmetic::Float)
}

/// Cohomology dimensions of the hierarchical complex over `domains`.
pub fn cohomology(domains: &RefinementDomains, variant: Variant, arithmetic: Arithmetic) -> Result<CohomologyReport, DerhamError> {
    Ok(match arithmetic {
        Arithmetic::Exact => cohomology_exact(&build_complex_exact(domains, variant)?),
        Arithmetic::Float => cohomology_float(&build_complex_float(domains, variant)?),
    })
}

/// Orthonormal basis (Euclidean, in hierarchical 1-form coefficients) of
/// the 1-forms with zero curl orthogonal to every gradient.
pub fn harmonic_basis(m: &ComplexMatrices<f64>) -> Vec<DVector<f64>> {
    let r1 = m.embeddings[1].to_dense_f64();
    let n1 = r1.ncols();
    if n1 == 0 {
        return Vec::new();
    }
    let grads = least_squares(&r1, &m.grad.to_dense_f64());
    let curl = m.curl.to_dense_f64();
    let rows = curl.nrows() + grads.ncols();
    let mut stacked = DMatrix::zeros(rows.max(n1), n1);
    stacked.view_mut((0, 0), (curl.nrows(), n1)).copy_from(&curl);
    stacked.view_mut((curl.nrows(), 0), (grads.ncols(), n1)).copy_from(&grads.transpose());
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-10 * smax {
            out.push(v_t.row(k).transpose());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactness::{exact_refine, RefineOptions};
    use crate::hierarchy::ElementSet;
    use crate::tensor::{MultiIndex, P00};
    use crate::univariate::BoundaryMode;

    fn problematic() -> RefinementDomains {
        let base = RefinementDomains::uniform([4, 4], [2, 2], BoundaryMode::Homogeneous).unwrap();
        RefinementDomains::from_generators(base.base_knots().clone(), &[vec![MultiIndex::new(1, 1), MultiIndex::new(3, 3)]])
            .unwrap()
    }

    #[test]
    fn uniform_meshes_are_exact() {
        let d = RefinementDomains::uniform([4, 3], [2, 3], BoundaryMode::Homogeneous).unwrap();
        for a in [Arithmetic::Exact, Arithmetic::Float] {
            assert_eq!(cohomology(&d, Variant::Hierarchical, a).unwrap().h, [0, 0, 1]);
        }
        let d = RefinementDomains::uniform([4, 4], [3, 3], BoundaryMode::Open).unwrap();
        assert_eq!(cohomology(&d, Variant::Truncated, Arithmetic::Exact).unwrap().h, [1, 0, 0]);
    }

    #[test]
    fn problematic_mesh_has_one_harmonic_field() {
        let d = problematic();
        for v in [Variant::Hierarchical, Variant::Truncated] {
            let e = cohomology(&d, v, Arithmetic::Exact).unwrap();
            let f = cohomology(&d, v, Arithmetic::Float).unwrap();
            assert_eq!(e.h, [0, 1, 1]);
            assert_eq!((e.rank_grad, e.rank_curl), (f.rank_grad, f.rank_curl));
        }
        let m = build_complex_float(&d, Variant::Truncated).unwrap();
        let h = harmonic_basis(&m);
        assert_eq!(h.len(), 1);
        let curl_h = m.curl.to_dense_f64() * &h[0];
        assert!(curl_h.norm() < 1e-9);
        let r1 = m.embeddings[1].to_dense_f64();
        let x = least_squares(&r1, &m.grad.to_dense_f64());
        assert!((x.transpose() * &h[0]).norm() < 1e-9);
    }

    #[test]
    fn exact_refine_restores_exactness() {
        let base = RefinementDomains::uniform([4, 4], [2, 2], BoundaryMode::Homogeneous).unwrap();
        let d = RefinementDomains::from_generators(base.base_knots().clone(), &[vec![MultiIndex::new(1, 1)]]).unwrap();
        let mut marked = ElementSet::empty([4, 4]);
        marked.insert_rect(&d.level(0).space(P00).support_elements(&MultiIndex::new(3, 3)));
        let out = exact_refine(&d, &[marked], RefineOptions::default()).unwrap();
        assert_eq!(cohomology(&out.domains, Variant::Truncated, Arithmetic::Exact).unwrap().h, [0, 0, 1]);
        let m = build_complex_float(&out.domains, Variant::Truncated).unwrap();
        assert!(harmonic_basis(&m).is_empty());
    }

    #[test]
    fn curl_of_grad_vanishes_exactly() {
        let m = build_complex_exact(&problematic(), Variant::Hierarchical).unwrap();
        let lc_curl = problematic().level(1).curl_matrix();
        let scale = common_denominator(&[&lc_curl, &problematic().level(1).grad_matrix()]);
        let c = scale_to_integer(&lc_curl, &scale);
        assert!(c.matmul(&m.grad).unwrap().is_zero());
    }
}
