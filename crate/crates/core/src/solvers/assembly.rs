use std::collections::BTreeMap;

use rayon::prelude::*;

use super::quadrature::tensor_rule;
use super::SolverError;
use crate::derham::{complex_matrices_float, ComplexMatrices};
use crate::hierarchy::{RefinementDomains, Variant};
use crate::linalg::SparseMatrix;
use crate::tensor::{Element, P01, P10, P11, P00};

/// Values of every hierarchical basis function that is nonzero at one
/// point, in physical coordinates.
#[derive(Clone, Debug, Default)]
pub struct PointValues {
    pub phi: Vec<(usize, f64)>,
    pub grad: Vec<(usize, [f64; 2])>,
    pub v: Vec<(usize, [f64; 2])>,
    pub curl: Vec<(usize, f64)>,
    pub w: Vec<(usize, f64)>,
}

/// One quadrature point in physical coordinates.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

/// Galerkin matrices on the hierarchical spaces.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub m0: SparseMatrix<f64>,
    pub m1: SparseMatrix<f64>,
    pub m2: SparseMatrix<f64>,
    /// `⟨curl u, curl v⟩` on 1-forms.
    pub k: SparseMatrix<f64>,
    /// `B[v, τ] = ⟨grad τ, v⟩`, 1-forms by 0-forms.
    pub b: SparseMatrix<f64>,
}

/// Hierarchical de Rham spaces over `[0, s]²` ready for element-loop
/// integration.
#[derive(Clone, Debug)]
pub struct Discretization {
    domains: RefinementDomains,
    variant: Variant,
    scale: f64,
    complex: ComplexMatrices<f64>,
    // level-L row -> hierarchical (column, coefficient)
    rows0: SparseMatrix<f64>,
    rows1: SparseMatrix<f64>,
    rows2: SparseMatrix<f64>,
    rows_grad: SparseMatrix<f64>,
    rows_curl: SparseMatrix<f64>,
}

type Triplets = Vec<(usize, usize, f64)>;

fn add_to<const N: usize>(acc: &mut BTreeMap<usize, [f64; N]>, rows: &SparseMatrix<f64>, row: usize, comp: usize, val: f64) {
    for (col, c) in rows.column(row) {
        acc.entry(*col).or_insert([0.0; N])[comp] += c * val;
    }
}

impl Discretization {
    /// `scale` maps the parametric unit square onto `[0, scale]²`.
    pub fn new(domains: &RefinementDomains, variant: Variant, scale: f64) -> Self {
        let complex = complex_matrices_float(domains, variant);
        let rows = |m: &SparseMatrix<f64>| m.transpose();
        Self {
            domains: domains.clone(),
            variant,
            scale,
            rows0: rows(&complex.embeddings[0]),
            rows1: rows(&complex.embeddings[1]),
            rows2: rows(&complex.embeddings[2]),
            rows_grad: rows(&complex.grad),
            rows_curl: rows(&complex.curl),
            complex,
        }
    }

    pub fn domains(&self) -> &RefinementDomains {
        &self.domains
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn complex(&self) -> &ComplexMatrices<f64> {
        &self.complex
    }

    pub fn dims(&self) -> [usize; 3] {
        self.complex.dimensions()
    }

    /// Basis values at the physical point `(x, y)`. On a mesh line the
    /// values are one-sided.
    pub fn values_at(&self, x: f64, y: f64) -> Result<PointValues, SolverError> {
        let s = self.scale;
        let (xh, yh) = (x / s, y / s);
        let lc = self.domains.level(self.domains.max_level());

        let mut phi = BTreeMap::new();
        for (r, val) in lc.space(P00).basis_at(xh, yh)? {
            add_to::<1>(&mut phi, &self.rows0, r, 0, val);
        }
        let mut v = BTreeMap::new();
        let mut grad = BTreeMap::new();
        for (comp, p) in [P10, P01].into_iter().enumerate() {
            let off = lc.block_offset(p);
            for (r, val) in lc.space(p).basis_at(xh, yh)? {
                add_to::<2>(&mut v, &self.rows1, off + r, comp, val);
                add_to::<2>(&mut grad, &self.rows_grad, off + r, comp, val);
            }
        }
        let mut w = BTreeMap::new();
        let mut curl = BTreeMap::new();
        for (r, val) in lc.space(P11).basis_at(xh, yh)? {
            add_to::<1>(&mut w, &self.rows2, r, 0, val);
            add_to::<1>(&mut curl, &self.rows_curl, r, 0, val);
        }
        let s2 = s * s;
        Ok(PointValues {
            phi: phi.into_iter().map(|(c, [a])| (c, a)).collect(),
            grad: grad.into_iter().map(|(c, [a, b])| (c, [a / s, b / s])).collect(),
            v: v.into_iter().map(|(c, [a, b])| (c, [a / s, b / s])).collect(),
            curl: curl.into_iter().map(|(c, [a])| (c, a / s2)).collect(),
            w: w.into_iter().map(|(c, [a])| (c, a / s2)).collect(),
        })
    }

    /// Tensor Gauss points with `extra + p_k + 1` nodes per direction on one
    /// active element.
    pub fn element_rule(&self, level: usize, e: Element, extra: usize) -> Vec<QuadPoint> {
        let (x, y) = self.domains.level(level).mesh().bounds(e);
        let s = self.scale;
        let p = self.domains.degree();
        tensor_rule([x[0] * s, x[1] * s], [y[0] * s, y[1] * s], [p[0] + 1 + extra, p[1] + 1 + extra])
            .into_iter()
            .map(|(x, y, weight)| QuadPoint { x, y, weight })
            .collect()
    }

    fn element_matrices(&self, level: usize, e: Element) -> Result<[Triplets; 5], SolverError> {
        let mut out: [BTreeMap<(usize, usize), f64>; 5] = Default::default();
        for q in self.element_rule(level, e, 0) {
            let pv = self.values_at(q.x, q.y)?;
            let wt = q.weight;
            for (a, fa) in &pv.phi {
                for (b, fb) in &pv.phi {
                    *out[0].entry((*a, *b)).or_default() += wt * fa * fb;
                }
            }
            for (a, va) in &pv.v {
                for (b, vb) in &pv.v {
                    *out[1].entry((*a, *b)).or_default() += wt * (va[0] * vb[0] + va[1] * vb[1]);
                }
                for (b, gb) in &pv.grad {
                    *out[4].entry((*a, *b)).or_default() += wt * (va[0] * gb[0] + va[1] * gb[1]);
                }
            }
            for (a, wa) in &pv.w {
                for (b, wb) in &pv.w {
                    *out[2].entry((*a, *b)).or_default() += wt * wa * wb;
                }
            }
            for (a, ca) in &pv.curl {
                for (b, cb) in &pv.curl {
                    *out[3].entry((*a, *b)).or_default() += wt * ca * cb;
                }
            }
        }
        Ok(out.map(|m| m.into_iter().map(|((r, c), v)| (r, c, v)).collect()))
    }

    /// Element-loop assembly over the hierarchical mesh.
    pub fn assemble(&self) -> Result<AssembledSystem, SolverError> {
        let elements = self.domains.mesh_elements();
        let locals: Vec<[Triplets; 5]> = elements
            .par_iter()
            .map(|(l, e)| self.element_matrices(*l, *e))
            .collect::<Result<_, _>>()?;
        let [n0, n1, n2] = self.dims();
        let shapes = [(n0, n0), (n1, n1), (n2, n2), (n1, n1), (n1, n0)];
        let mut mats = shapes.iter().enumerate().map(|(k, &(r, c))| {
            SparseMatrix::from_triplets(r, c, locals.iter().flat_map(|loc| loc[k].iter().copied()))
                .expect("indices come from the bases")
        });
        let mut next = || mats.next().expect("five matrices");
        Ok(AssembledSystem { m0: next(), m1: next(), m2: next(), k: next(), b: next() })
    }

    /// `F[a] = ⟨f, v_a⟩` over 1-forms.
    pub fn load_1form(&self, f: &(dyn Fn(f64, f64) -> [f64; 2] + Sync)) -> Result<Vec<f64>, SolverError> {
        let n1 = self.dims()[1];
        let parts: Vec<Vec<(usize, f64)>> = self
            .domains
            .mesh_elements()
            .par_iter()
            .map(|(l, e)| {
                let mut acc = Vec::new();
                for q in self.element_rule(*l, *e, 3) {
                    let fv = f(q.x, q.y);
                    for (a, va) in self.values_at(q.x, q.y)?.v {
                        acc.push((a, q.weight * (fv[0] * va[0] + fv[1] * va[1])));
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_, SolverError>>()?;
        let mut out = vec![0.0; n1];
        for (a, v) in parts.into_iter().flatten() {
            out[a] += v;
        }
        Ok(out)
    }

    /// Value of the 1-form with hierarchical coefficients `coeffs`.
    pub fn eval_1form(&self, coeffs: &[f64], x: f64, y: f64) -> Result<[f64; 2], SolverError> {
        let mut out = [0.0; 2];
        for (a, va) in self.values_at(x, y)?.v {
            out[0] += coeffs[a] * va[0];
            out[1] += coeffs[a] * va[1];
        }
        Ok(out)
    }

    /// Squared L² error of a 1-form against `u` on every active element,
    /// in `mesh_elements` order.
    pub fn element_errors_1form(
        &self,
        coeffs: &[f64],
        u: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
    ) -> Result<Vec<f64>, SolverError> {
        self.domains
            .mesh_elements()
            .par_iter()
            .map(|(l, e)| {
                let mut err = 0.0;
                for q in self.element_rule(*l, *e, 4) {
                    let uh = self.eval_1form(coeffs, q.x, q.y)?;
                    let ue = u(q.x, q.y);
                    err += q.weight * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
                }
                Ok(err)
            })
            .collect()
    }
}
