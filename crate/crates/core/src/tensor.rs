//! Tensor-product spline spaces on one level, the grad/curl operators
//! between them and the tensor mesh.
//!
//! Flat indices run with `i1` fastest, so an operator acting on direction 1
//! is the right Kronecker factor.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::linalg::{Scalar, SparseMatrix};
use crate::univariate::{
    derivative_matrix, subdivision_matrix, to_f64, Breakpoints, Form, KnotVector, Rational,
    SplineError, Support, UnivariateSpace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("point ({0}, {1}) lies on a mesh line")]
    Ambiguous(f64, f64),
    #[error("point ({0}, {1}) outside the open unit square")]
    OutsideDomain(f64, f64),
    #[error("levels are not nested")]
    NotNested,
}

/// 1-based tensor index `(i1, i2)`. Orders lexicographically.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub i1: usize,
    pub i2: usize,
}

impl MultiIndex {
    pub const fn new(i1: usize, i2: usize) -> Self {
        Self { i1, i2 }
    }

    /// Component `k` (0 for the first direction).
    pub fn get(&self, k: usize) -> usize {
        if k == 0 {
            self.i1
        } else {
            self.i2
        }
    }

    pub fn with(&self, k: usize, v: usize) -> Self {
        if k == 0 {
            Self::new(v, self.i2)
        } else {
            Self::new(self.i1, v)
        }
    }

    /// `self ± δ_k`, or `None` if the component would drop below 1.
    pub fn step(&self, k: usize, delta: isize) -> Option<Self> {
        let v = self.get(k) as isize + delta;
        (v >= 1).then(|| self.with(k, v as usize))
    }

    /// 1-norm distance.
    pub fn dist(&self, other: &Self) -> usize {
        self.i1.abs_diff(other.i1) + self.i2.abs_diff(other.i2)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i1, self.i2)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// 1-based element index: interval `e1` in direction 1 times `e2` in
/// direction 2.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Element {
    pub e1: usize,
    pub e2: usize,
}

impl Element {
    pub const fn new(e1: usize, e2: usize) -> Self {
        Self { e1, e2 }
    }
}

pub type FormPattern = [Form; 2];

pub const P00: FormPattern = [Form::Zero, Form::Zero];
pub const P10: FormPattern = [Form::One, Form::Zero];
pub const P01: FormPattern = [Form::Zero, Form::One];
pub const P11: FormPattern = [Form::One, Form::One];

/// Patterns of the three complex spaces: X⁰, the two blocks of X¹, X².
pub fn patterns_of_form(j: usize) -> &'static [FormPattern] {
    match j {
        0 => &[P00],
        1 => &[P10, P01],
        2 => &[P11],
        _ => &[],
    }
}

#[derive(Clone, Debug)]
pub struct TensorSupport {
    pub x: Support,
    pub y: Support,
}

impl TensorSupport {
    /// 0-based element ranges per direction.
    pub fn elements(&self) -> [Range<usize>; 2] {
        [self.x.intervals.clone(), self.y.intervals.clone()]
    }
}

#[derive(Clone, Debug)]
pub struct TensorSpace {
    level: usize,
    pattern: FormPattern,
    factors: [UnivariateSpace; 2],
}

impl TensorSpace {
    pub fn new(level: usize, pattern: FormPattern, kv: &[KnotVector; 2]) -> Self {
        let factors = [
            UnivariateSpace::new(kv[0].clone(), pattern[0]),
            UnivariateSpace::new(kv[1].clone(), pattern[1]),
        ];
        Self { level, pattern, factors }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn pattern(&self) -> FormPattern {
        self.pattern
    }

    pub fn factor(&self, k: usize) -> &UnivariateSpace {
        &self.factors[k]
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.factors[0].dimension(), self.factors[1].dimension()]
    }

    pub fn dimension(&self) -> usize {
        self.dims()[0] * self.dims()[1]
    }

    pub fn contains_index(&self, i: &MultiIndex) -> bool {
        let d = self.dims();
        i.i1 >= 1 && i.i2 >= 1 && i.i1 <= d[0] && i.i2 <= d[1]
    }

    pub fn flat(&self, i: &MultiIndex) -> Option<usize> {
        self.contains_index(i).then(|| (i.i2 - 1) * self.dims()[0] + (i.i1 - 1))
    }

    pub fn unflat(&self, f: usize) -> MultiIndex {
        let n1 = self.dims()[0];
        MultiIndex::new(f % n1 + 1, f / n1 + 1)
    }

    pub fn support(&self, i: &MultiIndex) -> Result<TensorSupport, TensorError> {
        Ok(TensorSupport { x: self.factors[0].support(i.i1)?, y: self.factors[1].support(i.i2)? })
    }

    /// 0-based element ranges covered by function `i`. Panics if `i` is out
    /// of range.
    pub fn support_elements(&self, i: &MultiIndex) -> [Range<usize>; 2] {
        [self.factors[0].interval_range(i.i1 - 1), self.factors[1].interval_range(i.i2 - 1)]
    }

    pub fn evaluate(&self, i: &MultiIndex, x: f64, y: f64) -> Result<f64, TensorError> {
        Ok(self.factors[0].evaluate(i.i1, x)? * self.factors[1].evaluate(i.i2, y)?)
    }

    /// Nonzero basis values at `(x, y)` as `(flat index, value)`.
    pub fn basis_at(&self, x: f64, y: f64) -> Result<Vec<(usize, f64)>, TensorError> {
        let (f1, v1) = self.factors[0].basis_at(x)?;
        let (f2, v2) = self.factors[1].basis_at(y)?;
        let n1 = self.dims()[0];
        let mut out = Vec::with_capacity(v1.len() * v2.len());
        for (b, vb) in v2.iter().enumerate() {
            for (a, va) in v1.iter().enumerate() {
                out.push(((f2 + b) * n1 + f1 + a, va * vb));
            }
        }
        Ok(out)
    }
}

/// All elements of one level.
#[derive(Clone, Debug)]
pub struct TensorMesh {
    level: usize,
    breaks: [Breakpoints; 2],
    breaks_f: [Vec<f64>; 2],
}

impl TensorMesh {
    pub fn new(level: usize, kv: &[KnotVector; 2]) -> Self {
        let breaks = [kv[0].breakpoints(), kv[1].breakpoints()];
        let breaks_f = [
            breaks[0].values().iter().map(to_f64).collect(),
            breaks[1].values().iter().map(to_f64).collect(),
        ];
        Self { level, breaks, breaks_f }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn breakpoints(&self, k: usize) -> &Breakpoints {
        &self.breaks[k]
    }

    /// Number of intervals per direction.
    pub fn dims(&self) -> [usize; 2] {
        [self.breaks[0].num_intervals(), self.breaks[1].num_intervals()]
    }

    pub fn num_elements(&self) -> usize {
        self.dims()[0] * self.dims()[1]
    }

    pub fn element_of(&self, x: f64, y: f64) -> Result<Element, TensorError> {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return Err(TensorError::OutsideDomain(x, y));
        }
        match (self.breaks[0].locate(x), self.breaks[1].locate(y)) {
            (Some(a), Some(b)) => Ok(Element::new(a + 1, b + 1)),
            _ => Err(TensorError::Ambiguous(x, y)),
        }
    }

    /// Corners `([x0, x1], [y0, y1])` of a 0-based element.
    pub fn bounds0(&self, a: usize, b: usize) -> ([f64; 2], [f64; 2]) {
        let (x, y) = (&self.breaks_f[0], &self.breaks_f[1]);
        ([x[a], x[a + 1]], [y[b], y[b + 1]])
    }

    pub fn bounds(&self, e: Element) -> ([f64; 2], [f64; 2]) {
        self.bounds0(e.e1 - 1, e.e2 - 1)
    }
}

/// The three tensor spaces of one level with their mesh.
#[derive(Clone, Debug)]
pub struct LevelComplex {
    level: usize,
    kv: [KnotVector; 2],
    spaces: [TensorSpace; 4],
    mesh: TensorMesh,
}

impl LevelComplex {
    pub fn new(level: usize, kv: [KnotVector; 2]) -> Self {
        let spaces = [P00, P10, P01, P11].map(|p| TensorSpace::new(level, p, &kv));
        let mesh = TensorMesh::new(level, &kv);
        Self { level, kv, spaces, mesh }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn knot_vector(&self, k: usize) -> &KnotVector {
        &self.kv[k]
    }

    pub fn knot_vectors(&self) -> &[KnotVector; 2] {
        &self.kv
    }

    pub fn mesh(&self) -> &TensorMesh {
        &self.mesh
    }

    pub fn space(&self, pattern: FormPattern) -> &TensorSpace {
        &self.spaces[pattern_slot(pattern)]
    }

    /// Dimension of X^j (j = 0, 1, 2).
    pub fn form_dimension(&self, j: usize) -> usize {
        patterns_of_form(j).iter().map(|p| self.space(*p).dimension()).sum()
    }

    /// Offset of a pattern's block inside the X^j coordinate vector.
    pub fn block_offset(&self, pattern: FormPattern) -> usize {
        if pattern == P01 {
            self.space(P10).dimension()
        } else {
            0
        }
    }

    pub fn derivative_factors(&self) -> [SparseMatrix<Rational>; 2] {
        [derivative_matrix(&self.kv[0]), derivative_matrix(&self.kv[1])]
    }

    pub fn grad_matrix(&self) -> SparseMatrix<Rational> {
        let [d1, d2] = self.derivative_factors();
        grad_from_factors(&d1, &d2)
    }

    pub fn curl_matrix(&self) -> SparseMatrix<Rational> {
        let [d1, d2] = self.derivative_factors();
        curl_from_factors(&d1, &d2)
    }

    /// Univariate subdivision matrices `[direction]` for one form, from this
    /// level to `fine`.
    pub fn subdivision_factors(&self, fine: &LevelComplex, form: Form) -> Result<[SparseMatrix<Rational>; 2], TensorError> {
        let mut out = Vec::with_capacity(2);
        for k in 0..2 {
            let c = UnivariateSpace::new(self.kv[k].clone(), form);
            let f = UnivariateSpace::new(fine.kv[k].clone(), form);
            out.push(subdivision_matrix(&c, &f).map_err(|_| TensorError::NotNested)?);
        }
        let d2 = out.pop().expect("two");
        let d1 = out.pop().expect("two");
        Ok([d1, d2])
    }

    /// Tensor subdivision matrix of one pattern.
    pub fn subdivision_matrix(&self, fine: &LevelComplex, pattern: FormPattern) -> Result<SparseMatrix<Rational>, TensorError> {
        let s0 = self.subdivision_factors(fine, pattern[0])?;
        let s1 = self.subdivision_factors(fine, pattern[1])?;
        Ok(SparseMatrix::kron(&s1[1], &s0[0]))
    }
}

fn pattern_slot(p: FormPattern) -> usize {
    p[0].index() + 2 * p[1].index()
}

/// `[I ⊗ D1 ; D2 ⊗ I]` from X⁰ to X¹.
pub fn grad_from_factors<T: Scalar>(d1: &SparseMatrix<T>, d2: &SparseMatrix<T>) -> SparseMatrix<T> {
    let dx = SparseMatrix::kron(&SparseMatrix::identity(d2.ncols()), d1);
    let dy = SparseMatrix::kron(d2, &SparseMatrix::identity(d1.ncols()));
    SparseMatrix::vstack(&[&dx, &dy]).expect("both act on X⁰")
}

/// `[-(D2 ⊗ I) | I ⊗ D1]` from X¹ to X².
pub fn curl_from_factors<T: Scalar>(d1: &SparseMatrix<T>, d2: &SparseMatrix<T>) -> SparseMatrix<T> {
    let a = SparseMatrix::kron(d2, &SparseMatrix::identity(d1.nrows())).map(|v| -v.clone());
    let b = SparseMatrix::kron(&SparseMatrix::identity(d2.nrows()), d1);
    SparseMatrix::hstack(&[&a, &b]).expect("both map into X²")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::univariate::{rat, BoundaryMode};
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn level(n: usize, p: usize, mode: BoundaryMode) -> LevelComplex {
        let kv = KnotVector::uniform(n, p, mode).unwrap();
        LevelComplex::new(0, [kv.clone(), kv])
    }

    fn eval_coeffs(space: &TensorSpace, c: &[f64], x: f64, y: f64) -> f64 {
        space.basis_at(x, y).unwrap().iter().map(|(f, v)| c[*f] * v).sum()
    }

    #[test]
    fn tensor_supports() {
        let lc = level(4, 2, BoundaryMode::Homogeneous);
        let s = lc.space(P00).support(&MultiIndex::new(1, 1)).unwrap();
        assert_eq!((s.x.lo, s.x.hi), (rat(0, 1), rat(1, 2)));
        assert_eq!((s.y.lo, s.y.hi), (rat(0, 1), rat(1, 2)));
        let s = lc.space(P00).support(&MultiIndex::new(3, 3)).unwrap();
        assert_eq!((s.x.lo, s.x.hi), (rat(1, 4), rat(1, 1)));
        let s = lc.space(P10).support(&MultiIndex::new(3, 1)).unwrap();
        assert_eq!((s.x.lo.clone(), s.x.hi.clone()), (rat(1, 4), rat(3, 4)));
        assert_eq!((s.y.lo, s.y.hi), (rat(0, 1), rat(1, 2)));
        assert!(lc.space(P00).support(&MultiIndex::new(5, 1)).is_err());
    }

    #[test]
    fn curl_grad_vanishes_exactly() {
        for mode in [BoundaryMode::Homogeneous, BoundaryMode::Open] {
            for p in 1..=4 {
                let lc = level(5, p, mode);
                let prod = lc.curl_matrix().matmul(&lc.grad_matrix()).unwrap();
                assert!(prod.is_zero());
            }
        }
    }

    #[test]
    fn grad_and_curl_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mode in [BoundaryMode::Homogeneous, BoundaryMode::Open] {
            let lc = level(4, 3, mode);
            let g = lc.grad_matrix().map(to_f64);
            let c = lc.curl_matrix().map(to_f64);
            let (s00, s10, s01, s11) = (lc.space(P00), lc.space(P10), lc.space(P01), lc.space(P11));
            let a: Vec<f64> = (0..s00.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ga = g.mul_vec(&a).unwrap();
            let (gx, gy) = ga.split_at(s10.dimension());
            let u: Vec<f64> = (0..lc.form_dimension(1)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cu = c.mul_vec(&u).unwrap();
            let (ux, uy) = u.split_at(s10.dimension());
            let h = 1e-6;
            for _ in 0..50 {
                let (x, y) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
                let fdx = (eval_coeffs(s00, &a, x + h, y) - eval_coeffs(s00, &a, x - h, y)) / (2.0 * h);
                let fdy = (eval_coeffs(s00, &a, x, y + h) - eval_coeffs(s00, &a, x, y - h)) / (2.0 * h);
                let (ex, ey) = (eval_coeffs(s10, gx, x, y), eval_coeffs(s01, gy, x, y));
                assert!((fdx - ex).abs() <= 1e-6 * ex.abs().max(1.0));
                assert!((fdy - ey).abs() <= 1e-6 * ey.abs().max(1.0));
                let dv = (eval_coeffs(s01, uy, x + h, y) - eval_coeffs(s01, uy, x - h, y)) / (2.0 * h);
                let du = (eval_coeffs(s10, ux, x, y + h) - eval_coeffs(s10, ux, x, y - h)) / (2.0 * h);
                let ec = eval_coeffs(s11, &cu, x, y);
                assert!((dv - du - ec).abs() <= 1e-6 * ec.abs().max(1.0));
            }
        }
    }

    #[test]
    fn grad_kernel_by_mode() {
        use crate::linalg::rank_exact;
        let h = level(4, 2, BoundaryMode::Homogeneous).grad_matrix();
        assert_eq!(rank_exact(&h), h.ncols());
        let o = level(4, 2, BoundaryMode::Open).grad_matrix();
        assert_eq!(o.ncols() - rank_exact(&o), 1);
    }

    #[test]
    fn curl_of_field_without_y_dependence() {
        // u = (x(1-x), 0) lies in the open cubic space; its curl is zero
        let lc = level(3, 3, BoundaryMode::Open);
        let s10 = lc.space(P10);
        let sx = s10.factor(0);
        // interpolate x(1-x) in the quadratic factor at Greville-like nodes
        let n = sx.dimension();
        let nodes: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let a = nalgebra::DMatrix::from_fn(n, n, |r, c| sx.evaluate(c + 1, nodes[r]).unwrap());
        let b = nalgebra::DVector::from_iterator(n, nodes.iter().map(|x| x * (1.0 - x)));
        let cx = a.lu().solve(&b).unwrap();
        let n2 = s10.dims()[1];
        let mut u = vec![0.0; lc.form_dimension(1)];
        for j in 0..n2 {
            for i in 0..n {
                u[j * n + i] = cx[i];
            }
        }
        let cu = lc.curl_matrix().map(to_f64).mul_vec(&u).unwrap();
        assert!(cu.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn element_lookup() {
        let lc = level(4, 2, BoundaryMode::Homogeneous);
        let m = lc.mesh();
        assert_eq!(m.element_of(0.3, 0.6).unwrap(), Element::new(2, 3));
        assert!(matches!(m.element_of(0.25, 0.5), Err(TensorError::Ambiguous(..))));
        assert!(m.element_of(1.2, 0.5).is_err());
        for a in 1..=4 {
            for b in 1..=4 {
                let (x, y) = m.bounds(Element::new(a, b));
                let mid = ((x[0] + x[1]) / 2.0, (y[0] + y[1]) / 2.0);
                assert_eq!(m.element_of(mid.0, mid.1).unwrap(), Element::new(a, b));
            }
        }
    }

    #[test]
    fn subdivision_commutes_with_grad_and_curl() {
        for mode in [BoundaryMode::Homogeneous, BoundaryMode::Open] {
            let c = level(3, 3, mode);
            let kv = c.knot_vector(0).dyadic_refine();
            let f = LevelComplex::new(1, [kv.clone(), kv]);
            let s0 = c.subdivision_matrix(&f, P00).unwrap();
            let s10 = c.subdivision_matrix(&f, P10).unwrap();
            let s01 = c.subdivision_matrix(&f, P01).unwrap();
            let s2 = c.subdivision_matrix(&f, P11).unwrap();
            let zero_a = SparseMatrix::<Rational>::zeros(s10.nrows(), s01.ncols());
            let zero_b = SparseMatrix::<Rational>::zeros(s01.nrows(), s10.ncols());
            let top = SparseMatrix::hstack(&[&s10, &zero_a]).unwrap();
            let bot = SparseMatrix::hstack(&[&zero_b, &s01]).unwrap();
            let s1 = SparseMatrix::vstack(&[&top, &bot]).unwrap();
            assert_eq!(f.grad_matrix().matmul(&s0).unwrap(), s1.matmul(&c.grad_matrix()).unwrap());
            assert_eq!(f.curl_matrix().matmul(&s1).unwrap(), s2.matmul(&c.curl_matrix()).unwrap());
            assert!(s0.triplets().all(|(_, _, v)| !v.is_zero()));
        }
    }
}
