//! Knot vectors and the univariate spline spaces S⁰ (degree p, vanishing at
//! the ends in homogeneous mode) and S¹ (degree p−1).
//!
//! Internally every space is stored as a clamped knot vector (end knots
//! repeated `degree + 1` times) together with an offset into the clamped
//! basis. Homogeneous S⁰ is the clamped degree-p basis on `(0, Ξ, 1)` with the
//! first and last function removed.

use std::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::SparseMatrix;

pub type Rational = BigRational;

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("basis index {index} outside 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("point {0} outside [0, 1]")]
    PointOutOfRange(f64),
    #[error("knot vectors are not nested")]
    NotNested,
    #[error("spaces differ in degree, form or boundary mode")]
    Incompatible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    /// End knots repeated p times; 0-forms vanish on the boundary.
    Homogeneous,
    /// End knots repeated p+1 times; no boundary condition.
    Open,
}

impl BoundaryMode {
    fn end_multiplicity(self, p: usize) -> usize {
        match self {
            BoundaryMode::Homogeneous => p,
            BoundaryMode::Open => p + 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    Zero,
    One,
}

impl Form {
    pub fn index(self) -> usize {
        match self {
            Form::Zero => 0,
            Form::One => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnotVector {
    knots: Vec<Rational>,
    degree: usize,
    mode: BoundaryMode,
}

impl KnotVector {
    pub fn new(knots: Vec<Rational>, degree: usize, mode: BoundaryMode) -> Result<Self, SplineError> {
        let bad = |s: &str| Err(SplineError::InvalidKnots(s.to_string()));
        if degree == 0 {
            return bad("degree must be positive");
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return bad("knots must be non-decreasing");
        }
        let (zero, one) = (Rational::zero(), Rational::one());
        if knots.first() != Some(&zero) || knots.last() != Some(&one) {
            return bad("knots must start at 0 and end at 1");
        }
        let rep = mode.end_multiplicity(degree);
        let lead = knots.iter().take_while(|k| **k == zero).count();
        let trail = knots.iter().rev().take_while(|k| **k == one).count();
        if lead != rep || trail != rep {
            return bad(&format!("end knots must be repeated exactly {rep} times"));
        }
        let mut k = lead;
        while k < knots.len() - trail {
            let run = knots[k..].iter().take_while(|x| **x == knots[k]).count();
            if run > degree {
                return bad("interior knot repeated more than p times");
            }
            k += run;
        }
        Ok(Self { knots, degree, mode })
    }

    /// Knot vector over the given breakpoints with simple interior knots.
    pub fn from_breakpoints(breaks: &[Rational], degree: usize, mode: BoundaryMode) -> Result<Self, SplineError> {
        if breaks.len() < 2 {
            return Err(SplineError::InvalidKnots("need at least two breakpoints".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SplineError::InvalidKnots("breakpoints must be strictly increasing".into()));
        }
        let rep = mode.end_multiplicity(degree);
        let mut knots = vec![breaks[0].clone(); rep];
        knots.extend(breaks[1..breaks.len() - 1].iter().cloned());
        knots.extend(std::iter::repeat_n(breaks[breaks.len() - 1].clone(), rep));
        Self::new(knots, degree, mode)
    }

    /// Knot vector with `n` uniform intervals.
    pub fn uniform(n: usize, degree: usize, mode: BoundaryMode) -> Result<Self, SplineError> {
        if n == 0 {
            return Err(SplineError::InvalidKnots("need at least one interval".into()));
        }
        let breaks: Vec<Rational> = (0..=n).map(|k| rat(k as i64, n as i64)).collect();
        Self::from_breakpoints(&breaks, degree, mode)
    }

    pub fn knots(&self) -> &[Rational] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn breakpoints(&self) -> Breakpoints {
        let mut zeta = self.knots.clone();
        zeta.dedup();
        Breakpoints { zeta }
    }

    /// Inserts the midpoint of every nonempty knot span once.
    pub fn dyadic_refine(&self) -> KnotVector {
        let two = Rational::from(BigInt::from(2));
        let mut knots = Vec::with_capacity(2 * self.knots.len());
        for w in self.knots.windows(2) {
            knots.push(w[0].clone());
            if w[0] < w[1] {
                knots.push((&w[0] + &w[1]) / &two);
            }
        }
        knots.push(self.knots[self.knots.len() - 1].clone());
        KnotVector { knots, degree: self.degree, mode: self.mode }
    }

    /// True if every knot of `self` appears in `finer` with at least the same
    /// multiplicity.
    pub fn is_refined_by(&self, finer: &KnotVector) -> bool {
        let (a, b) = (&self.knots, &finer.knots);
        let mut j = 0;
        for k in a {
            while j < b.len() && b[j] < *k {
                j += 1;
            }
            if j == b.len() || b[j] != *k {
                return false;
            }
            j += 1;
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Breakpoints {
    zeta: Vec<Rational>,
}

impl Breakpoints {
    pub fn values(&self) -> &[Rational] {
        &self.zeta
    }

    pub fn num_intervals(&self) -> usize {
        self.zeta.len() - 1
    }

    pub fn intervals(&self) -> Vec<(Rational, Rational)> {
        self.zeta.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
    }

    /// Index of the breakpoint equal to `x`.
    pub fn position(&self, x: &Rational) -> Option<usize> {
        self.zeta.binary_search(x).ok()
    }

    /// 0-based interval containing `x`, or `None` if `x` is a breakpoint or
    /// outside `(0, 1)`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let z: Vec<f64> = self.zeta.iter().map(to_f64).collect();
        if x <= z[0] || x >= z[z.len() - 1] {
            return None;
        }
        let k = z.partition_point(|b| *b < x);
        if z[k] == x {
            None
        } else {
            Some(k - 1)
        }
    }
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Support of a basis function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    pub lo: Rational,
    pub hi: Rational,
    /// 1-based positions of `lo` and `hi` in the knot vector.
    pub knot_lo: usize,
    pub knot_hi: usize,
    /// 0-based indices of the breakpoint intervals covered by the closed
    /// support.
    pub intervals: Range<usize>,
}

#[derive(Clone, Debug)]
pub struct UnivariateSpace {
    kv: KnotVector,
    form: Form,
    degree: usize,
    clamped: Vec<Rational>,
    clamped_f: Vec<f64>,
    /// clamped knot index `k` is knot `k + shift` of `kv` (0-based).
    shift: isize,
    offset: usize,
    dim: usize,
    /// breakpoint index of each clamped knot
    knot_break: Vec<usize>,
}

impl UnivariateSpace {
    pub fn new(kv: KnotVector, form: Form) -> Self {
        let p = kv.degree;
        let n = kv.knots.len();
        let (clamped, degree, shift, offset): (Vec<Rational>, usize, isize, usize) = match (kv.mode, form) {
            (BoundaryMode::Open, Form::Zero) => (kv.knots.clone(), p, 0, 0),
            (BoundaryMode::Open, Form::One) => (kv.knots[1..n - 1].to_vec(), p - 1, 1, 0),
            (BoundaryMode::Homogeneous, Form::Zero) => {
                let mut c = Vec::with_capacity(n + 2);
                c.push(Rational::zero());
                c.extend(kv.knots.iter().cloned());
                c.push(Rational::one());
                (c, p, -1, 1)
            }
            (BoundaryMode::Homogeneous, Form::One) => (kv.knots.clone(), p - 1, 0, 0),
        };
        let total = clamped.len().saturating_sub(degree + 1);
        let dim = total.saturating_sub(2 * offset);
        let bp = kv.breakpoints();
        let knot_break = clamped.iter().map(|k| bp.position(k).expect("knot is a breakpoint")).collect();
        let clamped_f = clamped.iter().map(to_f64).collect();
        Self { kv, form, degree, clamped, clamped_f, shift, offset, dim, knot_break }
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.kv
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// Polynomial degree of the basis functions (p for 0-forms, p−1 for
    /// 1-forms).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    fn check(&self, i: usize) -> Result<usize, SplineError> {
        if i == 0 || i > self.dim {
            Err(SplineError::IndexOutOfRange { index: i, dim: self.dim })
        } else {
            Ok(i - 1 + self.offset)
        }
    }

    /// Support of function `i` (1-based).
    pub fn support(&self, i: usize) -> Result<Support, SplineError> {
        let k = self.check(i)?;
        let (a, b) = (k, k + self.degree + 1);
        Ok(Support {
            lo: self.clamped[a].clone(),
            hi: self.clamped[b].clone(),
            knot_lo: (a as isize + self.shift + 1) as usize,
            knot_hi: (b as isize + self.shift + 1) as usize,
            intervals: self.knot_break[a]..self.knot_break[b],
        })
    }

    /// 0-based range of breakpoint intervals covered by function `i`
    /// (0-based). Panics if out of range.
    pub(crate) fn interval_range(&self, i: usize) -> Range<usize> {
        let k = i + self.offset;
        self.knot_break[k]..self.knot_break[k + self.degree + 1]
    }

    /// Value of function `i` (1-based) at `x`.
    pub fn evaluate(&self, i: usize, x: f64) -> Result<f64, SplineError> {
        let k = self.check(i)?;
        let (first, vals) = self.clamped_basis_at(x)?;
        Ok(if k >= first && k < first + vals.len() { vals[k - first] } else { 0.0 })
    }

    /// Nonzero basis values at `x`: the 0-based index of the first returned
    /// function and the values of consecutive functions.
    pub fn basis_at(&self, x: f64) -> Result<(usize, Vec<f64>), SplineError> {
        let (first, vals) = self.clamped_basis_at(x)?;
        let lo = first.max(self.offset);
        let hi = (first + vals.len()).min(self.offset + self.dim);
        if lo >= hi {
            return Ok((0, Vec::new()));
        }
        Ok((lo - self.offset, vals[lo - first..hi - first].to_vec()))
    }

    /// Cox-de Boor in triangular form on the clamped knots.
    fn clamped_basis_at(&self, x: f64) -> Result<(usize, Vec<f64>), SplineError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(SplineError::PointOutOfRange(x));
        }
        let t = &self.clamped_f;
        let d = self.degree;
        let n = t.len() - d - 1;
        // span s with t[s] <= x < t[s+1], or the last nonempty span at x = 1
        let s = if x >= t[n] {
            n - 1
        } else {
            t.partition_point(|k| *k <= x) - 1
        }
        .clamp(d, n - 1);
        let mut vals = vec![0.0; d + 1];
        vals[0] = 1.0;
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        for j in 1..=d {
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let den = right[r + 1] + left[j - r];
                let tmp = if den == 0.0 { 0.0 } else { vals[r] / den };
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            vals[j] = saved;
        }
        Ok((s - d, vals))
    }
}

/// Matrix whose column `i` holds the coefficients of coarse function `i` in
/// the fine basis.
pub fn subdivision_matrix(coarse: &UnivariateSpace, fine: &UnivariateSpace) -> Result<SparseMatrix<Rational>, SplineError> {
    if coarse.form != fine.form || coarse.kv.degree != fine.kv.degree || coarse.kv.mode != fine.kv.mode {
        return Err(SplineError::Incompatible);
    }
    if !coarse.kv.is_refined_by(&fine.kv) {
        return Err(SplineError::NotNested);
    }
    let d = coarse.degree;
    let mut t = coarse.clamped.clone();
    let mut total = SparseMatrix::identity(t.len() - d - 1);
    // knots of the fine vector missing from the coarse one
    let mut extra = Vec::new();
    let mut j = 0;
    for k in &fine.clamped {
        if j < t.len() && t[j] == *k {
            j += 1;
        } else {
            extra.push(k.clone());
        }
    }
    for u in extra {
        let n = t.len() - d - 1;
        let omega = |k: usize| -> Rational {
            if t[k + d] <= u {
                Rational::one()
            } else if u <= t[k] {
                Rational::zero()
            } else {
                (&u - &t[k]) / (&t[k + d] - &t[k])
            }
        };
        let mut trip = Vec::with_capacity(2 * n);
        for k in 0..n {
            trip.push((k, k, omega(k)));
            trip.push((k + 1, k, Rational::one() - omega(k + 1)));
        }
        let step = SparseMatrix::from_triplets(n + 1, n, trip).expect("in range");
        total = step.matmul(&total).expect("shapes agree");
        let pos = t.partition_point(|k| *k <= u);
        t.insert(pos, u);
    }
    Ok(total.submatrix(fine.offset..fine.offset + fine.dim, coarse.offset..coarse.offset + coarse.dim))
}

/// Matrix of d/dx from S⁰ to S¹ on the same knot vector.
pub fn derivative_matrix(kv: &KnotVector) -> SparseMatrix<Rational> {
    let s0 = UnivariateSpace::new(kv.clone(), Form::Zero);
    let s1 = UnivariateSpace::new(kv.clone(), Form::One);
    let c = &s0.clamped;
    let p = s0.degree;
    let n0 = c.len() - p - 1;
    let pr = Rational::from(BigInt::from(p));
    let mut trip = Vec::new();
    for k in s0.offset..s0.offset + s0.dim {
        // N_k' = p/(c[k+p]-c[k]) M_{k-1} - p/(c[k+p+1]-c[k+1]) M_k
        if k >= 1 && c[k + p] != c[k] {
            trip.push((k - 1, k - s0.offset, &pr / (&c[k + p] - &c[k])));
        }
        if k + 1 < n0 + 1 && c[k + p + 1] != c[k + 1] && k < s1.dim + s1.offset {
            trip.push((k, k - s0.offset, -(&pr / (&c[k + p + 1] - &c[k + 1]))));
        }
    }
    let trip: Vec<_> = trip
        .into_iter()
        .filter(|(r, _, _)| *r >= s1.offset && *r < s1.offset + s1.dim)
        .map(|(r, c, v)| (r - s1.offset, c, v))
        .collect();
    SparseMatrix::from_triplets(s1.dim, s0.dim, trip).expect("in range")
}
