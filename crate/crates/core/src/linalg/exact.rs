use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::SparseMatrix;

/// Integer type usable by the fraction-free echelon. Arithmetic returns
/// `None` on overflow.
trait EchelonInt: Clone + PartialEq + std::fmt::Debug + Sized {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn neg(&self) -> Option<Self>;
    /// `a*x - b*y`
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self>;
    fn gcd(&self, other: &Self) -> Self;
    fn div_exact(&self, d: &Self) -> Self;
    fn is_unit(&self) -> bool;
}

impl EchelonInt for i128 {
    fn zero() -> Self {
        0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        a.checked_mul(*x)?.checked_sub(b.checked_mul(*y)?)
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }
    fn is_unit(&self) -> bool {
        *self == 1 || *self == -1
    }
}

impl EchelonInt for BigInt {
    fn zero() -> Self {
        <BigInt as Zero>::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        Some(a * x - b * y)
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }
    fn is_unit(&self) -> bool {
        self.magnitude() == &num_bigint::BigUint::from(1u8)
    }
}

type Row<I> = Vec<(usize, I)>;

#[derive(Clone, Debug, Default)]
struct Echelon<I> {
    pivots: HashMap<usize, Row<I>>,
}

enum Outcome<I> {
    Independent,
    Dependent,
    Residual(Row<I>),
    Overflow,
}

impl<I: EchelonInt> Echelon<I> {
    fn new() -> Self {
        Self { pivots: HashMap::new() }
    }

    /// Reduces `v` against the stored pivots. Returns the residual (empty if
    /// `v` lies in the span) or `None` on overflow.
    fn reduce(&self, mut v: Row<I>) -> Option<Row<I>> {
        while let Some((lead, a)) = v.first().cloned() {
            let Some(w) = self.pivots.get(&lead) else { break };
            let b = &w[0].1;
            let g = a.gcd(b);
            let (bs, as_) = (b.div_exact(&g), a.div_exact(&g));
            v = combine(&bs, &v, &as_, w)?;
            normalize_content(&mut v)?;
        }
        Some(v)
    }

    fn insert(&mut self, v: Row<I>) -> Outcome<I> {
        match self.reduce(v) {
            None => Outcome::Overflow,
            Some(r) if r.is_empty() => Outcome::Dependent,
            Some(r) => {
                self.pivots.insert(r[0].0, r);
                Outcome::Independent
            }
        }
    }

    fn residual(&self, v: Row<I>) -> Outcome<I> {
        match self.reduce(v) {
            None => Outcome::Overflow,
            Some(r) => Outcome::Residual(r),
        }
    }
}

/// `s*v - t*w`, merged by index, zeros dropped.
fn combine<I: EchelonInt>(s: &I, v: &Row<I>, t: &I, w: &Row<I>) -> Option<Row<I>> {
    let z = I::zero();
    let mut out = Vec::with_capacity(v.len() + w.len());
    let (mut i, mut j) = (0, 0);
    while i < v.len() || j < w.len() {
        let take_v = j >= w.len() || (i < v.len() && v[i].0 < w[j].0);
        let take_w = i >= v.len() || (j < w.len() && w[j].0 < v[i].0);
        let (idx, val) = if take_v {
            let r = (v[i].0, I::mul_sub(s, &v[i].1, t, &z)?);
            i += 1;
            r
        } else if take_w {
            let r = (w[j].0, I::mul_sub(s, &z, t, &w[j].1)?);
            j += 1;
            r
        } else {
            let r = (v[i].0, I::mul_sub(s, &v[i].1, t, &w[j].1)?);
            i += 1;
            j += 1;
            r
        };
        if !val.is_zero() {
            out.push((idx, val));
        }
    }
    Some(out)
}

fn normalize_content<I: EchelonInt>(v: &mut Row<I>) -> Option<()> {
    let Some(first) = v.first() else { return Some(()) };
    let mut g = first.1.clone();
    for (_, x) in v.iter().skip(1) {
        if g.is_unit() {
            break;
        }
        g = g.gcd(x);
    }
    if g.is_negative() {
        g = g.neg()?;
    }
    if !g.is_unit() && !g.is_zero() {
        for (_, x) in v.iter_mut() {
            *x = x.div_exact(&g);
        }
    }
    if v[0].1.is_negative() {
        for (_, x) in v.iter_mut() {
            *x = x.neg()?;
        }
    }
    Some(())
}

fn to_i128(v: &[(usize, BigInt)]) -> Option<Row<i128>> {
    v.iter().map(|(i, x)| x.to_i128().map(|y| (*i, y))).collect()
}

fn to_big(v: &Row<i128>) -> Row<BigInt> {
    v.iter().map(|(i, x)| (*i, BigInt::from(*x))).collect()
}

/// Incremental exact row echelon over the integers. Uses `i128` until an
/// operation would overflow, then switches to `BigInt` for good.
#[derive(Clone, Debug)]
pub struct ExactEchelon {
    small: Option<Echelon<i128>>,
    big: Echelon<BigInt>,
}

impl Default for ExactEchelon {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactEchelon {
    pub fn new() -> Self {
        Self { small: Some(Echelon::new()), big: Echelon::new() }
    }

    pub fn rank(&self) -> usize {
        match &self.small {
            Some(s) => s.pivots.len(),
            None => self.big.pivots.len(),
        }
    }

    /// True once the echelon has switched to arbitrary precision.
    pub fn is_big(&self) -> bool {
        self.small.is_none()
    }

    fn upgrade(&mut self) {
        if let Some(s) = self.small.take() {
            self.big.pivots = s.pivots.iter().map(|(k, r)| (*k, to_big(r))).collect();
        }
    }

    /// Adds a sparse vector (sorted indices). Returns true if it increased
    /// the rank.
    pub fn insert(&mut self, v: &[(usize, BigInt)]) -> bool {
        if let Some(s) = &mut self.small {
            if let Some(vs) = to_i128(v) {
                match s.insert(vs) {
                    Outcome::Independent => return true,
                    Outcome::Dependent => return false,
                    _ => {}
                }
            }
            self.upgrade();
        }
        matches!(self.big.insert(v.to_vec()), Outcome::Independent)
    }

    /// True if `v` lies in the span of the inserted vectors.
    pub fn contains(&mut self, v: &[(usize, BigInt)]) -> bool {
        if let Some(s) = &self.small {
            if let Some(vs) = to_i128(v) {
                if let Outcome::Residual(r) = s.residual(vs) {
                    return r.is_empty();
                }
            }
            self.upgrade();
        }
        match self.big.residual(v.to_vec()) {
            Outcome::Residual(r) => r.is_empty(),
            _ => unreachable!("BigInt arithmetic does not overflow"),
        }
    }
}

/// Exact rank of a set of integer columns.
pub fn rank_integer_columns<'a, I>(columns: I) -> usize
where
    I: IntoIterator<Item = &'a [(usize, BigInt)]>,
{
    let mut e = ExactEchelon::new();
    for c in columns {
        e.insert(c);
    }
    e.rank()
}

/// Least common multiple of all denominators appearing in `mats`.
pub fn common_denominator(mats: &[&SparseMatrix<BigRational>]) -> BigInt {
    mats.iter()
        .flat_map(|m| m.triplets().map(|(_, _, v)| v.denom().clone()).collect::<Vec<_>>())
        .fold(BigInt::from(1), |acc, d| acc.lcm(&d))
}

/// `m * scale` as an integer matrix. Panics if `scale` does not clear the
/// denominators.
pub fn scale_to_integer(m: &SparseMatrix<BigRational>, scale: &BigInt) -> SparseMatrix<BigInt> {
    let s = BigRational::from(scale.clone());
    m.map(|v| {
        let w = v * &s;
        assert!(w.is_integer(), "scale does not clear denominators");
        w.to_integer()
    })
}

/// Exact rank of a rational matrix. Each column is scaled by the lcm of its
/// denominators, which leaves the rank unchanged.
pub fn rank_exact(m: &SparseMatrix<BigRational>) -> usize {
    let cols: Vec<Vec<(usize, BigInt)>> = m
        .columns()
        .iter()
        .map(|col| {
            let l = col.iter().fold(BigInt::from(1), |acc, (_, v)| acc.lcm(v.denom()));
            col.iter().map(|(r, v)| (*r, (v * BigRational::from(l.clone())).to_integer())).collect()
        })
        .collect();
    rank_integer_columns(cols.iter().map(|c| c.as_slice()))
}
