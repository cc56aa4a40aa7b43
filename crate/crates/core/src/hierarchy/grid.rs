use std::ops::Range;

use crate::tensor::{Element, MultiIndex};

/// Subset of a 2D grid, stored as a dense bitmap with `(a, b)` 0-based
/// coordinates and `a` fastest. Used both for element sets and for sets of
/// tensor indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GridSet {
    dims: [usize; 2],
    bits: Vec<bool>,
    count: usize,
}

pub type ElementSet = GridSet;
pub type IndexSet = GridSet;

impl GridSet {
    pub fn empty(dims: [usize; 2]) -> Self {
        Self { dims, bits: vec![false; dims[0] * dims[1]], count: 0 }
    }

    pub fn full(dims: [usize; 2]) -> Self {
        Self { dims, bits: vec![true; dims[0] * dims[1]], count: dims[0] * dims[1] }
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn has(&self, a: usize, b: usize) -> bool {
        a < self.dims[0] && b < self.dims[1] && self.bits[b * self.dims[0] + a]
    }

    /// Inserts `(a, b)`; returns true if it was absent. Panics outside the
    /// grid.
    #[inline]
    pub fn set(&mut self, a: usize, b: usize) -> bool {
        assert!(a < self.dims[0] && b < self.dims[1], "({a}, {b}) outside {:?}", self.dims);
        let slot = &mut self.bits[b * self.dims[0] + a];
        let fresh = !*slot;
        *slot = true;
        self.count += fresh as usize;
        fresh
    }

    pub fn iter0(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n1 = self.dims[0];
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(move |(f, _)| (f % n1, f / n1))
    }

    pub fn contains_element(&self, e: Element) -> bool {
        e.e1 >= 1 && e.e2 >= 1 && self.has(e.e1 - 1, e.e2 - 1)
    }

    pub fn insert_element(&mut self, e: Element) -> bool {
        self.set(e.e1 - 1, e.e2 - 1)
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.iter0().map(|(a, b)| Element::new(a + 1, b + 1))
    }

    pub fn contains_index(&self, i: &MultiIndex) -> bool {
        i.i1 >= 1 && i.i2 >= 1 && self.has(i.i1 - 1, i.i2 - 1)
    }

    pub fn insert_index(&mut self, i: &MultiIndex) -> bool {
        self.set(i.i1 - 1, i.i2 - 1)
    }

    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        self.iter0().map(|(a, b)| MultiIndex::new(a + 1, b + 1))
    }

    pub fn union_with(&mut self, other: &GridSet) {
        assert_eq!(self.dims, other.dims);
        for (a, b) in other.iter0() {
            self.set(a, b);
        }
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.iter0().all(|(a, b)| other.has(a, b))
    }

    /// Members of `self` missing from `other`.
    pub fn difference(&self, other: &GridSet) -> Vec<(usize, usize)> {
        self.iter0().filter(|(a, b)| !other.has(*a, *b)).collect()
    }

    pub fn rect_all(&self, r: &[Range<usize>; 2]) -> bool {
        r[1].clone().all(|b| r[0].clone().all(|a| self.has(a, b)))
    }

    pub fn rect_any(&self, r: &[Range<usize>; 2]) -> bool {
        r[1].clone().any(|b| r[0].clone().any(|a| self.has(a, b)))
    }

    pub fn rect_count(&self, r: &[Range<usize>; 2]) -> usize {
        r[1].clone().map(|b| r[0].clone().filter(|&a| self.has(a, b)).count()).sum()
    }

    pub fn insert_rect(&mut self, r: &[Range<usize>; 2]) {
        for b in r[1].clone() {
            for a in r[0].clone() {
                self.set(a, b);
            }
        }
    }

    /// The four dyadic children of every member, on a grid twice as fine.
    pub fn children(&self) -> GridSet {
        let mut out = GridSet::empty([2 * self.dims[0], 2 * self.dims[1]]);
        for (a, b) in self.iter0() {
            out.insert_rect(&[2 * a..2 * a + 2, 2 * b..2 * b + 2]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut s = GridSet::empty([3, 2]);
        assert!(s.set(2, 1));
        assert!(!s.set(2, 1));
        assert_eq!(s.len(), 1);
        assert!(s.contains_element(Element::new(3, 2)));
        assert!(!s.has(3, 1));
        s.insert_rect(&[0..2, 0..1]);
        assert_eq!(s.len(), 3);
        assert!(s.rect_all(&[0..2, 0..1]));
        assert!(!s.rect_all(&[0..3, 0..1]));
        assert_eq!(s.rect_count(&[0..3, 0..2]), 3);
        let c = s.children();
        assert_eq!(c.dims(), [6, 4]);
        assert_eq!(c.len(), 12);
        assert!(c.has(5, 3));
        let f = GridSet::full([3, 2]);
        assert!(s.is_subset(&f));
        assert_eq!(f.difference(&s).len(), 3);
    }
}
