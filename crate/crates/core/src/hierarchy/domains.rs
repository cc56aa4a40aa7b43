use std::collections::BTreeSet;
use std::sync::Arc;

use crate::linalg::SparseMatrix;
use crate::tensor::{Element, FormPattern, LevelComplex, MultiIndex, P00};
use crate::univariate::{BoundaryMode, Form, KnotVector, Rational};

use super::{ElementSet, HierarchyError, IndexSet};

/// Univariate subdivision matrices from one level to the next.
#[derive(Clone, Debug)]
pub struct Transfer {
    /// `[form][direction]`
    factors: [[SparseMatrix<Rational>; 2]; 2],
    /// transposes, for parent lookups
    factors_t: [[SparseMatrix<Rational>; 2]; 2],
}

impl Transfer {
    fn new(coarse: &LevelComplex, fine: &LevelComplex) -> Self {
        let f0 = coarse.subdivision_factors(fine, Form::Zero).expect("dyadic levels are nested");
        let f1 = coarse.subdivision_factors(fine, Form::One).expect("dyadic levels are nested");
        let factors_t = [[f0[0].transpose(), f0[1].transpose()], [f1[0].transpose(), f1[1].transpose()]];
        Self { factors: [f0, f1], factors_t }
    }

    pub fn factor(&self, form: Form, k: usize) -> &SparseMatrix<Rational> {
        &self.factors[form.index()][k]
    }

    /// Tensor subdivision matrix of a pattern.
    pub fn tensor(&self, pattern: FormPattern) -> SparseMatrix<Rational> {
        SparseMatrix::kron(self.factor(pattern[1], 1), self.factor(pattern[0], 0))
    }

    /// 0-based coarse indices with a nonzero coefficient on fine function
    /// `fine` (0-based) in direction `k`.
    fn parents_1d(&self, form: Form, k: usize, fine: usize) -> impl Iterator<Item = usize> + '_ {
        self.factors_t[form.index()][k].column(fine).iter().map(|(r, _)| *r)
    }

    fn children_1d(&self, form: Form, k: usize, coarse: usize) -> impl Iterator<Item = usize> + '_ {
        self.factors[form.index()][k].column(coarse).iter().map(|(r, _)| *r)
    }
}

/// Problem found by [`RefinementDomains::check_assumption1`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assumption1Violation {
    /// `ℓ`, where `Ω_{ℓ+1}` is at fault.
    pub level: usize,
    /// Level-ℓ elements of `Ω_{ℓ+1}` not covered by any level-ℓ 0-form
    /// support inside `Ω_{ℓ+1}`.
    pub uncovered: Vec<Element>,
    /// Level-ℓ elements of `Ω_{ℓ+1}` outside `Ω_ℓ`.
    pub not_nested: Vec<Element>,
}

/// Nested refinement domains `Ω_0 ⊇ Ω_1 ⊇ …` over dyadically refined levels.
///
/// `Ω_{ℓ+1}` is stored as the set of level-ℓ elements it contains. The
/// finest level `L` always has an empty refined set, and level `L+1` is kept
/// around so refinement of level `L` can look up children.
#[derive(Clone, Debug)]
pub struct RefinementDomains {
    levels: Vec<Arc<LevelComplex>>,
    transfers: Vec<Arc<Transfer>>,
    refined: Vec<ElementSet>,
}

impl RefinementDomains {
    pub fn new(base: [KnotVector; 2]) -> Result<Self, HierarchyError> {
        if base[0].mode() != base[1].mode() {
            return Err(HierarchyError::MixedBoundaryModes);
        }
        let l0 = Arc::new(LevelComplex::new(0, base));
        let mut d = Self { levels: vec![l0], transfers: Vec::new(), refined: Vec::new() };
        d.push_level();
        Ok(d)
    }

    /// Single-level domains with `n` uniform intervals per direction.
    pub fn uniform(n: [usize; 2], degree: [usize; 2], mode: BoundaryMode) -> Result<Self, HierarchyError> {
        let kv = [KnotVector::uniform(n[0], degree[0], mode)?, KnotVector::uniform(n[1], degree[1], mode)?];
        Self::new(kv)
    }

    /// Domains generated by refining the supports of the listed level-ℓ
    /// 0-forms, level by level (`generators[ℓ]` defines `Ω_{ℓ+1}`).
    pub fn from_generators(base: [KnotVector; 2], generators: &[Vec<MultiIndex>]) -> Result<Self, HierarchyError> {
        let mut d = Self::new(base)?;
        for (l, gens) in generators.iter().enumerate() {
            if gens.is_empty() {
                continue;
            }
            if l > d.max_level() {
                return Err(HierarchyError::LevelOutOfRange { level: l, max: d.max_level() });
            }
            let mut marked = ElementSet::empty(d.level(l).mesh().dims());
            for g in gens {
                marked.insert_rect(&d.support_elements(l, P00, g)?);
            }
            d.refine_mesh(l, &marked)?;
        }
        Ok(d)
    }

    fn push_level(&mut self) {
        let top = self.levels.last().expect("at least one level").clone();
        let kv = [top.knot_vector(0).dyadic_refine(), top.knot_vector(1).dyadic_refine()];
        let next = Arc::new(LevelComplex::new(top.level() + 1, kv));
        self.transfers.push(Arc::new(Transfer::new(&top, &next)));
        self.refined.push(ElementSet::empty(top.mesh().dims()));
        self.levels.push(next);
    }

    /// Finest level `L` (the highest level with a nonempty `Ω_L`).
    pub fn max_level(&self) -> usize {
        self.refined.len() - 1
    }

    pub fn degree(&self) -> [usize; 2] {
        [self.levels[0].knot_vector(0).degree(), self.levels[0].knot_vector(1).degree()]
    }

    pub fn mode(&self) -> BoundaryMode {
        self.levels[0].knot_vector(0).mode()
    }

    pub fn base_knots(&self) -> &[KnotVector; 2] {
        self.levels[0].knot_vectors()
    }

    /// Tensor spaces of level `l` (up to `L + 1`).
    pub fn level(&self, l: usize) -> &LevelComplex {
        &self.levels[l]
    }

    /// Subdivision from level `l` to `l + 1` (for `l ≤ L`).
    pub fn transfer(&self, l: usize) -> &Transfer {
        &self.transfers[l]
    }

    /// `Ω_{l+1}` as a set of level-`l` elements.
    pub fn refined(&self, l: usize) -> &ElementSet {
        &self.refined[l]
    }

    /// `Ω_l` as a set of level-`l` elements.
    pub fn omega(&self, l: usize) -> ElementSet {
        if l == 0 {
            ElementSet::full(self.levels[0].mesh().dims())
        } else if l <= self.max_level() {
            self.refined[l - 1].children()
        } else {
            ElementSet::empty(self.levels[l].mesh().dims())
        }
    }

    /// Level-`l` elements in `Ω_l \ Ω_{l+1}`.
    pub fn active_elements(&self, l: usize) -> ElementSet {
        let omega = self.omega(l);
        let mut out = ElementSet::empty(omega.dims());
        for (a, b) in omega.iter0() {
            if !self.refined[l].has(a, b) {
                out.set(a, b);
            }
        }
        out
    }

    /// All active elements as `(level, element)`.
    pub fn mesh_elements(&self) -> Vec<(usize, Element)> {
        (0..=self.max_level())
            .flat_map(|l| self.active_elements(l).elements().map(move |e| (l, e)).collect::<Vec<_>>())
            .collect()
    }

    /// 0-based element ranges of a level-`l` function.
    pub fn support_elements(&self, l: usize, pattern: FormPattern, i: &MultiIndex) -> Result<[std::ops::Range<usize>; 2], HierarchyError> {
        let sp = self.levels[l].space(pattern);
        if !sp.contains_index(i) {
            return Err(HierarchyError::IndexOutOfRange { level: l, index: *i });
        }
        Ok(sp.support_elements(i))
    }

    /// Adds the children of `marked` (level-`l` elements inside `Ω_l`) to
    /// `Ω_{l+1}`.
    pub fn refine_mesh(&mut self, l: usize, marked: &ElementSet) -> Result<(), HierarchyError> {
        if l > self.max_level() {
            return Err(HierarchyError::LevelOutOfRange { level: l, max: self.max_level() });
        }
        if marked.dims() != self.levels[l].mesh().dims() {
            return Err(HierarchyError::WrongGrid { level: l });
        }
        let omega = self.omega(l);
        if let Some((a, b)) = marked.difference(&omega).first() {
            return Err(HierarchyError::NotNested { level: l, element: Element::new(a + 1, b + 1) });
        }
        self.refine_unchecked(l, marked);
        Ok(())
    }

    /// Like [`refine_mesh`](Self::refine_mesh) without the nestedness check.
    pub(crate) fn refine_unchecked(&mut self, l: usize, marked: &ElementSet) {
        while l >= self.max_level() && !marked.is_empty() {
            self.push_level();
        }
        self.refined[l].union_with(marked);
    }

    #[cfg(test)]
    pub(crate) fn refine_rect_unchecked(&mut self, l: usize, r: &[std::ops::Range<usize>; 2]) {
        let mut m = ElementSet::empty(self.levels[l].mesh().dims());
        m.insert_rect(r);
        self.refine_unchecked(l, &m);
    }

    /// Level-`l` functions of a pattern whose support lies in `Ω_{l+1}`.
    pub fn inside_next(&self, l: usize, pattern: FormPattern) -> IndexSet {
        let sp = self.levels[l].space(pattern);
        let dims = sp.dims();
        let mut out = IndexSet::empty(dims);
        if l > self.max_level() {
            return out;
        }
        let r = &self.refined[l];
        if r.is_empty() {
            return out;
        }
        for b in 0..dims[1] {
            let rb = sp.factor(1).interval_range(b);
            for a in 0..dims[0] {
                let ra = sp.factor(0).interval_range(a);
                if r.rect_all(&[ra, rb.clone()]) {
                    out.set(a, b);
                }
            }
        }
        out
    }

    /// Level-`l` functions whose support lies in `Ω_l`.
    pub fn inside_own(&self, l: usize, pattern: FormPattern) -> IndexSet {
        let sp = self.levels[l].space(pattern);
        let dims = sp.dims();
        if l == 0 {
            return IndexSet::full(dims);
        }
        let omega = self.omega(l);
        let mut out = IndexSet::empty(dims);
        for b in 0..dims[1] {
            let rb = sp.factor(1).interval_range(b);
            for a in 0..dims[0] {
                if omega.rect_all(&[sp.factor(0).interval_range(a), rb.clone()]) {
                    out.set(a, b);
                }
            }
        }
        out
    }

    /// Canonical generating set of `Ω_{l+1}`: every level-`l` 0-form whose
    /// support lies in it.
    pub fn generators(&self, l: usize) -> Vec<MultiIndex> {
        self.inside_next(l, P00).indices().collect()
    }

    /// Checks nestedness and that each `Ω_{ℓ+1}` is a union of level-ℓ
    /// 0-form supports.
    pub fn check_assumption1(&self) -> Vec<Assumption1Violation> {
        let mut out = Vec::new();
        for l in 0..=self.max_level() {
            let r = &self.refined[l];
            if r.is_empty() {
                continue;
            }
            let sp = self.levels[l].space(P00);
            let mut covered = ElementSet::empty(r.dims());
            for i in self.inside_next(l, P00).indices() {
                covered.insert_rect(&sp.support_elements(&i));
            }
            let omega = self.omega(l);
            let uncovered: Vec<Element> =
                r.difference(&covered).into_iter().map(|(a, b)| Element::new(a + 1, b + 1)).collect();
            let not_nested: Vec<Element> =
                r.difference(&omega).into_iter().map(|(a, b)| Element::new(a + 1, b + 1)).collect();
            if !uncovered.is_empty() || !not_nested.is_empty() {
                out.push(Assumption1Violation { level: l, uncovered, not_nested });
            }
        }
        out
    }

    /// Level-`l` coarse 0-forms with a nonzero subdivision coefficient on the
    /// level-`(l+1)` 0-form `i`.
    pub fn parents(&self, l_fine: usize, i: &MultiIndex) -> Vec<MultiIndex> {
        self.parents_of(l_fine, P00, i)
    }

    pub fn parents_of(&self, l_fine: usize, pattern: FormPattern, i: &MultiIndex) -> Vec<MultiIndex> {
        if l_fine == 0 || l_fine > self.levels.len() - 1 {
            return Vec::new();
        }
        let t = &self.transfers[l_fine - 1];
        let p2: Vec<usize> = t.parents_1d(pattern[1], 1, i.i2 - 1).collect();
        let p1: Vec<usize> = t.parents_1d(pattern[0], 0, i.i1 - 1).collect();
        let mut out: Vec<MultiIndex> =
            p1.iter().flat_map(|a| p2.iter().map(move |b| MultiIndex::new(a + 1, b + 1))).collect();
        out.sort();
        out
    }

    /// Level-`(l+1)` 0-forms in the refined representation of level-`l`
    /// function `i`.
    pub fn children(&self, l: usize, i: &MultiIndex) -> Vec<MultiIndex> {
        let t = &self.transfers[l];
        let c2: Vec<usize> = t.children_1d(Form::Zero, 1, i.i2 - 1).collect();
        let c1: Vec<usize> = t.children_1d(Form::Zero, 0, i.i1 - 1).collect();
        let mut out: Vec<MultiIndex> =
            c1.iter().flat_map(|a| c2.iter().map(move |b| MultiIndex::new(a + 1, b + 1))).collect();
        out.sort();
        out
    }

    /// Union of the supports of all level-`l` 0-forms with support in `Ω_l`
    /// that touch a marked element. The result is a valid refinement set
    /// under Assumption 1.
    pub fn expand_marking(&self, l: usize, marked: &ElementSet) -> ElementSet {
        let sp = self.levels[l].space(P00);
        let inside = self.inside_own(l, P00);
        let mut out = ElementSet::empty(marked.dims());
        let mut seen = BTreeSet::new();
        for (a, b) in marked.iter0() {
            for i in inside.indices() {
                let r = sp.support_elements(&i);
                if r[0].contains(&a) && r[1].contains(&b) && seen.insert(i) {
                    out.insert_rect(&r);
                }
            }
        }
        out
    }

    /// Number of levels with a refined set (`L + 1`).
    pub fn num_levels(&self) -> usize {
        self.refined.len()
    }

    /// True if both domains describe the same refinement.
    pub fn same_refinement(&self, other: &Self) -> bool {
        let n = self.max_level().max(other.max_level());
        (0..=n).all(|l| {
            let a = self.refined.get(l).map_or(0, |s| s.len());
            let b = other.refined.get(l).map_or(0, |s| s.len());
            a == b && (a == 0 || self.refined[l] == other.refined[l])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::P10;

    fn domains() -> RefinementDomains {
        RefinementDomains::uniform([4, 4], [2, 2], BoundaryMode::Homogeneous).unwrap()
    }

    #[test]
    fn refine_support_of_corner_function() {
        let d = RefinementDomains::from_generators(domains().base_knots().clone(), &[vec![MultiIndex::new(1, 1)]]).unwrap();
        assert_eq!(d.max_level(), 1);
        assert_eq!(d.refined(0).len(), 4);
        let mesh = d.mesh_elements();
        assert_eq!(mesh.len(), 12 + 16);
        // brute force: classify every level-0 and level-1 element by geometry
        for (l, e) in &mesh {
            let (x, y) = d.level(*l).mesh().bounds(*e);
            let inside_refined = x[1] <= 0.5 && y[1] <= 0.5;
            assert_eq!(*l == 1, inside_refined);
        }
        assert!(d.check_assumption1().is_empty());
    }

    #[test]
    fn empty_marking_changes_nothing() {
        let mut d = domains();
        d.refine_mesh(0, &ElementSet::empty([4, 4])).unwrap();
        assert_eq!(d.max_level(), 0);
    }

    #[test]
    fn full_marking_gives_uniform_level() {
        let mut d = domains();
        d.refine_mesh(0, &ElementSet::full([4, 4])).unwrap();
        assert_eq!(d.max_level(), 1);
        assert_eq!(d.mesh_elements().len(), 64);
        assert!(d.mesh_elements().iter().all(|(l, _)| *l == 1));
    }

    #[test]
    fn nestedness_enforced() {
        let mut d = domains();
        let mut m = ElementSet::empty([4, 4]);
        m.set(0, 0);
        d.refine_mesh(0, &m).unwrap();
        let mut bad = ElementSet::empty([8, 8]);
        bad.set(7, 7);
        assert!(matches!(d.refine_mesh(1, &bad), Err(HierarchyError::NotNested { .. })));
    }

    #[test]
    fn single_element_breaks_assumption1() {
        let mut d = domains();
        let mut m = ElementSet::empty([4, 4]);
        m.set(1, 1);
        d.refine_mesh(0, &m).unwrap();
        let v = d.check_assumption1();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].uncovered, vec![Element::new(2, 2)]);
    }

    #[test]
    fn parents_and_children_are_adjoint() {
        let mut d = domains();
        d.refine_mesh(0, &ElementSet::full([4, 4])).unwrap();
        let interior = MultiIndex::new(4, 4);
        assert_eq!(d.parents(1, &interior).len(), 4);
        assert!(!d.parents(1, &MultiIndex::new(1, 1)).is_empty());
        for c in 1..=4 {
            for r in 1..=4 {
                let coarse = MultiIndex::new(c, r);
                for ch in d.children(0, &coarse) {
                    assert!(d.parents(1, &ch).contains(&coarse));
                }
            }
        }
        for f1 in 1..=8 {
            for f2 in 1..=8 {
                let fine = MultiIndex::new(f1, f2);
                for p in d.parents(1, &fine) {
                    assert!(d.children(0, &p).contains(&fine));
                    // child support inside parent support
                    let pr = d.support_elements(0, P00, &p).unwrap();
                    let cr = d.support_elements(1, P00, &fine).unwrap();
                    for k in 0..2 {
                        assert!(cr[k].start >= 2 * pr[k].start && cr[k].end <= 2 * pr[k].end);
                    }
                }
            }
        }
        assert!(d.parents_of(1, P10, &MultiIndex::new(3, 3)).len() >= 2);
    }

    #[test]
    fn expand_marking_covers_and_respects_assumption1() {
        let mut d = domains();
        let mut m = ElementSet::empty([4, 4]);
        m.set(2, 1);
        let e = d.expand_marking(0, &m);
        assert!(e.has(2, 1));
        d.refine_mesh(0, &e).unwrap();
        assert!(d.check_assumption1().is_empty());
    }
}
