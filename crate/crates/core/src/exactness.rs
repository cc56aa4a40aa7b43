//! Problematic pairs of refined 0-form B-splines and the L-chain refinement
//! that removes them.
//!
//! On level ℓ the relevant lattice is the set of level-ℓ 0-forms whose
//! support lies in `Ω_{ℓ+1}`. Two members sharing a minimal
//! (ℓ+1)-intersection must be joined by a shortest chain of members,
//! otherwise the hierarchical complex picks up a harmonic field.

use std::collections::{BTreeSet, VecDeque};
use std::ops::Range;

use rayon::prelude::*;
use thiserror::Error;

use crate::hierarchy::{ElementSet, HierarchyError, IndexSet, RefinementDomains};
use crate::tensor::{Element, MultiIndex, P00};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactnessError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("closed supports of {0} and {1} do not intersect")]
    NotComparable(MultiIndex, MultiIndex),
    #[error("{0} and {1} are aligned; a direction-k chain joins them")]
    Aligned(MultiIndex, MultiIndex),
    #[error("level {level} has no refined lattice")]
    NoLattice { level: usize },
    #[error("input violates the support-union assumption on level {level}")]
    Assumption1 { level: usize },
    #[error("input already has a problematic pair {i}, {j} on level {level}")]
    AlreadyProblematic { level: usize, i: MultiIndex, j: MultiIndex },
    #[error("marked element {element:?} of level {level} lies outside the refinement domain")]
    MarkedOutside { level: usize, element: Element },
    #[error("marked elements on level {level} are not a union of supports")]
    MarkedNotSupports { level: usize },
    #[error("marking given for level {level}, but the finest level is {max}")]
    MarkedTooFine { level: usize, max: usize },
    #[error("admissibility class must be at least 2, got {0}")]
    InvalidClass(usize),
}

/// Which members may be skipped when forming candidate pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResolvedFilter {
    /// Skip members resolved in at least one direction.
    #[default]
    AnyDirection,
    /// Skip only members resolved in both directions.
    BothDirections,
}

/// Outcome of [`LevelPairContext::is_problematic`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairReport {
    pub i: MultiIndex,
    pub j: MultiIndex,
    pub has_minimal_intersection: bool,
    /// `None` when the chain search was skipped (no minimal intersection).
    pub has_shortest_chain: Option<bool>,
    pub problematic: bool,
}

/// The refined lattice of one level with the data needed for pair checks.
#[derive(Clone, Debug)]
pub struct LevelPairContext<'a> {
    domains: &'a RefinementDomains,
    level: usize,
    degree: [usize; 2],
    dims: [usize; 2],
    members: IndexSet,
    /// multiplicity of each level-(ℓ+1) breakpoint, per direction
    fine_multiplicity: [Vec<usize>; 2],
}

fn ordered(i: MultiIndex, j: MultiIndex) -> (MultiIndex, MultiIndex) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

fn breakpoint_multiplicity(domains: &RefinementDomains, level: usize, k: usize) -> Vec<usize> {
    let kv = domains.level(level).knot_vector(k);
    let bp = kv.breakpoints();
    let mut out = vec![0; bp.values().len()];
    for x in kv.knots() {
        out[bp.position(x).expect("knot is a breakpoint")] += 1;
    }
    out
}

impl<'a> LevelPairContext<'a> {
    pub fn new(domains: &'a RefinementDomains, level: usize) -> Result<Self, ExactnessError> {
        if level > domains.max_level() {
            return Err(ExactnessError::NoLattice { level });
        }
        let members = domains.inside_next(level, P00);
        let dims = members.dims();
        let fine_multiplicity =
            [breakpoint_multiplicity(domains, level + 1, 0), breakpoint_multiplicity(domains, level + 1, 1)];
        Ok(Self { domains, level, degree: domains.degree(), dims, members, fine_multiplicity })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn members(&self) -> &IndexSet {
        &self.members
    }

    pub fn is_member(&self, i: &MultiIndex) -> bool {
        self.members.contains_index(i)
    }

    fn support(&self, i: &MultiIndex) -> [Range<usize>; 2] {
        self.domains.level(self.level).space(P00).support_elements(i)
    }

    /// Indices within `p_k + 1` of `i` in every direction, clipped to the
    /// index range.
    fn window(&self, i: &MultiIndex, radius: [usize; 2]) -> [Range<usize>; 2] {
        let r = |k: usize| {
            let c = i.get(k);
            c.saturating_sub(radius[k]).max(1)..(c + radius[k]).min(self.dims[k]) + 1
        };
        [r(0), r(1)]
    }

    fn box_radius(&self) -> [usize; 2] {
        [self.degree[0] + 1, self.degree[1] + 1]
    }

    /// Members within `p_k + 1` of `i` in both directions, `i` included.
    pub fn interaction_box(&self, i: &MultiIndex) -> Vec<MultiIndex> {
        let w = self.window(i, self.box_radius());
        let mut out = Vec::new();
        for b in w[1].clone() {
            for a in w[0].clone() {
                let t = MultiIndex::new(a, b);
                if self.is_member(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    fn box_local(&self, i: &MultiIndex, j: &MultiIndex) -> bool {
        (0..2).all(|k| i.get(k).abs_diff(j.get(k)) <= self.degree[k] + 1)
    }

    /// Closed supports intersected, then checked for more than `p` knots of
    /// level ℓ+1 (with multiplicity) in some direction.
    pub fn has_minimal_intersection(&self, i: &MultiIndex, j: &MultiIndex) -> Result<bool, ExactnessError> {
        let si = self.support(i);
        let sj = self.support(j);
        let mut flags = [false; 2];
        for k in 0..2 {
            let lo = si[k].start.max(sj[k].start);
            let hi = si[k].end.min(sj[k].end);
            if lo > hi {
                return Err(ExactnessError::NotComparable(*i, *j));
            }
            let count: usize = self.fine_multiplicity[k][2 * lo..=2 * hi].iter().sum();
            flags[k] = count > self.degree[k];
        }
        Ok(flags[0] || flags[1])
    }

    /// Aligned pairs are joined by a direction-k chain; otherwise a path is
    /// searched inside the intersection of both interaction boxes. Pairs
    /// farther apart than one box fall back to a monotone path search.
    pub fn has_shortest_chain(&self, i: &MultiIndex, j: &MultiIndex) -> bool {
        if !self.box_local(i, j) {
            return self.has_monotone_path(i, j);
        }
        if i.i1 == j.i1 || i.i2 == j.i2 {
            return true;
        }
        let wi = self.window(i, self.box_radius());
        let wj = self.window(j, self.box_radius());
        let lo = [wi[0].start.max(wj[0].start), wi[1].start.max(wj[1].start)];
        let hi = [wi[0].end.min(wj[0].end), wi[1].end.min(wj[1].end)];
        let inside = |t: &MultiIndex| (0..2).all(|k| t.get(k) >= lo[k] && t.get(k) < hi[k]) && self.is_member(t);
        if !inside(i) || !inside(j) {
            return false;
        }
        let width = hi[0] - lo[0];
        let slot = |t: &MultiIndex| (t.i2 - lo[1]) * width + (t.i1 - lo[0]);
        let mut seen = vec![false; width * (hi[1] - lo[1])];
        let mut queue = VecDeque::from([*i]);
        seen[slot(i)] = true;
        while let Some(t) = queue.pop_front() {
            if t == *j {
                return true;
            }
            for k in 0..2 {
                for d in [-1, 1] {
                    if let Some(n) = t.step(k, d) {
                        if inside(&n) && !seen[slot(&n)] {
                            seen[slot(&n)] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        false
    }

    fn has_monotone_path(&self, i: &MultiIndex, j: &MultiIndex) -> bool {
        if !self.is_member(i) || !self.is_member(j) {
            return false;
        }
        let step = |a: usize, b: usize| if b >= a { 1isize } else { -1 };
        let (s1, s2) = (step(i.i1, j.i1), step(i.i2, j.i2));
        let (n1, n2) = (i.i1.abs_diff(j.i1), i.i2.abs_diff(j.i2));
        let at = |a: usize, b: usize| {
            MultiIndex::new((i.i1 as isize + s1 * a as isize) as usize, (i.i2 as isize + s2 * b as isize) as usize)
        };
        let mut reach = vec![false; (n1 + 1) * (n2 + 1)];
        for b in 0..=n2 {
            for a in 0..=n1 {
                let from = (a == 0 && b == 0)
                    || (a > 0 && reach[b * (n1 + 1) + a - 1])
                    || (b > 0 && reach[(b - 1) * (n1 + 1) + a]);
                reach[b * (n1 + 1) + a] = from && self.is_member(&at(a, b));
            }
        }
        reach[(n1 + 1) * (n2 + 1) - 1]
    }

    pub fn is_problematic(&self, i: &MultiIndex, j: &MultiIndex) -> Result<PairReport, ExactnessError> {
        let mi = self.has_minimal_intersection(i, j)?;
        let chain = mi.then(|| self.has_shortest_chain(i, j));
        Ok(PairReport { i: *i, j: *j, has_minimal_intersection: mi, has_shortest_chain: chain, problematic: chain == Some(false) })
    }

    /// Both existing neighbours `i ± δ_k` are members.
    pub fn is_resolved(&self, i: &MultiIndex, k: usize) -> bool {
        resolved_in(&self.members, i, k)
    }

    fn skipped(&self, i: &MultiIndex, filter: ResolvedFilter) -> bool {
        let r = [self.is_resolved(i, 0), self.is_resolved(i, 1)];
        match filter {
            ResolvedFilter::AnyDirection => r[0] || r[1],
            ResolvedFilter::BothDirections => r[0] && r[1],
        }
    }

    /// Each seed paired with every unskipped member of its interaction box.
    pub fn get_local_pairs(&self, seeds: &[MultiIndex], filter: ResolvedFilter) -> Vec<(MultiIndex, MultiIndex)> {
        let mut pairs = BTreeSet::new();
        for s in seeds {
            for t in self.interaction_box(s) {
                if t != *s && !self.skipped(&t, filter) {
                    pairs.insert(ordered(*s, t));
                }
            }
        }
        pairs.into_iter().collect()
    }

    /// Unskipped members whose closed support touches a closed marked
    /// element, expanded to local pairs.
    pub fn initiate_pairs(&self, marked: &ElementSet, filter: ResolvedFilter) -> Vec<(MultiIndex, MultiIndex)> {
        if marked.is_empty() {
            return Vec::new();
        }
        let mdims = marked.dims();
        let seeds: Vec<MultiIndex> = self
            .members
            .indices()
            .filter(|i| !self.skipped(i, filter))
            .filter(|i| {
                let s = self.support(i);
                let grown = [
                    s[0].start.saturating_sub(1)..(s[0].end + 1).min(mdims[0]),
                    s[1].start.saturating_sub(1)..(s[1].end + 1).min(mdims[1]),
                ];
                marked.rect_any(&grown)
            })
            .collect();
        self.get_local_pairs(&seeds, filter)
    }

    /// Corner of the L-chain to refine for a problematic pair: whichever of
    /// `(i1, j2)` and `(j1, i2)` leaves more members resolved nearby, the
    /// smaller index on a tie.
    pub fn get_lchain_corner(&self, i: &MultiIndex, j: &MultiIndex) -> Result<MultiIndex, ExactnessError> {
        if i.i1 == j.i1 || i.i2 == j.i2 {
            return Err(ExactnessError::Aligned(*i, *j));
        }
        let a = MultiIndex::new(i.i1, j.i2);
        let b = MultiIndex::new(j.i1, i.i2);
        let (a, b) = ordered(a, b);
        let pad = [self.degree[0] + 2, self.degree[1] + 2];
        let lo = MultiIndex::new(i.i1.min(j.i1), i.i2.min(j.i2));
        let hi = MultiIndex::new(i.i1.max(j.i1), i.i2.max(j.i2));
        let window = [
            lo.i1.saturating_sub(pad[0]).max(1)..(hi.i1 + pad[0]).min(self.dims[0]) + 1,
            lo.i2.saturating_sub(pad[1]).max(1)..(hi.i2 + pad[1]).min(self.dims[1]) + 1,
        ];
        let score_a = self.resolved_after(&a, &window);
        let score_b = self.resolved_after(&b, &window);
        Ok(if score_b > score_a { b } else { a })
    }

    /// Members in `window` resolved in some direction once the support of
    /// `c` is refined.
    fn resolved_after(&self, c: &MultiIndex, window: &[Range<usize>; 2]) -> usize {
        let mut refined = self.domains.refined(self.level).clone();
        refined.insert_rect(&self.support(c));
        // membership over the window grown by one, for neighbour lookups
        let sp = self.domains.level(self.level).space(P00);
        let grown = [
            window[0].start.saturating_sub(1).max(1)..(window[0].end + 1).min(self.dims[0] + 1),
            window[1].start.saturating_sub(1).max(1)..(window[1].end + 1).min(self.dims[1] + 1),
        ];
        let mut members = IndexSet::empty(self.dims);
        for b in grown[1].clone() {
            for a in grown[0].clone() {
                let t = MultiIndex::new(a, b);
                if refined.rect_all(&sp.support_elements(&t)) {
                    members.insert_index(&t);
                }
            }
        }
        let mut count = 0;
        for b in window[1].clone() {
            for a in window[0].clone() {
                let t = MultiIndex::new(a, b);
                if members.contains_index(&t) && (resolved_in(&members, &t, 0) || resolved_in(&members, &t, 1)) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Every problematic pair on this level, by exhaustive scan of
    /// box-local member pairs.
    pub fn problematic_pairs(&self) -> Vec<PairReport> {
        let members: Vec<MultiIndex> = self.members.indices().collect();
        let mut out: Vec<PairReport> = members
            .par_iter()
            .flat_map_iter(|i| {
                self.interaction_box(i)
                    .into_iter()
                    .filter(move |j| j > i)
                    .filter_map(move |j| {
                        let r = self.is_problematic(i, &j).ok()?;
                        r.problematic.then_some(r)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        out.sort_by_key(|r| (r.i, r.j));
        out
    }
}

fn resolved_in(members: &IndexSet, i: &MultiIndex, k: usize) -> bool {
    let dims = members.dims();
    [-1isize, 1].iter().all(|&d| match i.step(k, d) {
        Some(t) if t.get(k) <= dims[k] => members.contains_index(&t),
        _ => true,
    })
}

/// Problematic pairs on every level, as `(level, report)`.
pub fn problematic_pairs(domains: &RefinementDomains) -> Vec<(usize, PairReport)> {
    (0..=domains.max_level())
        .flat_map(|l| {
            let ctx = LevelPairContext::new(domains, l).expect("level in range");
            ctx.problematic_pairs().into_iter().map(move |r| (l, r))
        })
        .collect()
}

/// Parent of the level-`level` 0-form `func` whose support adds the fewest
/// elements to `refined` (level `level − 1`), the smallest index on a tie.
pub fn get_a_parent_func(domains: &RefinementDomains, level: usize, func: &MultiIndex, refined: &ElementSet) -> MultiIndex {
    let sp = domains.level(level - 1).space(P00);
    domains
        .parents(level, func)
        .into_iter()
        .min_by_key(|p| {
            let r = sp.support_elements(p);
            (r[0].len() * r[1].len() - refined.rect_count(&r), *p)
        })
        .expect("subdivision has no zero rows")
}

/// Every element of the level-`level` support of `func` has its parent in
/// `refined` (level `level − 1`).
pub fn is_supported_on(domains: &RefinementDomains, level: usize, refined: &ElementSet, func: &MultiIndex) -> bool {
    let r = domains.level(level).space(P00).support_elements(func);
    let parent = [r[0].start / 2..(r[0].end + 1) / 2, r[1].start / 2..(r[1].end + 1) / 2];
    refined.rect_all(&parent)
}

/// Options of [`exact_refine`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefineOptions {
    pub filter: ResolvedFilter,
    /// Also enforce HB admissibility of this class (at least 2).
    pub admissible: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub domains: RefinementDomains,
    /// L-chain corners refined, as `(level, index)`.
    pub corners: Vec<(usize, MultiIndex)>,
    /// Parent functions refined to restore nestedness, as `(level, index)`.
    pub parents: Vec<(usize, MultiIndex)>,
    pub max_level: usize,
}

fn uncovered_by_supports(domains: &RefinementDomains, level: usize, set: &ElementSet) -> bool {
    let sp = domains.level(level).space(P00);
    let mut covered = ElementSet::empty(set.dims());
    let dims = sp.dims();
    for b in 0..dims[1] {
        for a in 0..dims[0] {
            let r = sp.support_elements(&MultiIndex::new(a + 1, b + 1));
            if set.rect_all(&r) {
                covered.insert_rect(&r);
            }
        }
    }
    !set.is_subset(&covered)
}

fn normalize_marking(domains: &RefinementDomains, marked: &[ElementSet]) -> Result<Vec<ElementSet>, ExactnessError> {
    let top = domains.max_level();
    if let Some(l) = marked.iter().rposition(|m| !m.is_empty()) {
        if l > top {
            return Err(ExactnessError::MarkedTooFine { level: l, max: top });
        }
    }
    let mut out = Vec::with_capacity(top + 1);
    for l in 0..=top {
        let dims = domains.level(l).mesh().dims();
        match marked.get(l) {
            Some(m) if !m.is_empty() => {
                if m.dims() != dims {
                    return Err(HierarchyError::WrongGrid { level: l }.into());
                }
                out.push(m.clone());
            }
            _ => out.push(ElementSet::empty(dims)),
        }
    }
    Ok(out)
}

fn check_marking(domains: &RefinementDomains, marked: &[ElementSet]) -> Result<(), ExactnessError> {
    for (l, m) in marked.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let omega = domains.omega(l);
        if let Some(&(a, b)) = m.difference(&omega).first() {
            return Err(ExactnessError::MarkedOutside { level: l, element: Element::new(a + 1, b + 1) });
        }
        let mut union = domains.refined(l).clone();
        union.union_with(m);
        if uncovered_by_supports(domains, l, &union) {
            return Err(ExactnessError::MarkedNotSupports { level: l });
        }
    }
    Ok(())
}

/// Checks that `domains` satisfies the support-union assumption and has no
/// problematic pairs.
pub fn check_exact_input(domains: &RefinementDomains) -> Result<(), ExactnessError> {
    if let Some(v) = domains.check_assumption1().first() {
        return Err(ExactnessError::Assumption1 { level: v.level });
    }
    if let Some((level, r)) = problematic_pairs(domains).first() {
        return Err(ExactnessError::AlreadyProblematic { level: *level, i: r.i, j: r.j });
    }
    Ok(())
}

/// Refines `marked[ℓ]` on every level and adds the L-chains and parent
/// functions needed to keep the complex exact and the domains nested.
/// Levels are processed from the finest down.
pub fn exact_refine(domains: &RefinementDomains, marked: &[ElementSet], options: RefineOptions) -> Result<RefineOutcome, ExactnessError> {
    if let Some(m) = options.admissible {
        if m < 2 {
            return Err(ExactnessError::InvalidClass(m));
        }
    }
    let mut marked = normalize_marking(domains, marked)?;
    check_exact_input(domains)?;
    check_marking(domains, &marked)?;

    let mut d = domains.clone();
    let top = d.max_level();
    let mut corners = Vec::new();
    let mut parents = Vec::new();
    let mut pending: Vec<Vec<MultiIndex>> = vec![Vec::new(); top + 1];
    let mut previous_parents: Vec<MultiIndex> = Vec::new();

    for l in (0..=top).rev() {
        d.refine_unchecked(l, &marked[l]);
        let mut unchecked = LevelPairContext::new(&d, l)?.initiate_pairs(&marked[l], options.filter);
        let mut level_corners: BTreeSet<MultiIndex> = BTreeSet::new();
        loop {
            let ctx = LevelPairContext::new(&d, l)?;
            let mut current = BTreeSet::new();
            for (i, j) in &unchecked {
                if ctx.is_problematic(i, j)?.problematic {
                    current.insert(ctx.get_lchain_corner(i, j)?);
                }
            }
            if current.is_empty() {
                break;
            }
            let sp = d.level(l).space(P00).clone();
            let mut support = ElementSet::empty(d.level(l).mesh().dims());
            for c in &current {
                support.insert_rect(&sp.support_elements(c));
                corners.push((l, *c));
            }
            d.refine_unchecked(l, &support);
            let seeds: Vec<MultiIndex> = current.iter().copied().collect();
            unchecked = LevelPairContext::new(&d, l)?.get_local_pairs(&seeds, options.filter);
            level_corners.extend(current);
        }

        if let Some(m) = options.admissible {
            if l + 1 >= m {
                let k = l + 1 - m;
                for f in admissibility_closure(&d, l, k, &mut marked[k]) {
                    pending[k].push(f);
                }
            }
        }

        level_corners.extend(previous_parents.drain(..));
        level_corners.extend(pending[l].drain(..));
        if l == 0 {
            continue;
        }
        let mut refined_elements = marked[l - 1].clone();
        refined_elements.union_with(d.refined(l - 1));
        let coarse = d.level(l - 1).space(P00).clone();
        for func in &level_corners {
            if !is_supported_on(&d, l, &refined_elements, func) {
                let parent = get_a_parent_func(&d, l, func, &refined_elements);
                previous_parents.push(parent);
                parents.push((l - 1, parent));
                marked[l - 1].insert_rect(&coarse.support_elements(&parent));
            }
        }
    }
    let max_level = d.max_level();
    Ok(RefineOutcome { domains: d, corners, parents, max_level })
}

/// Level-`k` 0-forms that must be refined so that no level-`k` function
/// stays active on the children of `refined(l)`; their supports are added
/// to `marked`.
fn admissibility_closure(d: &RefinementDomains, l: usize, k: usize, marked: &mut ElementSet) -> Vec<MultiIndex> {
    let shift = l - k;
    let mut ancestors = ElementSet::empty(d.level(k).mesh().dims());
    for (a, b) in d.refined(l).iter0() {
        ancestors.set(a >> shift, b >> shift);
    }
    let sp = d.level(k).space(P00);
    let mut done = d.refined(k).clone();
    done.union_with(marked);
    let dims = sp.dims();
    let mut out = Vec::new();
    for b in 0..dims[1] {
        for a in 0..dims[0] {
            let f = MultiIndex::new(a + 1, b + 1);
            let r = sp.support_elements(&f);
            if ancestors.rect_any(&r) && !done.rect_all(&r) {
                marked.insert_rect(&r);
                done.insert_rect(&r);
                out.push(f);
            }
        }
    }
    out
}

/// Plain refinement of `marked[ℓ]` on every level, coarsest first, with no
/// exactness repair.
pub fn refine_plain(domains: &RefinementDomains, marked: &[ElementSet]) -> Result<RefinementDomains, ExactnessError> {
    let mut d = domains.clone();
    for (l, m) in marked.iter().enumerate() {
        if !m.is_empty() {
            d.refine_mesh(l, m)?;
        }
    }
    Ok(d)
}
