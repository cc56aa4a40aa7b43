//! Admissibility classes of HB and THB spaces: the number of successive
//! levels whose active functions meet a single mesh element.

use thiserror::Error;

use crate::hierarchy::{active_functions, ElementSet, HierarchicalBasis, RefinementDomains, Variant};
use crate::tensor::{patterns_of_form, Element, FormPattern, MultiIndex};
use crate::univariate::{BoundaryMode, Form};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdmissibilityError {
    #[error("pattern {0:?} has no co-face in direction {1}")]
    NoCoface(FormPattern, usize),
    #[error("domains violate the support-union assumption on level {0}")]
    Assumption1(usize),
}

/// Class of one form degree with an element attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormClass {
    pub class: usize,
    /// `(level, element)`; `None` for an empty space.
    pub witness: Option<(usize, Element)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibilityReport {
    pub variant: Variant,
    /// Indexed by form degree 0, 1, 2.
    pub forms: [FormClass; 3],
}

/// Per-element span of levels, stored as `(min, max)`.
struct LevelSpan {
    min: Vec<usize>,
    max: Vec<usize>,
}

impl LevelSpan {
    fn new(n: usize) -> Self {
        Self { min: vec![usize::MAX; n], max: vec![0; n] }
    }

    fn add(&mut self, slot: usize, level: usize) {
        self.min[slot] = self.min[slot].min(level);
        self.max[slot] = self.max[slot].max(level);
    }
}

fn pick(best: &mut FormClass, class: usize, level: usize, e: Element) {
    if class > best.class {
        *best = FormClass { class, witness: Some((level, e)) };
    }
}

fn hb_class(domains: &RefinementDomains, patterns: &[FormPattern]) -> FormClass {
    let top = domains.max_level();
    let mut cover: Vec<ElementSet> = (0..=top).map(|l| ElementSet::empty(domains.level(l).mesh().dims())).collect();
    for p in patterns {
        for f in active_functions(domains, *p) {
            let r = domains.level(f.level).space(*p).support_elements(&f.index);
            cover[f.level].insert_rect(&r);
        }
    }
    let mut best = FormClass { class: 0, witness: None };
    for l in 0..=top {
        for (a, b) in domains.active_elements(l).iter0() {
            let levels: Vec<usize> = (0..=l).filter(|&k| cover[k].has(a >> (l - k), b >> (l - k))).collect();
            if let (Some(lo), Some(hi)) = (levels.first(), levels.last()) {
                pick(&mut best, hi - lo + 1, l, Element::new(a + 1, b + 1));
            }
        }
    }
    best
}

fn thb_class(domains: &RefinementDomains, patterns: &[FormPattern]) -> FormClass {
    let top = domains.max_level();
    let fine_dims = domains.level(top).mesh().dims();
    let mut span = LevelSpan::new(fine_dims[0] * fine_dims[1]);
    for p in patterns {
        let basis = HierarchicalBasis::float(domains, *p, Variant::Truncated);
        let fine = domains.level(top).space(*p);
        for (col, entries) in basis.matrix().columns().iter().enumerate() {
            let level = basis.mother(col).level;
            for (row, _) in entries {
                let r = fine.support_elements(&fine.unflat(*row));
                for b in r[1].clone() {
                    for a in r[0].clone() {
                        span.add(b * fine_dims[0] + a, level);
                    }
                }
            }
        }
    }
    let mut best = FormClass { class: 0, witness: None };
    for l in 0..=top {
        let s = top - l;
        for (a, b) in domains.active_elements(l).iter0() {
            let (mut lo, mut hi) = (usize::MAX, 0);
            for fb in (b << s)..((b + 1) << s) {
                for fa in (a << s)..((a + 1) << s) {
                    let slot = fb * fine_dims[0] + fa;
                    lo = lo.min(span.min[slot]);
                    hi = hi.max(span.max[slot]);
                }
            }
            if lo <= hi {
                pick(&mut best, hi - lo + 1, l, Element::new(a + 1, b + 1));
            }
        }
    }
    best
}

/// Class of the form-degree-`j` space (`j` = 0, 1, 2), with an element
/// where it is attained. HB uses full supports, THB the support of the
/// truncated function.
pub fn admissibility_class(domains: &RefinementDomains, j: usize, variant: Variant) -> FormClass {
    let patterns = patterns_of_form(j);
    match variant {
        Variant::Hierarchical => hb_class(domains, patterns),
        Variant::Truncated => thb_class(domains, patterns),
    }
}

pub fn admissibility_report(domains: &RefinementDomains, variant: Variant) -> AdmissibilityReport {
    let forms = [0, 1, 2].map(|j| admissibility_class(domains, j, variant));
    AdmissibilityReport { variant, forms }
}

/// Co-faces in direction `k` (0 or 1) of function `i` of pattern `pattern`:
/// the pattern with direction `k` raised to a 1-form and the one or two
/// indices whose derivative factors involve `i`, clipped to the index range.
pub fn coface_splines(
    domains: &RefinementDomains,
    level: usize,
    pattern: FormPattern,
    i: &MultiIndex,
    k: usize,
) -> Result<Vec<(FormPattern, MultiIndex)>, AdmissibilityError> {
    if pattern[k] == Form::One {
        return Err(AdmissibilityError::NoCoface(pattern, k));
    }
    let mut raised = pattern;
    raised[k] = Form::One;
    let dims = domains.level(level).space(raised).dims();
    let offset = match domains.mode() {
        BoundaryMode::Homogeneous => 0,
        BoundaryMode::Open => 1,
    };
    let mut out = Vec::new();
    for c in 0..2usize {
        let v = i.get(k) + c;
        if v > offset && v - offset <= dims[k] {
            out.push((raised, i.with(k, v - offset)));
        }
    }
    Ok(out)
}

/// Whether class ≤ `m` for 0-forms implies class ≤ `m` for 1- and
/// 2-forms on these domains.
pub fn check_propagation(domains: &RefinementDomains, m: usize, variant: Variant) -> Result<bool, AdmissibilityError> {
    if let Some(v) = domains.check_assumption1().first() {
        return Err(AdmissibilityError::Assumption1(v.level));
    }
    let r = admissibility_report(domains, variant);
    Ok(r.forms[0].class > m || (r.forms[1].class <= m && r.forms[2].class <= m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::hb_active_by_recursion;
    use crate::tensor::{P00, P01, P10};

    fn isolated() -> RefinementDomains {
        let d = RefinementDomains::uniform([4, 4], [2, 2], BoundaryMode::Homogeneous).unwrap();
        RefinementDomains::from_generators(d.base_knots().clone(), &[vec![MultiIndex::new(2, 2)]]).unwrap()
    }

    /// Class by sampling: at each active element centre, evaluate every
    /// active function and record levels of the nonzero ones.
    fn class_by_sampling(domains: &RefinementDomains, j: usize, variant: Variant) -> usize {
        let basis = crate::hierarchy::FormBasis::float(domains, j, variant);
        let mut best = 0;
        for (l, e) in domains.mesh_elements() {
            let (x, y) = domains.level(l).mesh().bounds(e);
            let (cx, cy) = ((x[0] + x[1]) / 2.0, (y[0] + y[1]) / 2.0);
            let vals = basis.evaluate(domains, cx, cy).unwrap();
            let levels: Vec<usize> = vals
                .iter()
                .enumerate()
                .filter(|(_, v)| v.iter().any(|c| c.abs() > 1e-13))
                .map(|(col, _)| basis.mother(col).1.level)
                .collect();
            if let (Some(lo), Some(hi)) = (levels.iter().min(), levels.iter().max()) {
                best = best.max(hi - lo + 1);
            }
        }
        best
    }

    #[test]
    fn single_level_has_class_one() {
        let d = RefinementDomains::uniform([4, 4], [3, 3], BoundaryMode::Open).unwrap();
        for v in [Variant::Hierarchical, Variant::Truncated] {
            let r = admissibility_report(&d, v);
            assert!(r.forms.iter().all(|f| f.class == 1));
        }
    }

    #[test]
    fn isolated_refinement_has_class_two() {
        let d = isolated();
        assert_eq!(admissibility_class(&d, 0, Variant::Hierarchical).class, 2);
        for j in 0..3 {
            for v in [Variant::Hierarchical, Variant::Truncated] {
                assert_eq!(admissibility_class(&d, j, v).class, class_by_sampling(&d, j, v), "j={j} {v:?}");
            }
        }
    }

    #[test]
    fn coface_examples() {
        let d = isolated();
        let i = MultiIndex::new(2, 3);
        assert_eq!(
            coface_splines(&d, 0, P00, &i, 0).unwrap(),
            vec![(P10, MultiIndex::new(2, 3)), (P10, MultiIndex::new(3, 3))]
        );
        assert_eq!(
            coface_splines(&d, 0, P00, &i, 1).unwrap(),
            vec![(P01, MultiIndex::new(2, 3)), (P01, MultiIndex::new(2, 4))]
        );
        assert!(coface_splines(&d, 0, P10, &i, 0).is_err());
    }

    #[test]
    fn coface_supports_nest_and_match_derivative() {
        for mode in [BoundaryMode::Homogeneous, BoundaryMode::Open] {
            let d = RefinementDomains::uniform([5, 4], [3, 2], mode).unwrap();
            let lc = d.level(0);
            let [d1, d2] = lc.derivative_factors();
            for p in [P00, P10, P01] {
                for f in hb_active_by_recursion(&d, p) {
                    let r = lc.space(p).support_elements(&f.index);
                    for k in 0..2 {
                        let Ok(cofaces) = coface_splines(&d, 0, p, &f.index, k) else { continue };
                        let dk = if k == 0 { &d1 } else { &d2 };
                        let nz: Vec<usize> = dk.column(f.index.get(k) - 1).iter().map(|(r, _)| r + 1).collect();
                        let got: Vec<usize> = cofaces.iter().map(|(_, c)| c.get(k)).collect();
                        assert_eq!(got, nz, "{mode:?} {p:?} {k}");
                        for (q, c) in cofaces {
                            let rc = lc.space(q).support_elements(&c);
                            assert!(rc[0].start >= r[0].start && rc[0].end <= r[0].end);
                            assert!(rc[1].start >= r[1].start && rc[1].end <= r[1].end);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn propagation_on_isolated_mesh() {
        let d = isolated();
        for v in [Variant::Hierarchical, Variant::Truncated] {
            assert!(check_propagation(&d, 2, v).unwrap());
            let r = admissibility_report(&d, v);
            assert!(r.forms[1].class <= r.forms[0].class && r.forms[2].class <= r.forms[0].class);
        }
        let thb = admissibility_report(&d, Variant::Truncated);
        let hb = admissibility_report(&d, Variant::Hierarchical);
        for j in 0..3 {
            assert!(thb.forms[j].class <= hb.forms[j].class);
        }
    }

    #[test]
    fn propagation_requires_assumption1() {
        let mut d = RefinementDomains::uniform([4, 4], [2, 2], BoundaryMode::Homogeneous).unwrap();
        let mut m = ElementSet::empty([4, 4]);
        m.set(1, 1);
        d.refine_mesh(0, &m).unwrap();
        assert_eq!(check_propagation(&d, 2, Variant::Hierarchical), Err(AdmissibilityError::Assumption1(0)));
    }
}
