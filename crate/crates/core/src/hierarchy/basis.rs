use num_bigint::BigInt;

use crate::linalg::{common_denominator, scale_to_integer, Scalar, SparseMatrix, SparseVec};
use crate::tensor::{patterns_of_form, FormPattern, MultiIndex, TensorError};
use crate::univariate::{to_f64, Rational};

use super::{IndexSet, RefinementDomains};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    Hierarchical,
    Truncated,
}

/// An active function, identified by its level and tensor index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveFunction {
    pub level: usize,
    pub index: MultiIndex,
}

/// Active functions of one pattern: level-ℓ functions with support in `Ω_ℓ`
/// but not in `Ω_{ℓ+1}`. Sorted by level, then flat index.
pub fn active_functions(domains: &RefinementDomains, pattern: FormPattern) -> Vec<ActiveFunction> {
    let mut out = Vec::new();
    for l in 0..=domains.max_level() {
        let own = domains.inside_own(l, pattern);
        let next = domains.inside_next(l, pattern);
        for (a, b) in own.iter0() {
            if !next.has(a, b) {
                out.push(ActiveFunction { level: l, index: MultiIndex::new(a + 1, b + 1) });
            }
        }
    }
    out
}

/// Active functions by the level recursion: start from all of level 0, then
/// at each level keep the previous functions whose support leaves `Ω_{ℓ+1}`
/// and add the level-(ℓ+1) functions supported in `Ω_{ℓ+1}`.
pub fn hb_active_by_recursion(domains: &RefinementDomains, pattern: FormPattern) -> Vec<ActiveFunction> {
    let dims0 = domains.level(0).space(pattern).dims();
    let mut active: Vec<ActiveFunction> = IndexSet::full(dims0)
        .indices()
        .map(|index| ActiveFunction { level: 0, index })
        .collect();
    for l in 0..domains.max_level() {
        let omega = domains.refined(l).children();
        let mut next = Vec::new();
        for f in &active {
            let r = domains.support_elements(f.level, pattern, &f.index).expect("active index");
            let shift = l + 1 - f.level;
            let fine = [(r[0].start << shift)..(r[0].end << shift), (r[1].start << shift)..(r[1].end << shift)];
            if !omega.rect_all(&fine) {
                next.push(*f);
            }
        }
        let sp = domains.level(l + 1).space(pattern);
        let dims = sp.dims();
        for b in 0..dims[1] {
            for a in 0..dims[0] {
                let index = MultiIndex::new(a + 1, b + 1);
                if omega.rect_all(&sp.support_elements(&index)) {
                    next.push(ActiveFunction { level: l + 1, index });
                }
            }
        }
        active = next;
    }
    active.sort_by_key(|f| (f.level, f.index.i2, f.index.i1));
    active
}

/// HB or THB basis of one pattern, with every function written in the
/// tensor basis of the finest level `L`.
#[derive(Clone, Debug)]
pub struct HierarchicalBasis<T: Scalar> {
    pattern: FormPattern,
    variant: Variant,
    fine_level: usize,
    functions: Vec<ActiveFunction>,
    /// `dim(level L) x #functions`
    matrix: SparseMatrix<T>,
}

impl<T: Scalar> HierarchicalBasis<T> {
    /// Builds the basis with subdivision matrices converted by `convert`.
    /// Each converted matrix may differ from the true one by a nonzero
    /// factor, which only rescales columns.
    pub fn build(
        domains: &RefinementDomains,
        pattern: FormPattern,
        variant: Variant,
        convert: impl Fn(&SparseMatrix<Rational>) -> SparseMatrix<T>,
    ) -> Self {
        let top = domains.max_level();
        let functions = active_functions(domains, pattern);
        let ups: Vec<SparseMatrix<T>> = (0..top).map(|l| convert(&domains.transfer(l).tensor(pattern))).collect();
        let inside: Vec<IndexSet> = match variant {
            Variant::Hierarchical => Vec::new(),
            Variant::Truncated => (0..=top).map(|l| domains.inside_own(l, pattern)).collect(),
        };
        let spaces: Vec<_> = (0..=top).map(|l| domains.level(l).space(pattern).clone()).collect();
        let columns: Vec<SparseVec<T>> = functions
            .iter()
            .map(|f| {
                let mut v: SparseVec<T> = vec![(spaces[f.level].flat(&f.index).expect("active index"), T::one())];
                for k in f.level..top {
                    v = ups[k].apply_sparse(&v);
                    if variant == Variant::Truncated {
                        let sp = &spaces[k + 1];
                        let own = &inside[k + 1];
                        v.retain(|(r, _)| !own.contains_index(&sp.unflat(*r)));
                    }
                }
                v
            })
            .collect();
        let matrix = SparseMatrix::from_columns(spaces[top].dimension(), columns).expect("rows within level L");
        Self { pattern, variant, fine_level: top, functions, matrix }
    }

    pub fn pattern(&self) -> FormPattern {
        self.pattern
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn fine_level(&self) -> usize {
        self.fine_level
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[ActiveFunction] {
        &self.functions
    }

    /// The level and index whose function this column truncates (or equals,
    /// for HB).
    pub fn mother(&self, col: usize) -> ActiveFunction {
        self.functions[col]
    }

    /// Coefficients in the level-`L` basis, one column per function.
    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }
}

impl HierarchicalBasis<f64> {
    pub fn float(domains: &RefinementDomains, pattern: FormPattern, variant: Variant) -> Self {
        Self::build(domains, pattern, variant, |m| m.map(to_f64))
    }
}

impl HierarchicalBasis<Rational> {
    pub fn rational(domains: &RefinementDomains, pattern: FormPattern, variant: Variant) -> Self {
        Self::build(domains, pattern, variant, |m| m.clone())
    }
}

impl HierarchicalBasis<BigInt> {
    /// Integer columns, each a positive multiple of the true one.
    pub fn integer(domains: &RefinementDomains, pattern: FormPattern, variant: Variant) -> Self {
        Self::build(domains, pattern, variant, |m| scale_to_integer(m, &common_denominator(&[m])))
    }
}

/// Basis of the hierarchical space of one form degree: X⁰, X¹ (the P10
/// block then the P01 block) or X².
#[derive(Clone, Debug)]
pub struct FormBasis<T: Scalar> {
    degree: usize,
    blocks: Vec<HierarchicalBasis<T>>,
    matrix: SparseMatrix<T>,
}

impl<T: Scalar> FormBasis<T> {
    pub fn build(
        domains: &RefinementDomains,
        degree: usize,
        variant: Variant,
        convert: impl Fn(&SparseMatrix<Rational>) -> SparseMatrix<T> + Copy,
    ) -> Self {
        let blocks: Vec<HierarchicalBasis<T>> = patterns_of_form(degree)
            .iter()
            .map(|p| HierarchicalBasis::build(domains, *p, variant, convert))
            .collect();
        let nrows: usize = blocks.iter().map(|b| b.matrix.nrows()).sum();
        let mut columns = Vec::new();
        let mut row_offset = 0;
        for b in &blocks {
            for c in b.matrix.columns() {
                columns.push(c.iter().map(|(r, v)| (r + row_offset, v.clone())).collect());
            }
            row_offset += b.matrix.nrows();
        }
        let matrix = SparseMatrix::from_columns(nrows, columns).expect("block rows");
        Self { degree, blocks, matrix }
    }

    /// Form degree `j`.
    pub fn form_degree(&self) -> usize {
        self.degree
    }

    pub fn blocks(&self) -> &[HierarchicalBasis<T>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pattern and mother function of column `col`.
    pub fn mother(&self, mut col: usize) -> (FormPattern, ActiveFunction) {
        for b in &self.blocks {
            if col < b.len() {
                return (b.pattern, b.functions[col]);
            }
            col -= b.len();
        }
        panic!("column out of range")
    }

    /// Level-`L` coefficients, blocks stacked in row and column order.
    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }
}

impl FormBasis<f64> {
    pub fn float(domains: &RefinementDomains, degree: usize, variant: Variant) -> Self {
        Self::build(domains, degree, variant, |m| m.map(to_f64))
    }

    /// Values of every basis function at `(x, y)`, as `(column, component
    /// values)`. Components are the pattern blocks (one for X⁰ and X², two
    /// for X¹).
    pub fn evaluate(&self, domains: &RefinementDomains, x: f64, y: f64) -> Result<Vec<Vec<f64>>, TensorError> {
        let top = domains.max_level();
        let ncomp = self.blocks.len();
        let mut out = vec![vec![0.0; ncomp]; self.len()];
        let mut col0 = 0;
        for (c, b) in self.blocks.iter().enumerate() {
            let sp = domains.level(top).space(b.pattern);
            let vals: std::collections::HashMap<usize, f64> = sp.basis_at(x, y)?.into_iter().collect();
            for (j, col) in b.matrix.columns().iter().enumerate() {
                out[col0 + j][c] = col.iter().map(|(r, v)| v * vals.get(r).copied().unwrap_or(0.0)).sum();
            }
            col0 += b.len();
        }
        Ok(out)
    }
}

impl FormBasis<BigInt> {
    pub fn integer(domains: &RefinementDomains, degree: usize, variant: Variant) -> Self {
        Self::build(domains, degree, variant, |m| scale_to_integer(m, &common_denominator(&[m])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::ElementSet;
    use crate::linalg::rank_exact;
    use crate::tensor::{P00, P01, P10, P11};
    use crate::univariate::BoundaryMode;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn three_level(mode: BoundaryMode) -> RefinementDomains {
        let mut d = RefinementDomains::uniform([4, 4], [2, 2], mode).unwrap();
        let mut m = ElementSet::empty([4, 4]);
        m.insert_rect(&[0..3, 0..2]);
        let m = d.expand_marking(0, &m);
        d.refine_mesh(0, &m).unwrap();
        let mut m1 = ElementSet::empty([8, 8]);
        m1.set(1, 1);
        let m1 = d.expand_marking(1, &m1);
        d.refine_mesh(1, &m1).unwrap();
        d
    }

    fn random_domains(seed: &[(usize, usize)], mode: BoundaryMode, degree: usize) -> RefinementDomains {
        let mut d = RefinementDomains::uniform([4, 4], [degree, degree], mode).unwrap();
        for (l, chunk) in seed.chunks(2).enumerate().take(3) {
            let dims = d.level(l).mesh().dims();
            let omega = d.omega(l);
            let mut m = ElementSet::empty(dims);
            for (a, b) in chunk {
                let (a, b) = (a % dims[0], b % dims[1]);
                if omega.has(a, b) {
                    m.set(a, b);
                }
            }
            let m = d.expand_marking(l, &m);
            if m.is_empty() {
                break;
            }
            d.refine_mesh(l, &m).unwrap();
        }
        d
    }

    #[test]
    fn recursion_matches_characterization() {
        for mode in [BoundaryMode::Homogeneous, BoundaryMode::Open] {
            let d = three_level(mode);
            assert_eq!(d.max_level(), 2);
            for p in [P00, P10, P01, P11] {
                assert_eq!(active_functions(&d, p), hb_active_by_recursion(&d, p), "{mode:?} {p:?}");
            }
        }
    }

    #[test]
    fn thb_partition_of_unity() {
        let d = three_level(BoundaryMode::Open);
        let thb = HierarchicalBasis::rational(&d, P00, Variant::Truncated);
        let n = thb.matrix().nrows();
        let mut sum = vec![Rational::zero(); n];
        for c in thb.matrix().columns() {
            for (r, v) in c {
                sum[*r] += v;
            }
        }
        assert!(sum.iter().all(|s| s.is_one()));
    }

    #[test]
    fn hb_and_thb_span_the_same_space() {
        for mode in [BoundaryMode::Homogeneous, BoundaryMode::Open] {
            let d = three_level(mode);
            for p in [P00, P10, P01, P11] {
                let hb = HierarchicalBasis::rational(&d, p, Variant::Hierarchical);
                let thb = HierarchicalBasis::rational(&d, p, Variant::Truncated);
                let both = SparseMatrix::hstack(&[hb.matrix(), thb.matrix()]).unwrap();
                assert_eq!(rank_exact(hb.matrix()), hb.len());
                assert_eq!(rank_exact(thb.matrix()), thb.len());
                assert_eq!(rank_exact(&both), hb.len());
            }
        }
    }

    #[test]
    fn truncated_support_inside_mother() {
        let d = three_level(BoundaryMode::Homogeneous);
        let top = d.max_level();
        for p in [P00, P10, P01, P11] {
            let thb = HierarchicalBasis::rational(&d, p, Variant::Truncated);
            let fine = d.level(top).space(p);
            for (j, col) in thb.matrix().columns().iter().enumerate() {
                let f = thb.mother(j);
                let r = d.support_elements(f.level, p, &f.index).unwrap();
                let s = top - f.level;
                for (row, _) in col {
                    let cr = fine.support_elements(&fine.unflat(*row));
                    for k in 0..2 {
                        assert!(cr[k].start >= r[k].start << s && cr[k].end <= r[k].end << s);
                    }
                }
            }
        }
    }

    #[test]
    fn hb_column_evaluates_to_mother() {
        let d = three_level(BoundaryMode::Open);
        let hb = FormBasis::float(&d, 0, Variant::Hierarchical);
        for &(x, y) in &[(0.13, 0.27), (0.61, 0.09), (0.9, 0.77), (0.31, 0.44)] {
            let vals = hb.evaluate(&d, x, y).unwrap();
            for (j, v) in vals.iter().enumerate() {
                let (p, f) = hb.mother(j);
                let direct = d.level(f.level).space(p).evaluate(&f.index, x, y).unwrap();
                assert!((v[0] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integer_basis_is_positive_multiple() {
        let d = three_level(BoundaryMode::Homogeneous);
        let q = FormBasis::build(&d, 1, Variant::Truncated, |m: &SparseMatrix<Rational>| m.clone());
        let z = FormBasis::integer(&d, 1, Variant::Truncated);
        assert_eq!(q.len(), z.len());
        for (cq, cz) in q.matrix().columns().iter().zip(z.matrix().columns()) {
            assert_eq!(cq.len(), cz.len());
            let ratio = Rational::from(cz[0].1.clone()) / &cq[0].1;
            assert!(ratio > Rational::zero());
            for ((rq, vq), (rz, vz)) in cq.iter().zip(cz) {
                assert_eq!(rq, rz);
                assert_eq!(Rational::from(vz.clone()), vq * &ratio);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn recursion_matches_on_random_domains(
            seed in proptest::collection::vec((0usize..32, 0usize..32), 1..6),
            open in any::<bool>(),
            degree in 1usize..4,
        ) {
            let mode = if open { BoundaryMode::Open } else { BoundaryMode::Homogeneous };
            let d = random_domains(&seed, mode, degree);
            prop_assert!(d.check_assumption1().is_empty());
            for p in [P00, P10, P01, P11] {
                prop_assert_eq!(active_functions(&d, p), hb_active_by_recursion(&d, p));
            }
        }
    }
}
