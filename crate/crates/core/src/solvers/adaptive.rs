use super::{solve_vector_laplace, Discretization, Manufactured, SolverError};
use crate::derham::{cohomology, Arithmetic};
use crate::exactness::{exact_refine, refine_plain, RefineOptions};
use crate::hierarchy::{ElementSet, RefinementDomains, Variant};

#[derive(Clone, Debug)]
pub struct AdaptiveConfig {
    /// Dörfler fraction in `(0, 1]`.
    pub theta: f64,
    pub max_steps: usize,
    pub target_error: Option<f64>,
    /// Repair marked domains with L-chain refinement.
    pub exact: bool,
    /// No element is refined beyond this level.
    pub max_level: usize,
    pub variant: Variant,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { theta: 0.06, max_steps: 6, target_error: None, exact: true, max_level: 6, variant: Variant::Truncated }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveStep {
    pub step: usize,
    pub domains: RefinementDomains,
    /// Unknowns of the saddle system (0-forms plus 1-forms).
    pub dofs: usize,
    pub l2_error: f64,
    pub h1: usize,
    pub singular: bool,
}

/// Smallest prefix of the elements sorted by decreasing error whose sum
/// reaches `theta` times the total.
pub fn dorfler_mark(errors: &[f64], theta: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));
    let total: f64 = errors.iter().sum();
    let mut acc = 0.0;
    let mut out = Vec::new();
    for i in order {
        if acc >= theta * total && !out.is_empty() {
            break;
        }
        acc += errors[i];
        out.push(i);
    }
    out
}

/// Per level, the supports of 0-forms that touch a marked element.
pub fn marked_supports(domains: &RefinementDomains, marked: &[(usize, crate::tensor::Element)], max_level: usize) -> Vec<ElementSet> {
    let top = domains.max_level();
    let mut per_level: Vec<ElementSet> = (0..=top).map(|l| ElementSet::empty(domains.level(l).mesh().dims())).collect();
    for (l, e) in marked {
        let (a, b) = (e.e1 - 1, e.e2 - 1);
        for (k, set) in per_level.iter_mut().enumerate().take(l + 1) {
            set.set(a >> (l - k), b >> (l - k));
        }
    }
    per_level
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if k >= max_level || m.is_empty() {
                ElementSet::empty(m.dims())
            } else {
                domains.expand_marking(k, m)
            }
        })
        .collect()
}

/// Solve, estimate per element against the exact field, mark, refine.
pub fn adaptive_loop(
    initial: &RefinementDomains,
    config: &AdaptiveConfig,
    field: Manufactured,
) -> Result<Vec<AdaptiveStep>, SolverError> {
    if !(config.theta > 0.0 && config.theta <= 1.0) {
        return Err(SolverError::InvalidTheta(config.theta));
    }
    let mut domains = initial.clone();
    let mut history = Vec::new();
    for step in 0..config.max_steps {
        let disc = Discretization::new(&domains, config.variant, 1.0);
        let sys = disc.assemble()?;
        let sol = solve_vector_laplace(&disc, &sys, field)?;
        let h1 = cohomology(&domains, config.variant, Arithmetic::Exact)?.h[1];
        let [n0, n1, _] = disc.dims();
        history.push(AdaptiveStep {
            step,
            domains: domains.clone(),
            dofs: n0 + n1,
            l2_error: sol.l2_error,
            h1,
            singular: sol.singular,
        });
        if config.target_error.is_some_and(|t| sol.l2_error <= t) || step + 1 == config.max_steps {
            break;
        }
        let elements = domains.mesh_elements();
        let marked: Vec<_> = dorfler_mark(&sol.element_errors, config.theta).into_iter().map(|i| elements[i]).collect();
        let sets = marked_supports(&domains, &marked, config.max_level);
        if sets.iter().all(|s| s.is_empty()) {
            break;
        }
        domains = if config.exact {
            exact_refine(&domains, &sets, RefineOptions::default())?.domains
        } else {
            refine_plain(&domains, &sets)?
        };
    }
    Ok(history)
}
