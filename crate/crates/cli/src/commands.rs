//! `refine`, `check` and `solve`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use hdr_core::admissibility::{admissibility_report, check_propagation};
use hdr_core::derham::{cohomology, Arithmetic};
use hdr_core::exactness::{exact_refine, problematic_pairs, refine_plain, RefineOptions};
use hdr_core::hierarchy::{ElementSet, RefinementDomains};
use hdr_core::solvers::{adaptive_loop, marked_supports, solve_maxwell, AdaptiveConfig, Discretization};
use hdr_core::tensor::{Element, MultiIndex};
use hdr_core::univariate::BoundaryMode;
use serde_json::{json, Value};

use crate::args::{ArithmeticArg, CheckArgs, CheckWhat, Problem, RefineArgs, SolveArgs, Toggle};
use crate::document::{marked_sets, MeshDocument};
use crate::{emit, load_checked, CliError, Status};

fn index_json(i: &MultiIndex) -> Value {
    json!([i.i1, i.i2])
}

fn element_json(e: &Element) -> Value {
    json!([e.e1, e.e2])
}

fn read_marking(path: &std::path::Path) -> Result<Vec<[usize; 3]>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::from(e).in_file(path))
}

fn marking(a: &RefineArgs, doc: &MeshDocument, domains: &RefinementDomains) -> Result<Vec<ElementSet>, CliError> {
    let list = match &a.marked {
        Some(p) => read_marking(p)?,
        None => doc.marked.clone().unwrap_or_default(),
    };
    let sets = marked_sets(domains, &list)?;
    if !a.supports {
        return Ok(sets);
    }
    let elements: Vec<(usize, Element)> = list.iter().map(|&[l, e1, e2]| (l, Element::new(e1, e2))).collect();
    Ok(marked_supports(domains, &elements, usize::MAX))
}

pub fn refine(a: &RefineArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    let (doc, domains) = load_checked(&a.input, log)?;
    let sets = marking(a, &doc, &domains)?;
    if sets.iter().all(ElementSet::is_empty) {
        writeln!(log, "nothing marked; mesh unchanged (final level {})", domains.max_level())?;
        let unchanged = MeshDocument { marked: None, ..doc };
        emit(a.out.as_deref(), &unchanged.to_json(), out)?;
        return Ok(Status::Clean);
    }
    let (refined, status) = match a.exact {
        Toggle::On => {
            let options = RefineOptions { admissible: a.admissible.0, ..RefineOptions::default() };
            let outcome = exact_refine(&domains, &sets, options)?;
            writeln!(log, "corners added: {}", outcome.corners.len())?;
            for (l, i) in &outcome.corners {
                writeln!(log, "  level {l} corner {i}")?;
            }
            writeln!(log, "parents promoted: {}", outcome.parents.len())?;
            for (l, i) in &outcome.parents {
                writeln!(log, "  level {l} parent {i}")?;
            }
            writeln!(log, "final level: {}", outcome.max_level)?;
            (outcome.domains, Status::Clean)
        }
        Toggle::Off => {
            if a.admissible.0.is_some() {
                return Err(CliError::Invalid("--admissible needs --exact on".into()));
            }
            let d = refine_plain(&domains, &sets)?;
            writeln!(log, "final level: {}", d.max_level())?;
            let pairs = problematic_pairs(&d);
            if pairs.is_empty() {
                (d, Status::Clean)
            } else {
                writeln!(log, "h1>0 risk: {} problematic pairs", pairs.len())?;
                for (l, r) in &pairs {
                    writeln!(log, "  level {l} pair {} {}", r.i, r.j)?;
                }
                (d, Status::Finding)
            }
        }
    };
    let new_doc = if refined.same_refinement(&domains) {
        MeshDocument { marked: None, ..doc }
    } else {
        MeshDocument::from_domains(&refined)
    };
    emit(a.out.as_deref(), &new_doc.to_json(), out)?;
    Ok(status)
}

fn expected_cohomology(mode: BoundaryMode) -> [usize; 3] {
    match mode {
        BoundaryMode::Homogeneous => [0, 0, 1],
        BoundaryMode::Open => [1, 0, 0],
    }
}

pub fn check(a: &CheckArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    let (_, domains) = load_checked(&a.input, log)?;
    let variant = a.variant.into();
    let report = match a.what {
        CheckWhat::Pairs => {
            let pairs = problematic_pairs(&domains);
            let list: Vec<Value> = pairs
                .iter()
                .map(|(l, r)| json!({"level": l, "i": index_json(&r.i), "j": index_json(&r.j)}))
                .collect();
            json!({"clean": list.is_empty(), "count": list.len(), "pairs": list})
        }
        CheckWhat::Cohomology => {
            let arithmetic = match a.arithmetic {
                ArithmeticArg::Exact => Arithmetic::Exact,
                ArithmeticArg::Float => Arithmetic::Float,
            };
            let c = cohomology(&domains, variant, arithmetic)?;
            let expected = expected_cohomology(domains.mode());
            json!({
                "clean": c.h == expected,
                "h0": c.h[0],
                "h1": c.h[1],
                "h2": c.h[2],
                "expected": expected,
                "dims": c.dims,
                "rank_grad": c.rank_grad,
                "rank_curl": c.rank_curl,
                "arithmetic": format!("{:?}", c.arithmetic).to_lowercase(),
            })
        }
        CheckWhat::Admissibility => {
            let r = admissibility_report(&domains, variant);
            let classes = r.forms.clone().map(|f| f.class);
            let witnesses: Vec<Value> = r
                .forms
                .iter()
                .map(|f| match f.witness {
                    Some((l, e)) => json!({"level": l, "element": element_json(&e)}),
                    None => Value::Null,
                })
                .collect();
            let propagates = check_propagation(&domains, classes[0], variant)?;
            let clean = match a.max_class {
                Some(m) => classes.iter().all(|&c| c <= m),
                None => classes[1] <= classes[0] && classes[2] <= classes[0],
            };
            json!({
                "clean": clean,
                "variant": format!("{:?}", r.variant).to_lowercase(),
                "classes": classes,
                "witnesses": witnesses,
                "propagates": propagates,
            })
        }
        CheckWhat::Assumption1 => {
            let violations: Vec<Value> = domains
                .check_assumption1()
                .iter()
                .map(|v| {
                    json!({
                        "level": v.level,
                        "uncovered": v.uncovered.iter().map(element_json).collect::<Vec<_>>(),
                        "not_nested": v.not_nested.iter().map(element_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({"clean": violations.is_empty(), "violations": violations})
        }
    };
    let clean = report["clean"].as_bool().unwrap_or(false);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    out.write_all(text.as_bytes())?;
    Ok(Status::from_clean(clean))
}

pub fn solve(a: &SolveArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    let (_, domains) = load_checked(&a.input, log)?;
    match a.problem {
        Problem::Laplace => laplace(a, &domains, out, log),
        Problem::Maxwell => maxwell(a, &domains, out, log),
    }
}

fn laplace(a: &SolveArgs, domains: &RefinementDomains, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    if a.side.is_some_and(|s| s != 1.0) {
        return Err(CliError::Invalid("the Laplace fields are defined on the unit square".into()));
    }
    if a.steps == 0 {
        return Err(CliError::Invalid("--steps must be at least 1".into()));
    }
    let config = AdaptiveConfig {
        theta: a.theta,
        max_steps: a.steps,
        target_error: None,
        exact: a.exact == Toggle::On,
        max_level: a.max_level,
        variant: a.variant.into(),
    };
    let history = adaptive_loop(domains, &config, a.field.into())?;
    let mut csv = String::from("step,dofs,l2_error,h1,singular\n");
    for s in &history {
        writeln!(csv, "{},{},{:.12e},{},{}", s.step, s.dofs, s.l2_error, s.h1, s.singular).expect("string write");
        writeln!(log, "step {}: {} dofs, L2 error {:.3e}, h1 {}", s.step, s.dofs, s.l2_error, s.h1)?;
    }
    emit(a.out.as_deref(), &csv, out)?;
    Ok(Status::from_clean(history.iter().all(|s| s.h1 == 0 && !s.singular)))
}

fn maxwell(a: &SolveArgs, domains: &RefinementDomains, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    let side = a.side.unwrap_or(PI);
    if !(side > 0.0 && side.is_finite()) {
        return Err(CliError::Invalid(format!("side must be positive, got {side}")));
    }
    let disc = Discretization::new(domains, a.variant.into(), side);
    let system = disc.assemble()?;
    let eig = solve_maxwell(&system)?;
    let n0 = disc.dims()[0];
    let gradients = n0 - expected_cohomology(domains.mode())[0];
    writeln!(log, "zero eigenvalues: {} (gradient space {gradients})", eig.zeros)?;
    if eig.zeros > gradients {
        writeln!(log, "spurious harmonic fields: {}", eig.zeros - gradients)?;
    }
    let mut csv = String::from("index,eigenvalue\n");
    for (k, v) in eig.nonzero().iter().enumerate() {
        writeln!(csv, "{},{:.12}", k + 1, v).expect("string write");
    }
    emit(a.out.as_deref(), &csv, out)?;
    Ok(Status::from_clean(eig.zeros == gradients))
}
