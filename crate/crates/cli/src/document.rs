//! The versioned JSON mesh document.

use std::fs;
use std::path::Path;

use hdr_core::hierarchy::{ElementSet, RefinementDomains};
use hdr_core::tensor::{Element, MultiIndex, P00};
use hdr_core::univariate::{BoundaryMode, KnotVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One degree for both directions, or one per direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Degree {
    Uniform(usize),
    PerDirection([usize; 2]),
}

impl Degree {
    pub fn per_direction(self) -> [usize; 2] {
        match self {
            Degree::Uniform(p) => [p, p],
            Degree::PerDirection(p) => p,
        }
    }

    fn from_pair(p: [usize; 2]) -> Self {
        if p[0] == p[1] {
            Degree::Uniform(p[0])
        } else {
            Degree::PerDirection(p)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Homogeneous,
    Open,
}

impl From<Boundary> for BoundaryMode {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Homogeneous => BoundaryMode::Homogeneous,
            Boundary::Open => BoundaryMode::Open,
        }
    }
}

impl From<BoundaryMode> for Boundary {
    fn from(b: BoundaryMode) -> Self {
        match b {
            BoundaryMode::Homogeneous => Boundary::Homogeneous,
            BoundaryMode::Open => Boundary::Open,
        }
    }
}

/// A hierarchical mesh on the unit square.
///
/// `generators[ℓ]` lists level-ℓ 0-form indices (1-based) whose supports
/// make up `Ω_{ℓ+1}`; `levels` is the number of such lists. Marked
/// elements are `[level, e1, e2]` with 1-based element indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub schema: u32,
    pub degree: Degree,
    pub boundary_mode: Boundary,
    pub base_intervals: [usize; 2],
    pub levels: usize,
    pub generators: Vec<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked: Option<Vec<[usize; 3]>>,
}

impl MeshDocument {
    pub fn uniform(n: [usize; 2], degree: Degree, boundary_mode: Boundary) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            degree,
            boundary_mode,
            base_intervals: n,
            levels: 0,
            generators: Vec::new(),
            marked: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Self = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    /// Pretty JSON with one line per field, and one line per level for
    /// generators and marked elements.
    pub fn to_json(&self) -> String {
        let Value::Object(map) = serde_json::to_value(self).expect("document serializes") else {
            unreachable!("a struct serializes to an object")
        };
        let fields: Vec<String> = map
            .iter()
            .map(|(k, v)| {
                let value = match v {
                    Value::Array(items) if (k == "generators" || k == "marked") && !items.is_empty() => {
                        let rows: Vec<String> = items.iter().map(|r| format!("    {r}")).collect();
                        format!("[\n{}\n  ]", rows.join(",\n"))
                    }
                    other => other.to_string(),
                };
                format!("  \"{k}\": {value}")
            })
            .collect();
        format!("{{\n{}\n}}\n", fields.join(",\n"))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Schema(self.schema));
        }
        if self.levels != self.generators.len() {
            return Err(CliError::Invalid(format!(
                "\"levels\" is {} but {} generator lists are given",
                self.levels,
                self.generators.len()
            )));
        }
        let bad_index = |v: &[usize]| v.contains(&0);
        if self.generators.iter().flatten().any(|g| bad_index(g)) {
            return Err(CliError::Invalid("generator indices are 1-based".into()));
        }
        if self.marked.iter().flatten().any(|m| bad_index(&m[1..])) {
            return Err(CliError::Invalid("marked element indices are 1-based".into()));
        }
        Ok(())
    }

    /// Builds the refinement domains.
    pub fn domains(&self) -> Result<RefinementDomains, CliError> {
        let p = self.degree.per_direction();
        let mode = self.boundary_mode.into();
        let n = self.base_intervals;
        let base = [
            KnotVector::uniform(n[0], p[0], mode).map_err(hdr_core::hierarchy::HierarchyError::from)?,
            KnotVector::uniform(n[1], p[1], mode).map_err(hdr_core::hierarchy::HierarchyError::from)?,
        ];
        let gens: Vec<Vec<MultiIndex>> =
            self.generators.iter().map(|g| g.iter().map(|&[a, b]| MultiIndex::new(a, b)).collect()).collect();
        for (l, g) in gens.iter().enumerate() {
            if g.is_empty() {
                return Err(CliError::Invalid(format!("generator list for level {l} is empty")));
            }
        }
        Ok(RefinementDomains::from_generators(base, &gens)?)
    }

    /// Document describing `domains`, with a small generator set per level.
    pub fn from_domains(domains: &RefinementDomains) -> Self {
        let top = domains.max_level();
        let n = domains.level(0).mesh().dims();
        let generators: Vec<Vec<[usize; 2]>> =
            (0..top).map(|l| compact_generators(domains, l).into_iter().map(|i| [i.i1, i.i2]).collect()).collect();
        Self {
            schema: SCHEMA_VERSION,
            degree: Degree::from_pair(domains.degree()),
            boundary_mode: domains.mode().into(),
            base_intervals: n,
            levels: top,
            generators,
            marked: None,
        }
    }

    /// Marked elements grouped per level, checked against each level's grid.
    pub fn marked_sets(&self, domains: &RefinementDomains) -> Result<Vec<ElementSet>, CliError> {
        marked_sets(domains, self.marked.as_deref().unwrap_or(&[]))
    }
}

/// Subset of the level-`l` generators whose supports still cover
/// `Ω_{l+1}`: largest supports first, then redundant ones dropped.
fn compact_generators(domains: &RefinementDomains, l: usize) -> Vec<MultiIndex> {
    let sp = domains.level(l).space(P00);
    let dims = domains.level(l).mesh().dims();
    let area = |r: &[std::ops::Range<usize>; 2]| r[0].len() * r[1].len();
    let mut candidates: Vec<_> = domains.generators(l).into_iter().map(|g| (g, sp.support_elements(&g))).collect();
    candidates.sort_by(|a, b| area(&b.1).cmp(&area(&a.1)).then(a.0.cmp(&b.0)));
    let mut covered = ElementSet::empty(dims);
    let mut kept = Vec::new();
    for (g, r) in candidates {
        if !covered.rect_all(&r) {
            covered.insert_rect(&r);
            kept.push((g, r));
        }
    }
    let mut count = vec![0usize; dims[0] * dims[1]];
    let cells = |r: &[std::ops::Range<usize>; 2]| {
        let r = r.clone();
        r[1].clone().flat_map(move |b| r[0].clone().map(move |a| b * dims[0] + a))
    };
    for (_, r) in &kept {
        cells(r).for_each(|c| count[c] += 1);
    }
    let mut out = Vec::new();
    for (g, r) in kept.into_iter().rev() {
        if cells(&r).all(|c| count[c] > 1) {
            cells(&r).for_each(|c| count[c] -= 1);
        } else {
            out.push(g);
        }
    }
    out.sort();
    out
}

pub fn marked_sets(domains: &RefinementDomains, marked: &[[usize; 3]]) -> Result<Vec<ElementSet>, CliError> {
    let top = domains.max_level();
    let mut sets: Vec<ElementSet> = (0..=top).map(|l| ElementSet::empty(domains.level(l).mesh().dims())).collect();
    for &[l, e1, e2] in marked {
        let set = sets
            .get_mut(l)
            .ok_or_else(|| CliError::Invalid(format!("marked element on level {l}, but the finest level is {top}")))?;
        let dims = set.dims();
        if e1 == 0 || e2 == 0 || e1 > dims[0] || e2 > dims[1] {
            return Err(CliError::Invalid(format!("marked element ({e1}, {e2}) outside the level-{l} grid")));
        }
        set.insert_element(Element::new(e1, e2));
    }
    Ok(sets)
}
