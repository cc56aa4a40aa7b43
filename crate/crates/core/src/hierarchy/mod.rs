//! Nested refinement domains and the hierarchical (HB) and truncated
//! hierarchical (THB) spline bases built on them.

mod basis;
mod domains;
mod grid;

pub use basis::{active_functions, hb_active_by_recursion, ActiveFunction, FormBasis, HierarchicalBasis, Variant};
pub use domains::{Assumption1Violation, RefinementDomains, Transfer};
pub use grid::{ElementSet, GridSet, IndexSet};

use thiserror::Error;

use crate::tensor::{Element, MultiIndex};
use crate::univariate::SplineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("both directions must use the same boundary mode")]
    MixedBoundaryModes,
    #[error("index {index} out of range on level {level}")]
    IndexOutOfRange { level: usize, index: MultiIndex },
    #[error("level {level} exceeds the finest level {max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("element set does not match the level-{level} mesh")]
    WrongGrid { level: usize },
    #[error("element {element:?} of level {level} lies outside the refinement domain")]
    NotNested { level: usize, element: Element },
}
