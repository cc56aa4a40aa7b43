//! Hierarchical B-spline de Rham complexes on the unit square.

pub mod admissibility;
pub mod derham;
pub mod exactness;
pub mod hierarchy;
pub mod linalg;
pub mod solvers;
pub mod tensor;
pub mod univariate;
