//! Galerkin assembly on hierarchical meshes, the mixed vector Laplace
//! problem, the Maxwell eigenproblem and a Dörfler adaptive loop.

mod adaptive;
mod assembly;
mod fields;
mod laplace;
mod maxwell;
mod quadrature;

pub use adaptive::{adaptive_loop, dorfler_mark, marked_supports, AdaptiveConfig, AdaptiveStep};
pub use assembly::{AssembledSystem, Discretization, PointValues, QuadPoint};
pub use fields::Manufactured;
pub use laplace::{solve_vector_laplace, LaplaceSolution};
pub use maxwell::{solve_maxwell, EigenResult};
pub use quadrature::{gauss_legendre, tensor_rule};

use thiserror::Error;

use crate::derham::DerhamError;
use crate::exactness::ExactnessError;
use crate::linalg::LinalgError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Complex(#[from] DerhamError),
    #[error(transparent)]
    Evaluation(#[from] TensorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Refinement(#[from] ExactnessError),
    #[error("Dörfler parameter {0} outside (0, 1]")]
    InvalidTheta(f64),
}
