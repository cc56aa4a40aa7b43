use super::{AssembledSystem, SolverError};
use crate::linalg::sym_gen_eig;

/// Spectrum of `K x = ω² M₁ x`.
#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// Values with `|λ| ≤ threshold` count as zero.
    pub threshold: f64,
    pub zeros: usize,
}

impl EigenResult {
    /// Eigenvalues above the zero threshold, ascending.
    pub fn nonzero(&self) -> &[f64] {
        &self.values[self.zeros..]
    }
}

/// Dense generalized eigensolve with zero threshold `1e-8 · λ_max`.
pub fn solve_maxwell(system: &AssembledSystem) -> Result<EigenResult, SolverError> {
    let eig = sym_gen_eig(&system.k.to_dense_f64(), &system.m1.to_dense_f64())?;
    let lmax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = 1e-8 * lmax;
    let zeros = eig.values.iter().take_while(|v| v.abs() <= threshold).count();
    Ok(EigenResult { values: eig.values, threshold, zeros })
}
