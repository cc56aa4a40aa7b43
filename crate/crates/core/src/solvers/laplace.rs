use nalgebra::DVector;

use super::{AssembledSystem, Discretization, Manufactured, SolverError};
use crate::linalg::{solve_saddle, SaddleBlocks};

#[derive(Clone, Debug)]
pub struct LaplaceSolution {
    /// Hierarchical 0-form coefficients.
    pub sigma: DVector<f64>,
    /// Hierarchical 1-form coefficients.
    pub u: DVector<f64>,
    pub l2_error: f64,
    /// Squared L² error per active element, in `mesh_elements` order.
    pub element_errors: Vec<f64>,
    /// L² norm of `curl(u_h − u)`.
    pub curl_error: f64,
    /// The saddle system was singular and the least-norm solution was used.
    pub singular: bool,
}

/// Mixed vector Laplace: `⟨σ,τ⟩ − ⟨u, grad τ⟩ = 0`,
/// `⟨grad σ, v⟩ + ⟨curl u, curl v⟩ = ⟨f, v⟩`, with the field given in
/// physical coordinates.
pub fn solve_vector_laplace(
    disc: &Discretization,
    system: &AssembledSystem,
    field: Manufactured,
) -> Result<LaplaceSolution, SolverError> {
    let [n0, n1, _] = disc.dims();
    let f = move |x: f64, y: f64| field.f(x, y);
    let load = disc.load_1form(&f)?;
    let blocks = SaddleBlocks {
        a: -system.m0.to_dense_f64(),
        b: system.b.to_dense_f64(),
        c: system.k.to_dense_f64(),
    };
    let mut rhs = DVector::zeros(n0 + n1);
    rhs.rows_mut(n0, n1).copy_from_slice(&load);
    let sol = solve_saddle(&blocks, &rhs)?;
    let sigma = sol.x.rows(0, n0).into_owned();
    let u = sol.x.rows(n0, n1).into_owned();

    let exact = move |x: f64, y: f64| field.u(x, y);
    let element_errors = disc.element_errors_1form(u.as_slice(), &exact)?;
    let l2_error = element_errors.iter().sum::<f64>().sqrt();
    let curl_error = curl_error(disc, u.as_slice(), field)?;
    Ok(LaplaceSolution { sigma, u, l2_error, element_errors, curl_error, singular: sol.singular })
}

fn curl_error(disc: &Discretization, u: &[f64], field: Manufactured) -> Result<f64, SolverError> {
    let mut total = 0.0;
    for (l, e) in disc.domains().mesh_elements() {
        for q in disc.element_rule(l, e, 4) {
            let ch: f64 = disc.values_at(q.x, q.y)?.curl.iter().map(|(a, c)| u[*a] * c).sum();
            total += q.weight * (ch - field.curl(q.x, q.y)).powi(2);
        }
    }
    Ok(total.sqrt())
}
