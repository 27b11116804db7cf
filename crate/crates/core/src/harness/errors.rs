use crate::assembly::{interpolate_slots, Solution, SolveOptions};
use crate::error::Result;
use crate::mesh::{PolygonalMesh, Vec2};
use crate::method_ks::solve_ks;
use crate::method_nc::solve_nc;
use crate::vem::Method;

/// Discrete energy error `E_e` and weighted DOF error `E_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub energy: f64,
    pub l2: f64,
}

/// `E_e = a_h(u_h − I_h u, u_h − I_h u)^{1/2}` with the assembled form
/// (penalty included), `E_2 = h (Σ_i |χ_i(u_h) − χ_i(u)|²)^{1/2}` over the
/// free DOFs.
pub fn compute_errors<F: Fn(Vec2) -> Vec2>(solution: &Solution, mesh: &PolygonalMesh, u: F, h: f64) -> Result<ErrorPair> {
    let interp = solution.map.restrict(&interpolate_slots(mesh, &solution.map, u)?);
    let diff: Vec<f64> = solution.values.iter().zip(&interp).map(|(a, b)| a - b).collect();
    let energy = solution.system.matrix.quadratic_form(&diff).max(0.0).sqrt();
    let l2 = h * diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(ErrorPair { energy, l2 })
}

/// Material and method parameters of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseParams {
    pub method: Method,
    pub mu: f64,
    pub lambda: f64,
    /// Jump penalty, used by the nonconforming method only.
    pub gamma: f64,
}

pub fn solve<F>(mesh: &PolygonalMesh, params: &CaseParams, f: F, opts: SolveOptions) -> Result<Solution>
where
    F: Fn(Vec2) -> Vec2 + Sync,
{
    match params.method {
        Method::Nc => solve_nc(mesh, params.mu, params.lambda, params.gamma, f, opts),
        Method::Ks => solve_ks(mesh, params.mu, params.lambda, f, opts),
    }
}

/// Solves the manufactured problem and measures both errors.
pub fn solve_manufactured(mesh: &PolygonalMesh, params: &CaseParams, opts: SolveOptions) -> Result<(Solution, ErrorPair)> {
    let (mu, lambda) = (params.mu, params.lambda);
    let sol = solve(mesh, params, |p| super::exact_forcing(p, mu, lambda), opts)?;
    let err = compute_errors(&sol, mesh, |p| super::exact_solution(p, lambda), mesh.h())?;
    Ok((sol, err))
}
