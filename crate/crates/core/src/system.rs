//! Discrete form of the coupled system
//!
//! ```text
//! −Δu + u + κv − μ₁u³ − βuv² = 0
//! −Δv + v + κu − μ₂v³ − βu²v = 0
//! ```
//!
//! on the free nodes, its energy and its Jacobian. With `cutoff` the cubic
//! self-interactions become `μ₁(u⁺)³`, `μ₂(v⁺)³`.
//!
//! Everything here is the exact gradient/Hessian of one discrete energy,
//! so Newton, the Nehari minimizer and the finite-difference checks agree
//! to round-off.

use std::sync::Arc;

use crate::branches::Params;
use crate::error::{Result, SchroError};
use crate::linalg::BandMatrix;
use crate::mesh::{Profile, RadialGrid};

pub(crate) fn common_grid(u: &Profile, v: &Profile) -> Result<Arc<RadialGrid>> {
    let g = u.grid().clone();
    g.check(v)?;
    Ok(g)
}

pub(crate) fn check_dim(p: &Params, grid: &RadialGrid) -> Result<()> {
    if p.dim != grid.dim() {
        return Err(SchroError::Config(format!(
            "parameters are for N = {} but the grid has N = {}",
            p.dim,
            grid.dim()
        )));
    }
    Ok(())
}

#[inline]
fn cube_part(x: f64, cutoff: bool) -> (f64, f64) {
    let y = if cutoff { x.max(0.0) } else { x };
    (y * y * y, 3.0 * y * y)
}

/// Volume-weighted residual on the free nodes (the gradient of the energy).
pub(crate) fn weighted_residual(
    p: &Params,
    grid: &RadialGrid,
    u: &[f64],
    v: &[f64],
    cutoff: bool,
) -> (Vec<f64>, Vec<f64>) {
    let k = grid.stiffness();
    let vol = grid.volumes();
    let mut fu = k.matvec(u);
    let mut fv = k.matvec(v);
    for i in 0..u.len() {
        let (a, b) = (u[i], v[i]);
        let (a3, _) = cube_part(a, cutoff);
        let (b3, _) = cube_part(b, cutoff);
        fu[i] += vol[i] * (a + p.kappa * b - p.mu1 * a3 - p.beta * a * b * b);
        fv[i] += vol[i] * (b + p.kappa * a - p.mu2 * b3 - p.beta * a * a * b);
    }
    (fu, fv)
}

/// Grid L² norm of the nodal residual whose weighted form is `f`.
pub(crate) fn nodal_norm(grid: &RadialGrid, f: &[f64]) -> f64 {
    f.iter().zip(grid.volumes()).map(|(f, w)| f * f / w).sum::<f64>().sqrt()
}

/// Nodal residual profiles of the system at `(u, v)` (zero at `R`).
pub fn system_residual(p: &Params, u: &Profile, v: &Profile, cutoff: bool) -> Result<(Profile, Profile)> {
    let grid = common_grid(u, v)?;
    check_dim(p, &grid)?;
    let (fu, fv) = weighted_residual(p, &grid, u.interior(), v.interior(), cutoff);
    let vol = grid.volumes();
    let nodal = |f: Vec<f64>| -> Vec<f64> { f.into_iter().zip(vol).map(|(f, w)| f / w).collect() };
    Ok((Profile::from_interior(grid.clone(), &nodal(fu)), Profile::from_interior(grid.clone(), &nodal(fv))))
}

/// √(‖F_u‖² + ‖F_v‖²) in the grid L² norm.
pub fn residual_norm(p: &Params, u: &Profile, v: &Profile, cutoff: bool) -> Result<f64> {
    let grid = common_grid(u, v)?;
    check_dim(p, &grid)?;
    let (fu, fv) = weighted_residual(p, &grid, u.interior(), v.interior(), cutoff);
    Ok(nodal_norm(&grid, &fu).hypot(nodal_norm(&grid, &fv)))
}

/// Residual norm divided by `1 + ‖(u, v)‖_H`.
pub fn relative_residual(p: &Params, u: &Profile, v: &Profile, cutoff: bool) -> Result<f64> {
    let r = residual_norm(p, u, v, cutoff)?;
    Ok(r / (1.0 + crate::mesh::pair_norm(u.grid(), u, v)?))
}

/// Jacobian of the weighted residual with unknowns interleaved as
/// `(u₀, v₀, u₁, v₁, …)`, a symmetric matrix with bandwidth 2.
pub(crate) fn jacobian(p: &Params, grid: &RadialGrid, u: &[f64], v: &[f64], cutoff: bool) -> BandMatrix {
    let m = u.len();
    let k = grid.stiffness();
    let vol = grid.volumes();
    let mut jac = BandMatrix::zeros(2 * m, 2, 2);
    for i in 0..m {
        let (a, b) = (u[i], v[i]);
        let (_, da) = cube_part(a, cutoff);
        let (_, db) = cube_part(b, cutoff);
        jac.add(2 * i, 2 * i, k.diag[i] + vol[i] * (1.0 - p.mu1 * da - p.beta * b * b));
        jac.add(2 * i + 1, 2 * i + 1, k.diag[i] + vol[i] * (1.0 - p.mu2 * db - p.beta * a * a));
        let cross = vol[i] * (p.kappa - 2.0 * p.beta * a * b);
        jac.add(2 * i, 2 * i + 1, cross);
        jac.add(2 * i + 1, 2 * i, cross);
        if i + 1 < m {
            for c in 0..2 {
                jac.add(2 * i + c, 2 * i + 2 + c, k.off[i]);
                jac.add(2 * i + 2 + c, 2 * i + c, k.off[i]);
            }
        }
    }
    jac
}

pub(crate) fn interleave(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).flat_map(|(a, b)| [*a, *b]).collect()
}

pub(crate) fn split(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (x.iter().step_by(2).copied().collect(), x.iter().skip(1).step_by(2).copied().collect())
}

/// Discrete energy on free-node values.
pub(crate) fn energy_values(p: &Params, grid: &RadialGrid, u: &[f64], v: &[f64]) -> f64 {
    let vol = grid.volumes();
    let quad = crate::mesh::h1_form(grid, u, u) + crate::mesh::h1_form(grid, v, v);
    let mut rest = 0.0;
    for i in 0..u.len() {
        let (a, b) = (u[i], v[i]);
        rest +=
            vol[i] * (p.kappa * a * b - 0.25 * (p.mu1 * a.powi(4) + p.mu2 * b.powi(4)) - 0.5 * p.beta * a * a * b * b);
    }
    0.5 * quad + rest
}
