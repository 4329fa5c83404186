//! Ground states by minimizing the energy on the Nehari manifold
//!
//! ```text
//! I(u, v) = ½(‖u‖² + ‖v‖²) + κ∫uv − ¼∫(μ₁u⁴ + μ₂v⁴) − (β/2)∫u²v²
//! M = {(u, v) : u ≠ 0, v ≠ 0, ⟨I′(u, v), (u, v)⟩ = 0}
//! ```
//!
//! Every nonzero pair has a unique ray point on M when both the quadratic
//! part Q and the quartic part D are positive, and there I = Q²/(4D). The
//! minimizer takes preconditioned gradient steps on this 0-homogeneous
//! functional, folding each trial into the nonnegative cone and back onto M.

use crate::branches::Params;
use crate::error::{Result, SchroError};
use crate::linalg::{BandLu, BandMatrix};
use crate::mesh::{h1_form, pair_norm, Profile, RadialGrid};
use crate::system::{check_dim, common_grid, energy_values, nodal_norm, weighted_residual};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const MAX_STEP: f64 = 4.0;

/// I(u, v).
pub fn energy_i(p: &Params, u: &Profile, v: &Profile) -> Result<f64> {
    let grid = common_grid(u, v)?;
    check_dim(p, &grid)?;
    Ok(energy_values(p, &grid, u.interior(), v.interior()))
}

/// Nodal gradient profiles (−Δu + u + κv − μ₁u³ − βuv², −Δv + v + κu − μ₂v³ − βu²v).
pub fn gradient_i(p: &Params, u: &Profile, v: &Profile) -> Result<(Profile, Profile)> {
    crate::system::system_residual(p, u, v, false)
}

/// Q = ‖u‖² + ‖v‖² + 2κ∫uv and D = ∫(μ₁u⁴ + μ₂v⁴ + 2βu²v²).
fn nehari_parts(p: &Params, grid: &RadialGrid, u: &[f64], v: &[f64]) -> (f64, f64) {
    let vol = grid.volumes();
    let mut q = h1_form(grid, u, u) + h1_form(grid, v, v);
    let mut d = 0.0;
    for i in 0..u.len() {
        let (a, b) = (u[i] * u[i], v[i] * v[i]);
        q += 2.0 * p.kappa * vol[i] * u[i] * v[i];
        d += vol[i] * (p.mu1 * a * a + p.mu2 * b * b + 2.0 * p.beta * a * b);
    }
    (q, d)
}

fn projection_factor(p: &Params, grid: &RadialGrid, u: &[f64], v: &[f64]) -> Result<f64> {
    let (q, d) = nehari_parts(p, grid, u, v);
    if !(d > 0.0) {
        return Err(SchroError::NotProjectable { denominator: d });
    }
    if !(q > 0.0) {
        return Err(SchroError::NotCoercive { numerator: q });
    }
    Ok((q / d).sqrt())
}

/// The t > 0 with (tu, tv) ∈ M.
pub fn nehari_t(p: &Params, u: &Profile, v: &Profile) -> Result<f64> {
    let grid = common_grid(u, v)?;
    check_dim(p, &grid)?;
    let t = projection_factor(p, &grid, u.interior(), v.interior())?;
    if u.interior().iter().all(|x| *x == 0.0) || v.interior().iter().all(|x| *x == 0.0) {
        return Err(SchroError::DegenerateComponent { t });
    }
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct NehariState {
    pub pair: (Profile, Profile),
    pub energy: f64,
    /// Grid L² norm of the free gradient.
    pub residual: f64,
    /// |⟨I′(u, v), (u, v)⟩|.
    pub on_manifold_defect: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Both components strictly positive at every free node.
    pub positive: bool,
    /// Energies of the accepted iterates.
    pub energy_history: Vec<f64>,
}

/// Block-diagonal H¹ Gram matrix `K + M`, factored once per solve.
struct H1Preconditioner {
    lu: BandLu,
}

impl H1Preconditioner {
    fn new(grid: &RadialGrid) -> Result<Self> {
        let k = grid.stiffness();
        let m = k.len();
        let mut a = BandMatrix::zeros(m, 1, 1);
        for i in 0..m {
            a.add(i, i, k.diag[i] + grid.volumes()[i]);
            if i + 1 < m {
                a.add(i, i + 1, k.off[i]);
                a.add(i + 1, i, k.off[i]);
            }
        }
        Ok(Self { lu: a.factor()? })
    }
}

/// Minimizes I on M from `init`.
///
/// Stops when the free gradient norm is at most `tol`. Running out of
/// iterations or step length is not an error: the best iterate is
/// returned with `converged = false`.
pub fn minimize_ground_state(p: &Params, init: (&Profile, &Profile), tol: f64, max_iter: usize) -> Result<NehariState> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(SchroError::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !(p.kappa > -1.0) {
        return Err(SchroError::domain(format!("the minimizer needs κ > −1, got {}", p.kappa)));
    }
    let grid = common_grid(init.0, init.1)?;
    check_dim(p, &grid)?;
    nehari_t(p, init.0, init.1)?;
    let pre = H1Preconditioner::new(&grid)?;
    let m = grid.interior_len();

    let project = |u: &mut Vec<f64>, v: &mut Vec<f64>| -> Result<()> {
        u.iter_mut().chain(v.iter_mut()).for_each(|x| *x = x.abs());
        let t = projection_factor(p, &grid, u, v)?;
        u.iter_mut().chain(v.iter_mut()).for_each(|x| *x *= t);
        Ok(())
    };

    let mut u = init.0.interior().to_vec();
    let mut v = init.1.interior().to_vec();
    project(&mut u, &mut v)?;
    let mut energy = energy_values(p, &grid, &u, &v);
    let mut history = vec![energy];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut residual;
    loop {
        let (gu, gv) = weighted_residual(p, &grid, &u, &v, false);
        residual = nodal_norm(&grid, &gu).hypot(nodal_norm(&grid, &gv));
        if residual <= tol {
            converged = true;
            break;
        }
        if iterations == max_iter {
            break;
        }
        iterations += 1;
        let du = pre.lu.solve(&gu);
        let dv = pre.lu.solve(&gv);
        let slope: f64 = gu.iter().zip(&du).chain(gv.iter().zip(&dv)).map(|(g, d)| g * d).sum();
        let mut accepted = false;
        while step >= MIN_STEP {
            let mut tu: Vec<f64> = (0..m).map(|i| u[i] - step * du[i]).collect();
            let mut tv: Vec<f64> = (0..m).map(|i| v[i] - step * dv[i]).collect();
            if project(&mut tu, &mut tv).is_ok() {
                let e = energy_values(p, &grid, &tu, &tv);
                if e <= energy - ARMIJO * step * slope {
                    u = tu;
                    v = tv;
                    energy = e;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(energy);
        step = (2.0 * step).min(MAX_STEP);
    }

    let (q, d) = nehari_parts(p, &grid, &u, &v);
    let positive = u.iter().chain(&v).all(|x| *x > 0.0);
    Ok(NehariState {
        pair: (Profile::from_interior(grid.clone(), &u), Profile::from_interior(grid.clone(), &v)),
        energy,
        residual,
        on_manifold_defect: (q - d).abs(),
        iterations,
        converged,
        positive,
        energy_history: history,
    })
}

/// ‖(u, v)‖₁ = √(‖u‖² + ‖v‖² + 2κ∫uv), the norm in which I|_M = ¼‖·‖₁².
pub fn nehari_norm(p: &Params, u: &Profile, v: &Profile) -> Result<f64> {
    let grid = common_grid(u, v)?;
    let q = h1_form(&grid, u.interior(), u.interior())
        + h1_form(&grid, v.interior(), v.interior())
        + 2.0 * p.kappa * grid.integrate_values(&u.zip_map(v, |a, b| a * b)?.into_values());
    Ok(q.max(0.0).sqrt())
}

/// (‖(u,v)‖_H, ‖(u,v)‖₁), for checking (1+κ)‖·‖_H ≤ ‖·‖₁ ≤ √2‖·‖_H.
pub fn norm_pair(p: &Params, u: &Profile, v: &Profile) -> Result<(f64, f64)> {
    Ok((pair_norm(u.grid(), u, v)?, nehari_norm(p, u, v)?))
}
