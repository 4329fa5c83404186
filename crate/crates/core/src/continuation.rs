//! Newton solves of the coupled system, branch switching at bifurcation
//! points and pseudo-arclength continuation in κ at fixed β.
//!
//! Unknowns are the free-node values interleaved as `(u₀, v₀, u₁, v₁, …)`,
//! so every Jacobian is a band matrix with two sub- and super-diagonals.
//! Arclength is measured in `Σ vol·(du² + dv²) + dκ²`.

use std::sync::Arc;

use serde::Serialize;

use crate::branches::{BifurcationPoint, Params};
use crate::error::{Result, SchroError};
use crate::linalg::BandLu;
use crate::mesh::{pair_norm, Profile, RadialGrid};
use crate::system::{
    check_dim, common_grid, energy_values, interleave, jacobian, nodal_norm, split, weighted_residual,
};

const MAX_NEWTON: usize = 50;
const MAX_CORRECTOR: usize = 12;
/// Pivot ratio beyond which a Jacobian is reported as singular.
const SINGULAR_RATIO: f64 = 1e14;
const TAIL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub kappa: f64,
    pub pair: (Profile, Profile),
    /// Grid L² norm of the system residual.
    pub residual: f64,
    /// ‖u − v‖_{L²}.
    pub asymmetry: f64,
    pub positive: bool,
    pub arclength: f64,
    pub energy: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub newton_steps: usize,
    /// r_k / r_{k−1}² for the last Newton step taken from r_{k−1} > 1e−8.
    pub tail_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    StepLimit,
    LeftParameterWindow,
    NewtonFailure,
    ReconnectedToTrivial,
}

#[derive(Debug, Clone)]
pub struct BranchSegment {
    pub beta: f64,
    pub origin: BifurcationPoint,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub step: f64,
    pub max_points: usize,
    pub cutoff: bool,
    /// The trace stops once κ leaves this closed interval.
    pub kappa_window: (f64, f64),
    /// Convergence threshold on residual / (1 + ‖(u, v)‖_H).
    pub tol: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl ContinuationOptions {
    pub fn new(step: f64, max_points: usize, cutoff: bool) -> Result<Self> {
        if !(step > 1e-4 && step <= 0.1) {
            return Err(SchroError::Config(format!("continuation step must lie in (1e-4, 0.1], got {step}")));
        }
        if max_points == 0 {
            return Err(SchroError::Config("max_points must be positive".into()));
        }
        Ok(Self {
            step,
            max_points,
            cutoff,
            kappa_window: (-1.0 + 1e-6, 10.0),
            tol: 1e-10,
            min_step: 1e-4 * step,
            max_step: 4.0 * step,
        })
    }
}

fn make_point(
    p: &Params,
    grid: &Arc<RadialGrid>,
    x: &[f64],
    cutoff: bool,
    newton_steps: usize,
    history: &[f64],
) -> BranchPoint {
    let (u, v) = split(x);
    let (fu, fv) = weighted_residual(p, grid, &u, &v, cutoff);
    let vol = grid.volumes();
    let l2 = |f: &dyn Fn(usize) -> f64| (0..u.len()).map(|i| vol[i] * f(i).powi(2)).sum::<f64>().sqrt();
    // ratios against a residual already at round-off level say nothing
    let tail_ratio = (1..history.len())
        .rev()
        .find(|&k| history[k - 1] > TAIL_FLOOR)
        .map(|k| history[k] / (history[k - 1] * history[k - 1]));
    BranchPoint {
        kappa: p.kappa,
        residual: nodal_norm(grid, &fu).hypot(nodal_norm(grid, &fv)),
        asymmetry: l2(&|i| u[i] - v[i]),
        positive: u.iter().chain(&v).all(|x| *x > 0.0),
        arclength: 0.0,
        energy: energy_values(p, grid, &u, &v),
        l2_u: l2(&|i| u[i]),
        l2_v: l2(&|i| v[i]),
        newton_steps,
        tail_ratio,
        pair: (Profile::from_interior(grid.clone(), &u), Profile::from_interior(grid.clone(), &v)),
    }
}

fn factor(p: &Params, grid: &RadialGrid, x: &[f64], cutoff: bool) -> Result<BandLu> {
    let (u, v) = split(x);
    let lu = jacobian(p, grid, &u, &v, cutoff).factor()?;
    if lu.pivot_ratio() > SINGULAR_RATIO {
        return Err(SchroError::SingularJacobian { condition: lu.pivot_ratio() });
    }
    Ok(lu)
}

fn residual_vec(p: &Params, grid: &RadialGrid, x: &[f64], cutoff: bool) -> (Vec<f64>, f64) {
    let (u, v) = split(x);
    let (fu, fv) = weighted_residual(p, grid, &u, &v, cutoff);
    let r = nodal_norm(grid, &fu).hypot(nodal_norm(grid, &fv));
    (interleave(&fu, &fv), r)
}

fn pair_scale(grid: &RadialGrid, x: &[f64]) -> f64 {
    let (u, v) = split(x);
    (crate::mesh::h1_form(grid, &u, &u) + crate::mesh::h1_form(grid, &v, &v)).sqrt()
}

/// Damped Newton on the system (or the cutoff system) at fixed parameters.
///
/// Converged when residual ≤ tol·(1 + ‖(u, v)‖_H).
pub fn newton_solve(p: &Params, init: (&Profile, &Profile), cutoff: bool, tol: f64) -> Result<BranchPoint> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(SchroError::Config(format!("Newton tolerance must lie in (0, 1e-6], got {tol}")));
    }
    p.validate()?;
    let grid = common_grid(init.0, init.1)?;
    check_dim(p, &grid)?;
    let mut x = interleave(init.0.interior(), init.1.interior());
    let (mut f, mut r) = residual_vec(p, &grid, &x, cutoff);
    let mut history = vec![r];
    for k in 0..=MAX_NEWTON {
        if r <= tol * (1.0 + pair_scale(&grid, &x)) {
            return Ok(make_point(p, &grid, &x, cutoff, k, &history));
        }
        if k == MAX_NEWTON {
            break;
        }
        let lu = factor(p, &grid, &x, cutoff)?;
        lu.solve_in_place(&mut f);
        let mut damp = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&f).map(|(x, d)| x - damp * d).collect();
            let (ft, rt) = residual_vec(p, &grid, &trial, cutoff);
            if rt < r || damp < 1e-3 {
                x = trial;
                f = ft;
                r = rt;
                break;
            }
            damp *= 0.5;
        }
        history.push(r);
    }
    Err(SchroError::NewtonFailure { iterations: MAX_NEWTON, residual: r })
}

/// (u + εφ, v − εφ) with φ the kernel profile of `bp`.
pub fn branch_switch(bp: &BifurcationPoint, eps: f64) -> Result<(Profile, Profile)> {
    let (u, v) = &bp.pair;
    let limit = 0.1 * pair_norm(u.grid(), u, v)?;
    if !(eps >= 0.0 && eps <= limit) {
        return Err(SchroError::domain(format!("switch amplitude must lie in [0, {limit}], got {eps}")));
    }
    let phi = &bp.kernel_phi;
    Ok((u.zip_map(phi, |a, b| a + eps * b)?, v.zip_map(phi, |a, b| a - eps * b)?))
}

/// Solve F(x, κ) = 0 together with one linear side condition
/// `⟨w, x⟩ + wκ·κ = rhs` by bordered Newton (block elimination).
#[allow(clippy::too_many_arguments)]
fn bordered_newton(
    base: &Params,
    grid: &Arc<RadialGrid>,
    mut x: Vec<f64>,
    mut kappa: f64,
    w: &[f64],
    wk: f64,
    rhs: f64,
    cutoff: bool,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize, Vec<f64>)> {
    let vol = grid.volumes();
    let mut history = Vec::new();
    for k in 0..=max_iter {
        let p = base.with_kappa(kappa);
        let (f, r) = residual_vec(&p, grid, &x, cutoff);
        history.push(r);
        let side = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + wk * kappa - rhs;
        if r <= tol * (1.0 + pair_scale(grid, &x)) && side.abs() <= 1e-10 * (1.0 + rhs.abs()) {
            return Ok((x, kappa, k, history));
        }
        if k == max_iter || !r.is_finite() {
            break;
        }
        let lu = factor(&p, grid, &x, cutoff)?;
        // ∂F/∂κ = vol·(v, u)
        let mut a: Vec<f64> = (0..x.len()).map(|i| vol[i / 2] * x[i ^ 1]).collect();
        lu.solve_in_place(&mut a);
        let mut b = f;
        lu.solve_in_place(&mut b);
        let wa: f64 = w.iter().zip(&a).map(|(p, q)| p * q).sum();
        let wb: f64 = w.iter().zip(&b).map(|(p, q)| p * q).sum();
        let denom = wk - wa;
        if denom.abs() < 1e-14 {
            return Err(SchroError::SingularJacobian { condition: f64::INFINITY });
        }
        let dk = (wb - side) / denom;
        for i in 0..x.len() {
            x[i] -= b[i] + a[i] * dk;
        }
        kappa += dk;
    }
    Err(SchroError::NewtonFailure { iterations: max_iter, residual: *history.last().unwrap_or(&f64::NAN) })
}

/// The point on the bifurcating branch whose difference component along
/// the kernel is `eps`: solves F = 0 with ½⟨φ, u − v⟩_{L²} = ε, κ free.
pub fn switch_onto_branch(p: &Params, bp: &BifurcationPoint, eps: f64, cutoff: bool, tol: f64) -> Result<BranchPoint> {
    let (u0, v0) = branch_switch(bp, eps)?;
    let grid = common_grid(&u0, &v0)?;
    check_dim(p, &grid)?;
    let vol = grid.volumes();
    let phi = bp.kernel_phi.interior();
    let w: Vec<f64> =
        (0..2 * phi.len()).map(|i| 0.5 * vol[i / 2] * phi[i / 2] * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let base = Params { beta: bp.beta, ..*p };
    let x0 = interleave(u0.interior(), v0.interior());
    let (x, kappa, steps, history) =
        bordered_newton(&base, &grid, x0, bp.kappa_j, &w, 0.0, eps, cutoff, tol, MAX_NEWTON)?;
    Ok(make_point(&base.with_kappa(kappa), &grid, &x, cutoff, steps, &history))
}

fn metric_diff(vol: &[f64], x1: &[f64], k1: f64, x0: &[f64], k0: f64) -> (Vec<f64>, f64, f64) {
    let dx: Vec<f64> = x1.iter().zip(x0).map(|(a, b)| a - b).collect();
    let dk = k1 - k0;
    let n2 = dx.iter().enumerate().map(|(i, d)| vol[i / 2] * d * d).sum::<f64>() + dk * dk;
    (dx, dk, n2.sqrt())
}

/// Pseudo-arclength continuation from `start`, with the secant from
/// `previous` (κ and pair) giving the first tangent.
pub fn continue_branch(
    p: &Params,
    previous: (f64, &Profile, &Profile),
    start: &BranchPoint,
    opts: &ContinuationOptions,
) -> Result<(Vec<BranchPoint>, Termination)> {
    let grid = common_grid(&start.pair.0, &start.pair.1)?;
    check_dim(p, &grid)?;
    let vol = grid.volumes();
    let mut x_prev = interleave(previous.1.interior(), previous.2.interior());
    let mut k_prev = previous.0;
    let mut x = interleave(start.pair.0.interior(), start.pair.1.interior());
    let mut kappa = start.kappa;
    let mut points = vec![start.clone()];
    let trivial_floor = 1e-6;
    let mut step = opts.step;
    let mut easy = 0;
    let mut arclength = start.arclength;
    loop {
        if points.len() >= opts.max_points {
            return Ok((points, Termination::StepLimit));
        }
        let (dx, dk, norm) = metric_diff(vol, &x, kappa, &x_prev, k_prev);
        if norm == 0.0 {
            return Err(SchroError::Numerical("continuation secant has zero length".into()));
        }
        let tx: Vec<f64> = dx.iter().map(|d| d / norm).collect();
        let tk = dk / norm;
        let w: Vec<f64> = tx.iter().enumerate().map(|(i, t)| vol[i / 2] * t).collect();
        let anchor: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + tk * kappa;
        let result = loop {
            let pred: Vec<f64> = x.iter().zip(&tx).map(|(x, t)| x + step * t).collect();
            let kp = kappa + step * tk;
            match bordered_newton(p, &grid, pred, kp, &w, tk, anchor + step, opts.cutoff, opts.tol, MAX_CORRECTOR) {
                Ok(r) => break Some(r),
                Err(_) => {
                    step *= 0.5;
                    easy = 0;
                    if step < opts.min_step {
                        break None;
                    }
                }
            }
        };
        let Some((xn, kn, steps, history)) = result else {
            return Ok((points, Termination::NewtonFailure));
        };
        if !(opts.kappa_window.0..=opts.kappa_window.1).contains(&kn) {
            return Ok((points, Termination::LeftParameterWindow));
        }
        arclength += metric_diff(vol, &xn, kn, &x, kappa).2;
        let mut pt = make_point(&p.with_kappa(kn), &grid, &xn, opts.cutoff, steps, &history);
        pt.arclength = arclength;
        let scale = 1.0 + pt.l2_u.max(pt.l2_v);
        let reconnected = pt.asymmetry < trivial_floor * scale || pt.l2_u.max(pt.l2_v) < trivial_floor;
        points.push(pt);
        if reconnected {
            return Ok((points, Termination::ReconnectedToTrivial));
        }
        if steps <= 3 {
            easy += 1;
            if easy >= 3 {
                step = (2.0 * step).min(opts.max_step);
                easy = 0;
            }
        } else {
            easy = 0;
        }
        x_prev = std::mem::replace(&mut x, xn);
        k_prev = std::mem::replace(&mut kappa, kn);
    }
}

/// Switches onto the branch bifurcating at `bp` with amplitude `eps`
/// (negative `eps` takes the mirrored side) and traces it.
pub fn trace_branch(p: &Params, bp: &BifurcationPoint, eps: f64, opts: &ContinuationOptions) -> Result<BranchSegment> {
    let base = Params { beta: bp.beta, ..*p };
    let first = if eps >= 0.0 {
        switch_onto_branch(&base, bp, eps, opts.cutoff, opts.tol)?
    } else {
        let mirrored = BifurcationPoint { kernel_phi: bp.kernel_phi.scaled(-1.0), ..bp.clone() };
        switch_onto_branch(&base, &mirrored, -eps, opts.cutoff, opts.tol)?
    };
    let (points, termination) = continue_branch(&base, (bp.kappa_j, &bp.pair.0, &bp.pair.1), &first, opts)?;
    Ok(BranchSegment { beta: bp.beta, origin: bp.clone(), points, termination })
}

/// Whether a solution of the cutoff system also solves the uncut system,
/// at the level residual ≤ 1e−8·(1 + ‖(u, v)‖_H).
pub fn verify_cutoff_equivalence(p: &Params, bp: &BranchPoint) -> bool {
    let (u, v) = &bp.pair;
    let p = p.with_kappa(bp.kappa);
    match (crate::system::residual_norm(&p, u, v, false), pair_norm(u.grid(), u, v)) {
        (Ok(r), Ok(n)) => r <= 1e-8 * (1.0 + n),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branches::{find_bifurcation_kappas, sigma_action, synchronized_plus};
    use crate::ground_state::solve_ground_state;
    use crate::mesh::build_grid;
    use crate::system::relative_residual;

    #[test]
    fn newton_from_a_root_stays_put() {
        let g = solve_ground_state(&build_grid(1, 20.0, 801).unwrap(), 1e-10).unwrap();
        let p = Params::symmetric(-0.3, 0.4, 1).unwrap();
        let (u, v) = synchronized_plus(-0.3, 0.4, &g).unwrap();
        let bp = newton_solve(&p, (&u, &v), true, 1e-9).unwrap();
        assert!(bp.newton_steps <= 2);
        assert!(bp.positive);
        assert!(u.max_abs_diff(&bp.pair.0) < 1e-9);
        assert!(verify_cutoff_equivalence(&p, &bp));
        let (q, su, sv) = sigma_action(&p, &bp.pair.0, &bp.pair.1);
        assert!(relative_residual(&q, &su, &sv, false).unwrap() < 1e-9);
        assert!(matches!(newton_solve(&p, (&u, &v), false, 1e-3), Err(SchroError::Config(_))));
    }

    #[test]
    fn newton_converges_from_a_perturbed_guess() {
        let g = solve_ground_state(&build_grid(3, 20.0, 801).unwrap(), 1e-10).unwrap();
        let p = Params::symmetric(0.2, -0.3, 3).unwrap();
        let (u, v) = synchronized_plus(0.2, -0.3, &g).unwrap();
        let u0 = u.zip_map(&g.omega().clone(), |a, w| a * 1.05 + 0.02 * w).unwrap();
        let bp = newton_solve(&p, (&u0, &v), false, 1e-9).unwrap();
        assert!(bp.residual <= 1e-9 * (1.0 + pair_norm(g.grid(), &bp.pair.0, &bp.pair.1).unwrap()));
        assert!(bp.pair.0.max_abs_diff(&u) < 1e-6);
        if let Some(t) = bp.tail_ratio {
            assert!(t.is_finite());
        }
    }

    #[test]
    fn cutoff_changes_sign_changing_residuals() {
        let g = solve_ground_state(&build_grid(1, 20.0, 801).unwrap(), 1e-10).unwrap();
        let p = Params::symmetric(-0.5, 0.0, 1).unwrap();
        let w = g.omega();
        let u = w.zip_map(w, |a, _| a * (1.0 - 0.5 * a)).unwrap().map(|x| x - 0.1);
        let v = w.clone();
        let bp = make_point(&p, g.grid(), &interleave(u.interior(), v.interior()), true, 0, &[]);
        assert!(!bp.positive);
        assert!(!verify_cutoff_equivalence(&p, &bp));
    }

    #[test]
    fn switching_amplitude_and_identity() {
        let g = solve_ground_state(&build_grid(1, 30.0, 1201).unwrap(), 1e-10).unwrap();
        let bp = find_bifurcation_kappas(&g, -0.5, 1, 0.0).unwrap().remove(0);
        let (u, v) = branch_switch(&bp, 0.0).unwrap();
        assert_eq!(u.values(), bp.pair.0.values());
        assert_eq!(v.values(), bp.pair.1.values());
        let (u, v) = branch_switch(&bp, 0.05).unwrap();
        let asym = u.zip_map(&v, |a, b| a - b).unwrap().l2_norm();
        assert!((asym - 0.1 * bp.kernel_phi.l2_norm()).abs() < 1e-12);
        assert!(branch_switch(&bp, -0.1).is_err());
        assert!(branch_switch(&bp, 1e3).is_err());
    }

    #[test]
    fn short_branch_from_first_bifurcation() {
        let g = solve_ground_state(&build_grid(1, 30.0, 1201).unwrap(), 1e-10).unwrap();
        let bp = find_bifurcation_kappas(&g, -0.5, 1, 0.0).unwrap().remove(0);
        let p = Params::symmetric(bp.kappa_j, -0.5, 1).unwrap();
        let opts = ContinuationOptions::new(0.02, 8, true).unwrap();
        let seg = trace_branch(&p, &bp, 0.05, &opts).unwrap();
        assert_eq!(seg.points.len(), 8, "{:?}", seg.termination);
        assert!(seg.points.windows(2).all(|w| w[1].arclength > w[0].arclength));
        for pt in &seg.points {
            assert!(pt.asymmetry > 1e-4);
            assert!(pt.residual <= 1e-8 * (1.0 + pair_norm(g.grid(), &pt.pair.0, &pt.pair.1).unwrap()));
        }
        let other = trace_branch(&p, &bp, -0.05, &opts).unwrap();
        let (a, b) = (&seg.points[0], &other.points[0]);
        assert!((a.kappa - b.kappa).abs() < 1e-8);
        assert!(a.pair.0.max_abs_diff(&b.pair.1) < 1e-6);
    }
}
