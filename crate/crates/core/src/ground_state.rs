//! The positive radial solution ω of −Δω + ω = ω³ and its rescalings.
//!
//! The solve runs in two stages. A shooting pass on the radial ODE brackets
//! the center value ω(0) by bisection on the overshoot/undershoot
//! dichotomy; Newton on the grid operator then turns that profile into a
//! discrete zero of the same operator every other module uses.

use std::sync::Arc;

use crate::error::{Result, SchroError};
use crate::linalg::{BandMatrix, SymTridiag};
use crate::mesh::{Profile, RadialGrid};

const SHOOT_LO: f64 = 1.0;
const SHOOT_HI: f64 = 10.0;
const BRACKET_WIDTH: f64 = 1e-12;
const MAX_NEWTON: usize = 50;
/// Largest RK4 substep used by the shooting pass.
const SHOOT_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct GroundState {
    omega: Profile,
    center_value: f64,
    shooting_center: f64,
    residual_norm: f64,
}

impl GroundState {
    pub fn omega(&self) -> &Profile {
        &self.omega
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.omega.grid()
    }

    /// ω(0) of the discrete profile, which is its maximum.
    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    /// ω(0) from the shooting pass (continuum ODE, accurate to the bracket width).
    pub fn shooting_center(&self) -> f64 {
        self.shooting_center
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

/// Right-hand side of ω'' = −(N−1)/r·ω' + ω − ω³ as a first-order system.
fn rhs(dim: usize, r: f64, w: f64, p: f64) -> (f64, f64) {
    let src = w - w * w * w;
    if r == 0.0 {
        // p/r → p'(0), hence N·p'(0) = ω − ω³
        (p, src / dim as f64)
    } else {
        (p, -((dim - 1) as f64) / r * p + src)
    }
}

fn rk4(dim: usize, r: f64, w: f64, p: f64, dr: f64) -> (f64, f64) {
    let (k1w, k1p) = rhs(dim, r, w, p);
    let (k2w, k2p) = rhs(dim, r + 0.5 * dr, w + 0.5 * dr * k1w, p + 0.5 * dr * k1p);
    let (k3w, k3p) = rhs(dim, r + 0.5 * dr, w + 0.5 * dr * k2w, p + 0.5 * dr * k2p);
    let (k4w, k4p) = rhs(dim, r + dr, w + dr * k3w, p + dr * k3p);
    (w + dr / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w), p + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p))
}

/// Integrates from the center value `a`, sampling ω at every grid node
/// until the trajectory overshoots (ω < 0) or undershoots (ω' > 0).
fn shoot(grid: &RadialGrid, a: f64, record: bool) -> (Shot, Vec<f64>) {
    let h = grid.spacing();
    let sub = (h / SHOOT_STEP).ceil().max(1.0) as usize;
    let dr = h / sub as f64;
    let (mut w, mut p) = (a, 0.0);
    let mut samples = Vec::new();
    if record {
        samples.push(a);
    }
    for i in 0..grid.len() - 1 {
        for k in 0..sub {
            let r = i as f64 * h + k as f64 * dr;
            (w, p) = rk4(grid.dim(), r, w, p, dr);
            if w < 0.0 {
                return (Shot::Overshoot, samples);
            }
            if p > 0.0 {
                return (Shot::Undershoot, samples);
            }
        }
        if record {
            samples.push(w);
        }
    }
    (Shot::Undershoot, samples)
}

/// Center value bracket `(undershoot, overshoot)` after bisection.
fn bracket_center(grid: &RadialGrid) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (SHOOT_LO, SHOOT_HI);
    if shoot(grid, lo, false).0 != Shot::Undershoot || shoot(grid, hi, false).0 != Shot::Overshoot {
        return Err(SchroError::NoShootingBracket);
    }
    while hi - lo > BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(grid, mid, false).0 {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
        }
    }
    Ok((lo, hi))
}

/// Shooting profile on the grid: the bracketing trajectories are averaged
/// while they agree and replaced by the exponential far-field tail after.
fn shooting_profile(grid: &RadialGrid, lo: f64, hi: f64) -> Vec<f64> {
    let (_, under) = shoot(grid, lo, true);
    let (_, over) = shoot(grid, hi, true);
    let n = grid.len();
    let mut out = vec![0.0; n];
    let mut cut = under.len().min(over.len());
    for i in 0..cut {
        let mid = 0.5 * (under[i] + over[i]);
        if (under[i] - over[i]).abs() > 1e-4 * mid || (i > 0 && under[i] >= under[i - 1]) {
            cut = i;
            break;
        }
        out[i] = mid;
    }
    let cut = cut.max(1) - 1;
    let rc = grid.node(cut).max(grid.spacing());
    let wc = out[cut];
    let decay = 0.5 * (grid.dim() as f64 - 1.0);
    for (i, o) in out.iter_mut().enumerate().skip(cut + 1) {
        let r = grid.node(i);
        *o = wc * (rc / r).powf(decay) * (-(r - rc)).exp();
    }
    out[n - 1] = 0.0;
    out
}

/// Newton on `−Δw + c·w − c·w³ = 0` over the free nodes; returns the
/// converged values and the L² residual norm.
fn newton_scalar(grid: &RadialGrid, coeff: f64, mut w: Vec<f64>, tol: f64) -> Result<(Vec<f64>, f64)> {
    let k = grid.stiffness();
    let vol = &grid.volumes()[..w.len()];
    let residual = |w: &[f64]| -> (Vec<f64>, f64) {
        let mut g = k.matvec(w);
        for i in 0..w.len() {
            g[i] += vol[i] * coeff * (w[i] - w[i] * w[i] * w[i]);
        }
        let nrm = g.iter().zip(vol).map(|(g, v)| g * g / v).sum::<f64>().sqrt();
        (g, nrm)
    };
    let (mut g, mut res) = residual(&w);
    let mut polish = 0;
    for _ in 0..MAX_NEWTON {
        if res <= tol {
            // a couple of extra steps bring the residual to round-off level
            if polish == 2 {
                return Ok((w, res));
            }
            polish += 1;
        }
        let mut jac = BandMatrix::zeros(w.len(), 1, 1);
        for i in 0..w.len() {
            jac.add(i, i, k.diag[i] + vol[i] * coeff * (1.0 - 3.0 * w[i] * w[i]));
            if i + 1 < w.len() {
                jac.add(i, i + 1, k.off[i]);
                jac.add(i + 1, i, k.off[i]);
            }
        }
        jac.factor()?.solve_in_place(&mut g);
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(w, d)| w - step * d).collect();
            let (g_t, res_t) = residual(&trial);
            if res_t < res {
                w = trial;
                g = g_t;
                res = res_t;
                break;
            }
            step *= 0.5;
            if step < 1e-4 {
                if res <= tol {
                    return Ok((w, res));
                }
                return Err(SchroError::NewtonFailure { iterations: MAX_NEWTON, residual: res });
            }
        }
    }
    if res > tol {
        return Err(SchroError::NewtonFailure { iterations: MAX_NEWTON, residual: res });
    }
    Ok((w, res))
}

/// Computes ω on `grid` with discrete residual at most `tol`.
pub fn solve_ground_state(grid: &Arc<RadialGrid>, tol: f64) -> Result<GroundState> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(SchroError::Config(format!("ground-state tolerance must lie in (0, 1e-4], got {tol}")));
    }
    let (lo, hi) = bracket_center(grid)?;
    let start = shooting_profile(grid, lo, hi);
    let m = grid.interior_len();
    let (w, residual_norm) = newton_scalar(grid, 1.0, start[..m].to_vec(), tol)?;
    let omega = Profile::from_interior(grid.clone(), &w);
    let gs = GroundState { center_value: omega.values()[0], shooting_center: 0.5 * (lo + hi), residual_norm, omega };
    check_shape(&gs)?;
    Ok(gs)
}

fn check_shape(gs: &GroundState) -> Result<()> {
    let w = gs.omega.interior();
    if w.iter().any(|v| *v <= 0.0) {
        return Err(SchroError::Numerical("ground state lost positivity".into()));
    }
    if w.windows(2).any(|p| p[1] >= p[0]) {
        return Err(SchroError::Numerical("ground state is not radially decreasing".into()));
    }
    Ok(())
}

/// |ω|_∞, attained at the origin.
pub fn sup_norm(gs: &GroundState) -> f64 {
    gs.center_value
}

/// r ↦ ω(s·r) on `grid` by monotone cubic interpolation, 0 beyond `R/s`.
pub fn rescale(gs: &GroundState, s: f64, grid: &Arc<RadialGrid>) -> Result<Profile> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SchroError::domain(format!("rescaling factor must be positive, got {s}")));
    }
    let interp = MonotoneCubic::new(gs.grid(), gs.omega.values());
    let values = grid.nodes().map(|r| interp.eval(s * r)).collect();
    let mut p = Profile::new(grid.clone(), values)?;
    let n = grid.len();
    p.values_mut()[n - 1] = 0.0;
    Ok(p)
}

/// ω_b(r) = ω(b·r) as a discrete zero of `−Δw + b²w = b²w³` on the grid of `gs`.
pub fn scaled_ground_state(gs: &GroundState, b: f64) -> Result<Profile> {
    let grid = gs.grid().clone();
    if b == 1.0 {
        return Ok(gs.omega.clone());
    }
    let start = rescale(gs, b, &grid)?;
    let m = grid.interior_len();
    let tol = 1e-10 * (1.0 + start.l2_norm());
    let (w, _) = newton_scalar(&grid, b * b, start.values()[..m].to_vec(), tol)?;
    Ok(Profile::from_interior(grid, &w))
}

/// Eigenvalues of −Δ + 1 − 3ω² (volume-weighted) inside `(-width, width)`.
pub fn linearized_eigenvalues_near_zero(gs: &GroundState, width: f64) -> usize {
    let grid = gs.grid();
    let mut op: SymTridiag = grid.stiffness();
    let vol = &grid.volumes()[..op.len()];
    for (i, d) in op.diag.iter_mut().enumerate() {
        let w = gs.omega.values()[i];
        *d += vol[i] * (1.0 - 3.0 * w * w);
    }
    op.count_below(width, vol) - op.count_below(-width, vol)
}

/// Fritsch–Carlson monotone cubic Hermite interpolant of nodal data, with
/// zero slope at the origin (even extension).
pub(crate) struct MonotoneCubic<'a> {
    grid: &'a RadialGrid,
    y: &'a [f64],
    slope: Vec<f64>,
}

impl<'a> MonotoneCubic<'a> {
    pub(crate) fn new(grid: &'a RadialGrid, y: &'a [f64]) -> Self {
        let n = y.len();
        let h = grid.spacing();
        let last_h = grid.radius() - grid.node(n - 2);
        let dx = |i: usize| if i + 2 == n { last_h } else { h };
        let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / dx(i)).collect();
        let mut slope = vec![0.0; n];
        for i in 1..n - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            slope[i] = if a * b <= 0.0 {
                0.0
            } else {
                let d = (a * dx(i) + b * dx(i - 1)) / (dx(i) + dx(i - 1));
                d.signum() * d.abs().min(3.0 * a.abs().min(b.abs()))
            };
        }
        let s = secant[n - 2];
        slope[n - 1] = if s * secant[n.saturating_sub(3)] <= 0.0 { 0.0 } else { s };
        Self { grid, y, slope }
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        let n = self.y.len();
        if r >= self.grid.radius() {
            return if r == self.grid.radius() { self.y[n - 1] } else { 0.0 };
        }
        let h = self.grid.spacing();
        let i = ((r / h).floor() as usize).min(n - 2);
        let x0 = self.grid.node(i);
        let dx = self.grid.node(i + 1) - x0;
        let t = (r - x0) / dx;
        if t == 0.0 {
            return self.y[i];
        }
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * dx * self.slope[i] + h01 * self.y[i + 1] + h11 * dx * self.slope[i + 1]
    }
}
