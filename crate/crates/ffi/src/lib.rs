//! C interface to `schro-core`.
//!
//! Objects cross the boundary as opaque handles created by `schro_*_new` or
//! `schro_*_solve` and released by the matching `schro_*_free`. Every fallible
//! function returns a [`SchroStatus`]; on failure the message is kept per
//! thread and read back with [`schro_last_error_message`]. Arrays are
//! caller-allocated: pass a buffer and its capacity.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use schro_core::branches::{classify_region, find_bifurcation_kappas, synchronized_plus, Params, RegionVerdict};
use schro_core::continuation::{trace_branch, BranchSegment, ContinuationOptions, Termination};
use schro_core::ground_state::{solve_ground_state, GroundState};
use schro_core::mesh::{build_grid, Profile, RadialGrid};
use schro_core::nehari::minimize_ground_state;
use schro_core::spectrum::eigenvalues;
use schro_core::SchroError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchroStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    BufferTooSmall = 4,
    NoConvergence = 5,
    SingularJacobian = 6,
    NotProjectable = 7,
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchroVerdict {
    NoPositiveSolution = 0,
    PositiveGroundState = 1,
    ExistsSymmetric = 2,
    Unknown = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchroTermination {
    StepLimit = 0,
    LeftParameterWindow = 1,
    NewtonFailure = 2,
    ReconnectedToTrivial = 3,
}

/// Summary of a Nehari minimization.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SchroNehariResult {
    pub energy: f64,
    pub residual: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub iterations: usize,
    pub converged: bool,
    pub positive: bool,
}

/// One continuation point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SchroBranchPoint {
    pub arclength: f64,
    pub kappa: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub asymmetry: f64,
    pub energy: f64,
    pub residual: f64,
    pub positive: bool,
}

/// Radial grid handle.
pub struct SchroGrid(Arc<RadialGrid>);

/// Scalar ground state handle.
pub struct SchroGroundState(GroundState);

/// Traced branch handle.
pub struct SchroBranch(BranchSegment);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &SchroError) -> SchroStatus {
    match e {
        SchroError::Config(_) | SchroError::Domain(_) | SchroError::ShapeMismatch { .. } => {
            SchroStatus::InvalidArgument
        }
        SchroError::GridMismatch => SchroStatus::GridMismatch,
        SchroError::NoShootingBracket | SchroError::NewtonFailure { .. } => SchroStatus::NoConvergence,
        SchroError::SingularJacobian { .. } => SchroStatus::SingularJacobian,
        SchroError::NotProjectable { .. } | SchroError::NotCoercive { .. } | SchroError::DegenerateComponent { .. } => {
            SchroStatus::NotProjectable
        }
        SchroError::Numerical(_) => SchroStatus::Numerical,
        SchroError::Io { .. } => SchroStatus::Io,
    }
}

struct Failure(SchroStatus, String);

impl From<SchroError> for Failure {
    fn from(e: SchroError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: SchroStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `body`, recording any error or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SchroStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SchroStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside schro".into());
            SchroStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(|| fail(SchroStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out_slice<'a>(buf: *mut f64, cap: usize, need: usize) -> Result<&'a mut [f64], Failure> {
    if buf.is_null() {
        return fail(SchroStatus::NullPointer, "output buffer is null");
    }
    if cap < need {
        return fail(SchroStatus::BufferTooSmall, format!("buffer holds {cap} values, {need} needed"));
    }
    Ok(std::slice::from_raw_parts_mut(buf, need))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(SchroStatus::NullPointer, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `cap` bytes. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn schro_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Grid of `nodes` points on [0, radius] in dimension `dim`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn schro_grid_new(
    dim: usize,
    radius: f64,
    nodes: usize,
    out: *mut *mut SchroGrid,
) -> SchroStatus {
    guard(|| {
        let grid = build_grid(dim, radius, nodes)?;
        write_out(out, Box::into_raw(Box::new(SchroGrid(grid))))
    })
}

/// # Safety
/// `grid` must be null or come from [`schro_grid_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn schro_grid_free(grid: *mut SchroGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn schro_grid_len(grid: *const SchroGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Solves for the scalar ground state ω on `grid`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn schro_ground_state_solve(
    grid: *const SchroGrid,
    tol: f64,
    out: *mut *mut SchroGroundState,
) -> SchroStatus {
    guard(|| {
        let grid = deref(grid, "grid")?;
        let gs = solve_ground_state(&grid.0, tol)?;
        write_out(out, Box::into_raw(Box::new(SchroGroundState(gs))))
    })
}

/// # Safety
/// `gs` must be null or come from [`schro_ground_state_solve`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn schro_ground_state_free(gs: *mut SchroGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

/// ω(0) on the grid, or NaN for a null handle.
///
/// # Safety
/// `gs` must be null or a live ground-state handle.
#[no_mangle]
pub unsafe extern "C" fn schro_ground_state_center(gs: *const SchroGroundState) -> f64 {
    gs.as_ref().map_or(f64::NAN, |g| g.0.center_value())
}

/// Copies ω at every node into `buf`.
///
/// # Safety
/// `gs` must be a live handle and `buf` valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn schro_ground_state_values(
    gs: *const SchroGroundState,
    buf: *mut f64,
    cap: usize,
) -> SchroStatus {
    guard(|| {
        let gs = deref(gs, "ground state")?;
        let values = gs.0.omega().values();
        out_slice(buf, cap, values.len())?.copy_from_slice(values);
        Ok(())
    })
}

/// The `count` smallest weighted eigenvalues λ_j(κ), ascending.
///
/// # Safety
/// `gs` must be a live handle and `buf` valid for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn schro_eigenvalues(
    gs: *const SchroGroundState,
    kappa: f64,
    count: usize,
    buf: *mut f64,
) -> SchroStatus {
    guard(|| {
        let gs = deref(gs, "ground state")?;
        let lambdas = eigenvalues(&gs.0, kappa, count)?;
        out_slice(buf, count, lambdas.len())?.copy_from_slice(&lambdas);
        Ok(())
    })
}

/// Bifurcation values κ_j(β) for j ≤ `jmax` below `kappa_hi`, written to
/// `kappas` (capacity `jmax`); the number found goes to `found`.
///
/// # Safety
/// `gs` must be a live handle, `kappas` valid for `jmax` doubles and
/// `found` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn schro_bifurcation_kappas(
    gs: *const SchroGroundState,
    beta: f64,
    jmax: usize,
    kappa_hi: f64,
    kappas: *mut f64,
    found: *mut usize,
) -> SchroStatus {
    guard(|| {
        let gs = deref(gs, "ground state")?;
        let points = find_bifurcation_kappas(&gs.0, beta, jmax, kappa_hi)?;
        let dst = out_slice(kappas, jmax, points.len())?;
        for (d, p) in dst.iter_mut().zip(&points) {
            *d = p.kappa_j;
        }
        write_out(found, points.len())
    })
}

/// Existence verdict for positive solutions at (κ, β, μ₁, μ₂).
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn schro_classify_region(
    kappa: f64,
    beta: f64,
    mu1: f64,
    mu2: f64,
    out: *mut SchroVerdict,
) -> SchroStatus {
    guard(|| {
        let v = classify_region(&Params::new(kappa, beta, mu1, mu2, 1)?)?;
        write_out(
            out,
            match v {
                RegionVerdict::NoPositiveSolution => SchroVerdict::NoPositiveSolution,
                RegionVerdict::PositiveGroundState => SchroVerdict::PositiveGroundState,
                RegionVerdict::ExistsSymmetric => SchroVerdict::ExistsSymmetric,
                RegionVerdict::Unknown => SchroVerdict::Unknown,
            },
        )
    })
}

/// The synchronized pair (u, v) of the T⁺ branch at (κ, β), node values.
///
/// # Safety
/// `gs` must be a live handle; `u` and `v` valid for `cap` doubles each.
#[no_mangle]
pub unsafe extern "C" fn schro_synchronized_pair(
    gs: *const SchroGroundState,
    kappa: f64,
    beta: f64,
    u: *mut f64,
    v: *mut f64,
    cap: usize,
) -> SchroStatus {
    guard(|| {
        let gs = deref(gs, "ground state")?;
        let (pu, pv) = synchronized_plus(kappa, beta, &gs.0)?;
        out_slice(u, cap, pu.values().len())?.copy_from_slice(pu.values());
        out_slice(v, cap, pv.values().len())?.copy_from_slice(pv.values());
        Ok(())
    })
}

/// Nehari ground state started from (ω, ω). `u` and `v` may be null; when
/// given they receive the node values and must hold `cap` doubles.
///
/// # Safety
/// `gs` must be a live handle, `out` valid for one write, and non-null
/// `u`, `v` valid for `cap` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn schro_nehari_ground_state(
    gs: *const SchroGroundState,
    kappa: f64,
    beta: f64,
    mu1: f64,
    mu2: f64,
    tol: f64,
    max_iter: usize,
    out: *mut SchroNehariResult,
    u: *mut f64,
    v: *mut f64,
    cap: usize,
) -> SchroStatus {
    guard(|| {
        let gs = deref(gs, "ground state")?;
        let p = Params::new(kappa, beta, mu1, mu2, gs.0.dim())?;
        let w = gs.0.omega();
        let st = minimize_ground_state(&p, (w, w), tol, max_iter)?;
        let copy = |dst: *mut f64, src: &Profile| -> Result<(), Failure> {
            if !dst.is_null() {
                out_slice(dst, cap, src.values().len())?.copy_from_slice(src.values());
            }
            Ok(())
        };
        copy(u, &st.pair.0)?;
        copy(v, &st.pair.1)?;
        write_out(
            out,
            SchroNehariResult {
                energy: st.energy,
                residual: st.residual,
                l2_u: st.pair.0.l2_norm(),
                l2_v: st.pair.1.l2_norm(),
                iterations: st.iterations,
                converged: st.converged,
                positive: st.positive,
            },
        )
    })
}

/// Traces the branch bifurcating at κ_j(β) (μ₁ = μ₂ = 1), switching on with
/// amplitude `eps` and stopping once κ leaves [kappa_min, kappa_max].
///
/// # Safety
/// `gs` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn schro_branch_trace(
    gs: *const SchroGroundState,
    beta: f64,
    j: usize,
    eps: f64,
    step: f64,
    max_points: usize,
    cutoff: bool,
    kappa_min: f64,
    kappa_max: f64,
    out: *mut *mut SchroBranch,
) -> SchroStatus {
    guard(|| {
        let gs = deref(gs, "ground state")?;
        if out.is_null() {
            return fail(SchroStatus::NullPointer, "output pointer is null");
        }
        let points = find_bifurcation_kappas(&gs.0, beta, j, 10.0)?;
        let Some(bp) = points.iter().find(|b| b.j == j) else {
            return fail(SchroStatus::Numerical, format!("no bifurcation point with j = {j}"));
        };
        let p = Params::symmetric(bp.kappa_j, beta, gs.0.dim())?;
        let mut opts = ContinuationOptions::new(step, max_points, cutoff)?;
        opts.kappa_window = (kappa_min, kappa_max);
        let seg = trace_branch(&p, bp, eps, &opts)?;
        write_out(out, Box::into_raw(Box::new(SchroBranch(seg))))
    })
}

/// # Safety
/// `branch` must be null or come from [`schro_branch_trace`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn schro_branch_free(branch: *mut SchroBranch) {
    if !branch.is_null() {
        drop(Box::from_raw(branch));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `branch` must be null or a live branch handle.
#[no_mangle]
pub unsafe extern "C" fn schro_branch_len(branch: *const SchroBranch) -> usize {
    branch.as_ref().map_or(0, |b| b.0.points.len())
}

/// κ_j at which the branch starts.
///
/// # Safety
/// `branch` must be null or a live branch handle.
#[no_mangle]
pub unsafe extern "C" fn schro_branch_origin_kappa(branch: *const SchroBranch) -> f64 {
    branch.as_ref().map_or(f64::NAN, |b| b.0.origin.kappa_j)
}

/// # Safety
/// `branch` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn schro_branch_termination(
    branch: *const SchroBranch,
    out: *mut SchroTermination,
) -> SchroStatus {
    guard(|| {
        let b = deref(branch, "branch")?;
        write_out(
            out,
            match b.0.termination {
                Termination::StepLimit => SchroTermination::StepLimit,
                Termination::LeftParameterWindow => SchroTermination::LeftParameterWindow,
                Termination::NewtonFailure => SchroTermination::NewtonFailure,
                Termination::ReconnectedToTrivial => SchroTermination::ReconnectedToTrivial,
            },
        )
    })
}

/// Point `index` of the branch.
///
/// # Safety
/// `branch` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn schro_branch_point(
    branch: *const SchroBranch,
    index: usize,
    out: *mut SchroBranchPoint,
) -> SchroStatus {
    guard(|| {
        let b = deref(branch, "branch")?;
        let Some(q) = b.0.points.get(index) else {
            return fail(SchroStatus::InvalidArgument, format!("index {index} past {} points", b.0.points.len()));
        };
        write_out(
            out,
            SchroBranchPoint {
                arclength: q.arclength,
                kappa: q.kappa,
                l2_u: q.l2_u,
                l2_v: q.l2_v,
                asymmetry: q.asymmetry,
                energy: q.energy,
                residual: q.residual,
                positive: q.positive,
            },
        )
    })
}
