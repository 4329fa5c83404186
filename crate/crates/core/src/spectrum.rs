//! The ω²-weighted radial eigenproblem
//!
//! ```text
//! −Δφ + C(κ)φ = λ_j(κ) ω² φ,   C(κ) = (1 − κ)/(1 + κ)
//! ```
//!
//! and the Morse index of the energy along the positive synchronized branch.
//!
//! The pencil is assembled on all nodes with a far-field closure at `R`:
//! beyond the truncation radius ω² is negligible, so φ solves the free
//! equation `−Δφ + Cφ = 0` there and its logarithmic derivative is
//! `−(√C + (N−1)/(2R))` (exact for N = 1, 3). The closure keeps eigenvalues
//! accurate up to the threshold C = 0, where eigenfunctions stop decaying.
//! For C < 0 the free equation oscillates; the closure then keeps only
//! the geometric term, which is continuous at C = 0 and keeps λ_j monotone.

use crate::error::{Result, SchroError};
use crate::ground_state::{scaled_ground_state, solve_ground_state, sup_norm, GroundState};
use crate::linalg::{inverse_iteration, pencil_eigenvalues, SymTridiag};
use crate::mesh::{build_grid, Profile};

/// Absolute bisection tolerance for eigenvalues.
pub const EIGEN_TOL: f64 = 1e-10;
const INVERSE_STEPS: usize = 3;

/// C(κ) = (1 − κ)/(1 + κ), defined for κ > −1.
pub fn coupling_c(kappa: f64) -> Result<f64> {
    if !(kappa > -1.0) || !kappa.is_finite() {
        return Err(SchroError::domain(format!("C(κ) needs κ > −1, got {kappa}")));
    }
    Ok((1.0 - kappa) / (1.0 + kappa))
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// 1-based index `j`.
    pub index: usize,
    pub kappa: f64,
    pub lambda: f64,
    /// Normalized so that ∫ω²φ² = 1, with φ(0) > 0.
    pub phi: Profile,
    /// ‖−Δφ + Cφ − λω²φ‖ in the grid L² norm.
    pub residual: f64,
}

/// Assembled pencil `(A, B)` for one κ.
pub(crate) struct WeightedPencil {
    pub a: SymTridiag,
    pub b: Vec<f64>,
}

impl WeightedPencil {
    pub(crate) fn new(gs: &GroundState, kappa: f64) -> Result<Self> {
        let c = coupling_c(kappa)?;
        let grid = gs.grid();
        let mut a = grid.stiffness_free_end();
        let vol = grid.volumes();
        for (d, v) in a.diag.iter_mut().zip(vol) {
            *d += c * v;
        }
        let n = grid.len();
        let robin = c.max(0.0).sqrt() + 0.5 * (grid.dim() as f64 - 1.0) / grid.radius();
        a.diag[n - 1] += robin * grid.boundary_area();
        let w = gs.omega().values();
        let b: Vec<f64> = vol.iter().zip(w).map(|(v, w)| v * w * w).collect();
        if b[..n - 1].iter().any(|b| !(*b > 0.0)) {
            return Err(SchroError::Numerical("ω² weight is not positive on the free nodes".into()));
        }
        Ok(Self { a, b })
    }

    pub(crate) fn eigenvalues(&self, m: usize) -> Vec<f64> {
        pencil_eigenvalues(&self.a, &self.b, 0, m, EIGEN_TOL)
    }

    fn quotient(&self, phi: &[f64]) -> f64 {
        let num: f64 = self.a.matvec(phi).iter().zip(phi).map(|(p, q)| p * q).sum();
        let den: f64 = self.b.iter().zip(phi).map(|(b, p)| b * p * p).sum();
        num / den
    }
}

fn check_count(gs: &GroundState, m: usize) -> Result<()> {
    if m == 0 || m > gs.grid().len() / 10 {
        return Err(SchroError::Config(format!(
            "eigenpair count must lie in 1..={} for this grid, got {m}",
            gs.grid().len() / 10
        )));
    }
    Ok(())
}

/// The `m` smallest eigenvalues of the weighted problem at κ.
pub fn eigenvalues(gs: &GroundState, kappa: f64, m: usize) -> Result<Vec<f64>> {
    check_count(gs, m)?;
    Ok(WeightedPencil::new(gs, kappa)?.eigenvalues(m))
}

/// The `m` smallest eigenpairs: Sturm bisection for λ, inverse iteration for φ.
pub fn eigen_lambda(gs: &GroundState, kappa: f64, m: usize) -> Result<Vec<EigenPair>> {
    check_count(gs, m)?;
    let pencil = WeightedPencil::new(gs, kappa)?;
    let grid = gs.grid();
    let vol = grid.volumes();
    pencil
        .eigenvalues(m)
        .into_iter()
        .enumerate()
        .map(|(j, lambda)| {
            let phi = inverse_iteration(&pencil.a, &pencil.b, lambda, INVERSE_STEPS)?;
            let ap = pencil.a.matvec(&phi);
            let residual = ap
                .iter()
                .zip(&phi)
                .zip(pencil.b.iter().zip(vol))
                .map(|((a, p), (b, v))| (a - lambda * b * p).powi(2) / v)
                .sum::<f64>()
                .sqrt();
            Ok(EigenPair { index: j + 1, kappa, lambda, phi: Profile::new(grid.clone(), phi)?, residual })
        })
        .collect()
}

/// J(φ, κ) = (∫|∇φ|² + C(κ)φ²) / ∫ω²φ².
pub fn rayleigh_j(gs: &GroundState, phi: &Profile, kappa: f64) -> Result<f64> {
    if phi.grid() != gs.grid() {
        return Err(SchroError::GridMismatch);
    }
    let pencil = WeightedPencil::new(gs, kappa)?;
    let den: f64 = pencil.b.iter().zip(phi.values()).map(|(b, p)| b * p * p).sum();
    if den == 0.0 {
        return Err(SchroError::domain("Rayleigh quotient of the zero profile"));
    }
    Ok(pencil.quotient(phi.values()))
}

/// Lower bound for λ₁(κ) from |ω|_∞: `C/|ω|²_∞`, and for κ ≤ 0 also
/// `1 + (C − 1)/|ω|²_∞` (which needs C ≥ 1).
pub fn lambda1_lower_bound(gs: &GroundState, kappa: f64) -> Result<f64> {
    let c = coupling_c(kappa)?;
    let s2 = sup_norm(gs).powi(2);
    let mut bound = c / s2;
    if c >= 1.0 {
        bound = bound.max(1.0 + (c - 1.0) / s2);
    }
    Ok(bound)
}

/// Anything that can report λ_j(κ), j = 1..=count, and |ω|_∞.
pub trait LambdaSource {
    fn lambdas(&self, kappa: f64, count: usize) -> Result<Vec<f64>>;
    fn sup_norm(&self) -> f64;
}

impl LambdaSource for GroundState {
    fn lambdas(&self, kappa: f64, count: usize) -> Result<Vec<f64>> {
        eigenvalues(self, kappa, count)
    }

    fn sup_norm(&self) -> f64 {
        sup_norm(self)
    }
}

/// Richardson extrapolation of the eigenvalues from grids `h` and `h/2`,
/// cancelling the leading O(h²) discretization error.
#[derive(Debug, Clone)]
pub struct Extrapolated {
    pub coarse: GroundState,
    pub fine: GroundState,
}

impl Extrapolated {
    pub fn new(dim: usize, radius: f64, nodes: usize) -> Result<Self> {
        let coarse = solve_ground_state(&build_grid(dim, radius, nodes)?, 1e-10)?;
        let fine = solve_ground_state(&build_grid(dim, radius, 2 * nodes - 1)?, 1e-10)?;
        Ok(Self { coarse, fine })
    }
}

impl LambdaSource for Extrapolated {
    fn lambdas(&self, kappa: f64, count: usize) -> Result<Vec<f64>> {
        let c = eigenvalues(&self.coarse, kappa, count)?;
        let f = eigenvalues(&self.fine, kappa, count)?;
        Ok(c.iter().zip(&f).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
    }

    fn sup_norm(&self) -> f64 {
        (4.0 * sup_norm(&self.fine) - sup_norm(&self.coarse)) / 3.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseIndexReport {
    pub kappa: f64,
    pub beta: f64,
    pub index: usize,
    /// Negative eigenvalues of the Hessian, sum block first.
    pub negative_eigenvalues: Vec<f64>,
    /// Contribution of the sum direction (φ, φ).
    pub sum_block: usize,
    /// Contribution of the difference direction (φ, −φ).
    pub difference_block: usize,
}

/// Morse index of the energy at the positive synchronized point (κ, β).
///
/// With u = v the Hessian splits along (φ, φ) and (φ, −φ) into
/// `−Δ + (1+κ) − 3(1+κ)ω_κ²` and `−Δ + (1−κ) − (1+κ)(3−β)/(1+β)·ω_κ²`,
/// where ω_κ(x) = ω(√(1+κ)·x); each block's negative eigenvalues are
/// counted in the volume-weighted metric.
pub fn morse_index_on_branch(gs: &GroundState, kappa: f64, beta: f64) -> Result<MorseIndexReport> {
    if !(kappa > -1.0) || !(beta > -1.0) {
        return Err(SchroError::domain(format!("Morse index needs κ > −1 and β > −1, got ({kappa}, {beta})")));
    }
    let w = scaled_ground_state(gs, (1.0 + kappa).sqrt())?;
    let grid = gs.grid();
    let vol = &grid.volumes()[..grid.interior_len()];
    let block = |shift: f64, coeff: f64| {
        let mut op = grid.stiffness();
        for (i, d) in op.diag.iter_mut().enumerate() {
            let wi = w.values()[i];
            *d += vol[i] * (shift - coeff * wi * wi);
        }
        let count = op.count_below(0.0, vol);
        (count, pencil_eigenvalues(&op, vol, 0, count, EIGEN_TOL))
    };
    let (sum_block, mut neg) = block(1.0 + kappa, 3.0 * (1.0 + kappa));
    let (difference_block, diff_neg) = block(1.0 - kappa, (1.0 + kappa) * (3.0 - beta) / (1.0 + beta));
    neg.extend(diff_neg);
    Ok(MorseIndexReport {
        kappa,
        beta,
        index: sum_block + difference_block,
        negative_eigenvalues: neg,
        sum_block,
        difference_block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid;

    fn gs(dim: usize, radius: f64, n: usize) -> GroundState {
        solve_ground_state(&build_grid(dim, radius, n).unwrap(), 1e-10).unwrap()
    }

    /// Even bound states of −φ'' + Cφ = λ·2sech²(r)φ.
    fn poschl_teller(j: usize, c: f64) -> f64 {
        let s = c.sqrt();
        (2.0 * j as f64 - 2.0 + s) * (2.0 * j as f64 - 1.0 + s) / 2.0
    }

    #[test]
    fn coupling_values() {
        assert_eq!(coupling_c(0.0).unwrap(), 1.0);
        assert!((coupling_c(-0.6).unwrap() - 4.0).abs() < 1e-14);
        assert!(coupling_c(-1.0).is_err());
        assert!(coupling_c(-1.0 + 1e-9).unwrap() > 1e8);
        let mut prev = f64::INFINITY;
        for k in 0..100 {
            let c = coupling_c(-0.99 + 0.05 * k as f64).unwrap();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn principal_pair_at_zero_coupling_is_omega() {
        for dim in 1..=3 {
            let g = gs(dim, 20.0, 1001);
            let pairs = eigen_lambda(&g, 0.0, 3).unwrap();
            assert!((pairs[0].lambda - 1.0).abs() < 1e-6, "dim {dim}: {}", pairs[0].lambda);
            let p = pairs[0].phi.values();
            let w = g.omega().values();
            let dot: f64 = p.iter().zip(w).map(|(a, b)| a * b).sum();
            let cos = dot / (p.iter().map(|a| a * a).sum::<f64>() * w.iter().map(|a| a * a).sum::<f64>()).sqrt();
            assert!(cos > 1.0 - 1e-8);
            for pair in &pairs {
                assert!(pair.residual <= 1e-6 * pair.phi.l2_norm());
            }
            assert!(pairs.windows(2).all(|p| p[1].lambda - p[0].lambda > 1e-6));
        }
    }

    #[test]
    fn eigenprofiles_are_weight_orthonormal() {
        let g = gs(3, 20.0, 1001);
        let pairs = eigen_lambda(&g, -0.3, 4).unwrap();
        let w = g.omega().values();
        let vol = g.grid().volumes();
        for a in &pairs {
            for b in &pairs {
                let ip: f64 = (0..w.len()).map(|i| vol[i] * w[i] * w[i] * a.phi.values()[i] * b.phi.values()[i]).sum();
                let expect = if a.index == b.index { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "{} {} {ip}", a.index, b.index);
            }
        }
    }

    #[test]
    fn poschl_teller_on_a_fine_grid() {
        let g = gs(1, 15.0, 3001);
        for &kappa in &[-0.5, 0.0, 0.5] {
            let c = coupling_c(kappa).unwrap();
            let lam = eigenvalues(&g, kappa, 3).unwrap();
            for (j, l) in lam.iter().enumerate() {
                let exact = poschl_teller(j + 1, c);
                assert!((l - exact).abs() < 2e-3 * exact, "κ={kappa} j={} {l} vs {exact}", j + 1);
            }
        }
    }

    #[test]
    fn rayleigh_quotient_properties() {
        let g = gs(2, 20.0, 801);
        let w = g.omega().clone();
        assert!((rayleigh_j(&g, &w, 0.0).unwrap() - 1.0).abs() < 1e-6);
        let phi = Profile::from_fn(g.grid().clone(), |r| (1.0 - r * r / 4.0) * (-r / 2.0).exp());
        let j = rayleigh_j(&g, &phi, 0.3).unwrap();
        assert!((rayleigh_j(&g, &phi.scaled(-3.5), 0.3).unwrap() - j).abs() < 1e-10 * j.abs());
        assert!(rayleigh_j(&g, &phi, -0.2).unwrap() > j);
        assert!(rayleigh_j(&g, &Profile::zeros(g.grid().clone()), 0.0).is_err());
        // eigenvalues are the stationary values of J
        let pairs = eigen_lambda(&g, 0.3, 2).unwrap();
        for p in &pairs {
            assert!((rayleigh_j(&g, &p.phi, 0.3).unwrap() - p.lambda).abs() < 1e-8);
        }
    }

    #[test]
    fn lower_bound_examples() {
        let g = gs(1, 15.0, 1501);
        assert!((lambda1_lower_bound(&g, 0.0).unwrap() - 1.0).abs() < 1e-9);
        let b = lambda1_lower_bound(&g, -0.5).unwrap();
        let exact = poschl_teller(1, 3.0);
        assert!((b - 2.0).abs() < 1e-3 && b <= exact);
        assert!(lambda1_lower_bound(&g, -1.0 + 1e-8).unwrap() > 1e7);
    }

    #[test]
    fn morse_index_blocks() {
        let g = gs(1, 30.0, 1501);
        let sums: Vec<usize> =
            [-0.5, 0.0, 0.5].iter().map(|&k| morse_index_on_branch(&g, k, 0.0).unwrap().sum_block).collect();
        assert_eq!(sums, vec![1, 1, 1]);
        // N = 1, β = 0: bifurcations at κ = −0.6 and κ = 1
        assert_eq!(morse_index_on_branch(&g, -0.65, 0.0).unwrap().difference_block, 0);
        assert_eq!(morse_index_on_branch(&g, -0.55, 0.0).unwrap().difference_block, 1);
        let r = morse_index_on_branch(&g, 0.2, 0.0).unwrap();
        assert_eq!(r.index, r.negative_eigenvalues.len());
        assert!(r.negative_eigenvalues.iter().all(|v| *v < 0.0));
        assert!(morse_index_on_branch(&g, -1.0, 0.0).is_err());
        assert!(morse_index_on_branch(&g, 0.0, -1.0).is_err());
    }
}
