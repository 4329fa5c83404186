//! Synchronized solution branches, the σ-symmetry, bifurcation points
//! along T⁺ and the region classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SchroError};
use crate::ground_state::{scaled_ground_state, sup_norm, GroundState};
use crate::linalg::{inverse_iteration, pencil_eigenvalues};
use crate::mesh::{integrate, Profile};
use crate::spectrum::{coupling_c, eigen_lambda, eigenvalues, LambdaSource, WeightedPencil};

/// Starting distance from κ = −1 when bracketing roots.
const BRACKET_EPS: f64 = 1e-4;
/// Bracketing stops once C(κ) exceeds this.
const C_CAP: f64 = 1e8;
const ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub kappa: f64,
    pub beta: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub dim: usize,
}

impl Params {
    pub fn new(kappa: f64, beta: f64, mu1: f64, mu2: f64, dim: usize) -> Result<Self> {
        let p = Self { kappa, beta, mu1, mu2, dim };
        p.validate()?;
        Ok(p)
    }

    /// μ₁ = μ₂ = 1.
    pub fn symmetric(kappa: f64, beta: f64, dim: usize) -> Result<Self> {
        Self::new(kappa, beta, 1.0, 1.0, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu1 > 0.0 && self.mu2 >= self.mu1) {
            return Err(SchroError::domain(format!("need μ₂ ≥ μ₁ > 0, got μ₁ = {}, μ₂ = {}", self.mu1, self.mu2)));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(SchroError::domain(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if !self.kappa.is_finite() || !self.beta.is_finite() {
            return Err(SchroError::domain("κ and β must be finite"));
        }
        Ok(())
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionVerdict {
    NoPositiveSolution,
    PositiveGroundState,
    ExistsSymmetric,
    Unknown,
}

impl RegionVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionVerdict::NoPositiveSolution => "NoPositiveSolution",
            RegionVerdict::PositiveGroundState => "PositiveGroundState",
            RegionVerdict::ExistsSymmetric => "ExistsSymmetric",
            RegionVerdict::Unknown => "Unknown",
        }
    }
}

/// f(β) = (3 − β)/(1 + β).
pub fn f_of_beta(beta: f64) -> Result<f64> {
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(SchroError::domain(format!("f(β) needs β > −1, got {beta}")));
    }
    Ok((3.0 - beta) / (1.0 + beta))
}

/// T⁺: u = v = √((1+κ)/(1+β))·ω(√(1+κ)·x).
pub fn synchronized_plus(kappa: f64, beta: f64, gs: &GroundState) -> Result<(Profile, Profile)> {
    if !(kappa > -1.0 && beta > -1.0) {
        return Err(SchroError::domain(format!("T⁺ needs κ > −1 and β > −1, got ({kappa}, {beta})")));
    }
    let w = scaled_ground_state(gs, (1.0 + kappa).sqrt())?;
    let u = w.scaled(((1.0 + kappa) / (1.0 + beta)).sqrt());
    Ok((u.clone(), u))
}

/// T⁻: u = −v = √((1−κ)/(1+β))·ω(√(1−κ)·x).
pub fn synchronized_minus(kappa: f64, beta: f64, gs: &GroundState) -> Result<(Profile, Profile)> {
    if !(kappa < 1.0 && beta > -1.0) {
        return Err(SchroError::domain(format!("T⁻ needs κ < 1 and β > −1, got ({kappa}, {beta})")));
    }
    let w = scaled_ground_state(gs, (1.0 - kappa).sqrt())?;
    let u = w.scaled(((1.0 - kappa) / (1.0 + beta)).sqrt());
    let v = u.scaled(-1.0);
    Ok((u, v))
}

/// σ: (κ, β, u, v) ↦ (−κ, β, u, −v).
pub fn sigma_action(p: &Params, u: &Profile, v: &Profile) -> (Params, Profile, Profile) {
    (p.with_kappa(-p.kappa), u.clone(), v.scaled(-1.0))
}

/// Real solutions (a₁, a₂, b) with a₁a₂ ≠ 0, b > 0 of the amplitude system
/// for u = a₁ω(bx), v = a₂ω(bx), one per family with a₁ > 0.
/// At κ = 0, β = 1 the solutions form a circle a₁² + a₂² = 1; only the two
/// representatives a₁ = ±a₂ are returned.
pub fn solve_algebraic_system(kappa: f64, beta: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    if !(beta > -1.0) {
        return out;
    }
    for sign in [1.0, -1.0] {
        let b2 = 1.0 + sign * kappa;
        if b2 > 0.0 {
            let a = (b2 / (1.0 + beta)).sqrt();
            out.push((a, sign * a, b2.sqrt()));
        }
    }
    out
}

/// ‖u‖_{L²} on T⁺ at (κ, β) via the exact scaling
/// ‖u‖² = ((1+κ)/(1+β))·(1+κ)^{−N/2}·‖ω‖²_{L²}.
pub fn synchronized_l2_norm(gs: &GroundState, kappa: f64, beta: f64) -> Result<f64> {
    if !(kappa > -1.0 && beta > -1.0) {
        return Err(SchroError::domain(format!("T⁺ needs κ > −1 and β > −1, got ({kappa}, {beta})")));
    }
    let w2 = integrate(gs.grid(), &gs.omega().map(|x| x * x))?;
    let scale = (1.0 + kappa) / (1.0 + beta) * (1.0 + kappa).powf(-(gs.dim() as f64) / 2.0);
    Ok((scale * w2).sqrt())
}

/// A root κ_j of λ_j(κ) = f(β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub j: usize,
    pub kappa: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    pub j: usize,
    pub beta: f64,
    pub kappa_j: f64,
    pub lambda: f64,
    /// The T⁺ pair at κ_j.
    pub pair: (Profile, Profile),
    /// Null vector of the difference block in the original variable x,
    /// unit L² norm, positive at the origin.
    pub kernel_phi: Profile,
    /// Eigenprofile φ_j of the weighted problem (variable y = √(1+κ)x).
    pub eigen_phi: Profile,
    /// ‖−Δφ + C(κ_j)φ − f(β)ω²φ‖ for `eigen_phi`.
    pub kernel_residual: f64,
    pub l2_norm_u: f64,
    pub in_unit_interval: bool,
}

fn lambda_j<S: LambdaSource + ?Sized>(src: &S, kappa: f64, j: usize) -> Result<f64> {
    Ok(src.lambdas(kappa, j)?[j - 1])
}

/// Roots of λ_j(κ) = f(β) on (−1, κ_hi] for j ≤ j_max, sorted by j.
///
/// λ_j decreases in κ, so each j has at most one root. The lower end
/// starts at κ = −1 + 1e−4 and moves toward −1 until the sign changes
/// or C(κ) passes 1e8.
pub fn bifurcation_roots<S: LambdaSource + ?Sized>(
    src: &S,
    beta: f64,
    j_max: usize,
    kappa_hi: f64,
) -> Result<Vec<Root>> {
    let f = f_of_beta(beta)?;
    if j_max == 0 {
        return Err(SchroError::Config("j_max must be at least 1".into()));
    }
    if !(kappa_hi > -1.0) {
        return Err(SchroError::domain(format!("κ_hi must exceed −1, got {kappa_hi}")));
    }
    let mut roots = Vec::new();
    for j in 1..=j_max {
        let g = |k: f64| -> Result<f64> { Ok(lambda_j(src, k, j)? - f) };
        let mut hi = kappa_hi;
        if g(hi)? > 0.0 {
            continue;
        }
        let mut eps = BRACKET_EPS;
        let mut lo = -1.0 + eps;
        while g(lo)? <= 0.0 {
            eps /= 10.0;
            lo = -1.0 + eps;
            if coupling_c(lo)? > C_CAP {
                break;
            }
        }
        if g(lo)? <= 0.0 {
            continue;
        }
        if g(hi)? == 0.0 {
            roots.push(Root { j, kappa: hi, lambda: f });
            continue;
        }
        while hi - lo > ROOT_TOL * (1.0 + hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let kappa = 0.5 * (lo + hi);
        roots.push(Root { j, kappa, lambda: lambda_j(src, kappa, j)? });
    }
    Ok(roots)
}

/// Bifurcation points along T⁺|_β with the kernel profiles attached.
pub fn find_bifurcation_kappas(
    gs: &GroundState,
    beta: f64,
    j_max: usize,
    kappa_hi: f64,
) -> Result<Vec<BifurcationPoint>> {
    let f = f_of_beta(beta)?;
    bifurcation_roots(gs, beta, j_max, kappa_hi)?
        .into_iter()
        .map(|root| {
            let pair = synchronized_plus(root.kappa, beta, gs)?;
            let eig = eigen_lambda(gs, root.kappa, root.j)?.pop().expect("j ≥ 1 pairs");
            let pencil = WeightedPencil::new(gs, root.kappa)?;
            let phi = eig.phi.values();
            let aphi = pencil.a.matvec(phi);
            let kernel_residual = (0..phi.len())
                .map(|i| (aphi[i] - f * pencil.b[i] * phi[i]).powi(2) / gs.grid().volumes()[i])
                .sum::<f64>()
                .sqrt();
            Ok(BifurcationPoint {
                j: root.j,
                beta,
                kappa_j: root.kappa,
                lambda: root.lambda,
                kernel_phi: difference_kernel(gs, &pair.0, root.kappa, beta, root.j)?,
                eigen_phi: eig.phi,
                kernel_residual,
                l2_norm_u: synchronized_l2_norm(gs, root.kappa, beta)?,
                in_unit_interval: root.kappa <= 0.0,
                pair,
            })
        })
        .collect()
}

/// j-th eigenvector of the difference block −Δ + (1−κ) − βu² − 3u² (at
/// u = v on T⁺) on the Dirichlet grid, the discrete kernel direction.
fn difference_kernel(gs: &GroundState, u: &Profile, kappa: f64, beta: f64, j: usize) -> Result<Profile> {
    let grid = gs.grid();
    let m = grid.interior_len();
    let vol = &grid.volumes()[..m];
    let mut op = grid.stiffness();
    for (i, d) in op.diag.iter_mut().enumerate() {
        let a = u.values()[i];
        *d += vol[i] * (1.0 - kappa - (3.0 - beta) * a * a);
    }
    let lam = pencil_eigenvalues(&op, vol, j - 1, j, 1e-12)[0];
    let phi = inverse_iteration(&op, vol, lam, 3)?;
    Ok(Profile::from_interior(grid.clone(), &phi))
}

/// i₀ = #{i : λ_i(0) ≤ f(β)}.
pub fn count_bifurcations_in_unit_interval(gs: &GroundState, beta: f64) -> Result<usize> {
    let f = f_of_beta(beta)?;
    let limit = gs.grid().len() / 10;
    let mut m = 4.min(limit);
    loop {
        let lam = eigenvalues(gs, 0.0, m)?;
        let count = lam.iter().filter(|l| **l <= f).count();
        if count < m || m == limit {
            return Ok(count);
        }
        m = (2 * m).min(limit);
    }
}

/// Whether (1+κ)/(1+β) ≥ −2κ/(|ω|²_∞(3−β)) holds at (κ, β).
pub fn minimal_root_inequality(gs: &GroundState, kappa: f64, beta: f64) -> bool {
    (1.0 + kappa) / (1.0 + beta) >= -2.0 * kappa / (sup_norm(gs).powi(2) * (3.0 - beta))
}

/// Existence verdict for positive solutions at `p`.
pub fn classify_region(p: &Params) -> Result<RegionVerdict> {
    p.validate()?;
    let (k, b) = (p.kappa, p.beta);
    let beta_bar = -(p.mu1 * p.mu1 * p.mu2).cbrt();
    Ok(if (k < -1.0 && b >= beta_bar) || (k == -1.0 && b > 0.0) {
        RegionVerdict::NoPositiveSolution
    } else if k > -1.0 && k < 0.0 && b > 0.0 {
        RegionVerdict::PositiveGroundState
    } else if p.mu1 == p.mu2 && ((k > -1.0 && k <= 0.0) || (k > -1.0 && b > -1.0)) {
        RegionVerdict::ExistsSymmetric
    } else {
        RegionVerdict::Unknown
    })
}

/// The same verdicts for solutions with u > 0 > v, via σ.
pub fn classify_opposite_sign(p: &Params) -> Result<RegionVerdict> {
    classify_region(&p.with_kappa(-p.kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state;
    use crate::mesh::build_grid;
    use crate::system::relative_residual;

    fn gs(dim: usize, radius: f64, n: usize) -> GroundState {
        solve_ground_state(&build_grid(dim, radius, n).unwrap(), 1e-10).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(0.0, 0.0, 1.0, 2.0, 1).is_ok());
        assert!(Params::new(0.0, 0.0, 2.0, 1.0, 1).is_err());
        assert!(Params::new(0.0, 0.0, 0.0, 1.0, 1).is_err());
        assert!(Params::new(0.0, 0.0, 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_of_beta(0.0).unwrap(), 3.0);
        assert_eq!(f_of_beta(1.0).unwrap(), 1.0);
        assert!(f_of_beta(-1.0).is_err());
        assert!(f_of_beta(-1.0 + 1e-9).unwrap() > 1e9);
    }

    #[test]
    fn synchronized_examples() {
        let g = gs(1, 20.0, 1001);
        let (u, v) = synchronized_plus(0.0, 0.0, &g).unwrap();
        assert_eq!(u.values(), g.omega().values());
        assert_eq!(v.values(), g.omega().values());
        let (u, _) = synchronized_plus(0.0, 3.0, &g).unwrap();
        assert!((u.values()[0] - g.center_value() / 2.0).abs() < 1e-14);
        for &(k, b) in &[(-0.5, 0.0), (0.7, -0.4), (1.5, 2.0)] {
            let p = Params::symmetric(k, b, 1).unwrap();
            let (u, v) = synchronized_plus(k, b, &g).unwrap();
            assert!(relative_residual(&p, &u, &v, false).unwrap() < 1e-10);
        }
        let (u, v) = synchronized_minus(0.0, 0.0, &g).unwrap();
        assert_eq!(u.values(), g.omega().values());
        assert!(v.values().iter().zip(g.omega().values()).all(|(a, b)| *a == -b));
        let p = Params::symmetric(0.5, 0.0, 1).unwrap();
        let (u, v) = synchronized_minus(0.5, 0.0, &g).unwrap();
        assert!(relative_residual(&p, &u, &v, false).unwrap() < 1e-10);
        assert!(synchronized_plus(-1.0, 0.0, &g).is_err());
        assert!(synchronized_minus(1.0, 0.0, &g).is_err());
        assert!(synchronized_plus(0.0, -1.0, &g).is_err());
    }

    #[test]
    fn minus_branch_is_sigma_image_of_plus() {
        let g = gs(3, 20.0, 801);
        let p = Params::symmetric(-0.3, 0.5, 3).unwrap();
        let (u, v) = synchronized_plus(-0.3, 0.5, &g).unwrap();
        let (q, su, sv) = sigma_action(&p, &u, &v);
        let (mu, mv) = synchronized_minus(0.3, 0.5, &g).unwrap();
        assert_eq!(q.kappa, 0.3);
        assert_eq!(su.values(), mu.values());
        assert_eq!(sv.values(), mv.values());
        let r1 = relative_residual(&p, &u, &v, false).unwrap();
        let r2 = relative_residual(&q, &su, &sv, false).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
        let (p2, u2, v2) = sigma_action(&q, &su, &sv);
        assert_eq!(p2, p);
        assert_eq!(u2.values(), u.values());
        assert_eq!(v2.values(), v.values());
    }

    #[test]
    fn algebraic_system_examples() {
        let sols = solve_algebraic_system(0.0, 0.0);
        assert_eq!(sols, vec![(1.0, 1.0, 1.0), (1.0, -1.0, 1.0)]);
        let sols = solve_algebraic_system(-0.5, 0.0);
        let h = 0.5f64.sqrt();
        let t = 1.5f64.sqrt();
        assert!((sols[0].0 - h).abs() < 1e-15 && (sols[0].2 - h).abs() < 1e-15);
        assert!((sols[1].0 - t).abs() < 1e-15 && (sols[1].1 + t).abs() < 1e-15 && (sols[1].2 - t).abs() < 1e-15);
        assert!(solve_algebraic_system(0.3, -1.0).is_empty());
        assert_eq!(solve_algebraic_system(1.5, 0.0).len(), 1);
        for &(k, b) in &[(0.3, 0.2), (-0.7, 2.5), (0.1, 1.0)] {
            for (a1, a2, bb) in solve_algebraic_system(k, b) {
                let b2 = bb * bb;
                assert!((a1 + k * a2 - a1 * b2).abs() < 1e-13);
                assert!((a2 + k * a1 - a2 * b2).abs() < 1e-13);
                assert!((a1 * a1 + b * a2 * a2 - b2).abs() < 1e-13);
                assert!((a2 * a2 + b * a1 * a1 - b2).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bifurcation_points_in_one_dimension() {
        let g = gs(1, 30.0, 3001);
        let pts = find_bifurcation_kappas(&g, 0.0, 2, 1.5).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].kappa_j + 0.6).abs() < 1e-4, "{}", pts[0].kappa_j);
        assert!((pts[1].kappa_j - 1.0).abs() < 1e-3, "{}", pts[1].kappa_j);
        assert!(pts[0].in_unit_interval && !pts[1].in_unit_interval);
        for p in &pts {
            assert!((p.lambda - 3.0).abs() < 1e-8);
            assert!(p.kernel_residual < 1e-6, "{}", p.kernel_residual);
            assert!(p.kernel_phi.values()[0] > 0.0);
            assert!((p.kernel_phi.l2_norm() - 1.0).abs() < 1e-10);
        }
        assert_eq!(count_bifurcations_in_unit_interval(&g, 0.0).unwrap(), 1);
        assert_eq!(count_bifurcations_in_unit_interval(&g, -0.5).unwrap(), 2);
        assert_eq!(count_bifurcations_in_unit_interval(&g, 2.0).unwrap(), 0);
        let pts = find_bifurcation_kappas(&g, -0.5, 4, 0.0).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].kappa_j < pts[1].kappa_j);
    }

    #[test]
    fn l2_norm_scaling_matches_quadrature() {
        let g = gs(3, 25.0, 2001);
        let (u, _) = synchronized_plus(-0.4, 0.3, &g).unwrap();
        let direct = integrate(g.grid(), &u.map(|x| x * x)).unwrap().sqrt();
        let scaled = synchronized_l2_norm(&g, -0.4, 0.3).unwrap();
        assert!((direct - scaled).abs() < 2e-3 * scaled, "{direct} vs {scaled}");
    }

    #[test]
    fn classifier_examples() {
        let v = |k, b, m1, m2| classify_region(&Params::new(k, b, m1, m2, 1).unwrap()).unwrap();
        assert_eq!(v(-2.0, 0.0, 1.0, 1.0), RegionVerdict::NoPositiveSolution);
        assert_eq!(v(-0.5, 1.0, 1.0, 2.0), RegionVerdict::PositiveGroundState);
        assert_eq!(v(0.5, 0.5, 1.0, 1.0), RegionVerdict::ExistsSymmetric);
        assert_eq!(v(-1.0, 0.5, 1.0, 1.0), RegionVerdict::NoPositiveSolution);
        assert_eq!(v(-2.0, -1.5, 1.0, 1.0), RegionVerdict::Unknown);
        assert_eq!(v(0.5, -0.5, 1.0, 2.0), RegionVerdict::Unknown);
        assert_eq!(v(-0.5, -3.0, 1.0, 1.0), RegionVerdict::ExistsSymmetric);
        let o = |k, b| classify_opposite_sign(&Params::symmetric(k, b, 1).unwrap()).unwrap();
        assert_eq!(o(2.0, 0.0), RegionVerdict::NoPositiveSolution);
        assert_eq!(o(0.5, 1.0), RegionVerdict::PositiveGroundState);
    }
}
