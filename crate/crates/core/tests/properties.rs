use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use schro_core::branches::{classify_opposite_sign, classify_region, sigma_action, synchronized_plus, Params};
use schro_core::ground_state::{solve_ground_state, GroundState};
use schro_core::linalg::{pencil_eigenvalues, SymTridiag};
use schro_core::mesh::{build_grid, inner_h1, integrate, Profile};
use schro_core::nehari::{nehari_t, norm_pair};
use schro_core::spectrum::{eigenvalues, rayleigh_j};
use schro_core::system::relative_residual;

fn ground(dim: usize) -> &'static GroundState {
    static CELLS: [OnceLock<GroundState>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CELLS[dim - 1].get_or_init(|| solve_ground_state(&build_grid(dim, 16.0, 641).unwrap(), 1e-10).unwrap())
}

/// (a + b r²) e^{−c r²} (R − r): positive inside, zero at R.
fn bump(grid: &Arc<schro_core::mesh::RadialGrid>, (a, b, c): (f64, f64, f64)) -> Profile {
    let big_r = grid.radius();
    Profile::from_fn(grid.clone(), |r| (a + b * r * r) * (-c * r * r).exp() * (big_r - r))
}

fn shape() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1..2.0f64, 0.0..1.0f64, 0.05..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rayleigh_quotient_is_scale_invariant_and_decreasing_in_kappa(
        dim in 1usize..=3, s in shape(), t in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
        k1 in -0.9..1.5f64, dk in 0.01..0.5f64,
    ) {
        let gs = ground(dim);
        let phi = bump(gs.grid(), s);
        let j = rayleigh_j(gs, &phi, k1).unwrap();
        let jt = rayleigh_j(gs, &phi.scaled(t), k1).unwrap();
        prop_assert!((j - jt).abs() <= 1e-12 * j.abs().max(1.0));
        let j2 = rayleigh_j(gs, &phi, k1 + dk).unwrap();
        prop_assert!(j2 < j);
        // J bounds λ₁ from above
        prop_assert!(eigenvalues(gs, k1, 1).unwrap()[0] <= j * (1.0 + 1e-9));
    }

    #[test]
    fn quadrature_and_h1_form_are_symmetric_bilinear(
        dim in 1usize..=3, s1 in shape(), s2 in shape(), a in -3.0..3.0f64,
    ) {
        let grid = ground(dim).grid();
        let (u, v) = (bump(grid, s1), bump(grid, s2));
        let uv = integrate(grid, &u.zip_map(&v, |x, y| x * y).unwrap()).unwrap();
        let vu = integrate(grid, &v.zip_map(&u, |x, y| x * y).unwrap()).unwrap();
        prop_assert_eq!(uv, vu);
        let h_uv = inner_h1(grid, &u, &v).unwrap();
        prop_assert!((h_uv - inner_h1(grid, &v, &u).unwrap()).abs() <= 1e-12 * h_uv.abs());
        let w = u.zip_map(&v, |x, y| a * x + y).unwrap();
        let lin = a * inner_h1(grid, &u, &u).unwrap() + inner_h1(grid, &v, &u).unwrap();
        prop_assert!((inner_h1(grid, &w, &u).unwrap() - lin).abs() <= 1e-10 * (1.0 + lin.abs()));
        prop_assert!(inner_h1(grid, &u, &u).unwrap() > 0.0);
    }

    #[test]
    fn sigma_is_an_involution(dim in 1usize..=3, s1 in shape(), s2 in shape(), k in -3.0..3.0f64, b in -3.0..3.0f64) {
        let grid = ground(dim).grid();
        let p = Params::symmetric(k, b, dim).unwrap();
        let (u, v) = (bump(grid, s1), bump(grid, s2));
        let (p1, u1, v1) = sigma_action(&p, &u, &v);
        let (p2, u2, v2) = sigma_action(&p1, &u1, &v1);
        prop_assert_eq!(p2, p);
        prop_assert_eq!(u2.values(), u.values());
        prop_assert_eq!(v2.values(), v.values());
        prop_assert_eq!(classify_opposite_sign(&p).unwrap(), classify_region(&p1).unwrap());
    }

    #[test]
    fn nehari_projection_is_idempotent(
        dim in 1usize..=3, s1 in shape(), s2 in shape(), k in -0.95..0.0f64, b in 0.0..3.0f64,
    ) {
        let grid = ground(dim).grid();
        let p = Params::symmetric(k, b, dim).unwrap();
        let (u, v) = (bump(grid, s1), bump(grid, s2));
        let t = nehari_t(&p, &u, &v).unwrap();
        prop_assert!(t > 0.0);
        let t2 = nehari_t(&p, &u.scaled(t), &v.scaled(t)).unwrap();
        prop_assert!((t2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nehari_norm_is_equivalent_to_the_product_norm(
        dim in 1usize..=3, s1 in shape(), s2 in shape(), k in -0.99..0.0f64, sign in prop::bool::ANY,
    ) {
        let grid = ground(dim).grid();
        let p = Params::symmetric(k, 0.0, dim).unwrap();
        let u = bump(grid, s1);
        let v = bump(grid, s2).scaled(if sign { 1.0 } else { -1.0 });
        let (h, one) = norm_pair(&p, &u, &v).unwrap();
        prop_assert!((1.0 + k) * h <= one + 1e-8);
        prop_assert!(one <= 2f64.sqrt() * h + 1e-8);
    }

    #[test]
    fn sturm_bisection_matches_dense_eigensolver(
        n in 3usize..40,
        seed in prop::collection::vec((0.5..3.0f64, -1.0..1.0f64, 0.1..2.0f64), 40),
    ) {
        let diag: Vec<f64> = seed[..n].iter().map(|s| s.0 + 2.0).collect();
        let off: Vec<f64> = seed[..n - 1].iter().map(|s| s.1).collect();
        let w: Vec<f64> = seed[..n].iter().map(|s| s.2).collect();
        let a = SymTridiag { diag: diag.clone(), off: off.clone() };
        let got = pencil_eigenvalues(&a, &w, 0, n, 1e-12);
        // W^{−1/2} A W^{−1/2}
        let m = DMatrix::from_fn(n, n, |i, j| {
            let aij = if i == j { diag[i] } else if i + 1 == j { off[i] } else if j + 1 == i { off[j] } else { 0.0 };
            aij / (w[i] * w[j]).sqrt()
        });
        let mut want: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip(&want) {
            prop_assert!((g - e).abs() <= 1e-9 * e.abs().max(1.0), "{g} vs {e}");
        }
    }
}

#[test]
fn dirichlet_laplacian_on_a_ball_matches_the_dense_spectrum() {
    // −Δ on the ball of radius R in ℝ³ with radial Dirichlet data: (jπ/R)².
    let grid = build_grid(3, 1.0, 401).unwrap();
    let k = grid.stiffness();
    let vol = &grid.volumes()[..k.len()];
    let ours = pencil_eigenvalues(&k, vol, 0, 5, 1e-12);
    let m = k.len();
    let dense = DMatrix::from_fn(m, m, |i, j| {
        let kij = if i == j {
            k.diag[i]
        } else if i + 1 == j {
            k.off[i]
        } else if j + 1 == i {
            k.off[j]
        } else {
            0.0
        };
        kij / (vol[i] * vol[j]).sqrt()
    });
    let mut all: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    all.sort_by(f64::total_cmp);
    for j in 0..5 {
        let exact = ((j + 1) as f64 * std::f64::consts::PI).powi(2);
        assert!((ours[j] - all[j]).abs() < 1e-8 * all[j], "{} vs {}", ours[j], all[j]);
        assert!((ours[j] - exact).abs() < 2e-4 * exact, "j={}: {} vs {exact}", j + 1, ours[j]);
    }
}

#[test]
fn synchronized_pair_and_its_sigma_image_solve_their_systems() {
    for dim in 1..=3 {
        let gs = ground(dim);
        for (k, b) in [(-0.5, 1.0), (0.3, -0.4), (0.9, 2.0)] {
            let p = Params::symmetric(k, b, dim).unwrap();
            let (u, v) = synchronized_plus(k, b, gs).unwrap();
            let r = relative_residual(&p, &u, &v, false).unwrap();
            let (q, su, sv) = sigma_action(&p, &u, &v);
            let rs = relative_residual(&q, &su, &sv, false).unwrap();
            assert!(r < 1e-6 && (r - rs).abs() < 1e-12, "N={dim} ({k}, {b}): {r} {rs}");
        }
    }
}
