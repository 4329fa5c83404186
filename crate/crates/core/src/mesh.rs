//! Radial discretization of H¹_r(ℝᴺ).
//!
//! Nodes sit at `r_i = i·h` on `[0, R]`. Each node owns a control volume
//! (a ball around the origin, shells in the interior, a half shell at `R`),
//! and the Laplacian is the flux-difference over those volumes. This is the
//! usual second-order central scheme written in conservative form: it is
//! symmetric in the volume-weighted inner product, reproduces the limit
//! `Δφ(0) = N·φ''(0)` at the origin, and treats `u(R) = 0` as a Dirichlet
//! surrogate for decay.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Result, SchroError};
use crate::linalg::SymTridiag;

/// Smallest admissible node count.
pub const MIN_NODES: usize = 64;

#[derive(Debug, Clone)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    h: f64,
    sphere_factor: f64,
    /// Control volume of each node, including the sphere factor.
    volumes: Vec<f64>,
    /// `sphere_factor · r_{i+1/2}^{N-1} / h` for the edge between `i` and `i+1`.
    conductance: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.volumes.len() == other.volumes.len() && self.radius == other.radius
    }
}

/// Builds a uniform radial grid with `n` nodes on `[0, R]` for dimension `N`.
pub fn build_grid(dim: usize, radius: f64, n: usize) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(dim, radius, n).map(Arc::new)
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SchroError::Config(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SchroError::Config(format!("truncation radius must be positive, got {radius}")));
        }
        if n < MIN_NODES {
            return Err(SchroError::Config(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let h = radius / (n - 1) as f64;
        let sphere_factor = match dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let nd = dim as i32;
        let ball = |r: f64| r.powi(nd) / dim as f64;
        let volumes = (0..n)
            .map(|i| {
                let r = i as f64 * h;
                let v = if i == 0 {
                    ball(0.5 * h)
                } else if i == n - 1 {
                    ball(radius) - ball(r - 0.5 * h)
                } else {
                    ball(r + 0.5 * h) - ball(r - 0.5 * h)
                };
                sphere_factor * v
            })
            .collect();
        let conductance = (0..n - 1).map(|i| sphere_factor * ((i as f64 + 0.5) * h).powi(nd - 1) / h).collect();
        Ok(Self { dim, radius, h, sphere_factor, volumes, conductance })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn sphere_factor(&self) -> f64 {
        self.sphere_factor
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.radius
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// Number of free nodes once the Dirichlet node at `R` is removed.
    pub fn interior_len(&self) -> usize {
        self.len() - 1
    }

    /// Stiffness matrix `K` on the free nodes, `uᵀKu = ∫|∇u|²` with `u(R) = 0`.
    pub fn stiffness(&self) -> SymTridiag {
        let m = self.interior_len();
        let c = &self.conductance;
        let diag = (0..m).map(|i| c[i] + if i > 0 { c[i - 1] } else { 0.0 }).collect();
        let off = (0..m - 1).map(|i| -c[i]).collect();
        SymTridiag { diag, off }
    }

    /// Stiffness on all nodes with a natural (flux) condition at `R`.
    pub fn stiffness_free_end(&self) -> SymTridiag {
        let n = self.len();
        let c = &self.conductance;
        let diag = (0..n).map(|i| (if i + 1 < n { c[i] } else { 0.0 }) + if i > 0 { c[i - 1] } else { 0.0 }).collect();
        let off = c.iter().map(|c| -c).collect();
        SymTridiag { diag, off }
    }

    /// `sphere_factor · R^{N-1}`, the area of the outer boundary.
    pub fn boundary_area(&self) -> f64 {
        self.sphere_factor * self.radius.powi(self.dim as i32 - 1)
    }

    /// Trapezoid-type quadrature of raw nodal values.
    pub fn integrate_values(&self, f: &[f64]) -> f64 {
        self.volumes.iter().zip(f).map(|(w, f)| w * f).sum()
    }

    pub(crate) fn check(&self, p: &Profile) -> Result<()> {
        if !same_grid(self, p.grid()) {
            return Err(SchroError::GridMismatch);
        }
        Ok(())
    }
}

fn same_grid(a: &RadialGrid, b: &RadialGrid) -> bool {
    std::ptr::eq(a, b) || a == b
}

/// One scalar radial function sampled on a [`RadialGrid`].
#[derive(Debug, Clone)]
pub struct Profile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SchroError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    /// Builds a profile from values on the free nodes; the node at `R` is 0.
    pub(crate) fn from_interior(grid: Arc<RadialGrid>, interior: &[f64]) -> Self {
        let mut values = interior.to_vec();
        values.resize(grid.len(), 0.0);
        values[grid.len() - 1] = 0.0;
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn interior(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile { grid: self.grid.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Profile {
        self.map(|v| s * v)
    }

    pub fn zip_map(&self, other: &Profile, f: impl Fn(f64, f64) -> f64) -> Result<Profile> {
        self.grid.check(other)?;
        Ok(Profile {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate_values(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.volumes.iter().zip(&self.values).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Profile) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| SchroError::Io { path: path.to_path_buf(), source };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn write_csv_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "r,value")?;
        for (r, v) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{r:?},{v:?}")?;
        }
        Ok(())
    }

    pub fn read_csv(grid: Arc<RadialGrid>, path: &Path) -> Result<Profile> {
        let io = |source| SchroError::Io { path: path.to_path_buf(), source };
        let file = std::fs::File::open(path).map_err(io)?;
        let mut values = Vec::with_capacity(grid.len());
        for (k, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if k == 0 {
                if line.trim() != "r,value" {
                    return Err(SchroError::Config(format!("{}: expected header r,value", path.display())));
                }
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| SchroError::Config(format!("{}:{}: malformed row", path.display(), k + 1)))?;
            values.push(v);
        }
        Profile::new(grid, values)
    }
}

/// Δφ by the conservative central scheme; 0 is returned at the Dirichlet node.
pub fn laplacian_apply(grid: &RadialGrid, phi: &Profile) -> Result<Profile> {
    grid.check(phi)?;
    let k = grid.stiffness();
    let mut out = k.matvec(phi.interior());
    for (o, w) in out.iter_mut().zip(&grid.volumes) {
        *o = -*o / w;
    }
    Ok(Profile::from_interior(phi.grid.clone(), &out))
}

/// ∫_{ℝᴺ} f, as `Σ vol_i · f_i`.
pub fn integrate(grid: &RadialGrid, f: &Profile) -> Result<f64> {
    grid.check(f)?;
    Ok(grid.integrate_values(&f.values))
}

/// ⟨u, v⟩ = ∫(∇u·∇v + uv). Gradients are edge differences, so this is the
/// bilinear form of the same discrete operator `−Δ + 1` used everywhere.
pub fn inner_h1(grid: &RadialGrid, u: &Profile, v: &Profile) -> Result<f64> {
    grid.check(u)?;
    grid.check(v)?;
    Ok(h1_form(grid, u.interior(), v.interior()))
}

pub(crate) fn h1_form(grid: &RadialGrid, u: &[f64], v: &[f64]) -> f64 {
    dirichlet_form(grid, u, v) + u.iter().zip(v).zip(&grid.volumes).map(|((a, b), w)| w * a * b).sum::<f64>()
}

/// ∫∇u·∇v on free-node values (Dirichlet at `R`).
pub(crate) fn dirichlet_form(grid: &RadialGrid, u: &[f64], v: &[f64]) -> f64 {
    let m = u.len();
    let du = |i: usize, x: &[f64]| if i + 1 < m { x[i + 1] - x[i] } else { -x[i] };
    (0..m).map(|i| grid.conductance[i] * du(i, u) * du(i, v)).sum()
}

/// √(‖u‖² + ‖v‖²) in H¹ × H¹.
pub fn pair_norm(grid: &RadialGrid, u: &Profile, v: &Profile) -> Result<f64> {
    Ok((inner_h1(grid, u, u)? + inner_h1(grid, v, v)?).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = build_grid(3, 20.0, 2001).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert_eq!(g.sphere_factor(), 4.0 * PI);
        let g = build_grid(1, 15.0, 1501).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert_eq!(g.sphere_factor(), 2.0);
        assert_eq!(g.node(1500), 15.0);
        assert!(build_grid(4, 20.0, 2001).is_err());
        assert!(build_grid(0, 20.0, 2001).is_err());
        assert!(build_grid(2, 20.0, 63).is_err());
        assert!(build_grid(2, -1.0, 100).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes_inside() {
        let g = build_grid(3, 10.0, 401).unwrap();
        let c = Profile::from_fn(g.clone(), |_| 2.5);
        let l = laplacian_apply(&g, &c).unwrap();
        // the last free node sees the Dirichlet value
        for v in &l.values()[..g.len() - 2] {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_of_r_squared_is_2n() {
        for dim in 1..=3 {
            let g = build_grid(dim, 5.0, 201).unwrap();
            let p = Profile::from_fn(g.clone(), |r| r * r);
            let l = laplacian_apply(&g, &p).unwrap();
            for v in &l.values()[..g.len() - 2] {
                assert!((v - 2.0 * dim as f64).abs() < 1e-8, "dim {dim}: {v}");
            }
        }
    }

    #[test]
    fn laplacian_of_gaussian_is_second_order() {
        let err = |n: usize| {
            let g = build_grid(1, 12.0, n).unwrap();
            let p = Profile::from_fn(g.clone(), |r| (-0.5 * r * r).exp());
            let l = laplacian_apply(&g, &p).unwrap();
            g.nodes()
                .zip(l.values())
                .take(g.len() - 2)
                .map(|(r, v)| (v - (r * r - 1.0) * (-0.5 * r * r).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(601), err(1201));
        assert!(e1 < 1e-3);
        assert!((e1 / e2 - 4.0).abs() < 0.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn integrate_known_values() {
        let g = build_grid(3, 20.0, 2001).unwrap();
        let one = Profile::from_fn(g.clone(), |_| 1.0);
        let ball = 4.0 * PI * 20f64.powi(3) / 3.0;
        assert!((integrate(&g, &one).unwrap() / ball - 1.0).abs() < 1e-6);

        let g = build_grid(1, 15.0, 1501).unwrap();
        let f = Profile::from_fn(g.clone(), |r| 2.0 / r.cosh().powi(2));
        assert!((integrate(&g, &f).unwrap() - 4.0 * 15f64.tanh()).abs() < 1e-4);
        assert_eq!(integrate(&g, &Profile::zeros(g.clone())).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        for dim in 1..=3 {
            let exact = match dim {
                1 => 2.0 * (1.0 - (-20f64).exp()),
                2 => 2.0 * PI,
                _ => 8.0 * PI,
            };
            let err = |n| {
                let g = build_grid(dim, 20.0, n).unwrap();
                (Profile::from_fn(g.clone(), |r| (-r).exp()).integral() - exact).abs()
            };
            let ratio = err(401) / err(801);
            assert!((ratio - 4.0).abs() < 0.3, "dim {dim}: ratio {ratio}");
        }
    }

    #[test]
    fn green_identity_and_self_adjointness() {
        let g = build_grid(3, 20.0, 1001).unwrap();
        let u = Profile::from_fn(g.clone(), |r| (-r * r / 3.0).exp());
        let v = Profile::from_fn(g.clone(), |r| (1.0 + r) * (-r).exp());
        let lu = laplacian_apply(&g, &u).unwrap();
        let lv = laplacian_apply(&g, &v).unwrap();
        let a = integrate(&g, &lu.zip_map(&v, |x, y| x * y).unwrap()).unwrap();
        let b = integrate(&g, &lv.zip_map(&u, |x, y| x * y).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        let grad2 = inner_h1(&g, &u, &u).unwrap() - u.l2_norm().powi(2);
        let lap = integrate(&g, &lu.zip_map(&u, |x, y| -x * y).unwrap()).unwrap();
        assert!((grad2 - lap).abs() < 1e-10 * grad2);
    }

    #[test]
    fn pair_norm_examples() {
        let g = build_grid(2, 10.0, 201).unwrap();
        let z = Profile::zeros(g.clone());
        let u = Profile::from_fn(g.clone(), |r| (-r).exp());
        assert_eq!(pair_norm(&g, &z, &z).unwrap(), 0.0);
        let nu = inner_h1(&g, &u, &u).unwrap().sqrt();
        assert!((pair_norm(&g, &u, &z).unwrap() - nu).abs() < 1e-14);
        assert!((pair_norm(&g, &u, &u).unwrap() - 2f64.sqrt() * nu).abs() < 1e-13);
        let other = build_grid(2, 10.0, 401).unwrap();
        let w = Profile::zeros(other);
        assert!(matches!(inner_h1(&g, &u, &w), Err(SchroError::GridMismatch)));
    }

    #[test]
    fn csv_round_trip() {
        let g = build_grid(1, 5.0, 64).unwrap();
        let p = Profile::from_fn(g.clone(), |r| (r * 1.7).sin() / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        p.write_csv(&path).unwrap();
        let q = Profile::read_csv(g, &path).unwrap();
        assert_eq!(p.values(), q.values());
    }
}
