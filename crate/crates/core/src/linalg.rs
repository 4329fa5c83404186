//! Small dense-band kernels: banded LU with partial pivoting and Sturm
//! counts for symmetric tridiagonal pencils.

use crate::error::{Result, SchroError};

/// General band matrix with `kl` sub- and `ku` super-diagonals, stored
/// column-major with `kl` extra rows on top for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c <= r + self.ku && r <= c + self.kl, "({r},{c}) outside band");
        (self.kl + self.ku + r - c) + c * self.ldab
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let k = self.idx(r, c);
        self.ab[k] += v;
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c > r + self.ku || r > c + self.kl {
            return 0.0;
        }
        self.ab[self.idx(r, c)]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (r, yr) in y.iter_mut().enumerate() {
            let lo = r.saturating_sub(self.kl);
            let hi = (r + self.ku).min(self.n - 1);
            for c in lo..=hi {
                *yr += self.ab[self.idx(r, c)] * x[c];
            }
        }
        y
    }

    /// LU factorization with partial pivoting (LAPACK `gbtf2` layout).
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut max_piv: f64 = 0.0;
        let mut min_piv = f64::INFINITY;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = self.ab[col + kv].abs();
            for i in 1..=km {
                let a = self.ab[col + kv + i].abs();
                if a > best {
                    best = a;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(SchroError::SingularJacobian { condition: f64::INFINITY });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = (kv + j - c) + c * ldab;
                    let b = (kv + j + jp - c) + c * ldab;
                    self.ab.swap(a, b);
                }
            }
            let piv = self.ab[col + kv];
            max_piv = max_piv.max(piv.abs());
            min_piv = min_piv.min(piv.abs());
            for i in 1..=km {
                self.ab[col + kv + i] /= piv;
            }
            for c in (j + 1)..=ju {
                let ujc = self.ab[(kv + j - c) + c * ldab];
                if ujc == 0.0 {
                    continue;
                }
                for i in 1..=km {
                    let l = self.ab[col + kv + i];
                    self.ab[(kv + j + i - c) + c * ldab] -= l * ujc;
                }
            }
        }
        Ok(BandLu { m: self, ipiv, pivot_ratio: max_piv / min_piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
    pivot_ratio: f64,
}

impl BandLu {
    /// Ratio of largest to smallest pivot magnitude, a cheap condition proxy.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        let kv = m.kl + m.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = m.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for i in 1..=km {
                    b[j + i] -= m.ab[(kv + i) + j * m.ldab] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= m.ab[kv + j * m.ldab];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= m.ab[(kv + i - j) + j * m.ldab] * bj;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, x)| d * x).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// Number of negative eigenvalues of `self − shift·diag(weight)`
    /// (Sylvester inertia of the LDLᵀ pivots).
    pub fn count_below(&self, shift: f64, weight: &[f64]) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            let d = self.diag[i] - shift * weight[i];
            q = if i == 0 { d } else { d - e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + e2.sqrt() + f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Band LU of `self − shift·diag(weight)`.
    pub fn shifted_lu(&self, shift: f64, weight: &[f64]) -> Result<BandLu> {
        let n = self.len();
        let mut m = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            m.add(i, i, self.diag[i] - shift * weight[i]);
            if i + 1 < n {
                m.add(i, i + 1, self.off[i]);
                m.add(i + 1, i, self.off[i]);
            }
        }
        m.factor()
    }
}

/// Eigenvalues `index_lo..index_hi` (0-based, ascending) of the pencil
/// `(a, diag(weight))` by Sturm bisection. `weight` must be non-negative
/// and `a` positive on the null space of the weight.
pub fn pencil_eigenvalues(a: &SymTridiag, weight: &[f64], index_lo: usize, index_hi: usize, tol: f64) -> Vec<f64> {
    if index_hi <= index_lo {
        return Vec::new();
    }
    let mut lo = -1.0;
    while a.count_below(lo, weight) > index_lo {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while a.count_below(hi, weight) < index_hi {
        hi *= 2.0;
    }
    let mut out = Vec::with_capacity(index_hi - index_lo);
    let mut left = lo;
    for k in index_lo..index_hi {
        // smallest x with count_below(x) > k
        let (mut l, mut r) = (left, hi);
        while r - l > tol.max(4.0 * f64::EPSILON * r.abs().max(l.abs())) {
            let mid = 0.5 * (l + r);
            if a.count_below(mid, weight) > k {
                r = mid;
            } else {
                l = mid;
            }
        }
        let lam = 0.5 * (l + r);
        out.push(lam);
        left = l;
    }
    out
}

/// Eigenvector of the pencil `(a, diag(weight))` for an accurate eigenvalue
/// estimate `lambda`, by inverse iteration. Returned vector is normalized
/// so that `Σ weight·x² = 1` with a positive first nonzero entry.
pub fn inverse_iteration(a: &SymTridiag, weight: &[f64], lambda: f64, steps: usize) -> Result<Vec<f64>> {
    let n = a.len();
    let scale = lambda.abs().max(1.0);
    let shift = lambda + 1e-11 * scale;
    let lu = a.shifted_lu(shift, weight)?;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i % 7) as f64)).collect();
    for _ in 0..steps.max(1) {
        let mut rhs: Vec<f64> = x.iter().zip(weight).map(|(x, w)| x * w).collect();
        if rhs.iter().all(|v| *v == 0.0) {
            rhs.clone_from(&x);
        }
        lu.solve_in_place(&mut rhs);
        let nrm = weighted_norm(&rhs, weight);
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(SchroError::Numerical("inverse iteration collapsed".into()));
        }
        x = rhs.into_iter().map(|v| v / nrm).collect();
    }
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-300) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(x)
}

fn weighted_norm(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_lu_solves_pentadiagonal_with_pivoting() {
        let n = 9;
        let mut m = BandMatrix::zeros(n, 2, 2);
        for i in 0..n {
            // zero diagonal forces pivoting
            if i + 1 < n {
                m.add(i, i + 1, 1.0 + i as f64);
                m.add(i + 1, i, 2.0 - 0.3 * i as f64);
            }
            if i + 2 < n {
                m.add(i, i + 2, 0.5);
                m.add(i + 2, i, -0.7);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.1).collect();
        let b = m.matvec(&x);
        let lu = m.factor().unwrap();
        let y = lu.solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // 1D Dirichlet Laplacian, eigenvalues 2 - 2cos(kπ/(n+1))
        let n = 20;
        let a = SymTridiag { diag: vec![2.0; n], off: vec![-1.0; n - 1] };
        let w = vec![1.0; n];
        let ev = pencil_eigenvalues(&a, &w, 0, 5, 1e-13);
        for (k, lam) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((lam - exact).abs() < 1e-11);
        }
        let x = inverse_iteration(&a, &w, ev[0], 3).unwrap();
        let ax = a.matvec(&x);
        let res: f64 = ax.iter().zip(&x).map(|(p, q)| (p - ev[0] * q).powi(2)).sum::<f64>();
        assert!(res.sqrt() < 1e-9);
    }

    #[test]
    fn singular_matrix_reports_error() {
        let m = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(m.factor(), Err(SchroError::SingularJacobian { .. })));
    }
}
