//! Dense symmetric linear algebra for CMA-ES.

use crate::error::{Error, Result};
use crate::model::RngStream;

/// Eigenvalues below this are clamped before taking square roots.
pub const EIGEN_FLOOR: f64 = 1e-20;

const MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    /// Builds from row-major entries. The input need not be symmetric; call
    /// [`SymMatrix::enforce_symmetry`] before relying on the invariant.
    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
    }

    /// `(C + Cᵀ) / 2`.
    pub fn enforce_symmetry(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| ((i + 1)..n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.entries[i * n..(i + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// `C = B · diag(d²) · Bᵀ` with orthonormal columns in `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomp {
    /// Row-major `D × D`; column `k` is the `k`-th eigenvector.
    basis: Vec<f64>,
    /// Square roots of the (clamped) eigenvalues.
    scales: Vec<f64>,
    /// Raw eigenvalues before clamping.
    eigenvalues: Vec<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn basis(&self, row: usize, col: usize) -> f64 {
        self.basis[row * self.dim() + col]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.scales.iter().cloned().fold(0.0, f64::max);
        let min = self.scales.iter().cloned().fold(f64::INFINITY, f64::min);
        (max / min).powi(2)
    }

    /// `B · (d ⊙ z)`.
    pub fn transform(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let scaled: Vec<f64> = z.iter().zip(&self.scales).map(|(a, d)| a * d).collect();
        (0..n)
            .map(|i| {
                let row = &self.basis[i * n..(i + 1) * n];
                row.iter().zip(&scaled).map(|(b, s)| b * s).sum()
            })
            .collect()
    }

    /// `C^{-1/2} · y = B · diag(1/d) · Bᵀ · y`.
    pub fn inv_sqrt_mul(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut proj = vec![0.0; n];
        for (k, p) in proj.iter_mut().enumerate() {
            let mut s = 0.0;
            for (i, yi) in y.iter().enumerate() {
                s += self.basis[i * n + k] * yi;
            }
            *p = s / self.scales[k];
        }
        (0..n)
            .map(|i| {
                let row = &self.basis[i * n..(i + 1) * n];
                row.iter().zip(&proj).map(|(b, p)| b * p).sum()
            })
            .collect()
    }

    /// `B · diag(d²) · Bᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.basis(i, k) * self.scales[k] * self.scales[k] * self.basis(j, k);
                }
                m.set(i, j, s);
            }
        }
        m
    }
}

/// Symmetric eigendecomposition by the cyclic Jacobi rotation method.
pub fn sym_eigen(c: &SymMatrix) -> Result<EigenDecomp> {
    if c.entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite covariance entry".into()));
    }
    let n = c.dim;
    let mut a = c.entries.clone();
    let mut v = SymMatrix::identity(n).entries;

    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].abs())
            .sum();
        if off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                // Off-diagonal entries below the diagonal's round-off are dropped.
                let g = 100.0 * apq.abs();
                let (app, aqq) = (a[p * n + p].abs(), a[q * n + q].abs());
                if sweep > 3 && app + g == app && aqq + g == aqq {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cs * akp - sn * akq;
                    a[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cs * apk - sn * aqk;
                    a[q * n + k] = sn * apk + cs * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    if eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numerical("eigenvalue iteration diverged".into()));
    }
    let scales = eigenvalues.iter().map(|e| e.max(EIGEN_FLOOR).sqrt()).collect();
    Ok(EigenDecomp {
        basis: v,
        scales,
        eigenvalues,
    })
}

/// Draws `m + σ · B · (d ⊙ z)` with `z ~ N(0, I)`.
pub fn mvn_sample(mean: &[f64], sigma: f64, eigen: &EigenDecomp, rng: &mut RngStream) -> Vec<f64> {
    let z: Vec<f64> = (0..mean.len()).map(|_| rng.standard_normal()).collect();
    let y = eigen.transform(&z);
    mean.iter().zip(&y).map(|(m, yi)| m + sigma * yi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, rng: &mut RngStream) -> SymMatrix {
        // A·Aᵀ + n·I
        let a: Vec<f64> = (0..n * n).map(|_| rng.standard_normal()).collect();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
                m.set(i, j, s + if i == j { n as f64 } else { 0.0 });
            }
        }
        m
    }

    fn rel_reconstruction_error(c: &SymMatrix, e: &EigenDecomp) -> f64 {
        let r = e.reconstruct();
        let diff: f64 = r
            .entries()
            .iter()
            .zip(c.entries())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / c.frobenius_norm()
    }

    fn orthogonality_error(e: &EigenDecomp) -> f64 {
        let n = e.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| e.basis(k, i) * e.basis(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_decomposes_trivially() {
        let e = sym_eigen(&SymMatrix::identity(5)).unwrap();
        assert!(e.scales().iter().all(|d| (d - 1.0).abs() < 1e-15));
        assert!(orthogonality_error(&e) < 1e-15);
    }

    #[test]
    fn diagonal_matrix() {
        let e = sym_eigen(&SymMatrix::diagonal(&[4.0, 1.0])).unwrap();
        assert_eq!(e.scales(), &[2.0, 1.0]);
        assert_eq!(e.basis(0, 0).abs(), 1.0);
        assert_eq!(e.basis(1, 1).abs(), 1.0);
        assert_eq!(e.basis(0, 1), 0.0);
    }

    #[test]
    fn two_by_two_hand_case() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let c = SymMatrix::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = sym_eigen(&c).unwrap();
        let mut ev = e.eigenvalues().to_vec();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_reconstruction() {
        let mut rng = RngStream::new(11);
        for n in [1, 2, 3, 7, 20] {
            let c = random_spd(n, &mut rng);
            let e = sym_eigen(&c).unwrap();
            assert!(rel_reconstruction_error(&c, &e) < 1e-10, "n = {n}");
            assert!(orthogonality_error(&e) < 1e-10);
            assert!(e.scales().iter().all(|d| *d > 0.0));
        }
    }

    #[test]
    fn negative_eigenvalues_are_clamped() {
        let c = SymMatrix::diagonal(&[1.0, -1e-3]);
        let e = sym_eigen(&c).unwrap();
        assert_eq!(e.scales()[1], EIGEN_FLOOR.sqrt());
        assert_eq!(e.eigenvalues()[1], -1e-3);
    }

    #[test]
    fn non_finite_input_is_numerical_error() {
        let c = SymMatrix::diagonal(&[1.0, f64::NAN]);
        assert!(matches!(sym_eigen(&c), Err(Error::Numerical(_))));
    }

    #[test]
    fn inverse_sqrt_undoes_transform() {
        let mut rng = RngStream::new(3);
        let c = random_spd(6, &mut rng);
        let e = sym_eigen(&c).unwrap();
        let z: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
        let y = e.transform(&z);
        let back = e.inv_sqrt_mul(&y);
        // C^{-1/2} B (d ⊙ z) = B z
        let bz: Vec<f64> = (0..6)
            .map(|i| (0..6).map(|k| e.basis(i, k) * z[k]).sum())
            .collect();
        for (a, b) in back.iter().zip(&bz) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetrize_hand_case() {
        let c = SymMatrix::from_row_major(2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        let s = c.enforce_symmetry();
        assert_eq!(s.entries(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.enforce_symmetry(), s);
        let id = SymMatrix::identity(3);
        assert_eq!(id.enforce_symmetry(), id);
    }

    #[test]
    fn zero_sigma_sample_is_the_mean() {
        let e = sym_eigen(&SymMatrix::identity(4)).unwrap();
        let mut rng = RngStream::new(5);
        let m = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(mvn_sample(&m, 0.0, &e, &mut rng), m.to_vec());
    }

    #[test]
    fn mvn_sample_is_reproducible() {
        let e = sym_eigen(&SymMatrix::diagonal(&[1.0, 9.0, 0.25])).unwrap();
        let mut a = RngStream::new(99);
        let mut b = RngStream::new(99);
        for _ in 0..10 {
            let x = mvn_sample(&[0.0; 3], 0.7, &e, &mut a);
            let y = mvn_sample(&[0.0; 3], 0.7, &e, &mut b);
            assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
