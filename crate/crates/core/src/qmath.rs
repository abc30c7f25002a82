//! Dense complex matrices for one- and two-qubit operators.
//!
//! Everything here is fixed-size: a [`ComplexMatrix`] is either 2×2 or 4×4 and
//! stores its entries inline, so the hot loops of the optimizer never touch the
//! allocator. Two-qubit operators use the basis order `|00⟩, |01⟩, |10⟩, |11⟩`
//! with Alice as the left (most significant) factor.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Max deviation from `A = A†` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` are treated as zero by [`psd_sqrt`].
pub const PSD_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: [C64; 16],
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [ZERO; 16] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries; the entry count fixes the dimension.
    pub fn from_entries(entries: &[C64]) -> Result<Self> {
        let dim = match entries.len() {
            4 => 2,
            16 => 4,
            n => return Err(Error::UnsupportedDimension(n)),
        };
        let mut m = Self::zeros(dim)?;
        m.data[..entries.len()].copy_from_slice(entries);
        Ok(m)
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_entries(&c)
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = C64::new(d, 0.0);
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        debug_assert!(row < self.dim && col < self.dim);
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.data[row * self.dim + col] = value;
    }

    /// Row-major view of the entries.
    pub fn entries(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i * self.dim + j] = self.get(j, i).conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i * self.dim + j] = self.get(j, i);
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z = z.conj());
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z *= factor);
        out
    }

    /// `self · x · self†`
    pub fn sandwich(&self, x: &ComplexMatrix) -> Self {
        &(self * x) * &self.adjoint()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Sum of `|a_ij|²`; for a density matrix this is its purity `Tr ρ²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let mut out = *self;
        for (z, w) in out.data.iter_mut().zip(adj.data.iter()) {
            *z = (*z + *w) * 0.5;
        }
        out
    }
}

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = ComplexMatrix { dim: n, data: [ZERO; 16] };
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        let mut out = *self;
        out.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        let mut out = *self;
        out.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a -= b);
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b` of two single-qubit operators (Alice on the left).
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    for m in [a, b] {
        if m.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, actual: m.dim });
        }
    }
    let mut out = ComplexMatrix::zeros(4)?;
    for ia in 0..2 {
        for ja in 0..2 {
            let x = a.get(ia, ja);
            for ib in 0..2 {
                for jb in 0..2 {
                    out.set(ia * 2 + ib, ja * 2 + jb, x * b.get(ib, jb));
                }
            }
        }
    }
    Ok(out)
}

/// Transposes Bob's index of a two-qubit operator:
/// `((i_a, i_b), (j_a, j_b)) ↦ ((i_a, j_b), (j_a, i_b))`.
pub fn partial_transpose_b(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.dim != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.dim });
    }
    let mut out = ComplexMatrix::zeros(4)?;
    for ia in 0..2 {
        for ib in 0..2 {
            for ja in 0..2 {
                for jb in 0..2 {
                    out.set(ia * 2 + jb, ja * 2 + ib, rho.get(ia * 2 + ib, ja * 2 + jb));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenSystem {
    /// `V diag(f(λ)) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.dim();
        let mut out = ComplexMatrix { dim: n, data: [ZERO; 16] };
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v.get(i, k) * w;
                for j in 0..n {
                    out.data[i * n + j] += vik * v.get(j, k).conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigenSystem> {
    let deviation = a.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = a.dim;
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n)?;
    let scale = m.frobenius_sq().sqrt();

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // G = diag(1, e^{-iφ}) on (p, q) followed by a real rotation.
                let mut g = ComplexMatrix::identity(n)?;
                let conj_phase = phase.conj();
                g.set(p, p, C64::new(c, 0.0));
                g.set(p, q, C64::new(s, 0.0));
                g.set(q, p, conj_phase * (-s));
                g.set(q, q, conj_phase * c);

                m = &(&g.adjoint() * &m) * &g;
                v = &v * &g;
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i).re, i)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut vectors = ComplexMatrix::zeros(n)?;
    for (k, &(_, src)) in pairs.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, k, v.get(i, src));
        }
    }
    Ok(HermitianEigenSystem {
        eigenvalues: pairs.into_iter().map(|p| p.0).collect(),
        eigenvectors: vectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(a)?.eigenvalues)
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if is_diagonal(a) {
        let mut out = ComplexMatrix::zeros(a.dim)?;
        for i in 0..a.dim {
            let d = a.get(i, i);
            if d.im.abs() > HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation: d.im.abs() });
            }
            out.set(i, i, C64::new(clamped_sqrt(d.re)?, 0.0));
        }
        return Ok(out);
    }
    let eig = hermitian_eigen(a)?;
    for &lambda in &eig.eigenvalues {
        clamped_sqrt(lambda)?;
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()))
}

fn clamped_sqrt(x: f64) -> Result<f64> {
    if x < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: x });
    }
    Ok(x.max(0.0).sqrt())
}

fn is_diagonal(a: &ComplexMatrix) -> bool {
    let n = a.dim;
    (0..n).all(|i| (0..n).all(|j| i == j || a.get(i, j) == ZERO))
}
