use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::vector::ComplexVector;
use super::ZERO;
use crate::{GoatError, Result};

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-square or
    /// non-finite input.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(GoatError::InvalidArgument("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(GoatError::DimensionMismatch {
                context: "matrix entries",
                left: data.len(),
                right: dim * dim,
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GoatError::NonFinite("matrix entries"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(GoatError::DimensionMismatch {
                    context: "matrix row",
                    left: row.len(),
                    right: dim,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(dim, data)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = Complex64::new(d, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_dim(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.dim != other.dim {
            return Err(GoatError::DimensionMismatch {
                context,
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Checked product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other, "matmul")?;
        let mut out = Self::zeros(self.dim);
        out.gemm_acc(Complex64::new(1.0, 0.0), self, other);
        Ok(out)
    }

    /// `self += alpha * a * b`. Dimensions are the caller's responsibility.
    pub fn gemm_acc(&mut self, alpha: Complex64, a: &Self, b: &Self) {
        let n = self.dim;
        debug_assert!(a.dim == n && b.dim == n);
        for i in 0..n {
            let out_row = &mut self.data[i * n..(i + 1) * n];
            let a_row = &a.data[i * n..(i + 1) * n];
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == ZERO {
                    continue;
                }
                let s = alpha * aik;
                let b_row = &b.data[k * n..(k + 1) * n];
                for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                    *o += s * bkj;
                }
            }
        }
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Tr(self^dagger * other)` without forming the product.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `self += s * other` for real `s`.
    pub fn axpy_real(&mut self, s: f64, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|z| *z = ZERO);
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let d = n * m;
        let mut out = Self::zeros(d);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * d + j * m + l] = a * other.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.dim() != self.dim {
            return Err(GoatError::DimensionMismatch {
                context: "matrix-vector product",
                left: self.dim,
                right: v.dim(),
            });
        }
        let n = self.dim;
        let x = v.as_slice();
        let out = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(ComplexVector::from_vec_unchecked(out))
    }

    /// `||self - self^dagger||_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] - self.data[j * n + i].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `||self^dagger self - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.dagger() * self;
        (&prod - &Self::identity(self.dim)).frobenius_norm()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        let mut out = self.clone();
        out.axpy_real(1.0, rhs);
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        let mut out = self.clone();
        out.axpy_real(-1.0, rhs);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::pauli;
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_involution() {
        let x = pauli::x();
        assert_eq!(&ComplexMatrix::identity(2) * &x, x);
        assert_eq!(&x * &x, ComplexMatrix::identity(2));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let err = ComplexMatrix::identity(2)
            .matmul(&ComplexMatrix::identity(3))
            .unwrap_err();
        assert_eq!(
            err,
            GoatError::DimensionMismatch {
                context: "matmul",
                left: 2,
                right: 3
            }
        );
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let a = super::super::random_hermitian(4, 1);
        let b = super::super::random_unitary(4, 2);
        let prod = &a * &b;
        for i in 0..4 {
            for j in 0..4 {
                let mut s = ZERO;
                for k in 0..4 {
                    s += a.get(i, k) * b.get(k, j);
                }
                assert!((prod.get(i, j) - s).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn dagger_cases() {
        assert_eq!(ComplexMatrix::identity(2).dagger(), ComplexMatrix::identity(2));
        assert_eq!(pauli::y().dagger(), pauli::y());
        let m = ComplexMatrix::from_rows(&[vec![ZERO, c(0.0, 1.0)], vec![ZERO, ZERO]]).unwrap();
        let expected =
            ComplexMatrix::from_rows(&[vec![ZERO, ZERO], vec![c(0.0, -1.0), ZERO]]).unwrap();
        assert_eq!(m.dagger(), expected);
    }

    #[test]
    fn trace_cases() {
        assert_eq!(ComplexMatrix::identity(4).trace(), c(4.0, 0.0));
        assert_eq!(pauli::z().trace(), ZERO);
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 1.0), ZERO], vec![ZERO, c(2.0, -1.0)]])
            .unwrap();
        assert_eq!(m.trace(), c(3.0, 0.0));
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(ComplexMatrix::zeros(3).frobenius_norm(), 0.0);
        assert_eq!(ComplexMatrix::identity(4).frobenius_norm(), 2.0);
        assert!((pauli::x().frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let err = ComplexMatrix::from_vec(1, vec![c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, GoatError::NonFinite("matrix entries"));
    }

    #[test]
    fn kron_of_paulis() {
        let zz = pauli::z().kron(&pauli::z());
        assert_eq!(zz, ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }
}
