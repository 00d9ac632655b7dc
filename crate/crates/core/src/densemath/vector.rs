use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{GoatError, Result};

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(GoatError::InvalidArgument("vector dimension must be at least 1".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GoatError::NonFinite("vector entries"));
        }
        Ok(Self { data })
    }

    pub(crate) fn from_vec_unchecked(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim];
        data[index] = Complex64::new(1.0, 0.0);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(GoatError::InvalidArgument("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            data: self.data.iter().map(|z| z / n).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(GoatError::DimensionMismatch {
                context: "vector sum",
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }
}
