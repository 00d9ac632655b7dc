//! Seeded random ensembles.
//!
//! Every generator is a pure function of `(dim, seed)`: the seed initialises a
//! `ChaCha8Rng` through `SeedableRng::seed_from_u64`, and normal deviates come
//! from `rand_distr::StandardNormal`. Draw order is documented per function so
//! another implementation using the same stream reproduces the same values.

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, ComplexVector, ZERO};

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn complex_normal(rng: &mut Rng) -> Complex64 {
    let re = normal(rng);
    let im = normal(rng);
    Complex64::new(re, im)
}

/// GUE-convention Hermitian matrix: real `N(0,1)` diagonal, off-diagonals with
/// independent `N(0,1)` real and imaginary parts. Upper triangle is drawn row by
/// row, diagonal first in each row.
pub fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    random_hermitian_with(dim, &mut rng_from_seed(seed))
}

pub fn random_hermitian_with(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        m.set(i, i, Complex64::new(normal(rng), 0.0));
        for j in i + 1..dim {
            let z = complex_normal(rng);
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    m
}

/// Haar-distributed unitary: Gram-Schmidt on the columns of a complex Gaussian
/// matrix (entries drawn row-major). Orthonormalisation leaves a positive real
/// diagonal in the implied triangular factor, which fixes the phase freedom.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    random_unitary_with(dim, &mut rng_from_seed(seed))
}

pub fn random_unitary_with(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = vec![vec![ZERO; dim]; dim];
    for i in 0..dim {
        for col in cols.iter_mut() {
            col[i] = complex_normal(rng);
        }
    }
    for j in 0..dim {
        // two passes of modified Gram-Schmidt keep the defect near roundoff
        for _ in 0..2 {
            for p in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[p];
                let v = &mut rest[0];
                let proj: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    let mut u = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u.set(i, j, z);
        }
    }
    u
}

/// Unit vector with a complex-Gaussian direction.
pub fn random_state(dim: usize, seed: u64) -> ComplexVector {
    random_state_with(dim, &mut rng_from_seed(seed))
}

pub fn random_state_with(dim: usize, rng: &mut Rng) -> ComplexVector {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return ComplexVector::from_vec_unchecked(v.into_iter().map(|z| z / norm).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_is_exact_and_deterministic() {
        let h = random_hermitian(5, 9);
        assert_eq!(h.hermiticity_defect(), 0.0);
        assert_eq!(h, random_hermitian(5, 9));
        assert_ne!(h, random_hermitian(5, 10));
    }

    #[test]
    fn hermitian_diagonal_mean_is_zero() {
        let mut rng = rng_from_seed(1);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let h = random_hermitian_with(2, &mut rng);
            acc += h.get(0, 0).re + h.get(1, 1).re;
        }
        assert!((acc / (2 * n) as f64).abs() < 0.05);
    }

    #[test]
    fn unitary_is_unitary_and_deterministic() {
        for dim in [1, 2, 4, 8] {
            let u = random_unitary(dim, 4);
            assert!(u.unitarity_defect() <= 1e-12, "dim {dim}");
            assert_eq!(u, random_unitary(dim, 4));
        }
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = rng_from_seed(2);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| random_unitary_with(4, &mut rng).get(0, 0).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn state_norm_and_overlap_moment() {
        let psi = random_state(6, 3);
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert_eq!(psi, random_state(6, 3));

        let mut rng = rng_from_seed(5);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| {
                let a = random_state_with(2, &mut rng);
                let b = random_state_with(2, &mut rng);
                a.inner(&b).norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }
}
