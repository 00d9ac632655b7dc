use num_complex::Complex64;

use super::ComplexMatrix;

const MAX_TERMS: usize = 40;

/// Matrix exponential by scaling and squaring around a truncated Taylor core.
///
/// The squaring count brings `||A||_F / 2^s` to at most 0.5; the Taylor sum
/// then stops once a term drops below `1e-18` relative to the running sum.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim();
    let norm = a.frobenius_norm();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil().max(0.0) as u32;
    }
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    let mut next = ComplexMatrix::zeros(n);
    for k in 1..=MAX_TERMS {
        next.fill_zero();
        next.gemm_acc(Complex64::new(1.0 / k as f64, 0.0), &term, &scaled);
        std::mem::swap(&mut term, &mut next);
        sum.axpy_real(1.0, &term);
        if term.frobenius_norm() <= 1e-18 * sum.frobenius_norm() {
            break;
        }
    }

    for _ in 0..squarings {
        let mut sq = ComplexMatrix::zeros(n);
        sq.gemm_acc(Complex64::new(1.0, 0.0), &sum, &sum);
        sum = sq;
    }
    sum
}
