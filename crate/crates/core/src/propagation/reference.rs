use num_complex::Complex64;

use super::ControlledHamiltonian;
use crate::controls::{check_params, ControlAnsatz};
use crate::densemath::ComplexMatrix;
use crate::{GoatError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPONENT: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReferenceStats {
    pub steps: usize,
    pub rejected_steps: usize,
    pub hamiltonian_evaluations: usize,
}

/// `U(T)` from an adaptive Dormand–Prince 5(4) integration of
/// `dU/dt = -i H(t) U`, restarted at every piece boundary.
pub fn reference_propagate(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    duration: f64,
    tolerance: f64,
) -> Result<ComplexMatrix> {
    reference_propagate_with_stats(ham, ansatz, params, duration, tolerance).map(|(u, _)| u)
}

pub fn reference_propagate_with_stats(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    duration: f64,
    tolerance: f64,
) -> Result<(ComplexMatrix, ReferenceStats)> {
    ham.check_ansatz(ansatz)?;
    check_params(ansatz, params)?;
    if !(1e-15..1.0).contains(&tolerance) {
        return Err(GoatError::InvalidArgument(format!(
            "reference tolerance must be in [1e-15, 1), got {tolerance}"
        )));
    }
    let horizon = ansatz.duration();
    if !(duration > 0.0) || duration > horizon * (1.0 + 1e-14) {
        return Err(GoatError::InvalidArgument(format!(
            "duration {duration} must be in (0, {horizon}]"
        )));
    }
    let duration = duration.min(horizon);

    let dim = ham.dim();
    let n = dim * dim;
    let rtol = tolerance;
    let atol = tolerance;
    let min_step = 1e-14 * duration;

    let mut y = ComplexMatrix::identity(dim).as_slice().to_vec();
    let mut compensation = vec![Complex64::new(0.0, 0.0); n];
    let mut stats = ReferenceStats::default();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];

    let rhs = |piece: usize, t: f64, y: &[Complex64], out: &mut [Complex64], stats: &mut ReferenceStats| {
        let h = ham.on_piece(ansatz, params, piece, t);
        stats.hamiltonian_evaluations += 1;
        minus_i_product(&h, y, out, dim);
    };

    let mut h_step: Option<f64> = None;
    for (piece, interval) in ansatz.pieces().into_iter().enumerate() {
        if interval.start >= duration {
            break;
        }
        let seg_end = interval.end.min(duration);
        let mut t = interval.start;
        let mut fac_old: f64 = 1e-4;
        rhs(piece, t, &y, &mut k[0], &mut stats);
        let mut h = h_step.unwrap_or_else(|| {
            let norm = ham.on_piece(ansatz, params, piece, t).frobenius_norm().max(1e-300);
            (0.1 * rtol.powf(0.2) / norm).min(seg_end - t)
        });

        while t < seg_end {
            let remaining = seg_end - t;
            let lands = h >= remaining - 1e-12 * duration;
            let dt = if lands { remaining } else { h };

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, a) in A[s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += k[j][i] * *a;
                        }
                    }
                    stage[i] = y[i] + acc * dt;
                }
                let ts = if s == 6 { t + dt } else { t + C[s] * dt };
                rhs(piece, ts, &stage, &mut k[s], &mut stats);
                if s == 6 {
                    // FSAL: k[6] doubles as the first stage of the next step.
                    y_new.copy_from_slice(&stage);
                }
            }

            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (s, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += k[s][i] * *w;
                    }
                }
                e *= dt;
                let sc_re = atol + rtol * y[i].re.abs().max(y_new[i].re.abs());
                let sc_im = atol + rtol * y[i].im.abs().max(y_new[i].im.abs());
                err_sq += (e.re / sc_re).powi(2) + (e.im / sc_im).powi(2);
            }
            let err = (err_sq / (2 * n) as f64).sqrt();

            let fac11 = err.powf(EXPONENT);
            if err <= 1.0 {
                // Kahan-compensated update of y.
                for i in 0..n {
                    let delta = (y_new[i] - y[i]) - compensation[i];
                    let sum = y[i] + delta;
                    compensation[i] = (sum - y[i]) - delta;
                    y[i] = sum;
                }
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                stats.steps += 1;
                t = if lands { seg_end } else { t + dt };
                let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                fac_old = err.max(1e-4);
                let proposal = dt / fac;
                h = if lands && dt < h { h.max(proposal) } else { proposal };
            } else {
                stats.rejected_steps += 1;
                h = dt / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                if h < min_step {
                    return Err(GoatError::NonConvergence { t, residual: err });
                }
            }
        }
        h_step = Some(h);
    }

    let u = ComplexMatrix::from_vec(dim, y)?;
    Ok((u, stats))
}

fn minus_i_product(h: &ComplexMatrix, y: &[Complex64], out: &mut [Complex64], dim: usize) {
    let hs = h.as_slice();
    for i in 0..dim {
        let row = &mut out[i * dim..(i + 1) * dim];
        row.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for l in 0..dim {
            let hil = hs[i * dim + l];
            if hil == Complex64::new(0.0, 0.0) {
                continue;
            }
            let s = Complex64::new(hil.im, -hil.re);
            for (o, &yv) in row.iter_mut().zip(&y[l * dim..(l + 1) * dim]) {
                *o += s * yv;
            }
        }
    }
}
