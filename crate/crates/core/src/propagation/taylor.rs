use num_complex::Complex64;

use super::{ControlledHamiltonian, PropagationResult, PropagatorSettings};
use crate::controls::{check_params, ControlAnsatz, Interval};
use crate::densemath::ComplexMatrix;
use crate::{GoatError, Result};

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Time-derivative stacks at one expansion point. Building it is one
/// Hamiltonian evaluation; trial steps of any length reuse it.
///
/// Every `d^j H/dt^j` is a real combination of the fixed operators (drift and
/// controls), and every `d^j/dt^j dH/d(alpha_s)` touches only the operators
/// of slot `s`. Products are taken either against the assembled derivative or
/// operator by operator, whichever costs fewer multiplications.
struct Expansion<'a> {
    ops: Vec<&'a ComplexMatrix>,
    op_nnz: Vec<usize>,
    /// `[op][j]` coefficient of `ops[op]` in `d^j H/dt^j`.
    h_coeff: Vec<Vec<f64>>,
    /// Assembled `d^j H/dt^j`; `None` where identically zero.
    h: Vec<Option<ComplexMatrix>>,
    h_nnz: Vec<usize>,
    /// Per gradient slot: `(op, coefficients over j)` for each touched operator.
    slot_coeff: Vec<Vec<(usize, Vec<f64>)>>,
    order: usize,
    dim: usize,
}

struct StepOutcome {
    propagator: ComplexMatrix,
    gradients: Vec<ComplexMatrix>,
}

fn nnz(m: &ComplexMatrix) -> usize {
    m.as_slice().iter().filter(|z| **z != crate::densemath::ZERO).count()
}

impl<'a> Expansion<'a> {
    #[allow(clippy::too_many_arguments)]
    fn build(
        ham: &'a ControlledHamiltonian,
        ansatz: &dyn ControlAnsatz,
        params: &[f64],
        piece: usize,
        t: f64,
        order: usize,
        slots: &[usize],
    ) -> Self {
        let dim = ham.dim();
        let mut ops: Vec<&ComplexMatrix> = vec![ham.drift()];
        ops.extend(ham.controls());
        let op_nnz: Vec<usize> = ops.iter().map(|m| nnz(m)).collect();

        let mut h_coeff = vec![vec![0.0; order]; ops.len()];
        for j in 0..order {
            h_coeff[0][j] = ansatz.drift_time_derivative(params, piece, t, j);
            for k in 0..ham.n_controls() {
                h_coeff[k + 1][j] = ansatz.piece_time_derivative(params, piece, k, t, j);
            }
        }
        let h: Vec<Option<ComplexMatrix>> = (0..order)
            .map(|j| {
                let mut m = ComplexMatrix::zeros(dim);
                let mut zero = true;
                for (op, coeff) in ops.iter().zip(&h_coeff) {
                    if coeff[j] != 0.0 {
                        m.axpy_real(coeff[j], op);
                        zero = false;
                    }
                }
                (!zero).then_some(m)
            })
            .collect();
        let h_nnz = h.iter().map(|m| m.as_ref().map_or(0, nnz)).collect();

        let layout = ansatz.layout();
        let slot_coeff = slots
            .iter()
            .map(|&s| {
                if !ansatz.slot_active_on_piece(s, piece) {
                    return Vec::new();
                }
                let mut touched = Vec::new();
                if ansatz.slot_touches_drift(s) {
                    let c: Vec<f64> = (0..order)
                        .map(|j| ansatz.drift_param_derivative(params, piece, t, s, j))
                        .collect();
                    touched.push((0, c));
                }
                let controls: Vec<usize> = match layout[s].control {
                    Some(k) => vec![k],
                    None => (0..ham.n_controls()).collect(),
                };
                for k in controls {
                    let c: Vec<f64> = (0..order)
                        .map(|j| ansatz.piece_param_derivative(params, piece, k, t, s, j))
                        .collect();
                    touched.push((k + 1, c));
                }
                touched.retain(|(_, c)| c.iter().any(|v| *v != 0.0));
                touched
            })
            .collect();

        Self {
            ops,
            op_nnz,
            h_coeff,
            h,
            h_nnz,
            slot_coeff,
            order,
            dim,
        }
    }

    /// `out += (-i/k) sum_{m<k} f_j H_j xs[m]` with `j = k-1-m`.
    fn accumulate_h(&self, out: &mut ComplexMatrix, k: usize, f: &[f64], xs: &[ComplexMatrix], products: &mut usize) {
        self.accumulate_h_from(out, k, f, xs, 0, products);
    }

    /// As [`Self::accumulate_h`], with `xs[m]` known to vanish for `m < first`.
    fn accumulate_h_from(
        &self,
        out: &mut ComplexMatrix,
        k: usize,
        f: &[f64],
        xs: &[ComplexMatrix],
        first: usize,
        products: &mut usize,
    ) {
        if first >= k {
            return;
        }
        let d = self.dim;
        let mut direct = 0;
        let mut used_ops = vec![false; self.ops.len()];
        for m in first..k {
            let j = k - 1 - m;
            direct += self.h_nnz[j] * d;
            for (u, c) in used_ops.iter_mut().zip(&self.h_coeff) {
                *u |= c[j] != 0.0;
            }
        }
        let by_op: usize = used_ops
            .iter()
            .zip(&self.op_nnz)
            .filter(|(u, _)| **u)
            .map(|(_, n)| n * d + (k - first) * d * d)
            .sum();
        if direct <= by_op {
            for m in first..k {
                let j = k - 1 - m;
                if let Some(hj) = &self.h[j] {
                    out.gemm_acc(MINUS_I * (f[j] / k as f64), hj, &xs[m]);
                    *products += 1;
                }
            }
        } else {
            for (op, coeff) in self.h_coeff.iter().enumerate() {
                if used_ops[op] {
                    self.accumulate_op(out, op, coeff, k, f, &xs[..k], first, products);
                }
            }
        }
    }

    /// `out += (-i/k) op sum_{m<k} f_j coeff[j] xs[m]`.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_op(
        &self,
        out: &mut ComplexMatrix,
        op: usize,
        coeff: &[f64],
        k: usize,
        f: &[f64],
        xs: &[ComplexMatrix],
        first: usize,
        products: &mut usize,
    ) {
        let mut combo = ComplexMatrix::zeros(self.dim);
        let mut any = false;
        for m in first..k {
            let j = k - 1 - m;
            let c = f[j] * coeff[j] / k as f64;
            if c != 0.0 {
                combo.axpy_real(c, &xs[m]);
                any = true;
            }
        }
        if any {
            out.gemm_acc(MINUS_I, self.ops[op], &combo);
            *products += 1;
        }
    }

    /// Advances `U` (and the gradients, when given) by `dt`.
    ///
    /// Works with the scaled terms `V_k = dt^k/k! d^k S/dt^k` of the step
    /// propagator `S` (started at the identity), for which the binomial
    /// recursion becomes `V_k = (-i/k) sum_m [dt^(j+1)/j! H_j] V_m` with
    /// `j = k-1-m`. Then `U_end = S U_0` and
    /// `dU_end = S dU_0 + (sum_j c_j R_(op,j)) U_0`, where `R_(op,j)` is the
    /// response of the step to the source `op` at derivative order `j`.
    /// On rejection returns the norm of the last kept term.
    fn step(
        &self,
        dt: f64,
        u0: &ComplexMatrix,
        g0: Option<&[ComplexMatrix]>,
        tolerance: f64,
        products: &mut usize,
    ) -> std::result::Result<StepOutcome, f64> {
        let k_max = self.order;
        let dim = self.dim;
        let mut f = Vec::with_capacity(k_max);
        let mut acc = dt;
        for j in 0..k_max {
            if j > 0 {
                acc *= dt / j as f64;
            }
            f.push(acc);
        }

        let mut v: Vec<ComplexMatrix> = Vec::with_capacity(k_max + 1);
        v.push(ComplexMatrix::identity(dim));
        for k in 1..=k_max {
            let mut term = ComplexMatrix::zeros(dim);
            self.accumulate_h(&mut term, k, &f, &v, products);
            v.push(term);
        }

        let mut last = ComplexMatrix::zeros(dim);
        last.gemm_acc(Complex64::new(1.0, 0.0), &v[k_max], u0);
        *products += 1;
        let residual = last.frobenius_norm();
        if residual > tolerance {
            return Err(residual);
        }

        let step = sum_reversed(&v, dim);
        let propagator = step.matmul(u0).expect("matching dimensions");
        *products += 1;
        let gradients = match g0 {
            None => Vec::new(),
            Some(g0) => {
                let responses = self.responses(&f, &v, products);
                g0.iter()
                    .zip(&self.slot_coeff)
                    .map(|(g_start, touched)| {
                        let mut out = ComplexMatrix::zeros(dim);
                        if g_start.as_slice().iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                            out.gemm_acc(Complex64::new(1.0, 0.0), &step, g_start);
                            *products += 1;
                        }
                        if !touched.is_empty() {
                            let mut source = ComplexMatrix::zeros(dim);
                            for (op, coeff) in touched {
                                for (j, c) in coeff.iter().enumerate() {
                                    if *c != 0.0 {
                                        let r = responses[*op][j].as_ref().expect("response computed");
                                        source.axpy_real(*c, r);
                                    }
                                }
                            }
                            out.gemm_acc(Complex64::new(1.0, 0.0), &source, u0);
                            *products += 1;
                        }
                        out
                    })
                    .collect()
            }
        };
        Ok(StepOutcome {
            propagator,
            gradients,
        })
    }

    /// Summed step responses `R_(op,j)` for every operator and order some
    /// slot actually drives.
    fn responses(&self, f: &[f64], v: &[ComplexMatrix], products: &mut usize) -> Vec<Vec<Option<ComplexMatrix>>> {
        let k_max = self.order;
        let dim = self.dim;
        let mut needed = vec![vec![false; k_max]; self.ops.len()];
        for touched in &self.slot_coeff {
            for (op, coeff) in touched {
                for (j, c) in coeff.iter().enumerate() {
                    needed[*op][j] |= *c != 0.0;
                }
            }
        }
        needed
            .iter()
            .enumerate()
            .map(|(op, orders)| {
                orders
                    .iter()
                    .enumerate()
                    .map(|(j0, &need)| {
                        if !need {
                            return None;
                        }
                        // R_k = 0 for k <= j0.
                        let mut w: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(dim); j0 + 1];
                        for k in j0 + 1..=k_max {
                            let mut term = ComplexMatrix::zeros(dim);
                            term.gemm_acc(MINUS_I * (f[j0] / k as f64), self.ops[op], &v[k - 1 - j0]);
                            *products += 1;
                            self.accumulate_h_from(&mut term, k, f, &w, j0 + 1, products);
                            w.push(term);
                        }
                        Some(sum_reversed(&w[j0 + 1..], dim))
                    })
                    .collect()
            })
            .collect()
    }
}

fn sum_reversed(terms: &[ComplexMatrix], dim: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dim);
    for t in terms.iter().rev() {
        out.axpy_real(1.0, t);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_common(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    u0: &ComplexMatrix,
    settings: &PropagatorSettings,
) -> Result<()> {
    settings.validate()?;
    ham.check_ansatz(ansatz)?;
    check_params(ansatz, params)?;
    if u0.dim() != ham.dim() {
        return Err(GoatError::DimensionMismatch {
            context: "initial propagator",
            left: u0.dim(),
            right: ham.dim(),
        });
    }
    if ansatz.max_order() + 1 < settings.taylor_order {
        return Err(GoatError::InvalidArgument(format!(
            "ansatz serves derivatives up to order {}, Taylor order {} needs {}",
            ansatz.max_order(),
            settings.taylor_order,
            settings.taylor_order - 1
        )));
    }
    Ok(())
}

/// Piece whose half-open interval `[start, end)` holds `t0`, checked to also
/// contain `t0 + dt`.
fn piece_for_step(ansatz: &dyn ControlAnsatz, t0: f64, dt: f64) -> Result<usize> {
    let pieces = ansatz.pieces();
    let span = ansatz.duration();
    if !(dt > 0.0) {
        return Err(GoatError::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    let idx = pieces
        .iter()
        .position(|p| p.start <= t0 && t0 < p.end)
        .ok_or(GoatError::TimeOutOfRange {
            t: t0,
            start: 0.0,
            end: span,
        })?;
    if t0 + dt > pieces[idx].end + 1e-12 * span {
        return Err(GoatError::InvalidArgument(format!(
            "step [{t0}, {}] crosses the piece boundary at {}",
            t0 + dt,
            pieces[idx].end
        )));
    }
    Ok(idx)
}

/// One Taylor step of `U` from `t0` to `t0 + dt` inside a single analytic piece.
pub fn taylor_step(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    t0: f64,
    dt: f64,
    u0: &ComplexMatrix,
    settings: &PropagatorSettings,
) -> Result<ComplexMatrix> {
    check_common(ham, ansatz, params, u0, settings)?;
    let piece = piece_for_step(ansatz, t0, dt)?;
    let exp = Expansion::build(ham, ansatz, params, piece, t0, settings.taylor_order, &[]);
    let tolerance = settings.step_tolerance * u0.frobenius_norm();
    exp.step(dt, u0, None, tolerance, &mut 0)
        .map(|o| o.propagator)
        .map_err(|residual| GoatError::StepTooLarge {
            residual,
            tolerance,
        })
}

/// One Taylor step advancing `U` and `dU/d(alpha_s)` for every trainable slot.
#[allow(clippy::too_many_arguments)]
pub fn taylor_step_with_gradient(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    t0: f64,
    dt: f64,
    u0: &ComplexMatrix,
    g0: &[ComplexMatrix],
    settings: &PropagatorSettings,
) -> Result<(ComplexMatrix, Vec<ComplexMatrix>)> {
    check_common(ham, ansatz, params, u0, settings)?;
    let slots = ansatz.trainable_slots();
    check_gradient_seed(g0, slots.len(), ham.dim())?;
    let piece = piece_for_step(ansatz, t0, dt)?;
    let exp = Expansion::build(ham, ansatz, params, piece, t0, settings.taylor_order, &slots);
    let tolerance = settings.step_tolerance * u0.frobenius_norm();
    exp.step(dt, u0, Some(g0), tolerance, &mut 0)
        .map(|o| (o.propagator, o.gradients))
        .map_err(|residual| GoatError::StepTooLarge {
            residual,
            tolerance,
        })
}

fn check_gradient_seed(g0: &[ComplexMatrix], slots: usize, dim: usize) -> Result<()> {
    if g0.len() != slots {
        return Err(GoatError::DimensionMismatch {
            context: "gradient stack vs trainable slots",
            left: g0.len(),
            right: slots,
        });
    }
    if let Some(g) = g0.iter().find(|g| g.dim() != dim) {
        return Err(GoatError::DimensionMismatch {
            context: "gradient matrix",
            left: g.dim(),
            right: dim,
        });
    }
    Ok(())
}

/// `U(T)` from `U(0) = I`, optionally with `dU(T)/d(alpha_s)` seeded at zero.
pub fn propagate(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    duration: f64,
    settings: &PropagatorSettings,
    with_gradient: bool,
) -> Result<PropagationResult> {
    let identity = ComplexMatrix::identity(ham.dim());
    propagate_from(
        ham,
        ansatz,
        params,
        0.0,
        duration,
        &identity,
        None,
        settings,
        with_gradient,
    )
}

/// Relay propagation over `[t_start, t_end]` from a given `U` (and gradient
/// stack; zeros when `None`).
#[allow(clippy::too_many_arguments)]
pub fn propagate_from(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    t_start: f64,
    t_end: f64,
    u_start: &ComplexMatrix,
    g_start: Option<&[ComplexMatrix]>,
    settings: &PropagatorSettings,
    with_gradient: bool,
) -> Result<PropagationResult> {
    check_common(ham, ansatz, params, u_start, settings)?;
    let horizon = ansatz.duration();
    if !(t_end > t_start) || t_start < 0.0 || t_end > horizon * (1.0 + 1e-14) {
        return Err(GoatError::InvalidArgument(format!(
            "propagation interval [{t_start}, {t_end}] must be non-empty and inside [0, {horizon}]"
        )));
    }
    let t_end = t_end.min(horizon);
    let dim = ham.dim();
    let slots = if with_gradient {
        ansatz.trainable_slots()
    } else {
        Vec::new()
    };
    let mut grads = match (with_gradient, g_start) {
        (false, _) => Vec::new(),
        (true, Some(g)) => {
            check_gradient_seed(g, slots.len(), dim)?;
            g.to_vec()
        }
        (true, None) => vec![ComplexMatrix::zeros(dim); slots.len()],
    };

    let span = t_end - t_start;
    let min_dt = 1e-12 * span;
    let order = settings.taylor_order;
    let predicted_x = (settings.step_tolerance * factorial(order)).powf(1.0 / order as f64);

    let mut u = u_start.clone();
    let mut steps = 0;
    let mut rejected = 0;
    let mut evaluations = 0;
    let mut products = 0;
    let mut proposal: Option<f64> = None;

    let pieces: Vec<(usize, Interval)> = ansatz
        .pieces()
        .into_iter()
        .enumerate()
        .filter(|(_, p)| p.end > t_start && p.start < t_end)
        .collect();

    for (piece, interval) in pieces {
        let seg_end = interval.end.min(t_end);
        let mut t = t_start.max(interval.start);
        while t < seg_end {
            let exp = Expansion::build(ham, ansatz, params, piece, t, order, &slots);
            evaluations += 1;
            let mut dt = proposal.unwrap_or_else(|| {
                let norm = exp.h[0].as_ref().map_or(0.0, |h| h.frobenius_norm());
                if norm > 0.0 {
                    predicted_x / norm
                } else {
                    seg_end - t
                }
            });
            let tolerance = settings.step_tolerance * u.frobenius_norm();
            loop {
                let remaining = seg_end - t;
                let limited = dt.min(settings.max_step);
                let lands = limited >= remaining - 1e-12 * span;
                let dt_try = if lands { remaining } else { limited };
                let g0 = with_gradient.then_some(grads.as_slice());
                match exp.step(dt_try, &u, g0, tolerance, &mut products) {
                    Ok(outcome) => {
                        u = outcome.propagator;
                        if with_gradient {
                            grads = outcome.gradients;
                        }
                        t = if lands { seg_end } else { t + dt_try };
                        steps += 1;
                        proposal = Some(if lands && dt_try < limited {
                            dt
                        } else {
                            dt_try * settings.growth_factor
                        });
                        break;
                    }
                    Err(residual) => {
                        rejected += 1;
                        dt = dt_try / 2.0;
                        if dt < min_dt {
                            return Err(GoatError::NonConvergence { t, residual });
                        }
                    }
                }
            }
        }
    }

    Ok(PropagationResult {
        propagator: u,
        gradients: grads,
        gradient_slots: slots,
        steps,
        rejected_steps: rejected,
        hamiltonian_evaluations: evaluations,
        matrix_products: products,
    })
}
