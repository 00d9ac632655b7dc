use super::{prepare_start, Bounds, Method, Objective, OptimizationTrace, Status, StopConditions, Tracker};
use crate::Result;

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;
const DEGENERATE_DIAMETER: f64 = 1e-14;

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Derivative-free simplex search. The initial simplex offsets each
/// coordinate of `x0` by `initial_step`. One iteration is one simplex update.
pub fn nelder_mead(
    objective: &dyn Objective,
    x0: &[f64],
    stop: &StopConditions,
    initial_step: f64,
    bounds: Option<&Bounds>,
) -> Result<OptimizationTrace> {
    stop.validate()?;
    if !(initial_step > 0.0 && initial_step.is_finite()) {
        return Err(crate::GoatError::InvalidArgument(format!(
            "initial simplex step must be positive, got {initial_step}"
        )));
    }
    let mut x = prepare_start(objective, x0, bounds)?;
    let n = x.len();
    let mut run = Tracker::new(objective, bounds, stop);

    let f = run.evaluate(&mut x, false)?.value;
    run.record(0, &x, f, f64::NAN, None);
    if f <= stop.threshold {
        return Ok(run.finish(Method::NelderMead, Status::Converged));
    }
    if n == 0 {
        return Ok(run.finish(Method::NelderMead, Status::NoFreeParameters));
    }

    let mut simplex = vec![Vertex { x: x.clone(), f }];
    for i in 0..n {
        let mut v = x.clone();
        v[i] += initial_step;
        if let Some(b) = bounds {
            // step inward when the offset leaves the box
            if v[i] > b.upper[i] {
                v[i] = x[i] - initial_step;
            }
        }
        let f = run.evaluate(&mut v, false)?.value;
        simplex.push(Vertex { x: v, f });
    }

    for iteration in 1..=stop.max_iterations {
        if run.timed_out() {
            return Ok(run.finish(Method::NelderMead, Status::TimeCap));
        }
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst_f = simplex[n].f;
        let along = |coeff: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coeff * (c - w))
                .collect()
        };

        let mut xr = along(REFLECTION, &simplex[n].x);
        let fr = run.evaluate(&mut xr, false)?.value;
        let mut shrink = false;
        if fr < simplex[0].f {
            let mut xe = along(EXPANSION, &simplex[n].x);
            let fe = run.evaluate(&mut xe, false)?.value;
            simplex[n] = if fe < fr { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
        } else if fr < simplex[n - 1].f {
            simplex[n] = Vertex { x: xr, f: fr };
        } else if fr < worst_f {
            let mut xc = along(-CONTRACTION, &xr);
            let fc = run.evaluate(&mut xc, false)?.value;
            if fc <= fr {
                simplex[n] = Vertex { x: xc, f: fc };
            } else {
                shrink = true;
            }
        } else {
            let mut xc = along(-CONTRACTION, &simplex[n].x);
            let fc = run.evaluate(&mut xc, false)?.value;
            if fc < worst_f {
                simplex[n] = Vertex { x: xc, f: fc };
            } else {
                shrink = true;
            }
        }
        if shrink {
            let best = simplex[0].x.clone();
            for v in simplex.iter_mut().skip(1) {
                let mut xs: Vec<f64> = best
                    .iter()
                    .zip(&v.x)
                    .map(|(b, x)| b + SHRINK * (x - b))
                    .collect();
                let fs = run.evaluate(&mut xs, false)?.value;
                *v = Vertex { x: xs, f: fs };
            }
        }

        let best = simplex
            .iter()
            .min_by(|a, b| a.f.total_cmp(&b.f))
            .expect("simplex is non-empty");
        run.record(iteration, &best.x, best.f, f64::NAN, None);
        if best.f <= stop.threshold {
            return Ok(run.finish(Method::NelderMead, Status::Converged));
        }
        let diameter = simplex
            .iter()
            .map(|v| super::norm(&v.x.iter().zip(&best.x).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        if diameter < DEGENERATE_DIAMETER {
            return Ok(run.finish(Method::NelderMead, Status::DegenerateSimplex));
        }
    }
    Ok(run.finish(Method::NelderMead, Status::IterationCap))
}
