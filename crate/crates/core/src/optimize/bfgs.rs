use serde::{Deserialize, Serialize};

use super::{dot, norm, prepare_start, Bounds, Method, Objective, OptimizationTrace, Status, StopConditions, Tracker};
use super::trace::LineSearchInfo;
use crate::{GoatError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchSettings {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_evaluations: usize,
}

impl Default for LineSearchSettings {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_evaluations: 40,
        }
    }
}

impl LineSearchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(GoatError::InvalidArgument(format!(
                "line search needs 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.max_evaluations == 0 {
            return Err(GoatError::InvalidArgument("line search needs at least one evaluation".into()));
        }
        Ok(())
    }
}

/// Below this gradient norm a failed line search counts as stalled rather
/// than failed.
const STALL_GRADIENT: f64 = 1e-3;

#[derive(Clone)]
struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

enum Search {
    Accepted(Point, LineSearchInfo),
    /// Carries the lowest trial point seen.
    Failed(Option<Point>),
}

fn singular(e: &GoatError) -> bool {
    matches!(e, GoatError::SingularOverlap { .. })
}

/// BFGS on the inverse Hessian with a strong-Wolfe line search.
pub fn bfgs(
    objective: &dyn Objective,
    x0: &[f64],
    stop: &StopConditions,
    line_search: &LineSearchSettings,
    bounds: Option<&Bounds>,
) -> Result<OptimizationTrace> {
    stop.validate()?;
    line_search.validate()?;
    let mut x = prepare_start(objective, x0, bounds)?;
    let n = x.len();
    let mut run = Tracker::new(objective, bounds, stop);

    let first = match run.evaluate(&mut x, true) {
        Ok(v) => v,
        Err(e) if singular(&e) => {
            let v = run.evaluate(&mut x, false)?;
            run.record(0, &x, v.value, f64::NAN, None);
            let status = if v.value <= stop.threshold { Status::Converged } else { Status::SingularOverlap };
            return Ok(run.finish(Method::Bfgs, status));
        }
        Err(e) => return Err(e),
    };
    let g = free_gradient(&x, first.gradient.unwrap_or_default(), bounds);
    let mut cur = Point { x, f: first.value, g };
    run.record(0, &cur.x, cur.f, norm(&cur.g), None);
    if cur.f <= stop.threshold {
        return Ok(run.finish(Method::Bfgs, Status::Converged));
    }
    if n == 0 {
        return Ok(run.finish(Method::Bfgs, Status::NoFreeParameters));
    }

    let mut h = identity(n);
    let mut updated = false;
    for iteration in 1..=stop.max_iterations {
        if run.timed_out() {
            return Ok(run.finish(Method::Bfgs, Status::TimeCap));
        }
        let mut p = mat_vec(&h, &cur.g);
        p.iter_mut().for_each(|v| *v = -*v);
        if !(dot(&p, &cur.g) < 0.0) {
            h = identity(n);
            updated = false;
            p = cur.g.iter().map(|v| -v).collect();
        }
        let alpha0 = if updated { 1.0 } else { (1.0 / norm(&cur.g)).min(1.0) };

        let outcome = match strong_wolfe(&mut run, &cur, &p, alpha0, line_search) {
            Ok(o) => o,
            Err(e) if singular(&e) => return Ok(run.finish(Method::Bfgs, Status::SingularOverlap)),
            Err(e) => return Err(e),
        };
        let (next, info) = match outcome {
            Search::Accepted(next, info) => (next, info),
            Search::Failed(best) => {
                if let Some(best) = best.filter(|b| b.f <= stop.threshold) {
                    run.record(iteration, &best.x, best.f, norm(&best.g), None);
                    return Ok(run.finish(Method::Bfgs, Status::Converged));
                }
                let status = if norm(&cur.g) <= STALL_GRADIENT {
                    Status::Stalled
                } else {
                    Status::LineSearchFailure
                };
                return Ok(run.finish(Method::Bfgs, status));
            }
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            bfgs_update(&mut h, &s, &y, sy);
            updated = true;
        }

        cur = next;
        run.record(iteration, &cur.x, cur.f, norm(&cur.g), Some(info));
        if cur.f <= stop.threshold {
            return Ok(run.finish(Method::Bfgs, Status::Converged));
        }
        if norm(&cur.g) == 0.0 {
            return Ok(run.finish(Method::Bfgs, Status::Stalled));
        }
    }
    Ok(run.finish(Method::Bfgs, Status::IterationCap))
}

/// Zeroes gradient components that push against an active bound, so the
/// search runs on the face of the box it currently sits on.
fn free_gradient(x: &[f64], mut g: Vec<f64>, bounds: Option<&Bounds>) -> Vec<f64> {
    if let Some(b) = bounds {
        for i in 0..g.len() {
            if (x[i] <= b.lower[i] && g[i] > 0.0) || (x[i] >= b.upper[i] && g[i] < 0.0) {
                g[i] = 0.0;
            }
        }
    }
    g
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&h[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let coeff = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coeff * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
    // keep exact symmetry
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = avg;
            h[j * n + i] = avg;
        }
    }
}

struct Trial {
    alpha: f64,
    f: f64,
    slope: f64,
}

/// Bracketing phase followed by cubic zoom.
fn strong_wolfe(
    run: &mut Tracker<'_>,
    cur: &Point,
    p: &[f64],
    alpha0: f64,
    settings: &LineSearchSettings,
) -> Result<Search> {
    let f0 = cur.f;
    let slope0 = dot(&cur.g, p);
    let c1 = settings.c1;
    let c2 = settings.c2;
    let bounds = run.bounds;
    let mut used = 0;
    let mut best: Option<Point> = None;

    let mut eval = |alpha: f64, used: &mut usize, best: &mut Option<Point>| -> Result<(Point, f64)> {
        let mut x: Vec<f64> = cur.x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        let v = run.evaluate(&mut x, true)?;
        *used += 1;
        let g = free_gradient(&x, v.gradient.unwrap_or_default(), bounds);
        let point = Point { x, f: v.value, g };
        let slope = dot(&point.g, p);
        if best.as_ref().is_none_or(|b| point.f < b.f) {
            *best = Some(point.clone());
        }
        Ok((point, slope))
    };
    let info = |alpha: f64, point: &Point, slope: f64, used: usize| LineSearchInfo {
        step: alpha,
        f0,
        slope0,
        f1: point.f,
        slope1: slope,
        c1,
        c2,
        evaluations: used,
    };

    let mut prev = Trial {
        alpha: 0.0,
        f: f0,
        slope: slope0,
    };
    let mut alpha = alpha0;
    let (mut lo, mut hi);
    loop {
        if used >= settings.max_evaluations {
            return Ok(Search::Failed(best));
        }
        let (point, slope) = eval(alpha, &mut used, &mut best)?;
        if point.f > f0 + c1 * alpha * slope0 || (used > 1 && point.f >= prev.f) {
            lo = prev;
            hi = Trial { alpha, f: point.f, slope };
            break;
        }
        if slope.abs() <= -c2 * slope0 {
            let i = info(alpha, &point, slope, used);
            return Ok(Search::Accepted(point, i));
        }
        if slope >= 0.0 {
            hi = prev;
            lo = Trial { alpha, f: point.f, slope };
            break;
        }
        prev = Trial { alpha, f: point.f, slope };
        alpha *= 2.0;
    }

    loop {
        if used >= settings.max_evaluations {
            return Ok(Search::Failed(best));
        }
        let width = (hi.alpha - lo.alpha).abs();
        if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()) {
            return Ok(Search::Failed(best));
        }
        let alpha = cubic_minimizer(&lo, &hi)
            .filter(|a| {
                let (a_min, a_max) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
                *a >= a_min + 0.1 * width && *a <= a_max - 0.1 * width
            })
            .unwrap_or(0.5 * (lo.alpha + hi.alpha));
        let (point, slope) = eval(alpha, &mut used, &mut best)?;
        if point.f > f0 + c1 * alpha * slope0 || point.f >= lo.f {
            hi = Trial { alpha, f: point.f, slope };
        } else {
            if slope.abs() <= -c2 * slope0 {
                let i = info(alpha, &point, slope, used);
                return Ok(Search::Accepted(point, i));
            }
            if slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = Trial { alpha, f: point.f, slope };
        }
    }
}

/// Minimizer of the cubic matching values and slopes at both ends.
fn cubic_minimizer(a: &Trial, b: &Trial) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.slope - a.slope + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let alpha = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    alpha.is_finite().then_some(alpha)
}

#[cfg(test)]
mod tests {
    use super::super::testing::{Constant, Quadratic, Rosenbrock};
    use super::*;

    fn stop(threshold: f64, max_iterations: usize) -> StopConditions {
        StopConditions {
            threshold,
            max_iterations,
            max_seconds: None,
        }
    }

    #[test]
    fn separable_quadratic_reaches_all_ones() {
        let obj = Quadratic { weights: vec![1.0, 2.0, 5.0, 0.5, 3.0] };
        let trace = bfgs(&obj, &[0.0; 5], &stop(1e-24, 50), &LineSearchSettings::default(), None).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.iterations() <= 50);
        for v in trace.final_params() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn already_converged_returns_immediately() {
        let obj = Quadratic { weights: vec![1.0, 1.0] };
        let trace = bfgs(&obj, &[1.0, 1.0], &stop(1e-10, 50), &LineSearchSettings::default(), None).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn accepted_steps_satisfy_strong_wolfe() {
        let trace = bfgs(&Rosenbrock, &[-1.2, 1.0], &stop(1e-20, 200), &LineSearchSettings::default(), None)
            .unwrap();
        assert_eq!(trace.status, Status::Converged);
        let steps: Vec<_> = trace.records.iter().filter_map(|r| r.line_search).collect();
        assert!(!steps.is_empty());
        for info in steps {
            assert!(info.strong_wolfe(), "{info:?}");
        }
    }

    #[test]
    fn quadratic_convergence_is_superlinear() {
        let obj = Quadratic { weights: vec![1.0, 10.0, 100.0, 3.0, 30.0, 0.3] };
        let trace = bfgs(&obj, &[4.0, -3.0, 2.0, 0.0, 1.5, -1.0], &stop(1e-30, 100), &LineSearchSettings::default(), None)
            .unwrap();
        let errors: Vec<f64> = trace
            .records
            .iter()
            .map(|r| r.params.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>().sqrt())
            .filter(|e| *e > 1e-13)
            .collect();
        let tail = &errors[errors.len().saturating_sub(6)..];
        let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
        // a linear method on this conditioning contracts by ~0.99 per step
        assert!(ratios.iter().all(|r| *r < 0.1), "{ratios:?}");
        assert!(trace.iterations() <= 20);
    }

    #[test]
    fn bounds_are_respected() {
        let obj = Quadratic { weights: vec![1.0, 1.0] };
        let bounds = Bounds::new(vec![-1.0, -1.0], vec![0.5, 2.0]).unwrap();
        let trace = bfgs(&obj, &[0.0, 0.0], &stop(1e-20, 50), &LineSearchSettings::default(), Some(&bounds))
            .unwrap();
        for r in &trace.records {
            assert!(bounds.contains(&r.params));
        }
        assert!((trace.final_params()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_iterations_hits_cap_after_initial_evaluation() {
        let obj = Quadratic { weights: vec![1.0] };
        let trace = bfgs(&obj, &[0.0], &stop(1e-10, 0), &LineSearchSettings::default(), None).unwrap();
        assert_eq!(trace.status, Status::IterationCap);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn no_free_parameters() {
        let obj = Constant(0.5);
        let trace = bfgs(&obj, &[], &stop(1e-10, 10), &LineSearchSettings::default(), None).unwrap();
        assert_eq!(trace.status, Status::NoFreeParameters);
    }

    #[test]
    fn cubic_minimizer_of_parabola() {
        // f = (a - 2)^2 sampled at 0 and 3
        let a = Trial { alpha: 0.0, f: 4.0, slope: -4.0 };
        let b = Trial { alpha: 3.0, f: 1.0, slope: 2.0 };
        assert!((cubic_minimizer(&a, &b).unwrap() - 2.0).abs() < 1e-12);
    }
}
