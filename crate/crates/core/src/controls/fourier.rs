use serde::{Deserialize, Serialize};

use super::{shifted_sin, ControlAnsatz, Interval, SlotDescriptor, SlotKind, DEFAULT_MAX_ORDER};
use crate::{GoatError, Result};

/// Truncated Fourier series per control, `c_k = sum_j A sin(w t + phi)`.
///
/// Parameters are laid out control-major, then term, then `(A, w, phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierAnsatz {
    duration: f64,
    terms: Vec<usize>,
    offsets: Vec<usize>,
    layout: Vec<SlotDescriptor>,
    max_order: usize,
}

const KINDS: [SlotKind; 3] = [SlotKind::Amplitude, SlotKind::Frequency, SlotKind::Phase];

impl FourierAnsatz {
    /// All slots trainable.
    pub fn new(duration: f64, terms_per_control: Vec<usize>) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(GoatError::InvalidArgument(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if terms_per_control.is_empty() {
            return Err(GoatError::InvalidArgument("at least one control required".into()));
        }
        if let Some(k) = terms_per_control.iter().position(|&m| m == 0) {
            return Err(GoatError::InvalidArgument(format!(
                "control {k} has no Fourier terms"
            )));
        }
        let mut offsets = Vec::with_capacity(terms_per_control.len());
        let mut layout = Vec::new();
        for (k, &m) in terms_per_control.iter().enumerate() {
            offsets.push(layout.len());
            for j in 0..m {
                for kind in KINDS {
                    layout.push(SlotDescriptor {
                        control: Some(k),
                        term: j,
                        kind,
                        trainable: true,
                    });
                }
            }
        }
        Ok(Self {
            duration,
            terms: terms_per_control,
            offsets,
            layout,
            max_order: DEFAULT_MAX_ORDER,
        })
    }

    /// Restricts training to the listed slot kinds; every other slot is frozen.
    pub fn with_trainable_kinds(mut self, kinds: &[SlotKind]) -> Self {
        for d in &mut self.layout {
            d.trainable = kinds.contains(&d.kind);
        }
        self
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn set_trainable(&mut self, slot: usize, trainable: bool) {
        self.layout[slot].trainable = trainable;
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    /// Parameter index of `(control, term, kind)`.
    pub fn slot(&self, k: usize, j: usize, kind: SlotKind) -> usize {
        let idx = match kind {
            SlotKind::Amplitude => 0,
            SlotKind::Frequency => 1,
            SlotKind::Phase => 2,
            _ => panic!("Fourier ansatz has no {kind} slots"),
        };
        self.offsets[k] + 3 * j + idx
    }

    /// Flattens `[(A, w, phi)]` per control into a parameter vector.
    pub fn pack(&self, coefficients: &[Vec<(f64, f64, f64)>]) -> Result<Vec<f64>> {
        if coefficients.len() != self.terms.len() {
            return Err(GoatError::DimensionMismatch {
                context: "Fourier controls",
                left: coefficients.len(),
                right: self.terms.len(),
            });
        }
        let mut out = Vec::with_capacity(self.layout.len());
        for (k, terms) in coefficients.iter().enumerate() {
            if terms.len() != self.terms[k] {
                return Err(GoatError::DimensionMismatch {
                    context: "Fourier terms",
                    left: terms.len(),
                    right: self.terms[k],
                });
            }
            for &(a, w, p) in terms {
                out.extend_from_slice(&[a, w, p]);
            }
        }
        Ok(out)
    }

    /// Sum over terms of `A w^n`, a bound on `|d^n c_k / dt^n|`.
    pub fn derivative_bound(&self, params: &[f64], k: usize, n: usize) -> f64 {
        let off = self.offsets[k];
        (0..self.terms[k])
            .map(|j| {
                let a = params[off + 3 * j];
                let w = params[off + 3 * j + 1];
                a.abs() * w.abs().powi(n as i32)
            })
            .sum()
    }

    fn control_of(&self, slot: usize) -> usize {
        self.layout[slot].control.expect("Fourier slots have an owner")
    }
}

impl ControlAnsatz for FourierAnsatz {
    fn n_controls(&self) -> usize {
        self.terms.len()
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn layout(&self) -> &[SlotDescriptor] {
        &self.layout
    }

    fn pieces(&self) -> Vec<Interval> {
        vec![Interval::new(0.0, self.duration)]
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn piece_time_derivative(&self, params: &[f64], _piece: usize, k: usize, t: f64, n: usize) -> f64 {
        let off = self.offsets[k];
        (0..self.terms[k])
            .map(|j| {
                let a = params[off + 3 * j];
                let w = params[off + 3 * j + 1];
                let phi = params[off + 3 * j + 2];
                a * w.powi(n as i32) * shifted_sin(w * t + phi, n)
            })
            .sum()
    }

    fn piece_param_derivative(
        &self,
        params: &[f64],
        _piece: usize,
        k: usize,
        t: f64,
        slot: usize,
        n: usize,
    ) -> f64 {
        if self.control_of(slot) != k {
            return 0.0;
        }
        let base = slot - (slot - self.offsets[k]) % 3;
        let a = params[base];
        let w = params[base + 1];
        let x = w * t + params[base + 2];
        let wn = w.powi(n as i32);
        match self.layout[slot].kind {
            SlotKind::Amplitude => wn * shifted_sin(x, n),
            SlotKind::Phase => a * wn * shifted_sin(x, n + 1),
            SlotKind::Frequency => {
                // d/dw [A w^n sin(w t + phi + n pi/2)]
                let lead = if n == 0 {
                    0.0
                } else {
                    n as f64 * w.powi(n as i32 - 1) * shifted_sin(x, n)
                };
                a * (lead + wn * t * shifted_sin(x, n + 1))
            }
            _ => unreachable!(),
        }
    }

    fn slot_active_on_piece(&self, _slot: usize, _piece: usize) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{
        analytic_pieces, control_param_derivative, control_time_derivative, control_value,
    };
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn single(a: f64, w: f64, phi: f64) -> (FourierAnsatz, Vec<f64>) {
        let ans = FourierAnsatz::new(10.0, vec![1]).unwrap();
        (ans, vec![a, w, phi])
    }

    #[test]
    fn value_examples() {
        let (ans, p) = single(2.0, 3.0, FRAC_PI_2);
        assert!((control_value(&ans, &p, 0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let (ans, p) = single(0.0, 3.0, 0.4);
        for t in [0.0, 0.3, 7.0] {
            assert_eq!(control_value(&ans, &p, 0, t).unwrap(), 0.0);
        }
        let ans = FourierAnsatz::new(2.0, vec![2]).unwrap();
        let p = vec![1.0, 1.0, 0.0, 0.5, 2.0, 0.0];
        // scalar oracle: sin(1) + 0.5 sin(2)
        let expected = 1f64.sin() + 0.5 * 2f64.sin();
        assert!((expected - 1.296_12).abs() < 5e-6);
        assert!((control_value(&ans, &p, 0, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn time_derivative_examples() {
        let (ans, p) = single(2.0, 3.0, FRAC_PI_2);
        assert_eq!(
            control_time_derivative(&ans, &p, 0, 0.7, 0).unwrap(),
            control_value(&ans, &p, 0, 0.7).unwrap()
        );
        assert!(control_time_derivative(&ans, &p, 0, 0.0, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn fourth_derivative_matches_finite_difference() {
        let (ans, p) = single(1.3, 1.7, 0.4);
        let t = 2.1;
        let f = |s: f64| control_value(&ans, &p, 0, s).unwrap();
        // fourth central difference, O(h^2), Richardson-extrapolated to O(h^4)
        let d4 = |h: f64| {
            (f(t + 2.0 * h) - 4.0 * f(t + h) + 6.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h))
                / h.powi(4)
        };
        let fd = (4.0 * d4(1e-2) - d4(2e-2)) / 3.0;
        let exact = control_time_derivative(&ans, &p, 0, t, 4).unwrap();
        assert!(((fd - exact) / exact).abs() <= 1e-5, "fd {fd} exact {exact}");
    }

    #[test]
    fn param_derivative_examples() {
        let ans = FourierAnsatz::new(5.0, vec![1, 1]).unwrap();
        let p = vec![1.5, 2.0, 0.3, 1.0, 2.0, 0.0];
        let t = 0.8;
        let amp = control_param_derivative(&ans, &p, 0, t, 0, 0).unwrap();
        assert!((amp - (2.0 * t + 0.3f64).sin()).abs() < 1e-15);
        assert_eq!(control_param_derivative(&ans, &p, 1, t, 0, 0).unwrap(), 0.0);

        let freq = control_param_derivative(&ans, &p, 1, 1.0, 4, 0).unwrap();
        let fd = {
            let h = 1e-6;
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[4] += h;
            lo[4] -= h;
            (control_value(&ans, &hi, 1, 1.0).unwrap() - control_value(&ans, &lo, 1, 1.0).unwrap())
                / (2.0 * h)
        };
        assert!(((freq - fd) / fd).abs() <= 1e-6);
        assert!((freq - 2f64.cos()).abs() < 1e-15);
        assert!((freq + 0.416_147).abs() < 1e-6);
    }

    #[test]
    fn frozen_slots_have_zero_derivative() {
        let ans = FourierAnsatz::new(1.0, vec![2]).unwrap().with_trainable_kinds(&[SlotKind::Amplitude]);
        let p = vec![1.0, 2.0, 0.1, 0.5, 3.0, 0.2];
        assert_eq!(ans.trainable_slots(), vec![0, 3]);
        assert_eq!(control_param_derivative(&ans, &p, 0, 0.3, 1, 0).unwrap(), 0.0);
        assert_ne!(control_param_derivative(&ans, &p, 0, 0.3, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn single_piece() {
        let ans = FourierAnsatz::new(1.0, vec![3]).unwrap();
        assert_eq!(analytic_pieces(&ans), vec![Interval::new(0.0, 1.0)]);
    }

    #[test]
    fn zero_frequency_first_derivative() {
        let (ans, p) = single(2.0, 0.0, 0.3);
        let d = control_param_derivative(&ans, &p, 0, 0.5, 1, 1).unwrap();
        // d/dw d/dt [A sin(w t + phi)] at w = 0 is A cos(phi)
        assert!((d - 2.0 * 0.3f64.cos()).abs() < 1e-15);
    }

    fn coeffs() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(
            (-2.0..2.0f64, 0.1..4.0f64, 0.0..std::f64::consts::TAU).prop_map(|(a, w, p)| vec![a, w, p]),
            1..4,
        )
        .prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn amplitude_linearity(p in coeffs(), t in 0.0..10.0f64) {
            let ans = FourierAnsatz::new(10.0, vec![p.len() / 3]).unwrap();
            let doubled: Vec<f64> = p.iter().enumerate()
                .map(|(i, &x)| if i % 3 == 0 { 2.0 * x } else { x }).collect();
            let v = control_value(&ans, &p, 0, t).unwrap();
            let v2 = control_value(&ans, &doubled, 0, t).unwrap();
            prop_assert!((v2 - 2.0 * v).abs() <= 1e-12 * (1.0 + v.abs()));
        }

        #[test]
        fn param_derivative_matches_fd(p in coeffs(), t in 0.1..9.9f64) {
            let ans = FourierAnsatz::new(10.0, vec![p.len() / 3]).unwrap();
            let h = 1e-6;
            for slot in 0..p.len() {
                let exact = control_param_derivative(&ans, &p, 0, t, slot, 0).unwrap();
                let mut hi = p.clone();
                let mut lo = p.clone();
                hi[slot] += h;
                lo[slot] -= h;
                let fd = (control_value(&ans, &hi, 0, t).unwrap()
                    - control_value(&ans, &lo, 0, t).unwrap()) / (2.0 * h);
                if exact.abs() > 1e-3 {
                    prop_assert!(((fd - exact) / exact).abs() <= 1e-6,
                        "slot {} fd {} exact {}", slot, fd, exact);
                } else {
                    prop_assert!((fd - exact).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn mixed_partials_commute(p in coeffs(), t in 0.5..9.5f64, n in 1usize..4) {
            let ans = FourierAnsatz::new(10.0, vec![p.len() / 3]).unwrap();
            let h = 1e-4;
            for slot in 0..p.len() {
                let g = |s: f64| control_param_derivative(&ans, &p, 0, s, slot, n - 1).unwrap();
                let fd = (g(t + h) - g(t - h)) / (2.0 * h);
                let exact = control_param_derivative(&ans, &p, 0, t, slot, n).unwrap();
                let scale = exact.abs().max(1.0);
                prop_assert!((fd - exact).abs() <= 1e-5 * scale,
                    "slot {} n {} fd {} exact {}", slot, n, fd, exact);
            }
        }
    }
}
