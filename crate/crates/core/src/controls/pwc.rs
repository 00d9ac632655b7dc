use serde::{Deserialize, Serialize};

use super::{ControlAnsatz, Interval, SlotDescriptor, SlotKind};
use crate::{GoatError, Result};

/// Piecewise-constant controls.
///
/// Fixed-width slices carry one value per control per slice, laid out
/// control-major (`slot = k * slices + n`).
///
/// The flexible-width variant additionally gives every slice a width logit
/// `w_n`. Physical widths are `T * softmax(w)_n`, so they stay positive and
/// sum to `T`. Propagation runs in a nominal clock where every slice has
/// width `T / N`; slice `n` then evolves under `r_n * H(v_n)` with rate
/// `r_n = N * softmax(w)_n`, which keeps every piece analytic in the
/// parameters. The values returned by the `piece_*` methods are these
/// rate-scaled coefficients. Flexible layout is slice-major: the `C` control
/// values of slice `n`, then its width logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwcAnsatz {
    boundaries: Vec<f64>,
    n_controls: usize,
    flexible: bool,
    layout: Vec<SlotDescriptor>,
}

impl PwcAnsatz {
    /// `boundaries` must start at 0 and increase strictly to `T`.
    pub fn new(boundaries: Vec<f64>, n_controls: usize) -> Result<Self> {
        Self::validate(&boundaries, n_controls)?;
        let slices = boundaries.len() - 1;
        let mut layout = Vec::with_capacity(slices * n_controls);
        for k in 0..n_controls {
            for n in 0..slices {
                layout.push(SlotDescriptor {
                    control: Some(k),
                    term: n,
                    kind: SlotKind::Value,
                    trainable: true,
                });
            }
        }
        Ok(Self {
            boundaries,
            n_controls,
            flexible: false,
            layout,
        })
    }

    pub fn uniform(duration: f64, slices: usize, n_controls: usize) -> Result<Self> {
        Self::new(uniform_boundaries(duration, slices)?, n_controls)
    }

    pub fn flexible(duration: f64, slices: usize, n_controls: usize) -> Result<Self> {
        let boundaries = uniform_boundaries(duration, slices)?;
        Self::validate(&boundaries, n_controls)?;
        let mut layout = Vec::with_capacity(slices * (n_controls + 1));
        for n in 0..slices {
            for k in 0..n_controls {
                layout.push(SlotDescriptor {
                    control: Some(k),
                    term: n,
                    kind: SlotKind::Value,
                    trainable: true,
                });
            }
            layout.push(SlotDescriptor {
                control: None,
                term: n,
                kind: SlotKind::WidthLogit,
                trainable: true,
            });
        }
        Ok(Self {
            boundaries,
            n_controls,
            flexible: true,
            layout,
        })
    }

    fn validate(boundaries: &[f64], n_controls: usize) -> Result<()> {
        if n_controls == 0 {
            return Err(GoatError::InvalidArgument("at least one control required".into()));
        }
        if boundaries.len() < 2 || boundaries[0] != 0.0 {
            return Err(GoatError::InvalidArgument(
                "slice boundaries must start at 0 and contain at least one slice".into(),
            ));
        }
        if boundaries.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(GoatError::InvalidArgument(
                "slice boundaries must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn set_trainable(&mut self, slot: usize, trainable: bool) {
        self.layout[slot].trainable = trainable;
    }

    pub fn is_flexible(&self) -> bool {
        self.flexible
    }

    pub fn slices(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    fn stride(&self) -> usize {
        self.n_controls + 1
    }

    fn softmax(&self, params: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.slices())
            .map(|n| params[n * self.stride() + self.n_controls])
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// Physical slice widths; equals the nominal widths for fixed slices.
    pub fn slice_widths(&self, params: &[f64]) -> Vec<f64> {
        if self.flexible {
            let t = self.duration();
            self.softmax(params).into_iter().map(|p| t * p).collect()
        } else {
            self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
        }
    }

    /// Physical value of control `k` on slice `n`.
    pub fn slice_value(&self, params: &[f64], k: usize, n: usize) -> f64 {
        if self.flexible {
            params[n * self.stride() + k]
        } else {
            params[k * self.slices() + n]
        }
    }

    fn rate(&self, params: &[f64], piece: usize) -> f64 {
        self.slices() as f64 * self.softmax(params)[piece]
    }

    /// `d r_piece / d w_m`.
    fn rate_gradient(&self, params: &[f64], piece: usize, m: usize) -> f64 {
        let p = self.softmax(params);
        let n = self.slices() as f64;
        let delta = if piece == m { 1.0 } else { 0.0 };
        n * p[piece] * (delta - p[m])
    }
}

pub(crate) fn uniform_boundaries(duration: f64, slices: usize) -> Result<Vec<f64>> {
    if slices == 0 || !(duration > 0.0 && duration.is_finite()) {
        return Err(GoatError::InvalidArgument(format!(
            "need slices >= 1 and positive duration, got {slices} slices over {duration}"
        )));
    }
    let mut b: Vec<f64> = (0..=slices)
        .map(|n| duration * n as f64 / slices as f64)
        .collect();
    b[slices] = duration;
    Ok(b)
}

impl ControlAnsatz for PwcAnsatz {
    fn n_controls(&self) -> usize {
        self.n_controls
    }

    fn duration(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    fn layout(&self) -> &[SlotDescriptor] {
        &self.layout
    }

    fn pieces(&self) -> Vec<Interval> {
        self.boundaries
            .windows(2)
            .map(|w| Interval::new(w[0], w[1]))
            .collect()
    }

    fn piece_time_derivative(&self, params: &[f64], piece: usize, k: usize, _t: f64, n: usize) -> f64 {
        if n > 0 {
            return 0.0;
        }
        let v = self.slice_value(params, k, piece);
        if self.flexible {
            self.rate(params, piece) * v
        } else {
            v
        }
    }

    fn piece_param_derivative(
        &self,
        params: &[f64],
        piece: usize,
        k: usize,
        _t: f64,
        slot: usize,
        n: usize,
    ) -> f64 {
        if n > 0 {
            return 0.0;
        }
        if !self.flexible {
            return if slot == k * self.slices() + piece { 1.0 } else { 0.0 };
        }
        let slice = slot / self.stride();
        let within = slot % self.stride();
        if within == self.n_controls {
            self.rate_gradient(params, piece, slice) * self.slice_value(params, k, piece)
        } else if within == k && slice == piece {
            self.rate(params, piece)
        } else {
            0.0
        }
    }

    fn drift_time_derivative(&self, params: &[f64], piece: usize, _t: f64, n: usize) -> f64 {
        match (n, self.flexible) {
            (0, true) => self.rate(params, piece),
            (0, false) => 1.0,
            _ => 0.0,
        }
    }

    fn drift_param_derivative(&self, params: &[f64], piece: usize, _t: f64, slot: usize, n: usize) -> f64 {
        if n > 0 || !self.flexible || slot % self.stride() != self.n_controls {
            return 0.0;
        }
        self.rate_gradient(params, piece, slot / self.stride())
    }

    fn slot_touches_drift(&self, slot: usize) -> bool {
        self.flexible && slot % self.stride() == self.n_controls
    }

    fn slot_active_on_piece(&self, slot: usize, piece: usize) -> bool {
        if self.flexible {
            slot % self.stride() == self.n_controls || slot / self.stride() == piece
        } else {
            slot % self.slices() == piece
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{analytic_pieces, control_param_derivative, control_value};

    #[test]
    fn uniform_pieces() {
        let a = PwcAnsatz::uniform(1.0, 4, 1).unwrap();
        let expected: Vec<Interval> = [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]
            .iter()
            .map(|&(s, e)| Interval::new(s, e))
            .collect();
        assert_eq!(analytic_pieces(&a), expected);
    }

    #[test]
    fn rejects_non_monotone_boundaries() {
        assert!(PwcAnsatz::new(vec![0.0, 0.5, 0.5, 1.0], 1).is_err());
        assert!(PwcAnsatz::new(vec![0.1, 1.0], 1).is_err());
        assert!(PwcAnsatz::new(vec![0.0], 1).is_err());
    }

    #[test]
    fn slice_values_and_derivatives() {
        let a = PwcAnsatz::uniform(2.0, 2, 2).unwrap();
        let p = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(control_value(&a, &p, 1, 0.5).unwrap(), 3.0);
        assert_eq!(control_param_derivative(&a, &p, 1, 1.5, 3, 0).unwrap(), 1.0);
        assert_eq!(control_param_derivative(&a, &p, 1, 0.5, 3, 0).unwrap(), 0.0);
        assert_eq!(control_param_derivative(&a, &p, 0, 1.5, 3, 0).unwrap(), 0.0);
    }

    #[test]
    fn flexible_widths_sum_to_duration() {
        let a = PwcAnsatz::flexible(3.0, 3, 1).unwrap();
        let p = [1.0, 0.2, -1.0, -0.5, 0.5, 1.0];
        let w = a.slice_widths(&p);
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-14);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn flexible_rate_gradients_match_fd() {
        let a = PwcAnsatz::flexible(2.0, 3, 1).unwrap();
        let p = vec![0.7, 0.3, -1.2, -0.4, 0.5, 0.9];
        let h = 1e-6;
        for piece in 0..3 {
            let t = 2.0 * (piece as f64 + 0.5) / 3.0;
            for slot in 0..p.len() {
                let exact = control_param_derivative(&a, &p, 0, t, slot, 0).unwrap();
                let mut hi = p.clone();
                let mut lo = p.clone();
                hi[slot] += h;
                lo[slot] -= h;
                let fd = (control_value(&a, &hi, 0, t).unwrap()
                    - control_value(&a, &lo, 0, t).unwrap())
                    / (2.0 * h);
                assert!((fd - exact).abs() < 1e-8, "piece {piece} slot {slot}");
                let d_exact = a.drift_param_derivative(&p, piece, t, slot, 0);
                let d_fd = (a.drift_time_derivative(&hi, piece, t, 0)
                    - a.drift_time_derivative(&lo, piece, t, 0))
                    / (2.0 * h);
                assert!((d_fd - d_exact).abs() < 1e-8);
            }
        }
    }
}
