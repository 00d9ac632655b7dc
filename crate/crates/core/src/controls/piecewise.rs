use std::sync::Arc;

use super::{ControlAnsatz, Interval, SlotDescriptor};
use crate::{GoatError, Result};

/// Concatenation of single-piece analytic ansätze over consecutive
/// sub-intervals of `[0, T]`.
///
/// Each piece owns a contiguous block of the parameter vector, in piece order.
/// Pieces are evaluated at absolute time.
#[derive(Debug, Clone)]
pub struct PiecewiseAnalyticAnsatz {
    pieces: Vec<(Interval, Arc<dyn ControlAnsatz>)>,
    offsets: Vec<usize>,
    layout: Vec<SlotDescriptor>,
    n_controls: usize,
}

impl PiecewiseAnalyticAnsatz {
    pub fn new(pieces: Vec<(Interval, Arc<dyn ControlAnsatz>)>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| GoatError::InvalidArgument("at least one piece required".into()))?;
        if first.0.start != 0.0 {
            return Err(GoatError::InvalidArgument("first piece must start at 0".into()));
        }
        let n_controls = first.1.n_controls();
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut layout = Vec::new();
        for (i, (interval, sub)) in pieces.iter().enumerate() {
            if !(interval.end > interval.start) {
                return Err(GoatError::InvalidArgument(format!("piece {i} is empty")));
            }
            if i > 0 && interval.start != pieces[i - 1].0.end {
                return Err(GoatError::InvalidArgument(format!(
                    "piece {i} does not start where piece {} ends",
                    i - 1
                )));
            }
            if sub.n_controls() != n_controls {
                return Err(GoatError::DimensionMismatch {
                    context: "piece control count",
                    left: sub.n_controls(),
                    right: n_controls,
                });
            }
            if sub.pieces().len() != 1 {
                return Err(GoatError::InvalidArgument(format!(
                    "piece {i} must itself be analytic on a single interval"
                )));
            }
            if sub.duration() < interval.end {
                return Err(GoatError::InvalidArgument(format!(
                    "piece {i} ansatz is defined only up to t = {}",
                    sub.duration()
                )));
            }
            offsets.push(layout.len());
            layout.extend_from_slice(sub.layout());
        }
        Ok(Self {
            pieces,
            offsets,
            layout,
            n_controls,
        })
    }

    fn block(&self, piece: usize) -> std::ops::Range<usize> {
        let start = self.offsets[piece];
        start..start + self.pieces[piece].1.n_slots()
    }
}

impl ControlAnsatz for PiecewiseAnalyticAnsatz {
    fn n_controls(&self) -> usize {
        self.n_controls
    }

    fn duration(&self) -> f64 {
        self.pieces.last().unwrap().0.end
    }

    fn layout(&self) -> &[SlotDescriptor] {
        &self.layout
    }

    fn pieces(&self) -> Vec<Interval> {
        self.pieces.iter().map(|(i, _)| *i).collect()
    }

    fn max_order(&self) -> usize {
        self.pieces.iter().map(|(_, a)| a.max_order()).min().unwrap()
    }

    fn piece_time_derivative(&self, params: &[f64], piece: usize, k: usize, t: f64, n: usize) -> f64 {
        let block = self.block(piece);
        self.pieces[piece].1.piece_time_derivative(&params[block], 0, k, t, n)
    }

    fn piece_param_derivative(
        &self,
        params: &[f64],
        piece: usize,
        k: usize,
        t: f64,
        slot: usize,
        n: usize,
    ) -> f64 {
        let block = self.block(piece);
        if !block.contains(&slot) {
            return 0.0;
        }
        let local = slot - block.start;
        self.pieces[piece].1.piece_param_derivative(&params[block], 0, k, t, local, n)
    }

    fn drift_time_derivative(&self, params: &[f64], piece: usize, t: f64, n: usize) -> f64 {
        let block = self.block(piece);
        self.pieces[piece].1.drift_time_derivative(&params[block], 0, t, n)
    }

    fn drift_param_derivative(&self, params: &[f64], piece: usize, t: f64, slot: usize, n: usize) -> f64 {
        let block = self.block(piece);
        if !block.contains(&slot) {
            return 0.0;
        }
        let local = slot - block.start;
        self.pieces[piece].1.drift_param_derivative(&params[block], 0, t, local, n)
    }

    fn slot_touches_drift(&self, slot: usize) -> bool {
        let piece = self.offsets.partition_point(|&o| o <= slot) - 1;
        self.pieces[piece].1.slot_touches_drift(slot - self.offsets[piece])
    }

    fn slot_active_on_piece(&self, slot: usize, piece: usize) -> bool {
        self.block(piece).contains(&slot)
    }
}
