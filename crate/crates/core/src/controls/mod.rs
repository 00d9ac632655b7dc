//! Analytic control ansätze `c_k(alpha, t)`.
//!
//! An ansatz exposes values, time derivatives of any order, parameter
//! derivatives and mixed time/parameter derivatives. Those feed the Taylor
//! hierarchy in [`crate::propagation`]. Each ansatz is analytic on a list of
//! pieces partitioning `[0, T]`; the `piece_*` methods evaluate the analytic
//! function of one piece and are valid on its closure, while the free
//! functions in this module resolve the piece from `t` and reject
//! derivatives requested exactly on an internal boundary.

mod fourier;
mod piecewise;
mod pwc;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use fourier::FourierAnsatz;
pub use piecewise::PiecewiseAnalyticAnsatz;
pub use pwc::PwcAnsatz;

use crate::{GoatError, Result};

/// Highest time-derivative order any ansatz serves by default. Matches the
/// largest supported Taylor order of the propagator.
pub const DEFAULT_MAX_ORDER: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotKind {
    Amplitude,
    Frequency,
    Phase,
    /// Constant value of a piecewise-constant slice.
    Value,
    /// Unnormalised log-width of a flexible slice.
    WidthLogit,
}

impl fmt::Display for SlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SlotKind::Amplitude => "amplitude",
            SlotKind::Frequency => "frequency",
            SlotKind::Phase => "phase",
            SlotKind::Value => "value",
            SlotKind::WidthLogit => "width-logit",
        };
        f.write_str(s)
    }
}

/// Ties one parameter index to the control, term and role it plays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotDescriptor {
    /// Owning control, or `None` when the slot reaches every control.
    pub control: Option<usize>,
    pub term: usize,
    pub kind: SlotKind,
    pub trainable: bool,
}

pub trait ControlAnsatz: Send + Sync + fmt::Debug {
    fn n_controls(&self) -> usize;

    fn duration(&self) -> f64;

    /// One descriptor per parameter slot, in parameter-vector order.
    fn layout(&self) -> &[SlotDescriptor];

    /// Partition of `[0, T]` into pieces on which the ansatz is analytic.
    fn pieces(&self) -> Vec<Interval>;

    fn max_order(&self) -> usize {
        DEFAULT_MAX_ORDER
    }

    /// `d^n/dt^n c_k` of the analytic function living on `piece`.
    fn piece_time_derivative(&self, params: &[f64], piece: usize, k: usize, t: f64, n: usize)
        -> f64;

    /// `d^n/dt^n d/d(alpha_slot) c_k` on `piece`. Ignores trainability.
    fn piece_param_derivative(
        &self,
        params: &[f64],
        piece: usize,
        k: usize,
        t: f64,
        slot: usize,
        n: usize,
    ) -> f64;

    /// Coefficient multiplying the drift Hamiltonian. Identically one except
    /// for ansätze that rescale time within a piece.
    fn drift_time_derivative(&self, _params: &[f64], _piece: usize, _t: f64, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    }

    fn drift_param_derivative(
        &self,
        _params: &[f64],
        _piece: usize,
        _t: f64,
        _slot: usize,
        _n: usize,
    ) -> f64 {
        0.0
    }

    fn slot_touches_drift(&self, _slot: usize) -> bool {
        false
    }

    /// Whether `slot` can have a nonzero derivative on `piece`.
    fn slot_active_on_piece(&self, _slot: usize, _piece: usize) -> bool {
        true
    }

    fn n_slots(&self) -> usize {
        self.layout().len()
    }

    fn trainable_slots(&self) -> Vec<usize> {
        self.layout()
            .iter()
            .enumerate()
            .filter(|(_, d)| d.trainable)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn analytic_pieces(ansatz: &dyn ControlAnsatz) -> Vec<Interval> {
    ansatz.pieces()
}

pub(crate) fn check_params(ansatz: &dyn ControlAnsatz, params: &[f64]) -> Result<()> {
    if params.len() != ansatz.n_slots() {
        return Err(GoatError::DimensionMismatch {
            context: "parameter vector",
            left: params.len(),
            right: ansatz.n_slots(),
        });
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(GoatError::NonFinite("parameter vector"));
    }
    Ok(())
}

/// Index of the piece serving time `t` for a derivative of order `n`.
///
/// Values (`n = 0`) on an internal boundary come from the later piece; the
/// final time `T` belongs to the last piece.
pub fn locate_piece(ansatz: &dyn ControlAnsatz, t: f64, n: usize) -> Result<usize> {
    let pieces = ansatz.pieces();
    let end = ansatz.duration();
    if !(0.0..=end).contains(&t) {
        return Err(GoatError::TimeOutOfRange { t, start: 0.0, end });
    }
    for (i, p) in pieces.iter().enumerate() {
        if i > 0 && t == p.start && n >= 1 {
            return Err(GoatError::BoundaryDerivative { t, order: n });
        }
        if t < p.end {
            return Ok(i);
        }
    }
    Ok(pieces.len() - 1)
}

fn check_control(ansatz: &dyn ControlAnsatz, k: usize) -> Result<()> {
    if k >= ansatz.n_controls() {
        return Err(GoatError::IndexOutOfRange {
            what: "control",
            index: k,
            len: ansatz.n_controls(),
        });
    }
    Ok(())
}

fn check_order(ansatz: &dyn ControlAnsatz, n: usize) -> Result<()> {
    if n > ansatz.max_order() {
        return Err(GoatError::InvalidArgument(format!(
            "derivative order {n} exceeds maximum {}",
            ansatz.max_order()
        )));
    }
    Ok(())
}

/// `c_k(alpha, t)`.
pub fn control_value(ansatz: &dyn ControlAnsatz, params: &[f64], k: usize, t: f64) -> Result<f64> {
    control_time_derivative(ansatz, params, k, t, 0)
}

/// `d^n/dt^n c_k(alpha, t)`.
pub fn control_time_derivative(
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    k: usize,
    t: f64,
    n: usize,
) -> Result<f64> {
    check_params(ansatz, params)?;
    check_control(ansatz, k)?;
    check_order(ansatz, n)?;
    let piece = locate_piece(ansatz, t, n)?;
    Ok(ansatz.piece_time_derivative(params, piece, k, t, n))
}

/// `d^n/dt^n d/d(alpha_slot) c_k(alpha, t)`; zero for frozen slots.
pub fn control_param_derivative(
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    k: usize,
    t: f64,
    slot: usize,
    n: usize,
) -> Result<f64> {
    check_params(ansatz, params)?;
    check_control(ansatz, k)?;
    check_order(ansatz, n)?;
    if slot >= ansatz.n_slots() {
        return Err(GoatError::IndexOutOfRange {
            what: "parameter slot",
            index: slot,
            len: ansatz.n_slots(),
        });
    }
    let piece = locate_piece(ansatz, t, n)?;
    if !ansatz.layout()[slot].trainable {
        return Ok(0.0);
    }
    Ok(ansatz.piece_param_derivative(params, piece, k, t, slot, n))
}

/// `sin(x + n*pi/2)` without accumulating the phase shift in floating point.
#[inline]
pub(crate) fn shifted_sin(x: f64, n: usize) -> f64 {
    match n % 4 {
        0 => x.sin(),
        1 => x.cos(),
        2 => -x.sin(),
        _ => -x.cos(),
    }
}
