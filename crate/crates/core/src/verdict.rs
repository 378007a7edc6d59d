//! Pass/fail verdicts with a located worst case.

use std::fmt;

/// Relative tolerance with an absolute floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { rel: 1e-9, abs: 1e-12 }
    }
}

impl Tol {
    pub fn new(rel: f64) -> Self {
        Tol { rel, abs: rel * 1e-3 }
    }

    /// `diff` measured against the larger of the compared magnitudes, with the
    /// floor chosen so that `margin >= -rel` iff `diff >= -max(rel * scale, abs)`.
    pub fn margin(&self, diff: f64, a: f64, b: f64) -> f64 {
        let floor = if self.rel > 0.0 { self.abs / self.rel } else { 1.0 };
        diff / a.abs().max(b.abs()).max(floor)
    }

    pub fn passes(&self, margin: f64) -> bool {
        margin >= -self.rel
    }
}

/// Where the worst comparison happened and its raw value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    Point { x: f64, value: f64 },
    /// Consecutive pair `(a, b)` of a one-dimensional grid.
    Pair { a: f64, b: f64, value: f64 },
    /// Two times compared at a fixed point.
    TimePair { t1: f64, t2: f64, x: f64, value: f64 },
    /// Rows `r1 < r2` and columns `c1 < c2` of a 2x2 minor.
    Window { r1: f64, r2: f64, c1: f64, c2: f64, value: f64 },
}

impl Witness {
    pub fn value(&self) -> f64 {
        match *self {
            Witness::Point { value, .. }
            | Witness::Pair { value, .. }
            | Witness::TimePair { value, .. }
            | Witness::Window { value, .. } => value,
        }
    }

    /// Time interval and point interval covered by the witness, when it has both.
    pub fn time_space_box(&self) -> Option<((f64, f64), (f64, f64))> {
        match *self {
            Witness::TimePair { t1, t2, x, .. } => Some(((t1, t2), (x, x))),
            Witness::Window { r1, r2, c1, c2, .. } => Some(((r1, r2), (c1, c2))),
            _ => None,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Witness::Point { x, value } => write!(f, "x={x} value={value:e}"),
            Witness::Pair { a, b, value } => write!(f, "({a}, {b}) value={value:e}"),
            Witness::TimePair { t1, t2, x, value } => write!(f, "t=({t1}, {t2}) x={x} value={value:e}"),
            Witness::Window { r1, r2, c1, c2, value } => {
                write!(f, "rows ({r1}, {r2}) cols ({c1}, {c2}) value={value:e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderVerdict {
    pub holds: bool,
    /// Smallest normalised margin seen; negative beyond the tolerance means failure.
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub checked: usize,
}

/// Running minimum of margins; order-independent as long as ties keep the
/// first witness in a fixed scan order.
#[derive(Debug, Clone)]
pub struct Accumulator {
    tol: Tol,
    worst: f64,
    witness: Option<Witness>,
    checked: usize,
}

impl Accumulator {
    pub fn new(tol: Tol) -> Self {
        Accumulator {
            tol,
            worst: f64::INFINITY,
            witness: None,
            checked: 0,
        }
    }

    pub fn push(&mut self, margin: f64, witness: Witness) {
        self.checked += 1;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if margin < self.worst {
            self.worst = margin;
            self.witness = Some(witness);
        }
    }

    pub fn merge(mut self, other: Accumulator) -> Accumulator {
        self.checked += other.checked;
        if other.worst < self.worst {
            self.worst = other.worst;
            self.witness = other.witness;
        }
        self
    }

    pub fn finish(self) -> OrderVerdict {
        let worst = if self.checked == 0 { 0.0 } else { self.worst };
        OrderVerdict {
            holds: self.tol.passes(worst),
            worst_violation: worst,
            witness: self.witness,
            checked: self.checked,
        }
    }
}
