//! Sampled integrated survival curves and their inversion to a measure.

use super::discrete::compensated_sum;
use super::{Discrete, Measure, Origin};
use crate::error::{Error, Result};

/// Samples `(x_i, C(x_i))` on an increasing grid, plus the asymptote
/// `l = lim C(x) + x` as `x -> -inf` (the mean of the law).
#[derive(Debug, Clone, PartialEq)]
pub struct IsfCurve {
    pub xs: Vec<f64>,
    pub cs: Vec<f64>,
    pub asymptote: f64,
}

impl IsfCurve {
    pub fn new(xs: Vec<f64>, cs: Vec<f64>, asymptote: f64) -> Self {
        IsfCurve { xs, cs, asymptote }
    }

    pub fn from_measure(mu: &Measure, xs: &[f64]) -> Result<Self> {
        let cs = xs.iter().map(|&x| mu.isf(x)).collect::<Result<Vec<_>>>()?;
        Ok(IsfCurve::new(xs.to_vec(), cs, mu.mean()?))
    }

    fn scale(&self) -> f64 {
        let first = self.cs.first().copied().unwrap_or(0.0);
        first.abs().max((self.asymptote - self.xs[0]).abs()).max(f64::MIN_POSITIVE)
    }

    /// Checks shape invariants and returns the chord slopes.
    fn validate(&self) -> Result<Vec<f64>> {
        let n = self.xs.len();
        if n < 2 || self.cs.len() != n {
            return Err(Error::InvalidIsf(format!("need matching grids of length >= 2 ({} x, {} C)", n, self.cs.len())));
        }
        if self.xs.iter().chain(&self.cs).any(|v| !v.is_finite()) || !self.asymptote.is_finite() {
            return Err(Error::InvalidIsf("non-finite sample".into()));
        }
        if let Some(i) = self.xs.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIsf(format!("x grid not increasing at index {}", i + 1)));
        }
        let tol = 1e-10 * self.scale();
        if let Some(i) = self.cs.iter().position(|&c| c < -tol) {
            return Err(Error::InvalidIsf(format!("negative value at x={}", self.xs[i])));
        }
        let slopes: Vec<f64> = (0..n - 1)
            .map(|i| (self.cs[i + 1] - self.cs[i]) / (self.xs[i + 1] - self.xs[i]))
            .collect();
        for (i, w) in self.cs.windows(2).enumerate() {
            if w[1] > w[0] + tol {
                return Err(Error::InvalidIsf(format!("increasing between x={} and x={}", self.xs[i], self.xs[i + 1])));
            }
        }
        for i in 1..slopes.len() {
            let h = 0.5 * (self.xs[i + 1] - self.xs[i - 1]);
            if (slopes[i] - slopes[i - 1]) * h < -tol {
                return Err(Error::InvalidIsf(format!("second difference negative at x={}", self.xs[i])));
            }
        }
        if slopes[0] < -1.0 - 1e-10 {
            return Err(Error::InvalidIsf(format!("slope {} below -1 at the left end", slopes[0])));
        }
        // C(x) >= E[X] - x for every x.
        let gap = self.cs[0] + self.xs[0] - self.asymptote;
        if gap < -tol {
            return Err(Error::InvalidIsf(format!(
                "left end {} lies below the asymptote {} - x",
                self.cs[0], self.asymptote
            )));
        }
        let last = slopes[slopes.len() - 1];
        if self.cs[n - 1] > tol && last >= 0.0 {
            return Err(Error::InvalidIsf("curve flattens above zero at the right end".into()));
        }
        Ok(slopes)
    }
}

/// Recovers the law whose integrated survival function interpolates `curve`.
///
/// Atoms sit at the grid points, with masses equal to the slope increments.
/// Leftover tail mass is placed on one atom left of the grid (so the mean
/// matches the asymptote) and one atom right of it (so `C` reaches zero).
pub fn measure_from_isf(curve: &IsfCurve) -> Result<Measure> {
    let slopes = curve.validate()?;
    let xs = &curve.xs;
    let cs = &curve.cs;
    let n = xs.len();
    let tol = 1e-10 * curve.scale();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n + 2);

    let gap = cs[0] + xs[0] - curve.asymptote;
    let first_mass = 1.0 + slopes[0].max(-1.0);
    if gap > tol {
        if first_mass <= 0.0 {
            return Err(Error::InvalidIsf("left tail mass cannot reach the asymptote".into()));
        }
        pairs.push((xs[0] - gap / first_mass, first_mass));
    } else {
        pairs.push((xs[0], first_mass));
    }
    for i in 1..n - 1 {
        pairs.push((xs[i], slopes[i] - slopes[i - 1]));
    }
    let last = slopes[n - 2].min(0.0);
    let c_last = cs[n - 1].max(0.0);
    let h = xs[n - 1] - xs[n - 2];
    if c_last > 0.0 && last < 0.0 && c_last / -last < h {
        // an offset far below the grid spacing is not representable next to
        // x_last; push the atom out by one spacing and keep the rest at x_last
        let a = xs[n - 1] + h;
        let m = c_last / (a - xs[n - 1]);
        pairs.push((xs[n - 1], -last - m));
        pairs.push((a, m));
    } else if c_last > 0.0 && last < 0.0 {
        pairs.push((xs[n - 1] + c_last / -last, -last));
    } else {
        pairs.push((xs[n - 1], -last));
    }

    for p in &mut pairs {
        if p.1 < 0.0 {
            p.1 = 0.0;
        }
    }
    let total = compensated_sum(pairs.iter().map(|p| p.1));
    if !(total > 0.0) {
        return Err(Error::InvalidIsf("curve carries no mass".into()));
    }
    for p in &mut pairs {
        p.1 /= total;
    }
    pairs.retain(|p| p.1 > 0.0);
    Ok(Measure::from_discrete(Discrete::from_pairs(pairs, Origin::Grid)?))
}
