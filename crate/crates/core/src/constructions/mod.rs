//! Builders for families that increase in the MRL order.
//!
//! Every builder returns a [`TimeFamily`](crate::measures::TimeFamily); the
//! marginal laws carry their own samplers through [`Measure::draw`](crate::measures::Measure::draw).

pub mod censor;
pub mod censored_plus;
pub mod closure;
pub mod phi;
pub mod scale;
pub mod subordinate;

use std::sync::Arc;

pub use censor::{censor_composed, censor_discrete, censor_step, censor_transform, four_case_minor, CensorSpec};
pub use censored_plus::{censored_plus_family, censored_plus_psi, CensoredPlus, Varphi};
pub use closure::{interpolate_family, log_scale_tp2, scale_mixture_family, translate_family};
pub use phi::{phi_family, ExpTilt, IdentityPhi, PhiSpec, PowerScale, ShiftConcave};
pub use scale::scale_family;
pub use subordinate::{subordinate, Clock, SubordinationSpec};

use crate::error::{Error, Result};

/// Deterministic real function of the time parameter.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub(crate) fn require_non_decreasing(what: &str, f: &dyn Fn(f64) -> f64, ts: &[f64]) -> Result<()> {
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    if let Some(k) = vals.iter().position(|v| v.is_nan()) {
        return Err(Error::PreconditionFailed(format!("{what} is undefined at {}", ts[k])));
    }
    for i in 1..vals.len() {
        if vals[i] < vals[i - 1] {
            return Err(Error::PreconditionFailed(format!(
                "{what} decreases between {} and {} ({} > {})",
                ts[i - 1],
                ts[i],
                vals[i - 1],
                vals[i]
            )));
        }
    }
    Ok(())
}

/// Solves `f(y) = z` for an increasing `f`, starting from the bracket hint
/// `[lo, hi]` and widening it geometrically until the sign changes.
/// Bisection narrows the bracket, then a safeguarded secant finishes to a
/// relative width of 1e-12.
pub fn solve_increasing(f: &dyn Fn(f64) -> f64, z: f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = if lo < hi { (lo, hi) } else { (hi - 1.0, hi) };
    let mut w = (hi - lo).max(1.0);
    let mut flo = f(lo) - z;
    for _ in 0..2000 {
        if !(flo > 0.0) || !lo.is_finite() {
            break;
        }
        hi = lo;
        lo -= w;
        w *= 2.0;
        flo = f(lo) - z;
    }
    let mut fhi = f(hi) - z;
    w = (hi - lo).max(1.0);
    for _ in 0..2000 {
        if !(fhi < 0.0) || !hi.is_finite() {
            break;
        }
        lo = hi;
        flo = fhi;
        hi += w;
        w *= 2.0;
        fhi = f(hi) - z;
    }
    if flo >= 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    let done = |lo: f64, hi: f64| hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) || !(lo < hi);
    // bisection until the bracket is small relative to its position
    for _ in 0..400 {
        if done(lo, hi) || hi - lo <= 1e-3 * lo.abs().max(hi.abs()).max(1e-12) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid) - z;
        if fm.is_nan() {
            break;
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    // Illinois-style false position
    let mut side = 0i8;
    for _ in 0..200 {
        if done(lo, hi) || !(fhi.is_finite() && flo.is_finite()) {
            break;
        }
        let mut x = hi - fhi * (hi - lo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x) - z;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    lo
}
