//! `h(t) * Y` for a centered `Y` and a non-decreasing scale `h >= 0`.

use std::sync::Arc;

use super::{require_non_decreasing, RealFn};
use crate::error::{Error, Result};
use crate::measures::{Measure, TimeFamily};
use crate::mrl::require_centered;
use crate::verdict::Tol;

/// Marginal at `t` is the law of `h(t) Y`, so `C(t, x) = h(t) C_Y(x / h(t))`
/// and `h(t) = 0` gives the point mass at zero.
pub fn scale_family(y: Measure, h: RealFn, times: Vec<f64>) -> Result<TimeFamily> {
    require_centered(&y, Tol::default())?;
    if let Some(&t) = times.iter().find(|&&t| !(h(t) >= 0.0)) {
        return Err(Error::PreconditionFailed(format!("scale h({t}) = {} is negative", h(t))));
    }
    require_non_decreasing("scale h", &*h, &times)?;
    let label = format!("scale({})", y.name());
    TimeFamily::new(label, Arc::new(move |t| Measure::affine(y.clone(), h(t), 0.0)), times)
}
