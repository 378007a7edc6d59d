//! `varphi((Y - g(lambda))^+) / E[varphi((Y - g(lambda))^+)]` for a concave
//! increasing `varphi` with `varphi(0) = 0`.

use std::fmt;
use std::sync::Arc;

use super::phi::require_log_concave_survival;
use super::{require_non_decreasing, RealFn};
use crate::error::{Error, Hypothesis, Result};
use crate::grids::{linspace, quantile_window};
use crate::measures::{Measure, MonotoneMap, TimeFamily};
use crate::quadrature::integrate_pieces;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Varphi {
    Identity,
    Arctan,
    Log1p,
}

impl Varphi {
    pub fn parse(name: &str) -> Option<Varphi> {
        match name {
            "identity" | "id" => Some(Varphi::Identity),
            "arctan" | "atan" => Some(Varphi::Arctan),
            "log1p" => Some(Varphi::Log1p),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Varphi::Identity => "identity",
            Varphi::Arctan => "arctan",
            Varphi::Log1p => "log1p",
        }
    }

    pub fn value(self, s: f64) -> f64 {
        match self {
            Varphi::Identity => s,
            Varphi::Arctan => s.atan(),
            Varphi::Log1p => s.ln_1p(),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Varphi::Identity => 1.0,
            Varphi::Arctan => 1.0 / (1.0 + s * s),
            Varphi::Log1p => 1.0 / (1.0 + s),
        }
    }

    /// Inverse on `[0, sup)`.
    pub fn inverse(self, v: f64) -> f64 {
        match self {
            Varphi::Identity => v,
            Varphi::Arctan => {
                if v >= std::f64::consts::FRAC_PI_2 {
                    f64::INFINITY
                } else {
                    v.tan()
                }
            }
            Varphi::Log1p => v.exp_m1(),
        }
    }

    /// `lim_{s -> inf} varphi(s)`.
    pub fn sup(self) -> f64 {
        match self {
            Varphi::Arctan => std::f64::consts::FRAC_PI_2,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone)]
pub struct CensoredPlus {
    y: Measure,
    varphi: Varphi,
    g: RealFn,
}

impl fmt::Debug for CensoredPlus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CensoredPlus({}, {})", self.varphi.name(), self.y.name())
    }
}

#[derive(Debug)]
struct PlusMap {
    varphi: Varphi,
    g: f64,
    h: f64,
    range: (f64, f64),
}

impl MonotoneMap for PlusMap {
    fn value(&self, u: f64) -> f64 {
        if u <= self.g {
            0.0
        } else {
            self.varphi.value(u - self.g) / self.h
        }
    }

    fn derivative(&self, u: f64) -> f64 {
        if u <= self.g {
            0.0
        } else {
            self.varphi.derivative(u - self.g) / self.h
        }
    }

    fn inverse(&self, z: f64) -> f64 {
        if z <= 0.0 {
            self.g
        } else {
            self.g + self.varphi.inverse(self.h * z)
        }
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.g]
    }
}

impl CensoredPlus {
    pub fn new(y: Measure, varphi: Varphi, g: RealFn) -> Self {
        CensoredPlus { y, varphi, g }
    }

    /// `h(lambda) = int_0^tau m(varphi^{-1}(s) + g(lambda)) ds`, `m` the survival of `Y`.
    pub fn h(&self, lambda: f64) -> Result<f64> {
        let g = (self.g)(lambda);
        let top = self.varphi.sup();
        let upper = self.y.upper_support();
        // beyond varphi(upper - g) the integrand vanishes
        let end = if upper.is_finite() {
            if upper <= g {
                return Ok(0.0);
            }
            self.varphi.value(upper - g).min(top)
        } else {
            top
        };
        integrate_pieces(|s| self.y.survival(self.varphi.inverse(s) + g), 0.0, end, &[])
    }

    pub fn marginal(&self, lambda: f64) -> Result<Measure> {
        let h = self.h(lambda)?;
        if !(h > 0.0) {
            return Err(Error::DegenerateScale { lambda });
        }
        let g = (self.g)(lambda);
        let (lo, hi) = (self.y.lower_support(), self.y.upper_support());
        let value = |u: f64| if u <= g { 0.0 } else { self.varphi.value(u - g) / h };
        let range = (
            value(lo),
            if hi.is_finite() { value(hi) } else { self.varphi.sup() / h },
        );
        Measure::pushforward(
            self.y.clone(),
            Arc::new(PlusMap {
                varphi: self.varphi,
                g,
                h,
                range,
            }),
        )
    }

    /// Hardy-Littlewood function of the marginal at `lambda` from the level-space
    /// integral of `m(rho(lambda, z))`, `rho(lambda, z) = varphi^{-1}(h z) + g`.
    pub fn psi(&self, lambda: f64, x: f64) -> Result<f64> {
        let h = self.h(lambda)?;
        if !(h > 0.0) {
            return Err(Error::DegenerateScale { lambda });
        }
        let g = (self.g)(lambda);
        let top = self.varphi.sup() / h;
        if x <= 0.0 {
            return Ok(1.0);
        }
        if x >= top {
            return Ok(x);
        }
        let rho = |z: f64| self.varphi.inverse(h * z) + g;
        let m0 = self.y.survival(rho(x));
        if m0 <= 0.0 {
            return Ok(x);
        }
        let tail = integrate_pieces(|z| self.y.survival(rho(z)), x, top, &[])?;
        Ok(x + tail / m0)
    }
}

/// Family of `varphi((Y - g(lambda))^+) / h(lambda)`; every marginal has mean one.
pub fn censored_plus_family(y: Measure, varphi: Varphi, g: RealFn, times: Vec<f64>) -> Result<TimeFamily> {
    let (lo, hi) = quantile_window(&y, 1e-6);
    require_log_concave_survival(&y, &linspace(lo, hi, 129))?;
    require_non_decreasing("shift g", &*g, &times)?;
    let span = (hi - lo).max(1.0);
    let ss = linspace(0.0, span, 129);
    for w in ss.windows(3) {
        let d2 = varphi.value(w[2]) - 2.0 * varphi.value(w[1]) + varphi.value(w[0]);
        if d2 > 1e-12 * varphi.value(w[2]).abs().max(1.0) {
            return Err(Error::HypothesisViolated {
                which: Hypothesis::Concavity,
                detail: format!("{} is convex near {}", varphi.name(), w[1]),
            });
        }
    }
    match y.expect(&|v| varphi.value(v.abs())) {
        Ok(v) if v.is_finite() => {}
        other => {
            return Err(Error::HypothesisViolated {
                which: Hypothesis::Integrability,
                detail: format!("E[varphi(|Y|)] = {other:?}"),
            })
        }
    }
    let cp = CensoredPlus::new(y, varphi, g);
    for &t in &times {
        if !(cp.h(t)? > 0.0) {
            return Err(Error::DegenerateScale { lambda: t });
        }
    }
    let label = format!("censored_plus[{}]({})", varphi.name(), cp.y.name());
    TimeFamily::new(label, Arc::new(move |l| cp.marginal(l)), times)
}

/// `Psi` of the family built by [`censored_plus_family`], evaluated from its
/// closed-form level-space integral.
pub fn censored_plus_psi(y: &Measure, varphi: Varphi, g: RealFn, lambda: f64, x: f64) -> Result<f64> {
    CensoredPlus::new(y.clone(), varphi, g).psi(lambda, x)
}
