//! Integrable probability laws on the real line.
//!
//! All tail quantities use the closed interval: `survival(x) = P(X >= x)`.
//! `survival_open(x) = P(X > x)` is available where the difference matters.

pub mod analytic;
pub mod config;
pub mod discrete;
pub mod family;
pub mod isf;

use std::cell::RefCell;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::integrate_pieces;
use crate::rng::{open01, StreamId};

pub use analytic::Analytic;
pub use discrete::{exact_sum, Discrete, Origin};
pub use family::TimeFamily;
pub use isf::{measure_from_isf, IsfCurve};

/// Increasing map pushed through a continuous law.
pub trait MonotoneMap: Send + Sync + fmt::Debug {
    fn value(&self, y: f64) -> f64;
    fn derivative(&self, y: f64) -> f64;
    /// Largest `y` with `value(y) <= z`, for `z` in `[lo, hi)` of [`range`](Self::range).
    fn inverse(&self, z: f64) -> f64;
    /// Infimum and supremum of the map over the base support.
    fn range(&self) -> (f64, f64);
    /// Points where the derivative jumps.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

pub type LawFn = Arc<dyn Fn(f64) -> Result<Measure> + Send + Sync>;
pub type PdfFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Measure {
    Analytic(Analytic),
    Discrete(Arc<Discrete>),
    /// Law of `scale * Y + shift`, `scale > 0`.
    Affine { base: Arc<Measure>, scale: f64, shift: f64 },
    Mixture(Arc<Mixture>),
    Pushforward(Arc<Pushforward>),
    Compound(Arc<Compound>),
    Censored(Arc<Censored>),
    Density(Arc<DensityLaw>),
}

pub struct Mixture {
    parts: Vec<(f64, Measure)>,
}

pub struct Pushforward {
    base: Measure,
    map: Arc<dyn MonotoneMap>,
    mean: OnceLock<Result<f64>>,
}

/// `E[mu_Lambda]` for a random parameter `Lambda`.
pub struct Compound {
    mixing: Measure,
    family: LawFn,
    label: String,
    mean: OnceLock<Result<f64>>,
}

/// Base law with the mass of each `[a_j, a_{j+1}]` split onto the endpoints.
pub struct Censored {
    base: Measure,
    cuts: Vec<f64>,
    cvals: Vec<f64>,
}

pub struct DensityLaw {
    label: String,
    pdf: PdfFn,
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    mean: OnceLock<Result<f64>>,
    table: OnceLock<Vec<(f64, f64)>>,
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Best available value of a fallible scalar; quadrature failures keep their estimate.
pub(crate) fn or_estimate(r: Result<f64>) -> f64 {
    match r {
        Ok(v) => v,
        Err(Error::QuadratureFailure { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

fn integrate_try(g: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let v = integrate_pieces(
        |y| {
            if err.borrow().is_some() {
                return 0.0;
            }
            match g(y) {
                Ok(v) => v,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        a,
        b,
        breaks,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    v
}

impl Measure {
    pub fn analytic(law: Analytic) -> Result<Measure> {
        law.validate()?;
        Ok(Measure::Analytic(law))
    }

    pub fn dirac(x: f64) -> Measure {
        Measure::Discrete(Arc::new(Discrete::dirac(x)))
    }

    pub fn atomic(atoms: Vec<f64>, masses: Vec<f64>) -> Result<Measure> {
        Ok(Measure::Discrete(Arc::new(Discrete::new(atoms, masses, Origin::Atomic)?)))
    }

    pub fn grid(points: Vec<f64>, weights: Vec<f64>) -> Result<Measure> {
        Ok(Measure::Discrete(Arc::new(Discrete::new(points, weights, Origin::Grid)?)))
    }

    pub fn from_discrete(d: Discrete) -> Measure {
        Measure::Discrete(Arc::new(d))
    }

    /// Law of `scale * Y + shift`. A zero scale collapses to a point mass.
    pub fn affine(base: Measure, scale: f64, shift: f64) -> Result<Measure> {
        if !(scale >= 0.0) || !scale.is_finite() || !shift.is_finite() {
            return Err(Error::InvalidMeasure(format!("bad affine map {scale} * y + {shift}")));
        }
        if scale == 0.0 {
            return Ok(Measure::dirac(shift + scale * base.mean()?));
        }
        Ok(match base {
            Measure::Discrete(d) => Measure::Discrete(Arc::new(Discrete::new(
                d.atoms().iter().map(|&a| scale * a + shift).collect(),
                d.masses().to_vec(),
                d.origin(),
            )?)),
            Measure::Affine { base, scale: s0, shift: b0 } => Measure::Affine {
                base,
                scale: scale * s0,
                shift: scale * b0 + shift,
            },
            other => Measure::Affine {
                base: Arc::new(other),
                scale,
                shift,
            },
        })
    }

    pub fn mixture(parts: Vec<(f64, Measure)>) -> Result<Measure> {
        if parts.is_empty() || parts.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::InvalidMeasure("mixture weights must be nonnegative".into()));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("mixture weights sum to {total}")));
        }
        Ok(Measure::Mixture(Arc::new(Mixture { parts })))
    }

    pub fn pushforward(base: Measure, map: Arc<dyn MonotoneMap>) -> Result<Measure> {
        if !base.is_continuous() {
            return Err(Error::InvalidMeasure("pushforward needs a continuous base law".into()));
        }
        Ok(Measure::Pushforward(Arc::new(Pushforward {
            base,
            map,
            mean: OnceLock::new(),
        })))
    }

    /// Law of `Z` where `Z | Lambda = l` has law `family(l)` and `Lambda ~ mixing`.
    pub fn compound(mixing: Measure, family: LawFn, label: impl Into<String>) -> Measure {
        Measure::Compound(Arc::new(Compound {
            mixing,
            family,
            label: label.into(),
            mean: OnceLock::new(),
        }))
    }

    /// Base law with the mass on each `[cuts[j], cuts[j+1]]` moved to the endpoints,
    /// preserving the conditional mean on every cell.
    pub fn censored(base: Measure, cuts: Vec<f64>) -> Result<Measure> {
        if cuts.len() < 2 || cuts.windows(2).any(|w| !(w[0] < w[1])) || cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("censoring cuts must be finite and strictly increasing".into()));
        }
        let cvals = cuts.iter().map(|&a| base.isf(a)).collect::<Result<Vec<_>>>()?;
        Ok(Measure::Censored(Arc::new(Censored { base, cuts, cvals })))
    }

    /// Law with density `pdf` on `[lo, hi]`; the density must integrate to one.
    pub fn density_law(label: impl Into<String>, pdf: PdfFn, lo: f64, hi: f64, breaks: Vec<f64>) -> Result<Measure> {
        if !(lo < hi) {
            return Err(Error::InvalidMeasure("empty density support".into()));
        }
        let mass = integrate_pieces(|y| pdf(y), lo, hi, &breaks)?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidMeasure(format!("density integrates to {mass}")));
        }
        Ok(Measure::Density(Arc::new(DensityLaw {
            label: label.into(),
            pdf,
            lo,
            hi,
            breaks,
            mean: OnceLock::new(),
            table: OnceLock::new(),
        })))
    }

    pub fn name(&self) -> String {
        match self {
            Measure::Analytic(a) => a.name(),
            Measure::Discrete(d) => {
                let kind = match d.origin() {
                    Origin::Atomic => "atomic",
                    Origin::Grid => "grid",
                };
                format!("{kind}({} points)", d.atoms().len())
            }
            Measure::Affine { base, scale, shift } => format!("{scale}*{}+{shift}", base.name()),
            Measure::Mixture(m) => format!("mixture({} parts)", m.parts.len()),
            Measure::Pushforward(p) => format!("pushforward({:?}, {})", p.map, p.base.name()),
            Measure::Compound(c) => format!("compound({}, {})", c.label, c.mixing.name()),
            Measure::Censored(c) => format!("censored({}, {:?})", c.base.name(), c.cuts),
            Measure::Density(d) => d.label.clone(),
        }
    }

    pub fn as_discrete(&self) -> Option<&Discrete> {
        match self {
            Measure::Discrete(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            Measure::Analytic(_) | Measure::Density(_) => true,
            Measure::Affine { base, .. } => base.is_continuous(),
            Measure::Mixture(m) => m.parts.iter().all(|(_, p)| p.is_continuous()),
            _ => false,
        }
    }

    /// Density at `x`, when the law has one in closed form.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Measure::Analytic(a) => Some(a.pdf(x)),
            Measure::Density(d) => Some(if x < d.lo || x > d.hi { 0.0 } else { (d.pdf)(x) }),
            Measure::Affine { base, scale, shift } => base.density((x - shift) / scale).map(|v| v / scale),
            Measure::Mixture(m) => m
                .parts
                .iter()
                .map(|(w, p)| p.density(x).map(|v| w * v))
                .sum::<Option<f64>>(),
            _ => None,
        }
    }

    /// Known atom locations (exact for discrete and censored laws).
    pub fn atom_hints(&self) -> Vec<f64> {
        match self {
            Measure::Discrete(d) => d
                .atoms()
                .iter()
                .zip(d.masses())
                .filter(|(_, &m)| m > 0.0)
                .map(|(&a, _)| a)
                .collect(),
            Measure::Affine { base, scale, shift } => base.atom_hints().iter().map(|a| scale * a + shift).collect(),
            Measure::Mixture(m) => {
                let mut v: Vec<f64> = m.parts.iter().flat_map(|(_, p)| p.atom_hints()).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            Measure::Censored(c) => {
                let mut v = c.base.atom_hints();
                v.retain(|&a| a < c.cuts[0] || a > c.cuts[c.cuts.len() - 1]);
                v.extend(c.cuts.iter().copied());
                v.sort_by(f64::total_cmp);
                v
            }
            _ => Vec::new(),
        }
    }

    /// `P(X >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Measure::Analytic(a) => a.survival(x),
            Measure::Discrete(d) => d.survival(x),
            Measure::Affine { base, scale, shift } => base.survival((x - shift) / scale),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| w * p.survival(x)).sum::<f64>().min(1.0),
            Measure::Pushforward(p) => {
                let (lo, hi) = p.map.range();
                if x <= lo {
                    1.0
                } else if x >= hi {
                    0.0
                } else {
                    p.base.survival(p.map.inverse(x))
                }
            }
            Measure::Compound(c) => or_estimate(c.mixing.expect_try(&|l| Ok((c.family)(l)?.survival(x)))).clamp(0.0, 1.0),
            Measure::Censored(c) => {
                let k = c.cuts.len() - 1;
                if x <= c.cuts[0] || x > c.cuts[k] {
                    c.base.survival(x)
                } else {
                    let j = c.cuts.partition_point(|&a| a < x) - 1;
                    c.slope(j)
                }
            }
            Measure::Density(d) => d.survival(x),
        }
    }

    /// `E[X | X >= x]` for laws where it has a finite closed form.
    pub fn tail_barycenter(&self, x: f64) -> Option<f64> {
        match self {
            Measure::Discrete(d) => d.tail_barycenter(x),
            Measure::Affine { base, scale, shift } => base.tail_barycenter((x - shift) / scale).map(|p| scale * p + shift),
            _ => None,
        }
    }

    /// `P(X < x)`, computed without cancellation where the law allows it.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Measure::Analytic(a) => a.cdf(x),
            Measure::Affine { base, scale, shift } => base.cdf((x - shift) / scale),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| w * p.cdf(x)).sum::<f64>().min(1.0),
            Measure::Pushforward(p) => {
                let (lo, hi) = p.map.range();
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    p.base.cdf(p.map.inverse(x))
                }
            }
            Measure::Discrete(d) => {
                let i = d.atoms().partition_point(|&a| a < x);
                exact_sum(d.masses()[..i].iter().copied()).min(1.0)
            }
            Measure::Compound(c) => or_estimate(c.mixing.expect_try(&|l| Ok((c.family)(l)?.cdf(x)))).clamp(0.0, 1.0),
            _ => 1.0 - self.survival(x),
        }
    }

    /// `P(X > x)`.
    pub fn survival_open(&self, x: f64) -> f64 {
        match self {
            Measure::Discrete(d) => d.survival_open(x),
            Measure::Affine { base, scale, shift } => base.survival_open((x - shift) / scale),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| w * p.survival_open(x)).sum::<f64>().min(1.0),
            Measure::Pushforward(p) => {
                let (lo, hi) = p.map.range();
                if x < lo {
                    1.0
                } else if x >= hi {
                    0.0
                } else {
                    p.base.survival(p.map.inverse(x))
                }
            }
            Measure::Compound(c) => {
                or_estimate(c.mixing.expect_try(&|l| Ok((c.family)(l)?.survival_open(x)))).clamp(0.0, 1.0)
            }
            Measure::Censored(c) => {
                let k = c.cuts.len() - 1;
                if x < c.cuts[0] || x >= c.cuts[k] {
                    c.base.survival_open(x)
                } else {
                    let j = c.cuts.partition_point(|&a| a <= x) - 1;
                    c.slope(j)
                }
            }
            Measure::Analytic(_) | Measure::Density(_) => self.survival(x),
        }
    }

    /// Integrated survival function `C(x) = E[(X - x)^+]`.
    pub fn isf(&self, x: f64) -> Result<f64> {
        match self {
            Measure::Analytic(a) => Ok(a.isf(x)),
            Measure::Discrete(d) => Ok(d.isf(x)),
            Measure::Affine { base, scale, shift } => Ok(scale * base.isf((x - shift) / scale)?),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| Ok(w * p.isf(x)?)).sum(),
            Measure::Pushforward(p) => p.isf(x, self),
            Measure::Compound(c) => c.mixing.expect_try(&|l| (c.family)(l)?.isf(x)),
            Measure::Censored(c) => {
                let k = c.cuts.len() - 1;
                if x < c.cuts[0] || x > c.cuts[k] {
                    c.base.isf(x)
                } else if x == c.cuts[k] {
                    Ok(c.cvals[k])
                } else {
                    let j = c.cuts.partition_point(|&a| a <= x) - 1;
                    let w = (x - c.cuts[j]) / (c.cuts[j + 1] - c.cuts[j]);
                    Ok(c.cvals[j] + w * (c.cvals[j + 1] - c.cvals[j]))
                }
            }
            Measure::Density(d) => d.isf(x),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            Measure::Analytic(a) => Ok(a.mean()),
            Measure::Discrete(d) => Ok(d.mean()),
            Measure::Affine { base, scale, shift } => Ok(scale * base.mean()? + shift),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| Ok(w * p.mean()?)).sum(),
            Measure::Pushforward(p) => p
                .mean
                .get_or_init(|| p.base.expect(&|y| p.map.value(y)))
                .clone(),
            Measure::Compound(c) => c
                .mean
                .get_or_init(|| c.mixing.expect_try(&|l| (c.family)(l)?.mean()))
                .clone(),
            Measure::Censored(c) => c.base.mean(),
            Measure::Density(d) => d.mean(),
        }
    }

    /// `inf { z : P(X >= z) = 0 }`.
    pub fn upper_support(&self) -> f64 {
        match self {
            Measure::Analytic(a) => a.upper_support(),
            Measure::Discrete(d) => d.upper_support(),
            Measure::Affine { base, scale, shift } => scale * base.upper_support() + shift,
            Measure::Mixture(m) => m
                .parts
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(_, p)| p.upper_support())
                .fold(f64::NEG_INFINITY, f64::max),
            Measure::Pushforward(p) => p.map.range().1,
            Measure::Compound(c) => {
                let hi = c.mixing.upper_support();
                if hi.is_finite() {
                    (c.family)(hi).map(|m| m.upper_support()).unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                }
            }
            Measure::Censored(c) => {
                let b = c.base.upper_support();
                let k = c.cuts.len() - 1;
                if b < c.cuts[0] || b > c.cuts[k] {
                    b
                } else {
                    c.cuts[c.cuts.partition_point(|&a| a < b)]
                }
            }
            Measure::Density(d) => d.hi,
        }
    }

    pub fn lower_support(&self) -> f64 {
        match self {
            Measure::Analytic(a) => a.lower_support(),
            Measure::Discrete(d) => d.lower_support(),
            Measure::Affine { base, scale, shift } => scale * base.lower_support() + shift,
            Measure::Mixture(m) => m
                .parts
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(_, p)| p.lower_support())
                .fold(f64::INFINITY, f64::min),
            Measure::Pushforward(p) => p.map.range().0,
            Measure::Compound(_) => f64::NEG_INFINITY,
            Measure::Censored(c) => {
                let a = c.base.lower_support();
                let k = c.cuts.len() - 1;
                if a < c.cuts[0] || a > c.cuts[k] {
                    a
                } else {
                    c.cuts[c.cuts.partition_point(|&z| z <= a) - 1]
                }
            }
            Measure::Density(d) => d.lo,
        }
    }

    /// Left-continuous inverse of the distribution function, `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Measure::Analytic(a) => a.quantile(p),
            Measure::Discrete(d) => d.quantile(p),
            Measure::Affine { base, scale, shift } => scale * base.quantile(p) + shift,
            Measure::Pushforward(pf) => pf.map.value(pf.base.quantile(p)),
            Measure::Density(d) => d.quantile(p),
            _ => self.numeric_quantile(p),
        }
    }

    fn numeric_quantile(&self, p: f64) -> f64 {
        let cdf = |x: f64| 1.0 - self.survival_open(x);
        let center = self.mean().unwrap_or(0.0);
        let mut lo = self.lower_support();
        let mut hi = self.upper_support();
        if !lo.is_finite() {
            let mut w = 1.0;
            lo = center - w;
            while cdf(lo) >= p && w < 1e300 {
                w *= 2.0;
                lo = center - w;
            }
        }
        if !hi.is_finite() {
            let mut w = 1.0;
            hi = center + w;
            while cdf(hi) < p && w < 1e300 {
                w *= 2.0;
                hi = center + w;
            }
        }
        if cdf(lo) >= p {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `E[e^{lambda X}]` in closed form where one is known.
    pub fn mgf(&self, lambda: f64) -> Option<f64> {
        match self {
            Measure::Analytic(a) => a.mgf(lambda),
            Measure::Discrete(d) => Some(d.expect(|y| (lambda * y).exp())),
            Measure::Affine { base, scale, shift } => base.mgf(lambda * scale).map(|m| m * (lambda * shift).exp()),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| p.mgf(lambda).map(|v| w * v)).sum(),
            _ => None,
        }
    }

    /// `E[f(X)]`.
    pub fn expect(&self, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        self.expect_try(&|y| Ok(f(y)))
    }

    /// `E[f(X)]` for a fallible integrand; the first error wins.
    pub fn expect_try(&self, f: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        match self {
            Measure::Analytic(a) => {
                let pdf = |y: f64| -> Result<f64> {
                    let d = a.pdf(y);
                    if d == 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(f(y)? * d)
                    }
                };
                integrate_try(&pdf, a.lower_support(), a.upper_support(), &a.kinks())
            }
            Measure::Discrete(d) => {
                let mut terms = Vec::with_capacity(d.atoms().len());
                for (&a, &m) in d.atoms().iter().zip(d.masses()) {
                    if m > 0.0 {
                        terms.push(f(a)? * m);
                    }
                }
                Ok(discrete::compensated_sum(terms))
            }
            Measure::Affine { base, scale, shift } => base.expect_try(&|y| f(scale * y + shift)),
            Measure::Mixture(m) => m.parts.iter().map(|(w, p)| Ok(w * p.expect_try(f)?)).sum(),
            Measure::Pushforward(p) => p.base.expect_try(&|y| f(p.map.value(y))),
            Measure::Compound(c) => c.mixing.expect_try(&|l| (c.family)(l)?.expect_try(f)),
            Measure::Censored(c) => {
                let k = c.cuts.len() - 1;
                c.base.expect_try(&|y| {
                    if y < c.cuts[0] || y > c.cuts[k] {
                        f(y)
                    } else {
                        let j = (c.cuts.partition_point(|&a| a <= y) - 1).min(k - 1);
                        let w = (y - c.cuts[j]) / (c.cuts[j + 1] - c.cuts[j]);
                        Ok((1.0 - w) * f(c.cuts[j])? + w * f(c.cuts[j + 1])?)
                    }
                })
            }
            Measure::Density(d) => {
                let g = |y: f64| -> Result<f64> {
                    let v = (d.pdf)(y);
                    if v == 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(f(y)? * v)
                    }
                };
                integrate_try(&g, d.lo, d.hi, &d.breaks)
            }
        }
    }

    /// One draw using the supplied generator.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        Ok(match self {
            Measure::Affine { base, scale, shift } => scale * base.draw(rng)? + shift,
            Measure::Mixture(m) => {
                let u = open01(rng);
                let mut acc = 0.0;
                let mut chosen = &m.parts[m.parts.len() - 1].1;
                for (w, p) in &m.parts {
                    acc += w;
                    if u <= acc {
                        chosen = p;
                        break;
                    }
                }
                chosen.draw(rng)?
            }
            Measure::Pushforward(p) => p.map.value(p.base.draw(rng)?),
            Measure::Compound(c) => {
                let l = c.mixing.draw(rng)?;
                (c.family)(l)?.draw(rng)?
            }
            Measure::Censored(c) => {
                let y = c.base.draw(rng)?;
                let k = c.cuts.len() - 1;
                if y < c.cuts[0] || y > c.cuts[k] {
                    y
                } else {
                    let j = (c.cuts.partition_point(|&a| a <= y) - 1).min(k - 1);
                    let w = (y - c.cuts[j]) / (c.cuts[j + 1] - c.cuts[j]);
                    if open01(rng) < w {
                        c.cuts[j + 1]
                    } else {
                        c.cuts[j]
                    }
                }
            }
            _ => self.quantile(open01(rng)),
        })
    }

    /// `n` i.i.d. draws from the stream `stream`.
    pub fn sample(&self, n: usize, stream: StreamId) -> Result<Vec<f64>> {
        let mut rng = stream.rng();
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

impl Pushforward {
    fn isf(&self, z: f64, outer: &Measure) -> Result<f64> {
        let (lo, hi) = self.map.range();
        if z >= hi {
            return Ok(0.0);
        }
        if z <= lo {
            return Ok(outer.mean()? - z);
        }
        let y = self.map.inverse(z);
        let breaks = self.map.breakpoints();
        let d = |u: f64| self.map.derivative(u);
        if self.base.survival(y) <= 0.5 {
            integrate_pieces(
                |u| {
                    let s = self.base.survival(u);
                    if s == 0.0 {
                        0.0
                    } else {
                        s * d(u)
                    }
                },
                y,
                self.base.upper_support(),
                &breaks,
            )
        } else {
            let left = integrate_pieces(
                |u| {
                    let c = self.base.cdf(u);
                    if c == 0.0 {
                        0.0
                    } else {
                        c * d(u)
                    }
                },
                self.base.lower_support(),
                y,
                &breaks,
            )?;
            Ok(outer.mean()? - z + left)
        }
    }
}

impl Censored {
    fn slope(&self, j: usize) -> f64 {
        ((self.cvals[j] - self.cvals[j + 1]) / (self.cuts[j + 1] - self.cuts[j])).clamp(0.0, 1.0)
    }
}

impl DensityLaw {
    fn survival(&self, x: f64) -> f64 {
        if x <= self.lo {
            1.0
        } else if x >= self.hi {
            0.0
        } else {
            or_estimate(integrate_pieces(|y| (self.pdf)(y), x, self.hi, &self.breaks)).clamp(0.0, 1.0)
        }
    }

    fn mean(&self) -> Result<f64> {
        self.mean
            .get_or_init(|| integrate_pieces(|y| y * (self.pdf)(y), self.lo, self.hi, &self.breaks))
            .clone()
    }

    fn isf(&self, x: f64) -> Result<f64> {
        if x <= self.lo {
            return Ok(self.mean()? - x);
        }
        if x >= self.hi {
            return Ok(0.0);
        }
        if self.survival(x) <= 0.5 {
            integrate_pieces(|y| (y - x) * (self.pdf)(y), x, self.hi, &self.breaks)
        } else {
            let left = integrate_pieces(|y| (x - y) * (self.pdf)(y), self.lo, x, &self.breaks)?;
            Ok(self.mean()? - x + left)
        }
    }

    // Cumulative distribution tabulated once; quantiles refine inside a cell.
    fn table(&self) -> &[(f64, f64)] {
        self.table.get_or_init(|| {
            let lo = if self.lo.is_finite() { self.lo } else { self.scan_tail(-1.0) };
            let hi = if self.hi.is_finite() { self.hi } else { self.scan_tail(1.0) };
            let n = 2048;
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = if self.lo.is_finite() {
                0.0
            } else {
                1.0 - self.survival(lo)
            };
            out.push((lo, acc));
            for i in 1..=n {
                let a = lo + (hi - lo) * (i - 1) as f64 / n as f64;
                let b = lo + (hi - lo) * i as f64 / n as f64;
                acc += or_estimate(integrate_pieces(|y| (self.pdf)(y), a, b, &self.breaks));
                out.push((b, acc));
            }
            out
        })
    }

    fn scan_tail(&self, dir: f64) -> f64 {
        let mut x = dir;
        loop {
            let tail = if dir > 0.0 { self.survival(x) } else { 1.0 - self.survival(x) };
            if tail < 1e-17 || x.abs() > 1e12 {
                return x;
            }
            x *= 2.0;
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let t = self.table();
        let k = t.partition_point(|&(_, c)| c < p);
        if k == 0 {
            return t[0].0;
        }
        if k >= t.len() {
            return t[t.len() - 1].0;
        }
        let (a, ca) = t[k - 1];
        let (mut lo, mut hi) = (a, t[k].0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let c = ca + or_estimate(integrate_pieces(|y| (self.pdf)(y), a, mid, &self.breaks));
            if c >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

impl fmt::Debug for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.parts.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> Measure {
        Measure::analytic(Analytic::Exponential { rate: 1.0 }).unwrap()
    }

    fn two_point() -> Measure {
        Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn operation_examples() {
        assert_eq!(Measure::dirac(0.0).survival(0.0), 1.0);
        assert_eq!(exp1().survival(0.0), 1.0);
        assert!((exp1().survival(1.0) - 0.36788).abs() < 1e-5);
        assert_eq!(two_point().isf(0.0).unwrap(), 0.5);
        assert_eq!(exp1().mean().unwrap(), 1.0);
        assert_eq!(two_point().mean().unwrap(), 0.0);
        assert_eq!(Measure::dirac(0.0).upper_support(), 0.0);
        let u = Measure::analytic(Analytic::Uniform { lo: 0.0, hi: 1.0 }).unwrap();
        assert_eq!(u.upper_support(), 1.0);
        let g = Measure::analytic(Analytic::Gaussian { mean: 0.0, sd: 1.0 }).unwrap();
        assert_eq!(g.upper_support(), f64::INFINITY);
    }

    #[test]
    fn sample_examples() {
        let s = Measure::dirac(0.0).sample(5, StreamId::new(1, 0)).unwrap();
        assert_eq!(s, vec![0.0; 5]);
        let s = two_point().sample(100_000, StreamId::new(1, 1)).unwrap();
        let m = s.iter().sum::<f64>() / s.len() as f64;
        assert!(m.abs() < 0.02);
        let s = exp1().sample(100_000, StreamId::new(1, 2)).unwrap();
        let m = s.iter().sum::<f64>() / s.len() as f64;
        assert!((m - 1.0).abs() < 0.03);
    }

    #[test]
    fn affine_scales_isf() {
        let m = Measure::affine(exp1(), 2.0, -1.0).unwrap();
        for &x in &[-3.0, 0.0, 1.5] {
            let direct = 2.0 * exp1().isf((x + 1.0) / 2.0).unwrap();
            assert!((m.isf(x).unwrap() - direct).abs() < 1e-15);
        }
        assert_eq!(m.mean().unwrap(), 1.0);
    }

    #[test]
    fn censored_moves_mass_to_cut_points() {
        let g = Measure::analytic(Analytic::Gaussian { mean: 0.0, sd: 1.0 }).unwrap();
        let c = Measure::censored(g.clone(), vec![-0.5, 1.0]).unwrap();
        assert!((c.mean().unwrap() - 0.0).abs() < 1e-14);
        // Outside the window nothing changes.
        assert_eq!(c.isf(2.0).unwrap(), g.isf(2.0).unwrap());
        // Atom at the right cut: closed and open survival differ by its mass.
        let jump = c.survival(1.0) - c.survival_open(1.0);
        assert!(jump > 0.0);
        let via_expect = c.expect(&|y| if y == 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((jump - via_expect).abs() < 1e-10);
    }

    #[test]
    fn compound_of_scaled_two_point() {
        // Scale mixture of the two-point law by an exponential time.
        let tp = two_point();
        let fam: LawFn = Arc::new(move |l| Measure::affine(tp.clone(), l, 0.0));
        let m = Measure::compound(exp1(), fam, "scale");
        // E[(L*e - 0)^+] = E[L]/2
        assert!((m.isf(0.0).unwrap() - 0.5).abs() < 1e-10);
        assert!(m.mean().unwrap().abs() < 1e-10);
        // X = +-L, so P(X >= 1) = P(L >= 1)/2
        assert!((m.survival(1.0) - 0.5 * (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn density_law_matches_analytic() {
        let pdf: PdfFn = Arc::new(|y: f64| if y < 0.0 { 0.0 } else { (-y).exp() });
        let d = Measure::density_law("exp", pdf, 0.0, f64::INFINITY, vec![]).unwrap();
        for &x in &[-1.0, 0.0, 0.3, 2.0, 9.0] {
            assert!((d.isf(x).unwrap() - exp1().isf(x).unwrap()).abs() < 1e-11);
            assert!((d.survival(x) - exp1().survival(x)).abs() < 1e-11);
        }
        for &p in &[0.01, 0.5, 0.99] {
            assert!((d.quantile(p) - exp1().quantile(p)).abs() < 1e-9);
        }
    }
}
