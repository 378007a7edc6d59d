//! Log-concavity, kernel composition and convolution powers.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate_pieces;
use crate::verdict::{Accumulator, OrderVerdict, Tol, Witness};

use super::grid::normalized_minor;

/// Verdict that `log p` is concave on its support, from samples on an
/// equally spaced grid. Each triple is tested as `p_i^2 >= p_{i-1} p_{i+1}`,
/// the adjacent minor of the translation kernel `(x, y) -> p(x - y)`.
pub fn log_concavity_check(xs: &[f64], samples: &[f64], tol: Tol) -> Result<OrderVerdict> {
    if xs.len() != samples.len() {
        return Err(Error::PreconditionFailed("grid and samples differ in length".into()));
    }
    if samples.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::PreconditionFailed("density samples must be finite and nonnegative".into()));
    }
    if xs.len() >= 3 {
        let h = xs[1] - xs[0];
        if xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300) || w[1] <= w[0]) {
            return Err(Error::PreconditionFailed("grid must be equally spaced and increasing".into()));
        }
    }
    let first = samples.iter().position(|&p| p > 0.0);
    let last = samples.iter().rposition(|&p| p > 0.0);
    let mut acc = Accumulator::new(tol);
    let (Some(first), Some(last)) = (first, last) else {
        return Ok(acc.finish());
    };
    if let Some(k) = (first..=last).find(|&k| samples[k] == 0.0) {
        return Err(Error::NonIntervalSupport(k - 1));
    }
    for i in first + 1..last {
        let (m, det) = normalized_minor(samples[i], samples[i - 1], samples[i + 1], samples[i]);
        acc.push(m, Witness::Point { x: xs[i], value: det });
    }
    Ok(acc.finish())
}

/// A two-argument nonnegative kernel.
pub trait Kernel: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> Result<f64>;
    /// Values of the integration variable `y` where `p(x, .)` is not smooth.
    fn kinks_in_second(&self, _x: f64) -> Vec<f64> {
        Vec::new()
    }
    /// Values of `y` where `q(., z)` is not smooth.
    fn kinks_in_first(&self, _z: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// Kernel defined by a closure, with optional kink locations.
pub struct FnKernel {
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    kinks2: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    kinks1: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

impl FnKernel {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        FnKernel {
            f: Arc::new(f),
            kinks2: Arc::new(|_| Vec::new()),
            kinks1: Arc::new(|_| Vec::new()),
        }
    }

    /// Translation kernel `(x, y) -> p(x - y)` for a density with kinks at `kinks`.
    pub fn translation(p: impl Fn(f64) -> f64 + Send + Sync + 'static, kinks: Vec<f64>) -> Self {
        let k2 = kinks.clone();
        FnKernel {
            f: Arc::new(move |x, y| p(x - y)),
            kinks2: Arc::new(move |x| k2.iter().map(|k| x - k).collect()),
            kinks1: Arc::new(move |z| kinks.iter().map(|k| z + k).collect()),
        }
    }
}

impl Kernel for FnKernel {
    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok((self.f)(x, y))
    }
    fn kinks_in_second(&self, x: f64) -> Vec<f64> {
        (self.kinks2)(x)
    }
    fn kinks_in_first(&self, z: f64) -> Vec<f64> {
        (self.kinks1)(z)
    }
}

/// Integration measure for the middle variable of a composition.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMeasure {
    Lebesgue { lo: f64, hi: f64 },
    /// Weighted points.
    Counting(Vec<(f64, f64)>),
}

/// `r(x, z) = integral of p(x, y) q(y, z) sigma(dy)`.
pub struct Composed {
    p: Arc<dyn Kernel>,
    q: Arc<dyn Kernel>,
    sigma: BaseMeasure,
}

impl fmt::Debug for Composed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Composed").field("sigma", &self.sigma).finish()
    }
}

pub fn compose_kernels(p: Arc<dyn Kernel>, q: Arc<dyn Kernel>, sigma: BaseMeasure) -> Composed {
    Composed { p, q, sigma }
}

impl Kernel for Composed {
    fn eval(&self, x: f64, z: f64) -> Result<f64> {
        match &self.sigma {
            BaseMeasure::Counting(pts) => {
                let mut s = 0.0;
                for &(y, w) in pts {
                    s += w * self.p.eval(x, y)? * self.q.eval(y, z)?;
                }
                Ok(s)
            }
            BaseMeasure::Lebesgue { lo, hi } => {
                let mut breaks = self.p.kinks_in_second(x);
                breaks.extend(self.q.kinks_in_first(z));
                let err = std::cell::RefCell::new(None);
                let v = integrate_pieces(
                    |y| match (self.p.eval(x, y), self.q.eval(y, z)) {
                        (Ok(a), Ok(b)) => {
                            if a == 0.0 || b == 0.0 {
                                0.0
                            } else {
                                a * b
                            }
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    },
                    *lo,
                    *hi,
                    &breaks,
                );
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                v
            }
        }
    }
}

/// Increment law of a random walk.
#[derive(Clone)]
pub enum StepDensity {
    Exponential { rate: f64 },
    /// Centered two-sided exponential.
    Laplace { rate: f64 },
    Custom {
        label: String,
        pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lo: f64,
        hi: f64,
        kinks: Vec<f64>,
    },
}

impl fmt::Debug for StepDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepDensity::Exponential { rate } => write!(f, "Exponential({rate})"),
            StepDensity::Laplace { rate } => write!(f, "Laplace({rate})"),
            StepDensity::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl StepDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            StepDensity::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            StepDensity::Laplace { rate } => 0.5 * rate * (-rate * x.abs()).exp(),
            StepDensity::Custom { pdf, lo, hi, .. } => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    pdf(x)
                }
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            StepDensity::Exponential { .. } => (0.0, f64::INFINITY),
            StepDensity::Laplace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            StepDensity::Custom { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn kinks(&self) -> Vec<f64> {
        match self {
            StepDensity::Exponential { .. } | StepDensity::Laplace { .. } => vec![0.0],
            StepDensity::Custom { kinks, lo, hi, .. } => {
                let mut k = kinks.clone();
                k.extend([*lo, *hi].into_iter().filter(|v| v.is_finite()));
                k
            }
        }
    }

    /// Equally spaced samples across the bulk of the support, for log-concavity tests.
    pub fn samples(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.support();
        let span = 40.0 / self.scale_hint();
        let a = if lo.is_finite() { lo } else { -span };
        let b = if hi.is_finite() { hi } else { span };
        let xs = crate::grids::linspace(a, b, n);
        let ps = xs.iter().map(|&x| self.pdf(x)).collect();
        (xs, ps)
    }

    fn scale_hint(&self) -> f64 {
        match self {
            StepDensity::Exponential { rate } | StepDensity::Laplace { rate } => *rate,
            StepDensity::Custom { .. } => 1.0,
        }
    }
}

/// Density of a sum of independent steps.
#[derive(Clone)]
pub enum SumDensity {
    Erlang { rate: f64, n: u32 },
    LaplaceSum { rate: f64, n: u32 },
    /// Sum of exponentials with pairwise distinct rates.
    Hypoexponential { rates: Vec<f64> },
    /// Numerical convolution of the listed steps.
    Numeric { steps: Vec<StepDensity> },
}

impl fmt::Debug for SumDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SumDensity::Erlang { rate, n } => write!(f, "Erlang({rate}, {n})"),
            SumDensity::LaplaceSum { rate, n } => write!(f, "LaplaceSum({rate}, {n})"),
            SumDensity::Hypoexponential { rates } => write!(f, "Hypoexponential({rates:?})"),
            SumDensity::Numeric { steps } => write!(f, "Numeric({steps:?})"),
        }
    }
}

/// `p^{(n)}` of the step density: closed forms for exponential and Laplace
/// steps, nested quadrature otherwise (intended for small `n`).
pub fn convolution_power(step: &StepDensity, n: u32) -> Result<SumDensity> {
    if n == 0 {
        return Err(Error::PreconditionFailed("convolution power needs n >= 1".into()));
    }
    Ok(match step {
        StepDensity::Exponential { rate } => SumDensity::Erlang { rate: *rate, n },
        StepDensity::Laplace { rate } => SumDensity::LaplaceSum { rate: *rate, n },
        other => SumDensity::Numeric {
            steps: vec![other.clone(); n as usize],
        },
    })
}

/// `f_1 * ... * f_n`; exponential steps with distinct rates use the closed form.
pub fn convolve_steps(steps: &[StepDensity]) -> Result<SumDensity> {
    if steps.is_empty() {
        return Err(Error::PreconditionFailed("no steps to convolve".into()));
    }
    let rates: Option<Vec<f64>> = steps
        .iter()
        .map(|s| match s {
            StepDensity::Exponential { rate } => Some(*rate),
            _ => None,
        })
        .collect();
    if let Some(rates) = rates {
        if rates.iter().all(|&r| r == rates[0]) {
            return Ok(SumDensity::Erlang {
                rate: rates[0],
                n: rates.len() as u32,
            });
        }
        let mut sorted = rates.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[0] != w[1]) {
            return Ok(SumDensity::Hypoexponential { rates });
        }
    }
    Ok(SumDensity::Numeric { steps: steps.to_vec() })
}

fn ln_choose(n: u32, k: u32) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

impl SumDensity {
    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self {
            SumDensity::Erlang { rate, n } => {
                if x < 0.0 {
                    return Ok(0.0);
                }
                if x == 0.0 {
                    return Ok(if *n == 1 { *rate } else { 0.0 });
                }
                let n = *n as f64;
                Ok((n * rate.ln() + (n - 1.0) * x.ln() - rate * x - ln_gamma(n)).exp())
            }
            SumDensity::LaplaceSum { rate, n } => {
                // Sum over k of C(n-1, k) |x|^{n-1-k} Gamma(n+k) / (2c)^{n+k},
                // times c^{2n} e^{-c|x|} / Gamma(n)^2, accumulated in log space.
                let (c, n) = (*rate, *n);
                let ax = x.abs();
                let nf = n as f64;
                let mut terms = Vec::with_capacity(n as usize);
                for k in 0..n {
                    let p = n - 1 - k;
                    if p > 0 && ax == 0.0 {
                        continue;
                    }
                    let lx = if p == 0 { 0.0 } else { p as f64 * ax.ln() };
                    terms.push(ln_choose(n - 1, k) + lx + ln_gamma(nf + k as f64) - (nf + k as f64) * (2.0 * c).ln());
                }
                let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
                Ok((2.0 * nf * c.ln() - c * ax - 2.0 * ln_gamma(nf) + m + s.ln()).exp())
            }
            SumDensity::Hypoexponential { rates } => Ok(hypoexponential_pdf(rates, x)),
            SumDensity::Numeric { steps } => numeric_sum_pdf(steps, x),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            SumDensity::LaplaceSum { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            SumDensity::Numeric { steps } => steps.iter().fold((0.0, 0.0), |acc, s| {
                let (a, b) = s.support();
                (acc.0 + a, acc.1 + b)
            }),
            _ => (0.0, f64::INFINITY),
        }
    }
}

/// Density of a sum of exponential steps with the given rates, by
/// uniformization at the largest rate.
pub fn hypoexponential_pdf(rates: &[f64], x: f64) -> f64 {
    if x < 0.0 || rates.is_empty() {
        return 0.0;
    }
    let n = rates.len();
    let q = rates.iter().copied().fold(0.0, f64::max);
    let qx = q * x;
    if x == 0.0 {
        return if n == 1 { rates[0] } else { 0.0 };
    }
    // pi[i]: probability of having completed i stages after k uniformized events.
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    let kmax = (qx + 12.0 * qx.sqrt() + 40.0).ceil() as usize;
    let mut total = 0.0;
    for k in 0..=kmax {
        if k + 1 >= n {
            let lw = -qx + k as f64 * qx.ln() - ln_gamma(k as f64 + 1.0);
            total += lw.exp() * pi[n - 1];
        }
        let mut next = vec![0.0; n];
        for i in 0..n {
            let jump = rates[i] / q;
            next[i] += pi[i] * (1.0 - jump);
            if i + 1 < n {
                next[i + 1] += pi[i] * jump;
            }
        }
        pi = next;
    }
    rates[n - 1] * total
}

fn numeric_sum_pdf(steps: &[StepDensity], x: f64) -> Result<f64> {
    match steps.len() {
        0 => Err(Error::PreconditionFailed("no steps".into())),
        1 => Ok(steps[0].pdf(x)),
        n => {
            let (head, last) = steps.split_at(n - 1);
            let last = &last[0];
            let (lo, hi) = last.support();
            let mut breaks: Vec<f64> = last.kinks();
            // The partial sum has kinks at the ends of its support and at 0.
            let (hlo, hhi) = head.iter().fold((0.0, 0.0), |acc, s| {
                let (a, b) = s.support();
                (acc.0 + a, acc.1 + b)
            });
            breaks.extend([x - hlo, x - hhi, x].into_iter().filter(|v| v.is_finite()));
            let err = std::cell::RefCell::new(None);
            let v = integrate_pieces(
                |y| {
                    let f = last.pdf(y);
                    if f == 0.0 {
                        return 0.0;
                    }
                    match numeric_sum_pdf(head, x - y) {
                        Ok(g) => g * f,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
                &breaks,
            );
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            v
        }
    }
}
