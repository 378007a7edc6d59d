//! Closed-form laws.
//!
//! Every family here ships its survival function, integrated survival
//! function `C(x) = E[(X - x)^+]`, mean and quantile function in closed form
//! (or through regularised incomplete gamma/beta functions).

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use statrs::distribution::{Beta as BetaDist, ContinuousCDF, Gamma as GammaDist, StudentsT};
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analytic {
    /// Density `rate * exp(-rate * x)` on `[0, inf)`.
    Exponential { rate: f64 },
    Gaussian { mean: f64, sd: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Gamma law with integer shape, parametrised by rate.
    Erlang { rate: f64, stages: u32 },
    Uniform { lo: f64, hi: f64 },
    /// Centered Laplace law, density `rate / 2 * exp(-rate * |x|)`.
    Laplace { rate: f64 },
    Beta { a: f64, b: f64 },
    /// Standard Student-t; integrable only for `dof > 1`.
    StudentT { dof: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Upper tail of the standard normal law.
fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    if p < 0.5 {
        -SQRT_2 * erfc_inv(2.0 * p)
    } else {
        SQRT_2 * erfc_inv(2.0 * (1.0 - p))
    }
}

impl Analytic {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Analytic::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Analytic::Gaussian { mean, sd } => sd > 0.0 && sd.is_finite() && mean.is_finite(),
            Analytic::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            Analytic::Erlang { rate, stages } => rate > 0.0 && rate.is_finite() && stages >= 1,
            Analytic::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Analytic::Laplace { rate } => rate > 0.0 && rate.is_finite(),
            Analytic::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Analytic::StudentT { dof } => dof > 1.0 && dof.is_finite(),
            Analytic::LogNormal { mu, sigma } => sigma > 0.0 && sigma.is_finite() && mu.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("bad parameters for {self:?}")))
        }
    }

    // Erlang is a Gamma law; folding it here keeps one code path.
    fn canonical(&self) -> Analytic {
        match *self {
            Analytic::Erlang { rate, stages } => Analytic::Gamma {
                shape: stages as f64,
                scale: 1.0 / rate,
            },
            other => other,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Analytic::Exponential { rate } => format!("exp(c={rate})"),
            Analytic::Gaussian { mean, sd } => format!("gaussian(m={mean},sd={sd})"),
            Analytic::Gamma { shape, scale } => format!("gamma(k={shape},theta={scale})"),
            Analytic::Erlang { rate, stages } => format!("erlang(c={rate},n={stages})"),
            Analytic::Uniform { lo, hi } => format!("uniform[{lo},{hi}]"),
            Analytic::Laplace { rate } => format!("laplace(c={rate})"),
            Analytic::Beta { a, b } => format!("beta({a},{b})"),
            Analytic::StudentT { dof } => format!("student_t({dof})"),
            Analytic::LogNormal { mu, sigma } => format!("lognormal({mu},{sigma})"),
        }
    }

    pub fn lower_support(&self) -> f64 {
        match self.canonical() {
            Analytic::Exponential { .. } | Analytic::Gamma { .. } | Analytic::Beta { .. } | Analytic::LogNormal { .. } => 0.0,
            Analytic::Uniform { lo, .. } => lo,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn upper_support(&self) -> f64 {
        match self.canonical() {
            Analytic::Uniform { hi, .. } => hi,
            Analytic::Beta { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    pub fn mean(&self) -> f64 {
        match self.canonical() {
            Analytic::Exponential { rate } => 1.0 / rate,
            Analytic::Gaussian { mean, .. } => mean,
            Analytic::Gamma { shape, scale } => shape * scale,
            Analytic::Uniform { lo, hi } => 0.5 * (lo + hi),
            Analytic::Laplace { .. } | Analytic::StudentT { .. } => 0.0,
            Analytic::Beta { a, b } => a / (a + b),
            Analytic::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Analytic::Erlang { .. } => unreachable!(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.canonical() {
            Analytic::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Analytic::Gaussian { mean, sd } => std_normal_pdf((x - mean) / sd) / sd,
            Analytic::Gamma { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        1.0 / scale
                    } else {
                        0.0
                    }
                } else {
                    ((shape - 1.0) * (x / scale).ln() - x / scale - ln_gamma(shape)).exp() / scale
                }
            }
            Analytic::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Analytic::Laplace { rate } => 0.5 * rate * (-rate * x.abs()).exp(),
            Analytic::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - statrs::function::beta::ln_beta(a, b)).exp()
                }
            }
            Analytic::StudentT { dof } => {
                let lc = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln();
                (lc - 0.5 * (dof + 1.0) * (1.0 + x * x / dof).ln()).exp()
            }
            Analytic::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_pdf((x.ln() - mu) / sigma) / (sigma * x)
                }
            }
            Analytic::Erlang { .. } => unreachable!(),
        }
    }

    /// `P(X >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self.canonical() {
            Analytic::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Analytic::Gaussian { mean, sd } => std_normal_sf((x - mean) / sd),
            Analytic::Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, x / scale)
                }
            }
            Analytic::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            Analytic::Laplace { rate } => {
                if x <= 0.0 {
                    1.0 - 0.5 * (rate * x).exp()
                } else {
                    0.5 * (-rate * x).exp()
                }
            }
            Analytic::Beta { a, b } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    beta_reg(b, a, 1.0 - x)
                }
            }
            Analytic::StudentT { dof } => {
                let tail = 0.5 * beta_reg(0.5 * dof, 0.5, dof / (dof + x * x));
                if x >= 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Analytic::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    std_normal_sf((x.ln() - mu) / sigma)
                }
            }
            Analytic::Erlang { .. } => unreachable!(),
        }
    }

    /// `P(X < x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.canonical() {
            Analytic::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Analytic::Gaussian { mean, sd } => std_normal_sf((mean - x) / sd),
            Analytic::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            Analytic::Laplace { rate } => {
                if x <= 0.0 {
                    0.5 * (rate * x).exp()
                } else {
                    1.0 - 0.5 * (-rate * x).exp()
                }
            }
            Analytic::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            Analytic::StudentT { dof } => Analytic::StudentT { dof }.survival(-x),
            Analytic::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_sf((mu - x.ln()) / sigma)
                }
            }
            other => 1.0 - other.survival(x),
        }
    }

    /// `E[(X - x)^+]`.
    pub fn isf(&self, x: f64) -> f64 {
        match self.canonical() {
            Analytic::Exponential { rate } => {
                if x >= 0.0 {
                    (-rate * x).exp() / rate
                } else {
                    1.0 / rate - x
                }
            }
            Analytic::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                sd * (std_normal_pdf(z) - z * std_normal_sf(z))
            }
            Analytic::Gamma { shape, scale } => {
                if x <= 0.0 {
                    shape * scale - x
                } else {
                    shape * scale * gamma_ur(shape + 1.0, x / scale) - x * gamma_ur(shape, x / scale)
                }
            }
            Analytic::Uniform { lo, hi } => {
                if x <= lo {
                    0.5 * (lo + hi) - x
                } else if x >= hi {
                    0.0
                } else {
                    (hi - x) * (hi - x) / (2.0 * (hi - lo))
                }
            }
            Analytic::Laplace { rate } => {
                if x >= 0.0 {
                    (-rate * x).exp() / (2.0 * rate)
                } else {
                    -x + (rate * x).exp() / (2.0 * rate)
                }
            }
            Analytic::Beta { a, b } => {
                if x <= 0.0 {
                    a / (a + b) - x
                } else if x >= 1.0 {
                    0.0
                } else {
                    a / (a + b) * beta_reg(b, a + 1.0, 1.0 - x) - x * beta_reg(b, a, 1.0 - x)
                }
            }
            Analytic::StudentT { dof } => (dof + x * x) / (dof - 1.0) * self.pdf(x) - x * self.survival(x),
            Analytic::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    self.mean() - x
                } else {
                    let lx = x.ln();
                    self.mean() * std_normal_sf((lx - mu - sigma * sigma) / sigma) - x * std_normal_sf((lx - mu) / sigma)
                }
            }
            Analytic::Erlang { .. } => unreachable!(),
        }
    }

    /// Smallest `x` with `P(X <= x) >= p`, for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self.canonical() {
            Analytic::Exponential { rate } => -(-p).ln_1p() / rate,
            Analytic::Gaussian { mean, sd } => mean + sd * std_normal_quantile(p),
            Analytic::Gamma { shape, scale } => GammaDist::new(shape, 1.0 / scale)
                .map(|d| d.inverse_cdf(p))
                .unwrap_or(f64::NAN),
            Analytic::Uniform { lo, hi } => lo + p * (hi - lo),
            Analytic::Laplace { rate } => {
                if p < 0.5 {
                    (2.0 * p).ln() / rate
                } else {
                    -(2.0 * (1.0 - p)).ln() / rate
                }
            }
            Analytic::Beta { a, b } => BetaDist::new(a, b).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN),
            Analytic::StudentT { dof } => StudentsT::new(0.0, 1.0, dof)
                .map(|d| d.inverse_cdf(p))
                .unwrap_or(f64::NAN),
            Analytic::LogNormal { mu, sigma } => (mu + sigma * std_normal_quantile(p)).exp(),
            Analytic::Erlang { .. } => unreachable!(),
        }
    }

    /// `E[exp(lambda X)]` where a closed form exists and is finite.
    pub fn mgf(&self, lambda: f64) -> Option<f64> {
        match self.canonical() {
            Analytic::Exponential { rate } if lambda < rate => Some(rate / (rate - lambda)),
            Analytic::Gaussian { mean, sd } => Some((lambda * mean + 0.5 * lambda * lambda * sd * sd).exp()),
            Analytic::Gamma { shape, scale } if lambda * scale < 1.0 => Some((1.0 - lambda * scale).powf(-shape)),
            Analytic::Laplace { rate } if lambda.abs() < rate => Some(1.0 / (1.0 - lambda * lambda / (rate * rate))),
            Analytic::Uniform { lo, hi } => {
                if lambda == 0.0 {
                    Some(1.0)
                } else {
                    Some(((lambda * hi).exp() - (lambda * lo).exp()) / (lambda * (hi - lo)))
                }
            }
            _ => None,
        }
    }

    /// Interior points where the density is not smooth; quadrature splits there.
    pub fn kinks(&self) -> Vec<f64> {
        match self.canonical() {
            Analytic::Laplace { .. } => vec![0.0],
            Analytic::Gaussian { mean, .. } => vec![mean],
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn all() -> Vec<Analytic> {
        vec![
            Analytic::Exponential { rate: 1.5 },
            Analytic::Gaussian { mean: 0.3, sd: 1.7 },
            Analytic::Gamma { shape: 2.5, scale: 0.7 },
            Analytic::Erlang { rate: 2.0, stages: 3 },
            Analytic::Uniform { lo: -1.0, hi: 2.0 },
            Analytic::Laplace { rate: 0.8 },
            Analytic::Beta { a: 2.0, b: 3.0 },
            Analytic::StudentT { dof: 3.0 },
            Analytic::LogNormal { mu: 0.1, sigma: 0.6 },
        ]
    }

    // Independent route: C(x) = integral of the survival function on [x, inf).
    #[test]
    fn isf_matches_integrated_survival() {
        for law in all() {
            for &x in &[-2.0, -0.3, 0.0, 0.4, 1.1, 2.5] {
                let hi = law.upper_support();
                let direct = integrate(|u| law.survival(u), x, hi).unwrap();
                assert!(
                    (direct - law.isf(x)).abs() < 1e-8 * (1.0 + law.isf(x).abs()),
                    "{law:?} at {x}: {direct} vs {}",
                    law.isf(x)
                );
            }
        }
    }

    #[test]
    fn survival_matches_density_tail() {
        for law in all() {
            for &x in &[-1.0f64, 0.2, 0.9, 1.7] {
                let tail = integrate(|u| law.pdf(u), x.max(law.lower_support()), law.upper_support()).unwrap();
                assert!((tail - law.survival(x)).abs() < 1e-8, "{law:?} at {x}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for law in all() {
            for &p in &[0.01, 0.3, 0.5, 0.9, 0.999] {
                let q = law.quantile(p);
                assert!((1.0 - law.survival(q) - p).abs() < 1e-7, "{law:?} p={p} q={q}");
            }
        }
    }

    #[test]
    fn isf_far_left_is_mean_minus_x() {
        for law in all() {
            let x = -60.0;
            let expect = law.mean() - x;
            if law == (Analytic::StudentT { dof: 3.0 }) {
                // polynomial tail: C(x) - (m - x) decays like |x|^(1-dof)
                assert!((law.isf(x) - expect).abs() < 1e-3);
            } else {
                assert!((law.isf(x) - expect).abs() < 1e-10, "{law:?}");
            }
        }
    }

    #[test]
    fn exponential_examples() {
        let e = Analytic::Exponential { rate: 1.0 };
        assert_eq!(e.survival(0.0), 1.0);
        assert!((e.survival(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e.isf(2.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(e.mean(), 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Analytic::StudentT { dof: 1.0 }.validate().is_err());
        assert!(Analytic::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(Analytic::Exponential { rate: -1.0 }.validate().is_err());
    }
}
