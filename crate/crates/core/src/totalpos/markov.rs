//! Markov kernels on the half-line or the integers, and space-time TP2 checks.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::{Analytic, Measure, PdfFn, TimeFamily};
use crate::rng::open01;
use crate::verdict::{OrderVerdict, Tol};

use super::grid::{tp2_check, ScanMode, Tp2Grid};
use super::kernels::{convolution_power, convolve_steps, hypoexponential_pdf, log_concavity_check, StepDensity, SumDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    HalfLine,
    Integers,
}

/// Discrete-time transition kernels started from 0.
#[derive(Debug, Clone)]
pub enum MarkovKernel {
    /// Random walk with Exp(rate) increments; `n` steps give an Erlang law.
    ExpWalk { rate: f64 },
    /// `|W_n|` for a walk `W` with centered Laplace(rate) increments.
    ReflectedLaplaceWalk { rate: f64 },
    /// Step `k` (1-based) has an Exp(rates[k-1]) increment.
    NonStationaryExpWalk { rates: Vec<f64> },
    /// Homogeneous chain on `{0, .., K}` with the given row-stochastic matrix.
    Chain { matrix: Vec<Vec<f64>> },
}

impl MarkovKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarkovKernel::ExpWalk { rate } | MarkovKernel::ReflectedLaplaceWalk { rate } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return Err(Error::InvalidMeasure(format!("rate {rate} must be positive")));
                }
            }
            MarkovKernel::NonStationaryExpWalk { rates } => {
                if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(Error::InvalidMeasure("step rates must be positive".into()));
                }
            }
            MarkovKernel::Chain { matrix } => {
                let k = matrix.len();
                if k == 0 {
                    return Err(Error::InvalidMeasure("empty transition matrix".into()));
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != k || row.iter().any(|p| !(*p >= 0.0)) {
                        return Err(Error::InvalidMeasure(format!("row {i} is not a probability vector")));
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > 1e-8 {
                        return Err(Error::InvalidMeasure(format!("row {i} sums to {s}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn state_space(&self) -> StateSpace {
        match self {
            MarkovKernel::Chain { .. } => StateSpace::Integers,
            _ => StateSpace::HalfLine,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        !matches!(self, MarkovKernel::NonStationaryExpWalk { .. })
    }

    /// One-step transition density (or probability) from `theta` to `lambda`.
    pub fn one_step(&self, theta: f64, lambda: f64) -> f64 {
        match self {
            MarkovKernel::ExpWalk { rate } => exp_pdf(*rate, lambda - theta),
            MarkovKernel::NonStationaryExpWalk { rates } => exp_pdf(rates[0], lambda - theta),
            MarkovKernel::ReflectedLaplaceWalk { rate } => {
                if lambda < 0.0 {
                    0.0
                } else {
                    laplace_pdf(*rate, lambda - theta) + laplace_pdf(*rate, lambda + theta)
                }
            }
            MarkovKernel::Chain { matrix } => {
                let (i, j) = (theta as usize, lambda as usize);
                matrix.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
            }
        }
    }

    /// `q(n, lambda) = p_n(0, lambda)`.
    pub fn space_time(&self, n: u32, lambda: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::PreconditionFailed("space-time kernel needs n >= 1".into()));
        }
        match self {
            MarkovKernel::Chain { matrix } => {
                let v = chain_power_row(matrix, n);
                if lambda < 0.0 || lambda.fract() != 0.0 {
                    return Ok(0.0);
                }
                Ok(v.get(lambda as usize).copied().unwrap_or(0.0))
            }
            MarkovKernel::ReflectedLaplaceWalk { rate } => {
                if lambda < 0.0 {
                    return Ok(0.0);
                }
                Ok(2.0 * convolution_power(&StepDensity::Laplace { rate: *rate }, n)?.pdf(lambda)?)
            }
            _ => self.sum_density(n)?.pdf(lambda),
        }
    }

    fn sum_density(&self, n: u32) -> Result<SumDensity> {
        match self {
            MarkovKernel::ExpWalk { rate } => convolution_power(&StepDensity::Exponential { rate: *rate }, n),
            MarkovKernel::NonStationaryExpWalk { rates } => {
                let steps: Vec<StepDensity> = (0..n as usize)
                    .map(|k| StepDensity::Exponential {
                        rate: rates[k.min(rates.len() - 1)],
                    })
                    .collect();
                convolve_steps(&steps)
            }
            _ => Err(Error::PreconditionFailed("no step density for this kernel".into())),
        }
    }

    /// Law of the state after `n` steps from 0.
    pub fn law_at(&self, n: u32) -> Result<Measure> {
        if n == 0 {
            return Ok(Measure::dirac(0.0));
        }
        match self {
            MarkovKernel::ExpWalk { rate } => Measure::analytic(Analytic::Erlang { rate: *rate, stages: n }),
            MarkovKernel::ReflectedLaplaceWalk { rate } => {
                let s = convolution_power(&StepDensity::Laplace { rate: *rate }, n)?;
                let pdf: PdfFn = Arc::new(move |x| 2.0 * s.pdf(x).unwrap_or(0.0));
                Measure::density_law(format!("|laplace walk|(c={rate}, n={n})"), pdf, 0.0, f64::INFINITY, vec![])
            }
            MarkovKernel::NonStationaryExpWalk { .. } => {
                let s = self.sum_density(n)?;
                let pdf: PdfFn = Arc::new(move |x| s.pdf(x).unwrap_or(0.0));
                Measure::density_law(format!("hypoexponential(n={n})"), pdf, 0.0, f64::INFINITY, vec![])
            }
            MarkovKernel::Chain { matrix } => {
                let v = chain_power_row(matrix, n);
                let states = (0..v.len()).map(|i| i as f64).collect();
                let total: f64 = v.iter().sum();
                Measure::grid(states, v.iter().map(|p| p / total).collect())
            }
        }
    }

    /// Transition from `theta` at step `k` (1-based).
    pub fn step(&self, k: u32, theta: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            MarkovKernel::ExpWalk { rate } => theta - open01(rng).ln() / rate,
            MarkovKernel::NonStationaryExpWalk { rates } => {
                let r = rates[(k.max(1) as usize - 1).min(rates.len() - 1)];
                theta - open01(rng).ln() / r
            }
            MarkovKernel::ReflectedLaplaceWalk { rate } => {
                // |theta + L| has the reflected kernel when theta = |w|.
                let e = -open01(rng).ln() / rate;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (theta + sign * e).abs()
            }
            MarkovKernel::Chain { matrix } => {
                let row = &matrix[theta as usize];
                let u = open01(rng);
                let mut acc = 0.0;
                for (j, &p) in row.iter().enumerate() {
                    acc += p;
                    if u <= acc {
                        return j as f64;
                    }
                }
                (row.len() - 1) as f64
            }
        }
    }

    /// State after `n` steps from 0.
    pub fn sample_at(&self, n: u32, rng: &mut ChaCha8Rng) -> f64 {
        let mut x = 0.0;
        for k in 1..=n {
            x = self.step(k, x, rng);
        }
        x
    }
}

fn exp_pdf(rate: f64, d: f64) -> f64 {
    if d < 0.0 {
        0.0
    } else {
        rate * (-rate * d).exp()
    }
}

fn laplace_pdf(rate: f64, d: f64) -> f64 {
    0.5 * rate * (-rate * d.abs()).exp()
}

fn chain_power_row(matrix: &[Vec<f64>], n: u32) -> Vec<f64> {
    let k = matrix.len();
    let mut v = vec![0.0; k];
    v[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; k];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (j, &p) in matrix[i].iter().enumerate() {
                    next[j] += vi * p;
                }
            }
        }
        v = next;
    }
    v
}

fn integer_times(times: &[f64]) -> Result<Vec<u32>> {
    times
        .iter()
        .map(|&t| {
            if t >= 1.0 && t.fract() == 0.0 && t <= u32::MAX as f64 {
                Ok(t as u32)
            } else {
                Err(Error::PreconditionFailed(format!("step count {t} must be a positive integer")))
            }
        })
        .collect()
}

/// TP2 check of `(n, lambda) -> p_n(0, lambda)` for a homogeneous kernel whose
/// one-step slice is itself TP2.
pub fn spacetime_tp2(kernel: &MarkovKernel, times: &[f64], states: &[f64], tol: Tol) -> Result<OrderVerdict> {
    kernel.validate()?;
    if !kernel.is_homogeneous() {
        return Err(Error::PreconditionFailed("space-time check needs a homogeneous kernel".into()));
    }
    let ns = integer_times(times)?;
    let one = Tp2Grid::sample(states, states, |a, b| Ok(kernel.one_step(a, b)))?;
    let v1 = tp2_check(&one, ScanMode::AllPairs, tol)?;
    if !v1.holds {
        return Err(Error::PreconditionFailed(format!(
            "one-step kernel is not TP2 (worst normalised minor {:e}{})",
            v1.worst_violation,
            v1.witness.map(|w| format!(" at {w}")).unwrap_or_default()
        )));
    }
    let table = ns
        .iter()
        .map(|&n| states.iter().map(|&l| kernel.space_time(n, l)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let grid = Tp2Grid::from_rows(times.to_vec(), states.to_vec(), table)?;
    tp2_check(&grid, ScanMode::AllPairs, tol)
}

/// TP2 check of `(n, lambda) -> P(Lambda_n >= lambda)`.
pub fn tail_tp2(kernel: &MarkovKernel, times: &[f64], states: &[f64], tol: Tol) -> Result<OrderVerdict> {
    let ns = integer_times(times)?;
    let table = ns
        .iter()
        .map(|&n| {
            let law = kernel.law_at(n)?;
            Ok(states.iter().map(|&l| law.survival(l)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let grid = Tp2Grid::from_rows(times.to_vec(), states.to_vec(), table)?;
    tp2_check(&grid, ScanMode::AllPairs, tol)
}

/// Walk with independent, possibly different, log-concave steps:
/// TP2 check of `(n, lambda) -> (f_1 * .. * f_n)(lambda)` for `n = 1..=steps.len()`.
pub fn nonstationary_walk_tp2(steps: &[StepDensity], states: &[f64], tol: Tol) -> Result<OrderVerdict> {
    if steps.is_empty() {
        return Err(Error::PreconditionFailed("no steps".into()));
    }
    for (i, s) in steps.iter().enumerate() {
        let (xs, ps) = s.samples(2001);
        let v = log_concavity_check(&xs, &ps, tol).map_err(|e| Error::PreconditionFailed(format!("step {}: {e}", i + 1)))?;
        if !v.holds {
            return Err(Error::PreconditionFailed(format!(
                "step {} ({s:?}) is not log-concave (worst normalised minor {:e})",
                i + 1,
                v.worst_violation
            )));
        }
    }
    let rows: Vec<f64> = (1..=steps.len()).map(|n| n as f64).collect();
    let table = (1..=steps.len())
        .map(|n| {
            let prefix = &steps[..n];
            let exp_rates: Option<Vec<f64>> = prefix
                .iter()
                .map(|s| match s {
                    StepDensity::Exponential { rate } => Some(*rate),
                    _ => None,
                })
                .collect();
            match exp_rates {
                Some(r) => Ok(states.iter().map(|&l| hypoexponential_pdf(&r, l)).collect()),
                None => {
                    let d = convolve_steps(prefix)?;
                    states.iter().map(|&l| d.pdf(l)).collect::<Result<Vec<_>>>()
                }
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let grid = Tp2Grid::from_rows(rows, states.to_vec(), table)?;
    tp2_check(&grid, ScanMode::AllPairs, tol)
}

/// TP2 check of the integrated survival surface `(t, x) -> E[(X_t - x)^+]`.
pub fn isf_tp2_check(fam: &TimeFamily, xs: &[f64], tol: Tol) -> Result<OrderVerdict> {
    let grid = isf_grid(fam, xs)?;
    tp2_check(&grid, ScanMode::AllPairs, tol)
}

pub fn isf_grid(fam: &TimeFamily, xs: &[f64]) -> Result<Tp2Grid> {
    use rayon::prelude::*;
    let table = fam
        .times()
        .par_iter()
        .map(|&t| {
            let mu = fam.marginal_at(t)?;
            xs.iter().map(|&x| mu.isf(x).map(|c| c.max(0.0))).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Tp2Grid::from_rows(fam.times().to_vec(), xs.to_vec(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::linspace;
    use crate::quadrature::integrate;
    use crate::rng::StreamId;

    #[test]
    fn slices_are_normalised() {
        for k in [MarkovKernel::ExpWalk { rate: 1.5 }, MarkovKernel::ReflectedLaplaceWalk { rate: 0.8 }] {
            for n in [1, 2, 5] {
                let m = integrate(|l| k.space_time(n, l).unwrap(), 0.0, f64::INFINITY).unwrap();
                assert!((m - 1.0).abs() < 1e-8, "{k:?} n={n}");
            }
        }
    }

    #[test]
    fn erlang_walk_is_spacetime_tp2() {
        let k = MarkovKernel::ExpWalk { rate: 1.0 };
        let times: Vec<f64> = (1..=20).map(f64::from).collect();
        let v = spacetime_tp2(&k, &times, &linspace(0.0, 40.0, 129), Tol::default()).unwrap();
        assert!(v.holds, "{v:?}");
    }

    #[test]
    fn single_row_holds_vacuously() {
        let k = MarkovKernel::ExpWalk { rate: 1.0 };
        let v = spacetime_tp2(&k, &[3.0], &linspace(0.0, 5.0, 11), Tol::default()).unwrap();
        assert!(v.holds);
        assert_eq!(v.checked, 0);
    }

    #[test]
    fn non_tp2_chain_is_rejected() {
        let k = MarkovKernel::Chain {
            matrix: vec![vec![0.1, 0.9], vec![0.9, 0.1]],
        };
        assert!(matches!(
            spacetime_tp2(&k, &[1.0, 2.0], &[0.0, 1.0], Tol::default()),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn uniformized_hypoexponential_matches_closed_form() {
        let rates = [1.0, 2.0, 3.5, 0.7];
        // Partial-fraction form, valid for distinct rates.
        let closed = |x: f64| -> f64 {
            let mut s = 0.0;
            for (i, &ci) in rates.iter().enumerate() {
                let w: f64 = rates.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &cj)| cj / (cj - ci)).product();
                s += w * ci * (-ci * x).exp();
            }
            s
        };
        for &x in &[0.05, 0.5, 2.0, 7.0] {
            let a = hypoexponential_pdf(&rates, x);
            let b = closed(x);
            assert!((a - b).abs() < 1e-10 * b.max(1e-3), "x={x}: {a} vs {b}");
        }
        // Equal rates reduce to the Erlang density.
        let e = convolution_power(&StepDensity::Exponential { rate: 2.0 }, 3).unwrap();
        assert!((hypoexponential_pdf(&[2.0; 3], 1.1) - e.pdf(1.1).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn heavy_tailed_step_is_rejected() {
        let t = Analytic::StudentT { dof: 2.0 };
        let half_t = StepDensity::Custom {
            label: "half-t".into(),
            pdf: Arc::new(move |x| 2.0 * t.pdf(x)),
            lo: 0.0,
            hi: f64::INFINITY,
            kinks: vec![],
        };
        let steps = vec![StepDensity::Exponential { rate: 1.0 }, half_t];
        assert!(matches!(
            nonstationary_walk_tp2(&steps, &linspace(0.0, 5.0, 11), Tol::default()),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn sampled_walk_matches_law() {
        let k = MarkovKernel::ReflectedLaplaceWalk { rate: 1.0 };
        let mut rng = StreamId::new(3, 0).rng();
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| k.sample_at(4, &mut rng)).sum::<f64>() / n as f64;
        let law_mean = k.law_at(4).unwrap().mean().unwrap();
        assert!((mean - law_mean).abs() < 0.05, "{mean} vs {law_mean}");
    }
}
