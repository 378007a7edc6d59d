//! `X_t = Y_{Lambda_t}` for an MRL family `Y` and an independent clock `Lambda`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grids::{linspace, quantile_window};
use crate::measures::{LawFn, Measure, TimeFamily};
use crate::mrl::check_family_mrl;
use crate::rng::StreamId;
use crate::totalpos::{nonstationary_walk_tp2, spacetime_tp2, MarkovKernel, StateSpace, StepDensity};
use crate::verdict::Tol;

#[derive(Debug, Clone)]
pub enum Clock {
    /// Discrete-time kernel started at 0; family times are step counts.
    Markov(MarkovKernel),
    /// `Lambda_t = rate * t`.
    Drift { rate: f64 },
}

#[derive(Debug, Clone)]
pub struct SubordinationSpec {
    /// Family indexed by the clock value.
    pub inner: TimeFamily,
    pub clock: Clock,
    /// Skip the MRL check of `inner` (for experiments with non-MRL inner families).
    pub skip_inner_check: bool,
}

fn step_count(t: f64) -> Result<u32> {
    if t >= 0.0 && t.fract() == 0.0 && t <= u32::MAX as f64 {
        Ok(t as u32)
    } else {
        Err(Error::UnknownTime(t))
    }
}

impl SubordinationSpec {
    pub fn new(inner: TimeFamily, clock: Clock) -> Self {
        SubordinationSpec {
            inner,
            clock,
            skip_inner_check: false,
        }
    }

    pub fn marginal(&self, t: f64) -> Result<Measure> {
        match &self.clock {
            Clock::Drift { rate } => self.inner.marginal_at(rate * t),
            Clock::Markov(kernel) => {
                let n = step_count(t)?;
                if n == 0 {
                    return self.inner.marginal_at(0.0);
                }
                let inner = self.inner.clone();
                let fam: LawFn = Arc::new(move |l| inner.marginal_at(l));
                Ok(Measure::compound(kernel.law_at(n)?, fam, self.inner.label().to_string()))
            }
        }
    }

    /// `count` draws of `X_t`: the clock is stepped path by path, then
    /// `Y_{Lambda_t}` is drawn from the same stream.
    pub fn sample(&self, t: f64, count: usize, stream: StreamId) -> Result<Vec<f64>> {
        let mut rng = stream.rng();
        let n = match &self.clock {
            Clock::Drift { .. } => 0,
            Clock::Markov(_) => step_count(t)?,
        };
        (0..count)
            .map(|_| {
                let l = match &self.clock {
                    Clock::Drift { rate } => rate * t,
                    Clock::Markov(k) => k.sample_at(n, &mut rng),
                };
                self.inner.marginal_at(l)?.draw(&mut rng)
            })
            .collect()
    }

    fn check_clock(&self, times: &[f64]) -> Result<()> {
        let kernel = match &self.clock {
            Clock::Drift { rate } => {
                return if *rate >= 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::PreconditionFailed(format!("drift rate {rate} must be nonnegative")))
                };
            }
            Clock::Markov(k) => k,
        };
        kernel.validate()?;
        let steps: Vec<f64> = times.iter().copied().filter(|&t| t >= 1.0).collect();
        for &t in times {
            step_count(t)?;
        }
        let Some(&last) = steps.last() else {
            return Ok(());
        };
        let states = match kernel.state_space() {
            StateSpace::Integers => {
                let MarkovKernel::Chain { matrix } = kernel else {
                    unreachable!("integer state space is only used by chains")
                };
                (0..matrix.len()).map(|i| i as f64).collect()
            }
            StateSpace::HalfLine => {
                let (_, hi) = quantile_window(&kernel.law_at(last as u32)?, 1e-6);
                linspace(0.0, hi, 129)
            }
        };
        let verdict = match kernel {
            MarkovKernel::NonStationaryExpWalk { rates } => {
                let n = last as usize;
                let steps: Vec<StepDensity> = (0..n)
                    .map(|k| StepDensity::Exponential {
                        rate: rates[k.min(rates.len() - 1)],
                    })
                    .collect();
                nonstationary_walk_tp2(&steps, &states, Tol::default())?
            }
            _ => spacetime_tp2(kernel, &steps, &states, Tol::default())?,
        };
        if !verdict.holds {
            return Err(Error::PreconditionFailed(format!(
                "clock kernel is not space-time TP2 (worst normalised minor {:e})",
                verdict.worst_violation
            )));
        }
        Ok(())
    }
}

/// Family of `X_t = Y_{Lambda_t}`. The marginal integrated survival is
/// `C^X(t, x) = int q(t, l) C^Y(l, x) dl` with `q(t, .)` the law of the clock.
///
/// Checks that the inner family is MRL on `x_grid` (unless skipped) and that the
/// clock kernel is space-time TP2.
pub fn subordinate(spec: SubordinationSpec, times: Vec<f64>, x_grid: &[f64]) -> Result<TimeFamily> {
    if !spec.skip_inner_check {
        let v = check_family_mrl(&spec.inner, x_grid, Tol::default())?;
        if !v.holds {
            return Err(Error::PreconditionFailed(format!(
                "inner family is not MRL (worst margin {:e}{})",
                v.worst_violation,
                v.witness.map(|w| format!(" at {w}")).unwrap_or_default()
            )));
        }
    }
    spec.check_clock(&times)?;
    let label = format!("subordinated({})", spec.inner.label());
    TimeFamily::new(label, Arc::new(move |t| spec.marginal(t)), times)
}
