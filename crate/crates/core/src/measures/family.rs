//! Time-indexed families of laws (one-dimensional marginals of a process).

use std::fmt;
use std::sync::Arc;

use super::Measure;
use crate::error::{Error, Result};

pub type MarginalFn = Arc<dyn Fn(f64) -> Result<Measure> + Send + Sync>;

#[derive(Clone)]
pub struct TimeFamily {
    label: String,
    marginal: MarginalFn,
    times: Vec<f64>,
}

impl fmt::Debug for TimeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeFamily")
            .field("label", &self.label)
            .field("times", &self.times)
            .finish()
    }
}

impl TimeFamily {
    pub fn new(label: impl Into<String>, marginal: MarginalFn, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::PreconditionFailed("empty time grid".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::PreconditionFailed("times must be finite and nonnegative".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::PreconditionFailed("time grid must be strictly increasing".into()));
        }
        Ok(TimeFamily {
            label: label.into(),
            marginal,
            times,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn marginal_at(&self, t: f64) -> Result<Measure> {
        (self.marginal)(t)
    }

    /// Same family evaluated on another grid.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Self> {
        TimeFamily::new(self.label.clone(), self.marginal.clone(), times)
    }

    pub fn marginals(&self) -> Result<Vec<Measure>> {
        self.times.iter().map(|&t| self.marginal_at(t)).collect()
    }

    pub fn mean_profile(&self) -> Result<Vec<f64>> {
        self.times.iter().map(|&t| self.marginal_at(t)?.mean()).collect()
    }

    /// Returns the common mean, or `NonConstantMean` for the first time whose
    /// mean drifts by more than `rel_tol` (relative to the spread of the laws).
    pub fn constant_mean(&self, rel_tol: f64) -> Result<f64> {
        let marginals = self.marginals()?;
        let means = marginals.iter().map(|m| m.mean()).collect::<Result<Vec<_>>>()?;
        let spread = marginals
            .iter()
            .zip(&means)
            .map(|(m, &mean)| m.expect(&|y| (y - mean).abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        let scale = spread.max(means[0].abs()).max(1.0);
        for (i, &m) in means.iter().enumerate().skip(1) {
            if (m - means[0]).abs() > rel_tol * scale {
                return Err(Error::NonConstantMean {
                    t_first: self.times[0],
                    first: means[0],
                    t_other: self.times[i],
                    other: m,
                });
            }
        }
        Ok(means[0])
    }
}
