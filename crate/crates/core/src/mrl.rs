//! Mean residual life, Hardy-Littlewood functions and the order checks built on them.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{Measure, TimeFamily};
use crate::verdict::{Accumulator, OrderVerdict, Tol, Witness};

/// Below this survival probability the residual life is taken as zero.
const SURVIVAL_FLOOR: f64 = 1e-300;

/// `(L(x), Psi(x))`, propagating quadrature failures.
pub fn try_mrl_psi(mu: &Measure, x: f64) -> Result<(f64, f64)> {
    if x >= mu.upper_support() {
        return Ok((0.0, x));
    }
    if let Some(p) = mu.tail_barycenter(x) {
        return Ok(((p - x).max(0.0), p.max(x)));
    }
    if x <= mu.lower_support() {
        let mean = mu.mean()?;
        return Ok((mean - x, mean));
    }
    let s = mu.survival(x);
    if !(s >= SURVIVAL_FLOOR) {
        return Ok((0.0, x));
    }
    if s > 0.5 {
        // Psi = (E[X] + E[(x - X)^+] - x P(X < x)) / S avoids subtracting
        // x from a call price of about E[X] - x
        let put = mu.expect(&|v| (x - v).max(0.0))?;
        let psi = ((mu.mean()? + put - x * mu.cdf(x)) / s).max(x);
        return Ok((psi - x, psi));
    }
    let l = (mu.isf(x)? / s).max(0.0);
    Ok((l, x + l))
}

/// `L(x) = E[(X - x)^+] / P(X >= x)` below the upper support bound, else 0.
pub fn mrl_function(mu: &Measure, x: f64) -> f64 {
    try_mrl_psi(mu, x).map(|p| p.0).unwrap_or(f64::NAN)
}

/// `Psi(x) = x + L(x)`: barycenter of the law restricted to `[x, inf)`.
pub fn hardy_littlewood(mu: &Measure, x: f64) -> f64 {
    try_mrl_psi(mu, x).map(|p| p.1).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HlCurve {
    pub xs: Vec<f64>,
    pub l: Vec<f64>,
    pub psi: Vec<f64>,
    pub upper_support: f64,
}

impl HlCurve {
    pub fn new(mu: &Measure, xs: &[f64]) -> Result<Self> {
        let vals = xs.par_iter().map(|&x| try_mrl_psi(mu, x)).collect::<Result<Vec<_>>>()?;
        Ok(HlCurve {
            xs: xs.to_vec(),
            l: vals.iter().map(|v| v.0).collect(),
            psi: vals.iter().map(|v| v.1).collect(),
            upper_support: mu.upper_support(),
        })
    }

    /// Writes `x,L,psi` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "L", "psi"])?;
        for i in 0..self.xs.len() {
            w.write_record([fmt_f64(self.xs[i]), fmt_f64(self.l[i]), fmt_f64(self.psi[i])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form, stable across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Verdict that `L_1 <= L_2` on the grid.
pub fn compare_mrl(mu1: &Measure, mu2: &Measure, xs: &[f64], tol: Tol) -> OrderVerdict {
    let mut acc = Accumulator::new(tol);
    for &x in xs {
        let a = mrl_function(mu1, x);
        let b = mrl_function(mu2, x);
        acc.push(tol.margin(b - a, a, b), Witness::Point { x, value: b - a });
    }
    acc.finish()
}

/// Psi of each marginal on the grid, one row per time.
pub fn psi_table(fam: &TimeFamily, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
    fam.times()
        .par_iter()
        .map(|&t| {
            let mu = fam.marginal_at(t)?;
            xs.iter().map(|&x| try_mrl_psi(&mu, x).map(|p| p.1)).collect()
        })
        .collect()
}

/// Verdict that `t -> Psi_t(x)` is non-decreasing for every grid point `x`.
pub fn check_family_mrl(fam: &TimeFamily, xs: &[f64], tol: Tol) -> Result<OrderVerdict> {
    let table = psi_table(fam, xs)?;
    Ok(monotone_in_time(fam.times(), xs, &table, tol))
}

fn monotone_in_time(times: &[f64], xs: &[f64], table: &[Vec<f64>], tol: Tol) -> OrderVerdict {
    let mut acc = Accumulator::new(tol);
    for i in 1..times.len() {
        for (j, &x) in xs.iter().enumerate() {
            let (a, b) = (table[i - 1][j], table[i][j]);
            acc.push(
                tol.margin(b - a, a, b),
                Witness::TimePair {
                    t1: times[i - 1],
                    t2: times[i],
                    x,
                    value: b - a,
                },
            );
        }
    }
    acc.finish()
}

/// Convex-order (peacock) check: constant mean and `t -> C(t, x)` non-decreasing.
pub fn check_peacock(fam: &TimeFamily, xs: &[f64], tol: Tol) -> Result<OrderVerdict> {
    fam.constant_mean(tol.rel)?;
    let table: Vec<Vec<f64>> = fam
        .times()
        .par_iter()
        .map(|&t| {
            let mu = fam.marginal_at(t)?;
            xs.iter().map(|&x| mu.isf(x)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(monotone_in_time(fam.times(), xs, &table, tol))
}

pub(crate) fn require_centered(mu: &Measure, tol: Tol) -> Result<()> {
    let mean = mu.mean()?;
    let spread = mu.expect(&|y| y.abs())?;
    if mean.abs() > tol.rel * spread.max(1.0) {
        return Err(Error::NotCentered { mean });
    }
    Ok(())
}

/// Madan-Yor condition: `a -> Psi(a) / a` non-increasing on the positive grid.
pub fn check_madan_yor(mu: &Measure, a_grid: &[f64], tol: Tol) -> Result<OrderVerdict> {
    require_centered(mu, tol)?;
    if a_grid.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::PreconditionFailed("Madan-Yor grid must be strictly positive".into()));
    }
    let ratios = a_grid
        .par_iter()
        .map(|&a| try_mrl_psi(mu, a).map(|p| p.1 / a))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Accumulator::new(tol);
    for i in 1..a_grid.len() {
        let (r0, r1) = (ratios[i - 1], ratios[i]);
        acc.push(
            tol.margin(r0 - r1, r0, r1),
            Witness::Pair {
                a: a_grid[i - 1],
                b: a_grid[i],
                value: r0 - r1,
            },
        );
    }
    Ok(acc.finish())
}

/// Decreasing mean residual life: `L` non-increasing on the grid.
pub fn check_dmrl(mu: &Measure, xs: &[f64], tol: Tol) -> Result<OrderVerdict> {
    let ls = xs
        .par_iter()
        .map(|&x| try_mrl_psi(mu, x).map(|p| p.0))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Accumulator::new(tol);
    for i in 1..xs.len() {
        let (a, b) = (ls[i - 1], ls[i]);
        acc.push(
            tol.margin(a - b, a, b),
            Witness::Pair {
                a: xs[i - 1],
                b: xs[i],
                value: a - b,
            },
        );
    }
    Ok(acc.finish())
}
