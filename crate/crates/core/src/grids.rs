//! Evaluation grids.

use crate::measures::Measure;

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Quantile window `[q(eps), q(1 - eps)]`, widened slightly for atomic laws so
/// the extreme atoms sit strictly inside.
pub fn quantile_window(mu: &Measure, eps: f64) -> (f64, f64) {
    let lo = mu.quantile(eps);
    let hi = mu.quantile(1.0 - eps);
    if hi > lo {
        let pad = if mu.is_continuous() { 0.0 } else { 0.05 * (hi - lo) };
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, lo + 1.0)
    }
}

/// Default `n`-point x grid covering every window in `measures`.
pub fn default_x_grid<'a, I: IntoIterator<Item = &'a Measure>>(measures: I, n: usize) -> Vec<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mu in measures {
        let (a, b) = quantile_window(mu, 1e-6);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if !(lo < hi) {
        return linspace(-1.0, 1.0, n);
    }
    linspace(lo, hi, n)
}
