//! Operations that keep a family increasing in the MRL order: independent
//! translation, independent positive scaling, and piecewise-linear
//! interpolation between MRL-ordered laws.

use std::sync::Arc;

use super::phi::require_log_concave_survival;
use crate::error::{Error, Result};
use crate::grids::{default_x_grid, linspace, quantile_window};
use crate::measures::{Discrete, LawFn, Measure, Origin, TimeFamily};
use crate::mrl::{check_family_mrl, compare_mrl};
use crate::totalpos::{tp2_check, ScanMode, Tp2Grid};
use crate::verdict::Tol;

fn precondition(e: Error) -> Error {
    match e {
        Error::PreconditionFailed(_) => e,
        other => Error::PreconditionFailed(other.to_string()),
    }
}

/// MRL check of `fam` on a grid covering its first and last marginals.
pub(crate) fn require_mrl_family(fam: &TimeFamily) -> Result<()> {
    let ts = fam.times();
    let ends = [fam.marginal_at(ts[0])?, fam.marginal_at(ts[ts.len() - 1])?];
    let xs = default_x_grid(&ends, 65);
    let v = check_family_mrl(fam, &xs, Tol::default())?;
    if !v.holds {
        return Err(Error::PreconditionFailed(format!(
            "{} is not MRL (worst margin {:e}{})",
            fam.label(),
            v.worst_violation,
            v.witness.map(|w| format!(" at {w}")).unwrap_or_default()
        )));
    }
    Ok(())
}

fn single_atom(y: &Measure) -> Option<f64> {
    let d = y.as_discrete()?;
    let atoms: Vec<f64> = d.atoms().iter().zip(d.masses()).filter(|(_, &m)| m > 0.0).map(|(&a, _)| a).collect();
    (atoms.len() == 1).then(|| atoms[0])
}

/// Marginal at `t` is the law of `X_t + Y` with `Y` independent, so
/// `C(t, x) = E[C_X(t, x - Y)]`.
pub fn translate_family(fam: TimeFamily, y: Measure) -> Result<TimeFamily> {
    let shift = single_atom(&y);
    if shift.is_none() {
        let (lo, hi) = quantile_window(&y, 1e-6);
        require_log_concave_survival(&y, &linspace(lo, hi, 129)).map_err(precondition)?;
    }
    require_mrl_family(&fam)?;
    let label = format!("{} + {}", fam.label(), y.name());
    let inner = fam.clone();
    let marginal = move |t: f64| -> Result<Measure> {
        let x = inner.marginal_at(t)?;
        match shift {
            Some(c) => Measure::affine(x, 1.0, c),
            None => {
                let law: LawFn = Arc::new(move |v| Measure::affine(x.clone(), 1.0, v));
                Ok(Measure::compound(y.clone(), law, "translate"))
            }
        }
    };
    TimeFamily::new(label, Arc::new(marginal), fam.times().to_vec())
}

/// TP2 scan of `(s, r) -> f(e^{s - r})`, which holds iff the density of `log Y`
/// is log-concave.
pub fn log_scale_tp2(y: &Measure) -> Result<crate::verdict::OrderVerdict> {
    let (lo, hi) = (y.quantile(1e-4), y.quantile(1.0 - 1e-4));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::PreconditionFailed("log-scale check needs a positive window".into()));
    }
    let (ul, uh) = (lo.ln(), hi.ln());
    let d = uh - ul;
    let rows = linspace(ul, uh, 33);
    let cols = linspace(-0.25 * d, 0.25 * d, 17);
    let grid = Tp2Grid::sample(&rows, &cols, |s, r| Ok(y.density((s - r).exp()).unwrap_or(0.0)))?;
    tp2_check(&grid, ScanMode::AllPairs, Tol::default())
}

/// Marginal at `t` is the law of `Y X_t` with `Y > 0` independent, so
/// `C(t, x) = E[Y C_X(t, x / Y)]` on both half-lines.
pub fn scale_mixture_family(fam: TimeFamily, y: Measure) -> Result<TimeFamily> {
    let factor = single_atom(&y);
    match factor {
        Some(c) if c > 0.0 => {}
        Some(c) => return Err(Error::PreconditionFailed(format!("scale factor {c} must be positive"))),
        None => {
            if !y.is_continuous() || y.density(y.quantile(0.5)).is_none() {
                return Err(Error::PreconditionFailed(format!("{} needs a density", y.name())));
            }
            if y.lower_support() < 0.0 {
                return Err(Error::PreconditionFailed(format!("{} is not a positive law", y.name())));
            }
            let v = log_scale_tp2(&y)?;
            if !v.holds {
                return Err(Error::PreconditionFailed(format!(
                    "log of {} is not log-concave (worst normalised minor {:e}{})",
                    y.name(),
                    v.worst_violation,
                    v.witness.map(|w| format!(" at {w}")).unwrap_or_default()
                )));
            }
        }
    }
    require_mrl_family(&fam)?;
    let label = format!("{} * {}", y.name(), fam.label());
    let inner = fam.clone();
    let marginal = move |t: f64| -> Result<Measure> {
        let x = inner.marginal_at(t)?;
        match factor {
            Some(c) => Measure::affine(x, c, 0.0),
            None => {
                let law: LawFn = Arc::new(move |v| Measure::affine(x.clone(), v, 0.0));
                Ok(Measure::compound(y.clone(), law, "scale_mixture"))
            }
        }
    };
    TimeFamily::new(label, Arc::new(marginal), fam.times().to_vec())
}

fn blend(a: &Measure, wa: f64, b: &Measure, wb: f64) -> Result<Measure> {
    if let (Some(da), Some(db)) = (a.as_discrete(), b.as_discrete()) {
        let origin = if da.origin() == Origin::Grid || db.origin() == Origin::Grid {
            Origin::Grid
        } else {
            Origin::Atomic
        };
        let pairs = da
            .atoms()
            .iter()
            .zip(da.masses())
            .map(|(&x, &m)| (x, wa * m))
            .chain(db.atoms().iter().zip(db.masses()).map(|(&x, &m)| (x, wb * m)))
            .filter(|&(_, m)| m > 0.0)
            .collect();
        return Ok(Measure::from_discrete(Discrete::from_pairs(pairs, origin)?));
    }
    Measure::mixture(vec![(wa, a.clone()), (wb, b.clone())])
}

/// On `[c_n, c_{n+1}]` the marginal is the convex combination of `mu_n` and
/// `mu_{n+1}` with weights linear in `t`; at `t = c_n` it is `mu_n` itself.
pub fn interpolate_family(measures: Vec<Measure>, cuts: Vec<f64>, times: Vec<f64>) -> Result<TimeFamily> {
    if measures.len() < 2 || measures.len() != cuts.len() {
        return Err(Error::PreconditionFailed(format!(
            "{} laws for {} cut points (need at least two of each, equally many)",
            measures.len(),
            cuts.len()
        )));
    }
    if cuts.windows(2).any(|w| !(w[0] < w[1])) || cuts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::PreconditionFailed("cut points must be nonnegative and strictly increasing".into()));
    }
    for (i, w) in measures.windows(2).enumerate() {
        let xs = default_x_grid(w, 257);
        let v = compare_mrl(&w[0], &w[1], &xs, Tol::default());
        if !v.holds {
            return Err(Error::PreconditionFailed(format!(
                "laws {i} and {} are not MRL ordered{}",
                i + 1,
                v.witness.map(|w| format!(" at {w}")).unwrap_or_default()
            )));
        }
    }
    let (c0, cm) = (cuts[0], cuts[cuts.len() - 1]);
    if let Some(&t) = times.iter().find(|&&t| t < c0 || t > cm) {
        return Err(Error::UnknownTime(t));
    }
    let marginal = move |t: f64| -> Result<Measure> {
        if !(t >= c0 && t <= cm) {
            return Err(Error::UnknownTime(t));
        }
        if let Some(n) = cuts.iter().position(|&c| c == t) {
            return Ok(measures[n].clone());
        }
        let n = cuts.partition_point(|&c| c < t) - 1;
        let span = cuts[n + 1] - cuts[n];
        blend(&measures[n], (cuts[n + 1] - t) / span, &measures[n + 1], (t - cuts[n]) / span)
    };
    TimeFamily::new("interpolated", Arc::new(marginal), times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::scale_family;
    use crate::measures::Analytic;
    use crate::mrl::hardy_littlewood;
    use crate::totalpos::isf_tp2_check;

    fn two_point_scale(times: Vec<f64>) -> TimeFamily {
        let tp = Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        scale_family(tp, Arc::new(|t| t), times).unwrap()
    }

    fn centered_exp(s: f64) -> Measure {
        let e = Measure::analytic(Analytic::Exponential { rate: 1.0 }).unwrap();
        Measure::affine(e, s, -s).unwrap()
    }

    #[test]
    fn dirac_translation_shifts_psi() {
        let fam = two_point_scale(vec![0.5, 1.0, 2.0]);
        let moved = translate_family(fam.clone(), Measure::dirac(1.5)).unwrap();
        for &t in fam.times() {
            let (a, b) = (fam.marginal_at(t).unwrap(), moved.marginal_at(t).unwrap());
            for &x in &[-2.0, -0.3, 0.0, 1.1, 3.0] {
                assert_eq!(hardy_littlewood(&b, x), hardy_littlewood(&a, x - 1.5) + 1.5);
            }
        }
    }

    #[test]
    fn exponential_translation_stays_mrl() {
        let fam = two_point_scale(linspace(0.0, 2.0, 5));
        let e = Measure::analytic(Analytic::Exponential { rate: 1.0 }).unwrap();
        let moved = translate_family(fam, e).unwrap();
        let m = moved.marginal_at(1.0).unwrap();
        // E[(X + E - 0)^+] with X = +-1: 0.5 * (1 + 1) + 0.5 * E[(E - 1)^+] = 1 + e^{-1} / 2
        assert!((m.isf(0.0).unwrap() - (1.0 + 0.5 * (-1.0f64).exp())).abs() < 1e-10);
        let v = check_family_mrl(&moved, &linspace(-3.0, 8.0, 45), Tol::default()).unwrap();
        assert!(v.holds, "{v:?}");
    }

    #[test]
    fn translating_a_constant_family() {
        let fam = TimeFamily::new("c", Arc::new(|_| Ok(centered_exp(1.0))), vec![0.0, 1.0]).unwrap();
        let g = Measure::analytic(Analytic::Gaussian { mean: 0.0, sd: 1.0 }).unwrap();
        let moved = translate_family(fam, g).unwrap();
        for &x in &[-1.0, 0.0, 2.0] {
            let a = moved.marginal_at(0.0).unwrap().isf(x).unwrap();
            let b = moved.marginal_at(1.0).unwrap().isf(x).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unit_dirac_scale_is_identity() {
        let fam = two_point_scale(vec![0.5, 1.0]);
        let same = scale_mixture_family(fam.clone(), Measure::dirac(1.0)).unwrap();
        for &t in fam.times() {
            for &x in &[-1.0, 0.2, 0.7] {
                let a = fam.marginal_at(t).unwrap().isf(x).unwrap();
                assert_eq!(same.marginal_at(t).unwrap().isf(x).unwrap(), a);
            }
        }
    }

    #[test]
    fn log_normal_scale_mixture_is_tp2() {
        let fam = two_point_scale(linspace(0.25, 2.0, 8));
        let ln = Measure::analytic(Analytic::LogNormal { mu: 0.0, sigma: 0.5 }).unwrap();
        let mixed = scale_mixture_family(fam, ln).unwrap();
        // E[(Y X)^+] = E[Y] t / 2
        let m = mixed.marginal_at(1.0).unwrap();
        assert!((m.isf(0.0).unwrap() - 0.5 * (0.125f64).exp()).abs() < 1e-10);
        let v = isf_tp2_check(&mixed, &linspace(-4.0, 4.0, 33), Tol::default()).unwrap();
        assert!(v.holds, "{v:?}");
    }

    #[test]
    fn bimodal_log_scale_is_rejected() {
        let a = Measure::analytic(Analytic::LogNormal { mu: 0.0, sigma: 0.3 }).unwrap();
        let b = Measure::analytic(Analytic::LogNormal { mu: 4.0, sigma: 0.3 }).unwrap();
        let y = Measure::mixture(vec![(0.5, a), (0.5, b)]).unwrap();
        assert!(!log_scale_tp2(&y).unwrap().holds);
        let r = scale_mixture_family(two_point_scale(vec![1.0, 2.0]), y);
        assert!(matches!(r, Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let (m0, m1) = (centered_exp(1.0), centered_exp(2.0));
        let fam = interpolate_family(vec![m0.clone(), m1.clone()], vec![0.0, 1.0], linspace(0.0, 1.0, 11)).unwrap();
        for &x in &[-1.5, 0.0, 2.5] {
            assert_eq!(fam.marginal_at(0.0).unwrap().isf(x).unwrap(), m0.isf(x).unwrap());
            assert_eq!(fam.marginal_at(1.0).unwrap().isf(x).unwrap(), m1.isf(x).unwrap());
            let mid = fam.marginal_at(0.5).unwrap().isf(x).unwrap();
            let avg = 0.5 * (m0.isf(x).unwrap() + m1.isf(x).unwrap());
            assert!((mid - avg).abs() < 1e-15);
        }
        let xs = default_x_grid(&[m0, m1], 129);
        assert!(check_family_mrl(&fam, &xs, Tol::default()).unwrap().holds);
        assert!(matches!(fam.marginal_at(1.5), Err(Error::UnknownTime(_))));
    }

    #[test]
    fn interpolation_requires_mrl_order() {
        let r = interpolate_family(vec![centered_exp(2.0), centered_exp(1.0)], vec![0.0, 1.0], vec![0.0]);
        assert!(matches!(r, Err(Error::PreconditionFailed(_))));
    }
}
