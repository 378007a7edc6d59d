//! Mean-preserving censoring: the mass of `mu_t` on each cell `[a_j, a_{j+1}]`
//! moves to the two endpoints.

use std::sync::Arc;

use super::closure::require_mrl_family;
use crate::error::{Error, Result};
use crate::measures::{exact_sum, Discrete, Measure, TimeFamily};
use crate::verdict::Tol;

#[derive(Debug, Clone, PartialEq)]
pub struct CensorSpec {
    cuts: Vec<f64>,
}

impl CensorSpec {
    /// At least two strictly increasing finite cut points.
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.len() < 2 {
            return Err(Error::PreconditionFailed("censoring needs at least two cut points".into()));
        }
        if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::PreconditionFailed("cut points must be finite and strictly increasing".into()));
        }
        Ok(CensorSpec { cuts })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }
}

fn left_weight(y: f64, a: f64, b: f64) -> f64 {
    (b - y) / (b - a)
}

fn right_weight(y: f64, a: f64, b: f64) -> f64 {
    (y - a) / (b - a)
}

fn assemble(mut pairs: Vec<(f64, f64)>, origin: crate::measures::Origin) -> Result<Discrete> {
    pairs.retain(|&(_, m)| m > 0.0);
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (atoms, masses) = pairs.into_iter().unzip();
    Discrete::new(atoms, masses, origin)
}

/// Single cell `[a, b]`: atoms inside are replaced by
/// `alpha = E[(b - Y) / (b - a); a <= Y <= b]` at `a` and
/// `beta = E[(Y - a) / (b - a); a <= Y <= b]` at `b`.
pub fn censor_step(d: &Discrete, a: f64, b: f64) -> Result<Discrete> {
    if !(a < b) {
        return Err(Error::PreconditionFailed(format!("censoring cell [{a}, {b}] is empty")));
    }
    let mut pairs = Vec::with_capacity(d.atoms().len() + 2);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for (&y, &m) in d.atoms().iter().zip(d.masses()) {
        if y < a || y > b {
            pairs.push((y, m));
        } else {
            alpha.push(m * left_weight(y, a, b));
            beta.push(m * right_weight(y, a, b));
        }
    }
    pairs.push((a, exact_sum(alpha)));
    pairs.push((b, exact_sum(beta)));
    assemble(pairs, d.origin())
}

/// Multi-cell transform from the closed-form endpoint masses: `a_0` gets the
/// left share of `[a_0, a_1]`, `a_k` the right share of `[a_{k-1}, a_k]`, and an
/// interior `a_n` the right share of `[a_{n-1}, a_n]` plus the left share of
/// `(a_n, a_{n+1}]`. Equal to the composition of single-cell steps, bit for bit.
pub fn censor_discrete(d: &Discrete, spec: &CensorSpec) -> Result<Discrete> {
    let cuts = &spec.cuts;
    let k = cuts.len() - 1;
    let mut left: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut right: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut pairs = Vec::with_capacity(d.atoms().len() + k + 1);
    for (&y, &m) in d.atoms().iter().zip(d.masses()) {
        if y < cuts[0] || y > cuts[k] {
            pairs.push((y, m));
            continue;
        }
        // cell 0 is closed; later cells are open on the left
        let j = if y <= cuts[1] { 0 } else { cuts.partition_point(|&c| c < y) - 1 };
        let (a, b) = (cuts[j], cuts[j + 1]);
        left[j].push(m * left_weight(y, a, b));
        right[j].push(m * right_weight(y, a, b));
    }
    let mut carry = 0.0;
    for n in 0..=k {
        let mass = if n == k {
            carry
        } else {
            let mut terms = std::mem::take(&mut left[n]);
            if n > 0 {
                terms.push(carry);
            }
            carry = exact_sum(std::mem::take(&mut right[n]));
            exact_sum(terms)
        };
        pairs.push((cuts[n], mass));
    }
    assemble(pairs, d.origin())
}

/// `T^{a_{k-1}, a_k} o .. o T^{a_0, a_1}` applied one cell at a time.
pub fn censor_composed(d: &Discrete, spec: &CensorSpec) -> Result<Discrete> {
    spec.cuts
        .windows(2)
        .try_fold(d.clone(), |acc, w| censor_step(&acc, w[0], w[1]))
}

fn censor_measure(mu: &Measure, spec: &CensorSpec) -> Result<Measure> {
    match mu.as_discrete() {
        Some(d) => Ok(Measure::from_discrete(censor_discrete(d, spec)?)),
        None => Measure::censored(mu.clone(), spec.cuts.clone()),
    }
}

/// Censored family. Discrete marginals are transformed exactly; other laws keep
/// their base and interpolate the integrated survival linearly across the cuts.
pub fn censor_transform(fam: TimeFamily, spec: CensorSpec) -> Result<TimeFamily> {
    let tol = Tol::default();
    let mean = fam
        .constant_mean(tol.rel)
        .map_err(|e| Error::PreconditionFailed(format!("family is not centered: {e}")))?;
    let spread = fam
        .marginals()?
        .iter()
        .map(|m| m.expect(&|v| v.abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0f64, f64::max);
    if mean.abs() > tol.rel * spread {
        return Err(Error::PreconditionFailed(format!("family mean is {mean}, not 0")));
    }
    require_mrl_family(&fam)?;
    let label = format!("censor{:?}({})", spec.cuts, fam.label());
    let inner = fam.clone();
    TimeFamily::new(label, Arc::new(move |t| censor_measure(&inner.marginal_at(t)?, &spec)), fam.times().to_vec())
}

/// 2x2 minor of the censored integrated survival on rows `r1, r2` and columns
/// `x1 <= x2`, assembled from minors of the uncensored surface `c(row, x)`
/// according to where `x1` and `x2` sit relative to `[a, b]`.
pub fn four_case_minor(c: &dyn Fn(usize, f64) -> f64, r1: usize, r2: usize, x1: f64, x2: f64, a: f64, b: f64) -> f64 {
    let d = |u: f64, v: f64| c(r1, u) * c(r2, v) - c(r1, v) * c(r2, u);
    let inside = |x: f64| a <= x && x <= b;
    let w = b - a;
    match (inside(x1), inside(x2)) {
        (false, false) => d(x1, x2),
        (false, true) => (b - x2) / w * d(x1, a) + (x2 - a) / w * d(x1, b),
        (true, false) => (b - x1) / w * d(a, x2) + (x1 - a) / w * d(b, x2),
        (true, true) => (x2 - x1) / w * d(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::interpolate_family;
    use crate::grids::linspace;
    use crate::measures::Origin;
    use proptest::prelude::*;

    #[test]
    fn point_mass_splits_evenly() {
        let out = censor_step(&Discrete::dirac(0.0), -1.0, 1.0).unwrap();
        assert_eq!(out.atoms(), &[-1.0, 1.0]);
        assert_eq!(out.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn disjoint_support_is_untouched() {
        let d = Discrete::new(vec![-3.0, 2.0, 5.0], vec![0.2, 0.5, 0.3], Origin::Grid).unwrap();
        let spec = CensorSpec::new(vec![-1.0, 0.0, 1.5]).unwrap();
        assert_eq!(censor_discrete(&d, &spec).unwrap(), d);
        assert_eq!(censor_composed(&d, &spec).unwrap(), d);
    }

    #[test]
    fn spec_validation() {
        assert!(CensorSpec::new(vec![1.0]).is_err());
        assert!(CensorSpec::new(vec![1.0, 1.0]).is_err());
        assert!(CensorSpec::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn continuous_marginals_use_linear_isf() {
        let e = Measure::analytic(crate::measures::Analytic::Exponential { rate: 1.0 }).unwrap();
        let y = Measure::affine(e, 1.0, -1.0).unwrap();
        let fam = interpolate_family(vec![Measure::dirac(0.0), y.clone()], vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let out = censor_transform(fam, CensorSpec::new(vec![-0.5, 0.5]).unwrap()).unwrap();
        let m = out.marginal_at(1.0).unwrap();
        let (ca, cb) = (y.isf(-0.5).unwrap(), y.isf(0.5).unwrap());
        assert!((m.isf(0.0).unwrap() - 0.5 * (ca + cb)).abs() < 1e-15);
        assert!(m.mean().unwrap().abs() < 1e-12);
    }

    fn random_centered(points: &[f64], weights: &[f64]) -> Discrete {
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|v| v / total).collect();
        let mean: f64 = points.iter().zip(&w).map(|(x, p)| x * p).sum();
        let pairs = points.iter().zip(&w).map(|(&x, &p)| (x - mean, p)).collect();
        Discrete::from_pairs(pairs, Origin::Grid).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn multi_cell_equals_composition(
            pts in prop::collection::vec(-4.0f64..4.0, 3..12),
            wts in prop::collection::vec(0.05f64..1.0, 12),
            cuts in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let d = random_centered(&pts, &wts[..pts.len()]);
            let mut c = cuts.clone();
            c.sort_by(f64::total_cmp);
            c.dedup();
            prop_assume!(c.len() >= 2 && c.windows(2).all(|w| w[1] - w[0] > 1e-6));
            // put some atoms exactly on the cuts
            let mut pairs: Vec<(f64, f64)> = d.atoms().iter().copied().zip(d.masses().iter().copied()).collect();
            pairs[0].0 = c[0];
            if pairs.len() > 2 { pairs[1].0 = c[1]; }
            let d = Discrete::from_pairs(pairs, Origin::Grid).unwrap();
            let spec = CensorSpec::new(c).unwrap();
            let direct = censor_discrete(&d, &spec).unwrap();
            let composed = censor_composed(&d, &spec).unwrap();
            prop_assert_eq!(&direct, &composed);
            let before = d.mean();
            let after = direct.mean();
            let scale = d.expect(|v| v.abs()).max(f64::MIN_POSITIVE);
            prop_assert!((before - after).abs() <= 4.0 * f64::EPSILON * scale, "{} vs {}", before, after);
        }

        #[test]
        fn censored_minors_follow_the_four_cases(
            pts in prop::collection::vec(-4.0f64..4.0, 3..10),
            wts in prop::collection::vec(0.05f64..1.0, 10),
            a in -2.0f64..0.5,
            len in 0.1f64..3.0,
        ) {
            let nu = random_centered(&pts, &wts[..pts.len()]);
            let times = linspace(0.0, 1.0, 5);
            let fam = interpolate_family(
                vec![Measure::dirac(0.0), Measure::from_discrete(nu)],
                vec![0.0, 1.0],
                times.clone(),
            ).unwrap();
            let b = a + len;
            let out = censor_transform(fam.clone(), CensorSpec::new(vec![a, b]).unwrap()).unwrap();
            let xs = linspace(-4.5, 4.5, 19);
            let base: Vec<Measure> = fam.marginals().unwrap();
            let cens: Vec<Measure> = out.marginals().unwrap();
            let c = |i: usize, x: f64| base[i].isf(x).unwrap();
            let cc = |i: usize, x: f64| cens[i].isf(x).unwrap();
            for i in 0..times.len() {
                for k in i + 1..times.len() {
                    for (j, &x1) in xs.iter().enumerate() {
                        for &x2 in &xs[j + 1..] {
                            let p = [cc(i, x1), cc(i, x2), cc(k, x1), cc(k, x2)];
                            let scanned = p[0] * p[3] - p[1] * p[2];
                            let cases = four_case_minor(&c, i, k, x1, x2, a, b);
                            let scale = (p[0] * p[3]).abs().max((p[1] * p[2]).abs()).max(1e-300);
                            prop_assert!((scanned - cases).abs() <= 1e-10 * scale + 1e-15,
                                "t=({}, {}) x=({}, {}): {} vs {}", times[i], times[k], x1, x2, scanned, cases);
                        }
                    }
                }
            }
        }
    }
}
