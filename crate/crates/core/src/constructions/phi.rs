//! Families `phi(lambda, Y)` with `phi` increasing in `y` and the ratio of its
//! partial derivatives non-decreasing in `y`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use super::solve_increasing;
use crate::error::{Error, Hypothesis, Result};
use crate::grids::{linspace, quantile_window};
use crate::measures::{Measure, MonotoneMap, TimeFamily};
use crate::totalpos::log_concavity_check;
use crate::verdict::Tol;

pub trait PhiSpec: Send + Sync + fmt::Debug {
    fn label(&self) -> String;
    fn value(&self, lambda: f64, y: f64) -> f64;
    fn d_lambda(&self, lambda: f64, y: f64) -> f64;
    fn d_y(&self, lambda: f64, y: f64) -> f64;

    fn ratio(&self, lambda: f64, y: f64) -> f64 {
        self.d_lambda(lambda, y) / self.d_y(lambda, y)
    }

    /// Limit of `phi(lambda, y)` as `y -> -inf`.
    fn tau_minus(&self, lambda: f64) -> f64;
    /// Limit of `phi(lambda, y)` as `y -> +inf`.
    fn tau_plus(&self, lambda: f64) -> f64;

    /// Starting bracket for solving `phi(lambda, y) = z`.
    fn inverse_hint(&self, _lambda: f64, _z: f64) -> (f64, f64) {
        (-1.0, 1.0)
    }

    /// `Some(c)` when `phi(lambda, .)` is the constant `c`.
    fn constant_at(&self, _lambda: f64) -> Option<f64> {
        None
    }

    fn inverse(&self, lambda: f64, z: f64) -> f64 {
        let (lo, hi) = self.inverse_hint(lambda, z);
        solve_increasing(&|y| self.value(lambda, y), z, lo, hi)
    }
}

/// `y -> phi(lambda, y)` restricted to the support of the base law.
#[derive(Debug)]
struct PhiMap {
    spec: Arc<dyn PhiSpec>,
    lambda: f64,
    range: (f64, f64),
    support: (f64, f64),
}

impl MonotoneMap for PhiMap {
    fn value(&self, y: f64) -> f64 {
        self.spec.value(self.lambda, y)
    }

    fn derivative(&self, y: f64) -> f64 {
        self.spec.d_y(self.lambda, y)
    }

    fn inverse(&self, z: f64) -> f64 {
        self.spec.inverse(self.lambda, z).clamp(self.support.0, self.support.1)
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }
}

fn phi_marginal(y: &Measure, spec: &Arc<dyn PhiSpec>, lambda: f64) -> Result<Measure> {
    if let Some(c) = spec.constant_at(lambda) {
        return Ok(Measure::dirac(c));
    }
    let (lo, hi) = (y.lower_support(), y.upper_support());
    let end = |b: f64, tau: f64| if b.is_finite() { spec.value(lambda, b) } else { tau };
    let map = PhiMap {
        spec: spec.clone(),
        lambda,
        range: (end(lo, spec.tau_minus(lambda)), end(hi, spec.tau_plus(lambda))),
        support: (lo, hi),
    };
    Measure::pushforward(y.clone(), Arc::new(map))
}

fn violated(which: Hypothesis, detail: String) -> Error {
    Error::HypothesisViolated { which, detail }
}

/// Requires a positive continuous density with log-concave survival, checked on
/// the quantile window of `y`.
pub(crate) fn require_log_concave_survival(y: &Measure, ys: &[f64]) -> Result<()> {
    if !y.is_continuous() {
        return Err(violated(Hypothesis::LogConcaveSurvival, format!("{} has no density", y.name())));
    }
    if let Some(&v) = ys.iter().find(|&&v| !(y.density(v).unwrap_or(0.0) > 0.0)) {
        return Err(violated(Hypothesis::LogConcaveSurvival, format!("density vanishes at {v}")));
    }
    let surv: Vec<f64> = ys.iter().map(|&v| y.survival(v)).collect();
    let verdict = log_concavity_check(ys, &surv, Tol::default())
        .map_err(|e| violated(Hypothesis::LogConcaveSurvival, e.to_string()))?;
    if !verdict.holds {
        return Err(violated(
            Hypothesis::LogConcaveSurvival,
            format!("survival is not log-concave near {:?}", verdict.witness),
        ));
    }
    Ok(())
}

/// Checks the hypotheses at the sampled `(lambda, y)` points.
fn check_hypotheses(y: &Measure, spec: &dyn PhiSpec, lambdas: &[f64], ys: &[f64]) -> Result<()> {
    let tol = Tol::default();
    let pos: Vec<f64> = lambdas.iter().copied().filter(|&l| l > 0.0).collect();
    for &l in &pos {
        let mut prev_ratio = f64::NEG_INFINITY;
        for &v in ys {
            let (f, fl, fy) = (spec.value(l, v), spec.d_lambda(l, v), spec.d_y(l, v));
            if !(f.is_finite() && fl.is_finite() && fy.is_finite()) {
                return Err(violated(Hypothesis::H1, format!("phi is not finite at ({l}, {v})")));
            }
            let hy = 1e-6 * v.abs().max(1.0);
            let num_y = (spec.value(l, v + hy) - spec.value(l, v - hy)) / (2.0 * hy);
            let hl = 1e-6 * l.max(1e-3);
            let num_l = (spec.value(l + hl, v) - spec.value((l - hl).max(0.0), v)) / (l + hl - (l - hl).max(0.0));
            let scale = f.abs().max(1.0) * 1e-4 / hy.min(hl);
            if (num_y - fy).abs() > 1e-5 * fy.abs() + 1e-6 * scale || (num_l - fl).abs() > 1e-5 * fl.abs() + 1e-6 * scale {
                return Err(violated(
                    Hypothesis::H1,
                    format!("partial derivatives disagree with finite differences at ({l}, {v})"),
                ));
            }
            if !(fy > 0.0) {
                return Err(violated(Hypothesis::H2, format!("d phi / d y = {fy} at ({l}, {v})")));
            }
            let r = spec.ratio(l, v);
            if prev_ratio.is_finite() && !tol.passes(tol.margin(r - prev_ratio, r, prev_ratio)) {
                return Err(violated(Hypothesis::H2, format!("derivative ratio decreases at ({l}, {v})")));
            }
            prev_ratio = r;
        }
    }
    for w in pos.windows(2) {
        let (a, b) = (spec.tau_minus(w[0]), spec.tau_minus(w[1]));
        if b > a && !tol.passes(tol.margin(a - b, a, b)) {
            return Err(violated(Hypothesis::H3, format!("lower bound increases between {} and {}", w[0], w[1])));
        }
    }
    let plus: Vec<f64> = pos.iter().map(|&l| spec.tau_plus(l)).collect();
    if !plus.iter().all(|&t| t == f64::INFINITY) {
        for (i, w) in plus.windows(2).enumerate() {
            if !w[1].is_finite() || (w[1] < w[0] && !tol.passes(tol.margin(w[1] - w[0], w[0], w[1]))) {
                return Err(violated(
                    Hypothesis::H3,
                    format!("upper bound is not non-decreasing between {} and {}", pos[i], pos[i + 1]),
                ));
            }
        }
    }
    for &l in lambdas {
        if let Some(c) = spec.constant_at(l) {
            if c != 0.0 {
                return Err(violated(Hypothesis::Centering, format!("phi({l}, .) is the constant {c}")));
            }
            continue;
        }
        let integrable = |what: &str, r: Result<f64>| -> Result<f64> {
            match r {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(violated(Hypothesis::Integrability, format!("E[{what}] = {v} at lambda = {l}"))),
                Err(e) => Err(violated(Hypothesis::Integrability, format!("E[{what}] at lambda = {l}: {e}"))),
            }
        };
        let abs = integrable("|phi|", y.expect(&|v| spec.value(l, v).abs()))?;
        if l > 0.0 {
            integrable("|d phi / d lambda|", y.expect(&|v| spec.d_lambda(l, v).abs()))?;
        }
        let mean = integrable("phi", y.expect(&|v| spec.value(l, v)))?;
        if mean.abs() > tol.rel * abs.max(1.0) {
            return Err(violated(Hypothesis::Centering, format!("E[phi({l}, Y)] = {mean}")));
        }
    }
    Ok(())
}

/// Marginal at `lambda` is the law of `phi(lambda, Y)`; its integrated survival
/// is `int_{phi^{-1}(z)}^inf m(u) d_y phi(lambda, u) du` with `m` the survival of `Y`.
pub fn phi_family(y: Measure, spec: Arc<dyn PhiSpec>, times: Vec<f64>) -> Result<TimeFamily> {
    let (lo, hi) = quantile_window(&y, 1e-6);
    let ys = linspace(lo, hi, 129);
    require_log_concave_survival(&y, &ys)?;
    check_hypotheses(&y, &*spec, &times, &ys)?;
    let label = format!("{}({})", spec.label(), y.name());
    TimeFamily::new(label, Arc::new(move |l| phi_marginal(&y, &spec, l)), times)
}

/// `e^{lambda y} / E[e^{lambda Y}] - 1`.
pub struct ExpTilt {
    base: Measure,
    // lambda bits -> (log E[e^{lambda Y}], E[Y e^{lambda Y}] / E[e^{lambda Y}])
    cache: RwLock<HashMap<u64, (f64, f64)>>,
}

impl fmt::Debug for ExpTilt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExpTilt({})", self.base.name())
    }
}

impl ExpTilt {
    pub fn new(base: Measure) -> Self {
        ExpTilt {
            base,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn cumulants(&self, lambda: f64) -> (f64, f64) {
        let key = lambda.to_bits();
        if let Some(&v) = self.cache.read().unwrap().get(&key) {
            return v;
        }
        let log_m = match self.base.mgf(lambda) {
            Some(m) => m.ln(),
            None => self
                .base
                .expect(&|y| (lambda * y).exp())
                .map(f64::ln)
                .unwrap_or(f64::NAN),
        };
        let drift = self
            .base
            .expect(&|y| y * (lambda * y - log_m).exp())
            .unwrap_or(f64::NAN);
        self.cache.write().unwrap().insert(key, (log_m, drift));
        (log_m, drift)
    }
}

impl PhiSpec for ExpTilt {
    fn label(&self) -> String {
        "exp_tilt".into()
    }

    fn value(&self, lambda: f64, y: f64) -> f64 {
        let (log_m, _) = self.cumulants(lambda);
        (lambda * y - log_m).exp() - 1.0
    }

    fn d_lambda(&self, lambda: f64, y: f64) -> f64 {
        let (log_m, drift) = self.cumulants(lambda);
        (lambda * y - log_m).exp() * (y - drift)
    }

    fn d_y(&self, lambda: f64, y: f64) -> f64 {
        let (log_m, _) = self.cumulants(lambda);
        lambda * (lambda * y - log_m).exp()
    }

    fn ratio(&self, lambda: f64, y: f64) -> f64 {
        (y - self.cumulants(lambda).1) / lambda
    }

    fn tau_minus(&self, _lambda: f64) -> f64 {
        -1.0
    }

    fn tau_plus(&self, _lambda: f64) -> f64 {
        f64::INFINITY
    }

    fn constant_at(&self, lambda: f64) -> Option<f64> {
        (lambda == 0.0).then_some(0.0)
    }
}

/// `phi0(y - lambda) - E[phi0(Y - lambda)]` for the concave increasing
/// `phi0(u) = (1 - e^{-k u}) / k`, which simplifies to `e^{k lambda} (c - e^{-k y}) / k`
/// with `c = E[e^{-k Y}]`.
#[derive(Debug, Clone)]
pub struct ShiftConcave {
    k: f64,
    c: f64,
}

impl ShiftConcave {
    pub fn new(base: &Measure, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::PreconditionFailed(format!("shift_concave rate {k} must be positive")));
        }
        let c = match base.mgf(-k) {
            Some(c) => c,
            None => base.expect(&|y| (-k * y).exp()).map_err(|e| {
                violated(Hypothesis::Integrability, format!("E[exp(-{k} Y)]: {e}"))
            })?,
        };
        if !c.is_finite() {
            return Err(violated(Hypothesis::Integrability, format!("E[exp(-{k} Y)] = {c}")));
        }
        Ok(ShiftConcave { k, c })
    }
}

impl PhiSpec for ShiftConcave {
    fn label(&self) -> String {
        format!("shift_concave[k={}]", self.k)
    }

    fn value(&self, lambda: f64, y: f64) -> f64 {
        (self.k * lambda).exp() * (self.c - (-self.k * y).exp()) / self.k
    }

    fn d_lambda(&self, lambda: f64, y: f64) -> f64 {
        (self.k * lambda).exp() * (self.c - (-self.k * y).exp())
    }

    fn d_y(&self, lambda: f64, y: f64) -> f64 {
        (self.k * (lambda - y)).exp()
    }

    fn ratio(&self, _lambda: f64, y: f64) -> f64 {
        self.c * (self.k * y).exp() - 1.0
    }

    fn tau_minus(&self, _lambda: f64) -> f64 {
        f64::NEG_INFINITY
    }

    fn tau_plus(&self, lambda: f64) -> f64 {
        (self.k * lambda).exp() * self.c / self.k
    }

    fn inverse(&self, lambda: f64, z: f64) -> f64 {
        let w = self.c - self.k * z * (-self.k * lambda).exp();
        if w <= 0.0 {
            f64::INFINITY
        } else {
            -w.ln() / self.k
        }
    }
}

/// `lambda^p y`, the scale family written as a member of the class.
#[derive(Debug, Clone)]
pub struct PowerScale {
    pub p: f64,
}

impl PhiSpec for PowerScale {
    fn label(&self) -> String {
        format!("power[p={}]", self.p)
    }

    fn value(&self, lambda: f64, y: f64) -> f64 {
        lambda.powf(self.p) * y
    }

    fn d_lambda(&self, lambda: f64, y: f64) -> f64 {
        self.p * lambda.powf(self.p - 1.0) * y
    }

    fn d_y(&self, lambda: f64, _y: f64) -> f64 {
        lambda.powf(self.p)
    }

    fn ratio(&self, lambda: f64, y: f64) -> f64 {
        self.p * y / lambda
    }

    fn tau_minus(&self, _lambda: f64) -> f64 {
        f64::NEG_INFINITY
    }

    fn tau_plus(&self, _lambda: f64) -> f64 {
        f64::INFINITY
    }

    fn constant_at(&self, lambda: f64) -> Option<f64> {
        (lambda == 0.0).then_some(0.0)
    }
}

/// `phi(lambda, y) = y`.
#[derive(Debug, Clone)]
pub struct IdentityPhi;

impl PhiSpec for IdentityPhi {
    fn label(&self) -> String {
        "identity".into()
    }

    fn value(&self, _lambda: f64, y: f64) -> f64 {
        y
    }

    fn d_lambda(&self, _lambda: f64, _y: f64) -> f64 {
        0.0
    }

    fn d_y(&self, _lambda: f64, _y: f64) -> f64 {
        1.0
    }

    fn tau_minus(&self, _lambda: f64) -> f64 {
        f64::NEG_INFINITY
    }

    fn tau_plus(&self, _lambda: f64) -> f64 {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::default_x_grid;
    use crate::measures::Analytic;
    use crate::mrl::{check_family_mrl, hardy_littlewood};
    use crate::quadrature::integrate;

    fn gaussian() -> Measure {
        Measure::analytic(Analytic::Gaussian { mean: 0.0, sd: 1.0 }).unwrap()
    }

    #[test]
    fn exp_tilt_gaussian_is_mrl() {
        let y = gaussian();
        let fam = phi_family(y.clone(), Arc::new(ExpTilt::new(y)), linspace(0.0, 1.2, 7)).unwrap();
        assert_eq!(fam.marginal_at(0.0).unwrap().upper_support(), 0.0);
        let m = fam.marginal_at(0.8).unwrap();
        assert!(m.mean().unwrap().abs() < 1e-12);
        // exp(0.8 Y - 0.32) - 1 is a shifted log-normal
        let ln = Measure::affine(
            Measure::analytic(Analytic::LogNormal { mu: -0.32, sigma: 0.8 }).unwrap(),
            1.0,
            -1.0,
        )
        .unwrap();
        for &x in &[-0.9, -0.5, 0.0, 0.7, 3.0] {
            let (a, b) = (m.isf(x).unwrap(), ln.isf(x).unwrap());
            // the closed form subtracts two tail terms, so allow for its rounding
            assert!((a - b).abs() < 1e-9 * b.max(1e-3), "{x}: {a} vs {b}");
        }
        let ms = fam.marginals().unwrap();
        let xs = default_x_grid(&ms, 65);
        let v = check_family_mrl(&fam, &xs, Tol::default()).unwrap();
        assert!(v.holds, "{v:?}");
    }

    #[test]
    fn identity_is_constant() {
        let y = gaussian();
        let fam = phi_family(y, Arc::new(IdentityPhi), vec![0.0, 1.0, 5.0]).unwrap();
        let xs = linspace(-3.0, 3.0, 25);
        let v = check_family_mrl(&fam, &xs, Tol::default()).unwrap();
        assert!(v.holds);
        for &x in &xs {
            let a = fam.marginal_at(0.0).unwrap().isf(x).unwrap();
            let b = fam.marginal_at(5.0).unwrap().isf(x).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    // Psi from the level-space integral of m(phi^{-1}(z)), independent of the
    // pushforward code path.
    fn lemma_psi(y: &Measure, spec: &dyn PhiSpec, l: f64, z0: f64) -> f64 {
        let tp = spec.tau_plus(l);
        let inv = |z: f64| solve_increasing(&|u| spec.value(l, u), z, -50.0, 50.0);
        let m0 = y.survival(inv(z0));
        let tail = integrate(|z| y.survival(inv(z)), z0, tp).unwrap();
        z0 + tail / m0
    }

    #[test]
    fn shift_concave_matches_level_space_formula() {
        let y = gaussian();
        let spec = Arc::new(ShiftConcave::new(&y, 1.0).unwrap());
        let fam = phi_family(y.clone(), spec.clone(), linspace(0.0, 1.0, 6)).unwrap();
        for &l in &[0.0, 0.4, 1.0] {
            let m = fam.marginal_at(l).unwrap();
            assert!(m.mean().unwrap().abs() < 1e-10);
            for &z in &[-4.0, -1.0, 0.0, 0.5] {
                let a = hardy_littlewood(&m, z);
                let b = lemma_psi(&y, &*spec, l, z);
                assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "l={l} z={z}: {a} vs {b}");
            }
            assert_eq!(hardy_littlewood(&m, spec.tau_plus(l) + 0.1), spec.tau_plus(l) + 0.1);
        }
        let xs = default_x_grid(&fam.marginals().unwrap(), 65);
        assert!(check_family_mrl(&fam, &xs, Tol::default()).unwrap().holds);
    }

    #[test]
    fn power_scale_matches_affine() {
        let y = Measure::affine(Measure::analytic(Analytic::Exponential { rate: 1.0 }).unwrap(), 1.0, -1.0).unwrap();
        let fam = phi_family(y.clone(), Arc::new(PowerScale { p: 2.0 }), vec![0.0, 0.5, 1.5]).unwrap();
        let m = fam.marginal_at(1.5).unwrap();
        let direct = Measure::affine(y, 2.25, 0.0).unwrap();
        for &x in &[-2.0, -1.0, 0.0, 2.0] {
            assert!((m.isf(x).unwrap() - direct.isf(x).unwrap()).abs() < 1e-10);
        }
    }

    #[derive(Debug)]
    struct Quadratic;

    impl PhiSpec for Quadratic {
        fn label(&self) -> String {
            "quadratic".into()
        }
        fn value(&self, l: f64, y: f64) -> f64 {
            y + l * y * y - l
        }
        fn d_lambda(&self, _l: f64, y: f64) -> f64 {
            y * y - 1.0
        }
        fn d_y(&self, l: f64, y: f64) -> f64 {
            1.0 + 2.0 * l * y
        }
        fn tau_minus(&self, _l: f64) -> f64 {
            f64::INFINITY
        }
        fn tau_plus(&self, _l: f64) -> f64 {
            f64::INFINITY
        }
    }

    #[test]
    fn hypothesis_failures_are_named() {
        let fam = phi_family(gaussian(), Arc::new(Quadratic), vec![0.0, 1.0]);
        assert!(matches!(fam, Err(Error::HypothesisViolated { which: Hypothesis::H2, .. })));
        let lap = Measure::analytic(Analytic::Laplace { rate: 1.0 }).unwrap();
        let fam = phi_family(lap.clone(), Arc::new(ExpTilt::new(lap)), vec![0.5, 2.0]);
        assert!(
            matches!(fam, Err(Error::HypothesisViolated { which: Hypothesis::Integrability | Hypothesis::H1, .. })),
            "{fam:?}"
        );
        let t = Measure::analytic(Analytic::StudentT { dof: 3.0 }).unwrap();
        let fam = phi_family(t, Arc::new(IdentityPhi), vec![0.0]);
        assert!(matches!(fam, Err(Error::HypothesisViolated { which: Hypothesis::LogConcaveSurvival, .. })));
        let e = Measure::analytic(Analytic::Exponential { rate: 1.0 }).unwrap();
        let fam = phi_family(e, Arc::new(IdentityPhi), vec![0.0]);
        assert!(matches!(fam, Err(Error::HypothesisViolated { which: Hypothesis::Centering, .. })));
    }
}
