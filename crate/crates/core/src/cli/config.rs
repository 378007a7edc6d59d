//! INI run configuration.
//!
//! ```ini
//! [family]
//! kind = scale
//! base = kind=exp c=1 center=true
//! times = 0:2:33
//!
//! [grids]
//! x = -1:6:257
//!
//! [mrl]
//! check = mrl, peacock
//!
//! [embed]
//! times = 1,2
//! paths = 100000
//! ```
//!
//! Family kinds and their keys (besides `times`):
//!
//! | kind | keys |
//! |---|---|
//! | `scale` | `base`, `power` (h(t) = t^power, default 1) |
//! | `shift` | `base`, `rate` (X_t = Y + rate t; a negative control) |
//! | `phi` | `base`, `phi` = exp_tilt \| shift_concave \| power \| identity, `k`, `p` |
//! | `censored_plus` | `base`, `varphi` = identity \| arctan \| log1p, `g_slope`, `g_intercept` |
//! | `subordinate` | `inner`, `clock` = exp_walk \| laplace_walk \| hypoexp \| drift, `rate`, `rates`, `skip_inner_check` |
//! | `translate`, `scale_mixture` | `inner`, `by` |
//! | `interpolate` | `m0`, `m1`, ... and `cuts` |
//! | `censor` | `inner`, `cuts` |
//!
//! `inner` names another section holding a family. Measure values use the
//! `key=value` measure syntax.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ini::{Ini, ParseOption, Properties};

use crate::azema_yor::PathConfig;
use crate::constructions::{
    censor_transform, censored_plus_family, interpolate_family, phi_family, scale_family, scale_mixture_family,
    subordinate, translate_family, CensorSpec, Clock, ExpTilt, IdentityPhi, PhiSpec, PowerScale, RealFn, ShiftConcave,
    SubordinationSpec, Varphi,
};
use crate::error::{Error, Result};
use crate::grids::default_x_grid;
use crate::measures::config::{parse_f64, parse_list, parse_measure};
use crate::measures::{Measure, TimeFamily};
use crate::totalpos::MarkovKernel;
use crate::verdict::Tol;

const MAX_NESTING: usize = 8;

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    ini: Ini,
    base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub tol: Tol,
    pub path: PathConfig,
}

fn cfg_err(section: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("[{section}] {msg}"))
}

/// Grid values must be finite and strictly increasing.
fn increasing(section: &str, key: &str, v: Vec<f64>) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(cfg_err(section, format!("`{key}` is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(cfg_err(section, format!("`{key}` must be finite and strictly increasing")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn load(path: &Path, over: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base_dir, over)
    }

    pub fn parse(text: &str, base_dir: PathBuf, over: &Overrides) -> Result<Self> {
        let opt = ParseOption {
            enabled_quote: true,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig {
            ini,
            base_dir,
            out_dir: PathBuf::from("."),
            tol: Tol::default(),
            path: PathConfig::default(),
        };
        if let Some(dir) = cfg.get("output", "dir") {
            cfg.out_dir = cfg.base_dir.join(dir);
        }
        if let Some(dir) = &over.out {
            cfg.out_dir = dir.clone();
        }
        let rel = match over.tol {
            Some(t) => t,
            None => cfg.f64_or("tolerance", "rel", Tol::default().rel)?,
        };
        if !(rel > 0.0 && rel.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {rel}")));
        }
        cfg.tol = Tol {
            rel,
            abs: cfg.f64_or("tolerance", "abs", rel * 1e-3)?,
        };
        if !(cfg.tol.abs > 0.0) {
            return Err(Error::Config("absolute tolerance must be positive".into()));
        }
        let d = PathConfig::default();
        cfg.path = PathConfig {
            dt: over.dt.map_or_else(|| cfg.f64_or("embed", "dt", d.dt), Ok)?,
            v_max: cfg.f64_or("embed", "v_max", d.v_max)?,
            paths: match over.paths {
                Some(n) => n,
                None => cfg.uint_or("embed", "paths", d.paths as u64)? as usize,
            },
            seed: match over.seed {
                Some(s) => s,
                None => cfg.uint_or("embed", "seed", d.seed)?,
            },
        };
        cfg.path.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    fn props(&self, section: &str) -> Result<&Properties> {
        self.ini
            .section(Some(section))
            .ok_or_else(|| Error::Config(format!("missing section [{section}]")))
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|p| p.get(key)).map(str::trim)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key).ok_or_else(|| cfg_err(section, format!("missing key `{key}`")))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v).map_err(|e| cfg_err(section, e)),
        }
    }

    pub fn uint_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| cfg_err(section, format!("`{key}` expects a nonnegative integer, found `{v}`"))),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(cfg_err(section, format!("`{key}` expects a boolean, found `{v}`"))),
        }
    }

    pub fn list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.require(section, key)?).map_err(|e| cfg_err(section, e))
    }

    pub fn grid(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(_) => increasing(section, key, self.list(section, key)?).map(Some),
        }
    }

    /// Comma-separated names.
    pub fn names(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get(section, key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    pub fn measure(&self, section: &str, key: &str) -> Result<Measure> {
        let line = self.require(section, key)?;
        parse_measure(line, &self.base_dir).map_err(|e| match e {
            Error::Config(m) => cfg_err(section, format!("`{key}`: {m}")),
            other => other,
        })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// `[grids] x`, or a default grid spanning the given marginals.
    pub fn x_grid(&self, marginals: &[Measure], n: usize) -> Result<Vec<f64>> {
        Ok(self.grid("grids", "x")?.unwrap_or_else(|| default_x_grid(marginals, n)))
    }

    /// The family described by `[family]`.
    pub fn family(&self) -> Result<TimeFamily> {
        self.family_at("family", 0)
    }

    fn family_at(&self, section: &str, depth: usize) -> Result<TimeFamily> {
        if depth > MAX_NESTING {
            return Err(cfg_err(section, "families nest too deeply (cycle in `inner`?)"));
        }
        let props = self.props(section)?;
        let kind = props.get("kind").ok_or_else(|| cfg_err(section, "missing key `kind`"))?.trim();
        let times = || -> Result<Vec<f64>> { increasing(section, "times", self.list(section, "times")?) };
        let inner = || -> Result<TimeFamily> {
            let name = self.require(section, "inner")?;
            self.family_at(name, depth + 1)
        };
        match kind {
            "scale" => {
                let p = self.f64_or(section, "power", 1.0)?;
                let h: RealFn = Arc::new(move |t: f64| t.powf(p));
                scale_family(self.measure(section, "base")?, h, times()?)
            }
            "shift" => {
                let base = self.measure(section, "base")?;
                let rate = self.f64_or(section, "rate", 1.0)?;
                let label = format!("shift({}, {rate})", base.name());
                TimeFamily::new(label, Arc::new(move |t| Measure::affine(base.clone(), 1.0, rate * t)), times()?)
            }
            "phi" => {
                let base = self.measure(section, "base")?;
                let spec: Arc<dyn PhiSpec> = match self.require(section, "phi")? {
                    "exp_tilt" => Arc::new(ExpTilt::new(base.clone())),
                    "shift_concave" => Arc::new(ShiftConcave::new(&base, self.f64_or(section, "k", 1.0)?)?),
                    "power" => Arc::new(PowerScale {
                        p: self.f64_or(section, "p", 1.0)?,
                    }),
                    "identity" => Arc::new(IdentityPhi),
                    other => return Err(cfg_err(section, format!("unknown phi builtin `{other}`"))),
                };
                phi_family(base, spec, times()?)
            }
            "censored_plus" => {
                let name = self.get(section, "varphi").unwrap_or("identity");
                let varphi = Varphi::parse(name).ok_or_else(|| cfg_err(section, format!("unknown varphi `{name}`")))?;
                let slope = self.f64_or(section, "g_slope", 1.0)?;
                let intercept = self.f64_or(section, "g_intercept", 0.0)?;
                let g: RealFn = Arc::new(move |l| slope * l + intercept);
                censored_plus_family(self.measure(section, "base")?, varphi, g, times()?)
            }
            "subordinate" => {
                let inner = inner()?;
                let rate = || self.f64_or(section, "rate", 1.0);
                let clock = match self.require(section, "clock")? {
                    "exp_walk" => Clock::Markov(MarkovKernel::ExpWalk { rate: rate()? }),
                    "laplace_walk" => Clock::Markov(MarkovKernel::ReflectedLaplaceWalk { rate: rate()? }),
                    "hypoexp" => Clock::Markov(MarkovKernel::NonStationaryExpWalk {
                        rates: self.list(section, "rates")?,
                    }),
                    "drift" => Clock::Drift { rate: rate()? },
                    other => return Err(cfg_err(section, format!("unknown clock `{other}`"))),
                };
                let xs = self.x_grid(&inner.marginals()?, 129)?;
                let mut spec = SubordinationSpec::new(inner, clock);
                spec.skip_inner_check = self.bool_or(section, "skip_inner_check", false)?;
                subordinate(spec, times()?, &xs)
            }
            "translate" => translate_family(inner()?.with_times(times()?)?, self.measure(section, "by")?),
            "scale_mixture" => scale_mixture_family(inner()?.with_times(times()?)?, self.measure(section, "by")?),
            "censor" => {
                let spec = CensorSpec::new(self.list(section, "cuts")?).map_err(|e| cfg_err(section, e))?;
                censor_transform(inner()?.with_times(times()?)?, spec)
            }
            "interpolate" => {
                let mut ms = Vec::new();
                while let Some(line) = self.get(section, &format!("m{}", ms.len())) {
                    ms.push(parse_measure(line, &self.base_dir).map_err(|e| cfg_err(section, e))?);
                }
                if ms.len() < 2 {
                    return Err(cfg_err(section, "interpolation needs measures `m0`, `m1`, ..."));
                }
                interpolate_family(ms, self.list(section, "cuts")?, times()?)
            }
            other => Err(cfg_err(section, format!("unknown family kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, PathBuf::from("."), &Overrides::default())
    }

    #[test]
    fn scale_family_from_config() {
        let cfg = parse("[family]\nkind = scale\nbase = kind=exp c=1 center=true\ntimes = 0:2:5\n").unwrap();
        let fam = cfg.family().unwrap();
        assert_eq!(fam.times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        let c = fam.marginal_at(2.0).unwrap().isf(0.0).unwrap();
        assert!((c - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn nested_inner_family() {
        let text = "[family]\nkind = translate\ninner = base_fam\nby = kind=laplace\ntimes = 0,1\n\n\
                    [base_fam]\nkind = scale\nbase = kind=gaussian\ntimes = 0,1\n";
        let fam = parse(text).unwrap().family().unwrap();
        assert!((fam.marginal_at(0.0).unwrap().isf(0.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors_are_config_errors() {
        for text in [
            "[family]\nkind = nope\ntimes = 1\n",
            "[family]\nkind = scale\ntimes = 1\n",
            "[family]\nkind = scale\nbase = kind=exp\ntimes = 2,1\n",
            "[family]\nkind = translate\ninner = family\nby = kind=dirac\ntimes = 1\n",
            "[family]\nkind = phi\nphi = cubic\nbase = kind=gaussian\ntimes = 1\n",
        ] {
            let r = parse(text).and_then(|c| c.family());
            assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
        }
        assert!(matches!(parse("[embed]\ndt = -1\n"), Err(Error::Config(_))));
        assert!(matches!(parse("[tolerance]\nrel = 0\n"), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_win() {
        let over = Overrides {
            seed: Some(9),
            paths: Some(10),
            tol: Some(1e-6),
            ..Overrides::default()
        };
        let cfg = RunConfig::parse("[embed]\nseed = 1\npaths = 5\n", PathBuf::new(), &over).unwrap();
        assert_eq!((cfg.path.seed, cfg.path.paths), (9, 10));
        assert_eq!(cfg.tol.rel, 1e-6);
    }
}
