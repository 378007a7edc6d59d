//! Text specifications of measures: whitespace-separated `key=value` pairs.
//!
//! ```text
//! kind=exp c=1.0
//! kind=atomic atoms=-1,1 masses=0.5,0.5
//! kind=grid file=weights.csv
//! kind=gaussian sigma=2 center=true
//! ```
//!
//! Every kind also accepts `scale=`, `shift=` and `center=true`, applied in
//! that order.

use std::collections::BTreeMap;
use std::path::Path;

use super::{Analytic, Discrete, Measure};
use crate::error::{Error, Result};

/// Parsed `key=value` pairs of one spec line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub pairs: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(line: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, found `{tok}`")))?;
            if k.is_empty() {
                return Err(Error::Config(format!("empty key in `{tok}`")));
            }
            if pairs.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key `{k}`")));
            }
        }
        Ok(KeyValues { pairs })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.str(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.str(key)?)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(Error::Config(format!("`{key}` expects a boolean, found `{v}`"))),
        }
    }
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, found `{v}`")))?;
    if x.is_nan() {
        return Err(Error::Config(format!("`{key}` is NaN")));
    }
    Ok(x)
}

/// Comma-separated floats; `lo:hi:n` expands to `n` evenly spaced points.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() == 3 {
        let lo = parse_f64(key, parts[0])?;
        let hi = parse_f64(key, parts[1])?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{key}`: bad point count `{}`", parts[2])))?;
        if n < 2 || !(lo < hi) {
            return Err(Error::Config(format!("`{key}`: range needs lo < hi and n >= 2")));
        }
        return Ok(crate::grids::linspace(lo, hi, n));
    }
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(key, s)).collect()
}

/// Builds a measure from a spec line; relative grid files resolve against `base_dir`.
pub fn parse_measure(line: &str, base_dir: &Path) -> Result<Measure> {
    measure_from_kv(&KeyValues::parse(line)?, base_dir)
}

pub fn measure_from_kv(kv: &KeyValues, base_dir: &Path) -> Result<Measure> {
    let kind = kv.str("kind")?;
    let analytic = |a: Analytic| Measure::analytic(a).map_err(|e| Error::Config(e.to_string()));
    let base = match kind {
        "exp" | "exponential" => analytic(Analytic::Exponential { rate: kv.f64_or("c", 1.0)? })?,
        "gaussian" | "normal" => analytic(Analytic::Gaussian {
            mean: kv.f64_or("mean", 0.0)?,
            sd: kv.f64_or("sigma", 1.0)?,
        })?,
        "gamma" => analytic(Analytic::Gamma {
            shape: kv.f64("k")?,
            scale: kv.f64_or("theta", 1.0)?,
        })?,
        "erlang" => {
            let n = kv.f64("n")?;
            if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                return Err(Error::Config(format!("erlang `n` must be a positive integer, found {n}")));
            }
            analytic(Analytic::Erlang {
                rate: kv.f64_or("c", 1.0)?,
                stages: n as u32,
            })?
        }
        "uniform" => analytic(Analytic::Uniform {
            lo: kv.f64("a")?,
            hi: kv.f64("b")?,
        })?,
        "laplace" => analytic(Analytic::Laplace { rate: kv.f64_or("c", 1.0)? })?,
        "beta" => analytic(Analytic::Beta {
            a: kv.f64("a")?,
            b: kv.f64("b")?,
        })?,
        "student_t" | "student" => analytic(Analytic::StudentT { dof: kv.f64("nu")? })?,
        "lognormal" => analytic(Analytic::LogNormal {
            mu: kv.f64_or("mu", 0.0)?,
            sigma: kv.f64_or("sigma", 1.0)?,
        })?,
        "dirac" => Measure::dirac(kv.f64_or("at", 0.0)?),
        "atomic" => {
            let d = Discrete::new(kv.list("atoms")?, kv.list("masses")?, super::Origin::Atomic)
                .map_err(|e| Error::Config(e.to_string()))?;
            Measure::from_discrete(d)
        }
        "grid" => {
            let file = kv.str("file")?;
            let path = base_dir.join(file);
            let d = Discrete::from_grid_csv(&path).map_err(|e| match e {
                Error::Config(m) => Error::Config(m),
                other => Error::Config(format!("{}: {other}", path.display())),
            })?;
            Measure::from_discrete(d)
        }
        other => return Err(Error::Config(format!("unknown measure kind `{other}`"))),
    };
    let scaled = Measure::affine(base, kv.f64_or("scale", 1.0)?, kv.f64_or("shift", 0.0)?)
        .map_err(|e| Error::Config(e.to_string()))?;
    if kv.bool_or("center", false)? {
        let m = scaled.mean()?;
        Measure::affine(scaled, 1.0, -m).map_err(|e| Error::Config(e.to_string()))
    } else {
        Ok(scaled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_examples() {
        let here = Path::new(".");
        let e = parse_measure("kind=exp c=1.0", here).unwrap();
        assert_eq!(e.mean().unwrap(), 1.0);
        let a = parse_measure("kind=atomic atoms=-1,1 masses=0.5,0.5", here).unwrap();
        assert_eq!(a.isf(0.0).unwrap(), 0.5);
        let c = parse_measure("kind=exp c=2 center=true", here).unwrap();
        assert!(c.mean().unwrap().abs() < 1e-15);
    }

    #[test]
    fn grid_files_resolve_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("w.csv"), "x,weight\n0,0.5\n2,0.5\n").unwrap();
        let g = parse_measure("kind=grid file=w.csv", dir.path()).unwrap();
        assert_eq!(g.mean().unwrap(), 1.0);
        assert!(parse_measure("kind=grid file=missing.csv", dir.path()).is_err());
    }

    #[test]
    fn malformed_specs_are_config_errors() {
        let here = Path::new(".");
        for bad in ["kind=wat", "c=1", "kind=exp c=abc", "kind=exp c", "kind=atomic atoms=1,2 masses=0.5", "kind=exp c=-1"] {
            assert!(matches!(parse_measure(bad, here), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn range_lists_expand() {
        assert_eq!(parse_list("t", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_list("t", "1,2").unwrap(), vec![1.0, 2.0]);
    }
}
