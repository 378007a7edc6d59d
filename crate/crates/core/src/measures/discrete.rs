//! Finitely supported laws (atoms or grid weights).

use std::path::Path;

use crate::error::{Error, Result};

/// Whether the atoms were declared directly or read from a weighted grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Atomic,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    atoms: Vec<f64>,
    masses: Vec<f64>,
    origin: Origin,
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in it {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Correctly rounded sum (Shewchuk partials with a final half-even fix-up).
///
/// Two callers that add the same multiset of terms get bit-identical results
/// regardless of order.
pub fn exact_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in it {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

impl Discrete {
    pub fn new(atoms: Vec<f64>, masses: Vec<f64>, origin: Origin) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != masses.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} masses",
                atoms.len(),
                masses.len()
            )));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite atom".into()));
        }
        if let Some(i) = atoms.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure(format!(
                "support points must be strictly increasing (index {})",
                i + 1
            )));
        }
        if masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidMeasure("masses must be nonnegative".into()));
        }
        let total = compensated_sum(masses.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("masses sum to {total}, not 1")));
        }
        Ok(Discrete { atoms, masses, origin })
    }

    pub fn dirac(x: f64) -> Self {
        Discrete {
            atoms: vec![x],
            masses: vec![1.0],
            origin: Origin::Atomic,
        }
    }

    /// Builds from unsorted, possibly repeated atoms; merges duplicates and
    /// drops nothing, so zero masses survive as explicit support points.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>, origin: Origin) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut masses: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, m) in pairs {
            if atoms.last() == Some(&a) {
                *masses.last_mut().unwrap() += m;
            } else {
                atoms.push(a);
                masses.push(m);
            }
        }
        Discrete::new(atoms, masses, origin)
    }

    /// Reads a CSV with header `x,weight`.
    pub fn from_grid_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        if cols != ["x", "weight"] {
            return Err(Error::Config(format!(
                "{}: expected header x,weight, found {}",
                path.display(),
                cols.join(",")
            )));
        }
        let mut atoms = Vec::new();
        let mut masses = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .map(str::trim)
                    .ok_or_else(|| Error::Config(format!("{}: row {} is short", path.display(), i + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), i + 2)))
            };
            atoms.push(parse(0)?);
            masses.push(parse(1)?);
        }
        Discrete::new(atoms, masses, Origin::Grid)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// `P(X >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        let i = self.atoms.partition_point(|&a| a < x);
        compensated_sum(self.masses[i..].iter().copied()).min(1.0)
    }

    /// `P(X > x)`.
    pub fn survival_open(&self, x: f64) -> f64 {
        let i = self.atoms.partition_point(|&a| a <= x);
        compensated_sum(self.masses[i..].iter().copied()).min(1.0)
    }

    /// `E[(X - x)^+]` by a compensated partial sum.
    pub fn isf(&self, x: f64) -> f64 {
        let i = self.atoms.partition_point(|&a| a <= x);
        compensated_sum(self.atoms[i..].iter().zip(&self.masses[i..]).map(|(&a, &m)| (a - x) * m))
    }

    /// `E[X | X >= x]`, `None` when no mass lies at or above `x`.
    pub fn tail_barycenter(&self, x: f64) -> Option<f64> {
        let i = self.atoms.partition_point(|&a| a < x);
        let mass = exact_sum(self.masses[i..].iter().copied());
        (mass > 0.0).then(|| exact_sum(self.atoms[i..].iter().zip(&self.masses[i..]).map(|(&a, &m)| a * m)) / mass)
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.atoms.iter().zip(&self.masses).map(|(&a, &m)| a * m))
    }

    pub fn upper_support(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.masses)
            .rev()
            .find(|(_, &m)| m > 0.0)
            .map(|(&a, _)| a)
            .unwrap_or(self.atoms[self.atoms.len() - 1])
    }

    pub fn lower_support(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.masses)
            .find(|(_, &m)| m > 0.0)
            .map(|(&a, _)| a)
            .unwrap_or(self.atoms[0])
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for (&a, &m) in self.atoms.iter().zip(&self.masses) {
            acc += m;
            if m > 0.0 && acc >= p {
                return a;
            }
        }
        self.upper_support()
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.atoms.iter().zip(&self.masses).filter(|(_, &m)| m > 0.0).map(|(&a, &m)| f(a) * m))
    }
}
