//! Monte Carlo construction of the martingale associated with an MRL family:
//! one Brownian path per sample, stopped successively at the first time its
//! running maximum reaches `Psi_t(B)` for each time `t`.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grids::default_x_grid;
use crate::measures::{Measure, TimeFamily};
use crate::mrl::{fmt_f64, require_centered, HlCurve};
use crate::rng::StreamId;
use crate::verdict::Tol;

/// Largest number of Euler steps a path may take.
pub const MAX_STEPS: f64 = 1e8;
/// Paths still running at the horizon, as a fraction, above which a report fails.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;
/// Allowed rate of stopping-time inversions per path and consecutive time pair.
pub const MAX_VIOLATION_RATE: f64 = 1e-3;
/// Fewest paths a martingale bin may hold.
pub const MIN_BIN_PATHS: usize = 100;

const PSI_GRID_POINTS: usize = 2049;
/// Relative width of the grid bracket placed to the right of each atom.
const ATOM_BRACKET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    /// Euler step in Brownian time units.
    pub dt: f64,
    /// Horizon after which an unstopped path is censored.
    pub v_max: f64,
    pub paths: usize,
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            dt: 1e-3,
            v_max: 1e4,
            paths: 100_000,
            seed: 0,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::PreconditionFailed(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.v_max > 0.0) || self.v_max / self.dt > MAX_STEPS {
            return Err(Error::PreconditionFailed(format!(
                "horizon {} at dt {} exceeds {MAX_STEPS:e} steps",
                self.v_max, self.dt
            )));
        }
        if self.paths == 0 {
            return Err(Error::PreconditionFailed("need at least one path".into()));
        }
        Ok(())
    }

    fn max_steps(&self) -> u64 {
        (self.v_max / self.dt).round() as u64
    }
}

/// Piecewise-linear `Psi` on a grid: constant below it, `x` above the upper
/// support bound, and constant residual life between the grid end and that bound.
#[derive(Debug, Clone)]
pub struct Barrier {
    xs: Vec<f64>,
    psi: Vec<f64>,
    upper: f64,
    atoms: Vec<f64>,
}

impl Barrier {
    pub fn new(mu: &Measure, xs: &[f64]) -> Result<Self> {
        let c = HlCurve::new(mu, xs)?;
        Ok(Barrier {
            xs: c.xs,
            psi: c.psi,
            upper: c.upper_support,
            atoms: mu.atom_hints(),
        })
    }

    /// A crossing located within the grid bracket of an atom is moved onto it:
    /// the path passes the atom's level continuously, so that is where it stops.
    fn snap(&self, b: f64) -> f64 {
        let i = self.atoms.partition_point(|&a| a < b);
        [i.wrapping_sub(1), i]
            .into_iter()
            .filter_map(|j| self.atoms.get(j))
            .copied()
            .find(|&a| (b - a).abs() <= ATOM_BRACKET * a.abs().max(1.0))
            .unwrap_or(b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut hint = 0;
        self.eval_from(x, &mut hint)
    }

    /// Evaluation that starts its interval search from `hint`; paths move by
    /// small steps so the search is usually local.
    fn eval_from(&self, x: f64, hint: &mut usize) -> f64 {
        let n = self.xs.len();
        if x >= self.upper {
            return x;
        }
        if x <= self.xs[0] {
            return self.psi[0];
        }
        if x >= self.xs[n - 1] {
            return x + (self.psi[n - 1] - self.xs[n - 1]);
        }
        let mut i = (*hint).min(n - 2);
        if x < self.xs[i] {
            if i > 0 && x >= self.xs[i - 1] {
                i -= 1;
            } else {
                i = self.xs.partition_point(|&g| g <= x) - 1;
            }
        } else if x > self.xs[i + 1] {
            if i + 2 < n && x <= self.xs[i + 2] {
                i += 1;
            } else {
                i = (self.xs.partition_point(|&g| g <= x) - 1).min(n - 2);
            }
        }
        *hint = i;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let w = (x - x0) / (x1 - x0);
        self.psi[i] + w * (self.psi[i + 1] - self.psi[i])
    }

    /// Whether `other` dips below `self` somewhere on the shared grid.
    fn dominated_by(&self, other: &Barrier) -> bool {
        self.psi.iter().zip(&other.psi).all(|(a, b)| b >= a)
    }
}

/// Shared grid for the barriers: a quantile window plus every atom and a point
/// just to its right, so that jumps of `Psi` sit on grid nodes.
pub fn barrier_grid(marginals: &[Measure]) -> Vec<f64> {
    let mut xs = default_x_grid(marginals, PSI_GRID_POINTS);
    for mu in marginals {
        for a in mu.atom_hints() {
            xs.push(a);
            xs.push(a + ATOM_BRACKET * a.abs().max(1.0));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stop {
    /// Stopping time `T_t` (the horizon if censored).
    pub t: f64,
    /// `B` at the stopping time.
    pub m: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleBin {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Increments `M_{t2} - M_{t1}` averaged over equal-count bins of `M_{t1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTable {
    pub t1: f64,
    pub t2: f64,
    pub bins: Vec<MartingaleBin>,
}

impl MartingaleTable {
    pub fn passes(&self) -> bool {
        self.bins.iter().all(|b| b.pass)
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    pub config: PathConfig,
    pub times: Vec<f64>,
    /// `stops[path * times.len() + k]`.
    pub stops: Vec<Stop>,
    /// Censored paths per time.
    pub censored: Vec<usize>,
    /// Stopping-time inversions per time, charged to the later time of each
    /// consecutive pair (always 0 for the first time).
    pub violations: Vec<usize>,
    pub ks: Vec<f64>,
    /// One entry per consecutive time pair.
    pub martingale: Vec<std::result::Result<MartingaleTable, Error>>,
}

impl EmbeddingReport {
    pub fn paths(&self) -> usize {
        self.config.paths
    }

    pub fn stop(&self, path: usize, k: usize) -> Stop {
        self.stops[path * self.times.len() + k]
    }

    fn time_index(&self, t: f64) -> Result<usize> {
        self.times.iter().position(|&s| s == t).ok_or(Error::UnknownTime(t))
    }

    /// Uncensored stopped values at time `t`, in path order.
    pub fn stopped_values(&self, t: f64) -> Result<Vec<f64>> {
        let k = self.time_index(t)?;
        Ok((0..self.paths())
            .map(|p| self.stop(p, k))
            .filter(|s| !s.censored)
            .map(|s| s.m)
            .collect())
    }

    pub fn censored_fraction(&self, k: usize) -> f64 {
        self.censored[k] as f64 / self.paths() as f64
    }

    pub fn horizon_exhausted(&self) -> bool {
        (0..self.times.len()).any(|k| self.censored_fraction(k) > MAX_CENSORED_FRACTION)
    }

    /// Inversions over `paths * (times - 1)` path-time pairs.
    pub fn violation_rate(&self) -> f64 {
        let pairs = self.paths() * self.times.len().saturating_sub(1);
        if pairs == 0 {
            0.0
        } else {
            self.violations.iter().sum::<usize>() as f64 / pairs as f64
        }
    }

    /// KS distance allowed at this path count: the 99% DKW band, never below 0.01.
    pub fn ks_threshold(&self) -> f64 {
        ks_threshold(self.paths())
    }

    pub fn passes(&self) -> bool {
        let thr = self.ks_threshold();
        !self.horizon_exhausted()
            && self.ks.iter().all(|&d| d < thr)
            && self.violation_rate() <= MAX_VIOLATION_RATE
            && self.martingale.iter().all(|m| m.as_ref().is_ok_and(|t| t.passes()))
    }

    /// `path,time,T,M,censored` rows in path order.
    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "time", "T", "M", "censored"])?;
        for p in 0..self.paths() {
            for (k, &t) in self.times.iter().enumerate() {
                let s = self.stop(p, k);
                w.write_record([
                    p.to_string(),
                    fmt_f64(t),
                    fmt_f64(s.t),
                    fmt_f64(s.m),
                    u8::from(s.censored).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `time,ks,censored_frac,monotonicity_violations` rows.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "ks", "censored_frac", "monotonicity_violations"])?;
        for (k, &t) in self.times.iter().enumerate() {
            w.write_record([
                fmt_f64(t),
                fmt_f64(self.ks[k]),
                fmt_f64(self.censored_fraction(k)),
                self.violations[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `t1,t2,bin,count,lo,hi,mean,stderr,pass` rows.
    pub fn write_martingale_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t1", "t2", "bin", "count", "lo", "hi", "mean", "stderr", "pass"])?;
        for (k, m) in self.martingale.iter().enumerate() {
            match m {
                Ok(table) => {
                    for (i, b) in table.bins.iter().enumerate() {
                        w.write_record([
                            fmt_f64(table.t1),
                            fmt_f64(table.t2),
                            i.to_string(),
                            b.count.to_string(),
                            fmt_f64(b.lo),
                            fmt_f64(b.hi),
                            fmt_f64(b.mean),
                            fmt_f64(b.stderr),
                            u8::from(b.pass).to_string(),
                        ])?;
                    }
                }
                Err(_) => {
                    let (t1, t2) = (self.times[k], self.times[k + 1]);
                    w.write_record([fmt_f64(t1), fmt_f64(t2), "".into(), "0".into(), "".into(), "".into(), "".into(), "".into(), "0".into()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Rebuilds a report from `path,time,T,M,censored` rows (as written by
/// [`EmbeddingReport::write_report_csv`]). Inversions are recounted from the
/// stopping times; KS distances and martingale tables are left empty.
pub fn read_report_csv<R: std::io::Read>(input: R, cfg: PathConfig) -> Result<EmbeddingReport> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "time", "T", "M", "censored"] {
        return Err(Error::Config(format!("unexpected report header {headers:?}")));
    }
    let num = |s: &str| -> Result<f64> { s.trim().parse().map_err(|_| Error::Config(format!("`{s}` is not a number"))) };
    let mut times: Vec<f64> = Vec::new();
    let mut stops = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        let path: usize = rec[0].trim().parse().map_err(|_| Error::Config(format!("bad path index `{}`", &rec[0])))?;
        let t = num(&rec[1])?;
        if path == 0 {
            times.push(t);
        }
        let k = times.len().max(1);
        if path != row / k || times.get(row % k) != Some(&t) {
            return Err(Error::Config(format!("report row {} is out of order", row + 2)));
        }
        let censored = match rec[4].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Config(format!("bad censored flag `{other}`"))),
        };
        stops.push(Stop {
            t: num(&rec[2])?,
            m: num(&rec[3])?,
            censored,
        });
    }
    let nt = times.len();
    if nt == 0 || stops.len() % nt != 0 {
        return Err(Error::Config("report is empty or truncated".into()));
    }
    let paths = stops.len() / nt;
    let mut censored = vec![0usize; nt];
    let mut violations = vec![0usize; nt];
    for p in 0..paths {
        let row = &stops[p * nt..(p + 1) * nt];
        for k in 0..nt {
            censored[k] += usize::from(row[k].censored);
            if k > 0 && !row[k].censored && !row[k - 1].censored && row[k].t < row[k - 1].t {
                violations[k] += 1;
            }
        }
    }
    Ok(EmbeddingReport {
        config: PathConfig { paths, ..cfg },
        times,
        stops,
        censored,
        violations,
        ks: Vec::new(),
        martingale: Vec::new(),
    })
}

pub fn ks_threshold(n: usize) -> f64 {
    // sqrt(ln(2 / 0.01) / 2)
    (1.6276 / (n as f64).sqrt()).max(0.01)
}

/// Position on a path: elapsed time, `B` and its running maximum.
#[derive(Debug, Clone, Copy)]
struct Point {
    v: f64,
    b: f64,
    s: f64,
}

/// Point at fraction `th` of the straight segment `p -> q`.
fn along(p: Point, q: Point, th: f64) -> Point {
    let b = p.b + th * (q.b - p.b);
    Point {
        v: p.v + th * (q.v - p.v),
        b,
        s: p.s.max(b),
    }
}

/// Fraction of `p -> q` at which `S >= Psi(B)` first holds, given it fails at
/// `p` and holds at `q`.
fn crossing(barrier: &Barrier, p: Point, q: Point) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let m = along(p, q, mid);
        if m.s >= barrier.eval(m.b) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    hi
}

struct PathOutcome {
    stops: Vec<Stop>,
    inversions: Vec<bool>,
}

fn run_path(barriers: &[Barrier], weaker_next: &[bool], cfg: &PathConfig, path: usize) -> PathOutcome {
    let mut rng = StreamId::new(cfg.seed, path as u64).rng();
    let sd = cfg.dt.sqrt();
    let max_steps = cfg.max_steps();
    let mut step = 0u64;
    let mut cur = Point { v: 0.0, b: 0.0, s: 0.0 };
    // End of the Euler step the path is currently in; `None` when `cur` is a grid node.
    let mut pending: Option<Point> = None;
    let mut stops = Vec::with_capacity(barriers.len());
    let mut inversions = vec![false; barriers.len()];
    let mut hints = vec![0usize; barriers.len()];
    let mut exhausted = false;

    for (k, barrier) in barriers.iter().enumerate() {
        if exhausted {
            stops.push(Stop {
                t: cur.v,
                m: cur.b,
                censored: true,
            });
            continue;
        }
        let check_next = k + 1 < barriers.len() && weaker_next[k];
        if cur.s >= barrier.eval_from(cur.b, &mut hints[k]) {
            stops.push(Stop {
                t: cur.v,
                m: cur.b,
                censored: false,
            });
            continue;
        }
        loop {
            let next = match pending.take() {
                Some(q) => q,
                None => {
                    if step >= max_steps {
                        exhausted = true;
                        break;
                    }
                    step += 1;
                    let z: f64 = rng.sample(StandardNormal);
                    let b = cur.b + sd * z;
                    Point {
                        v: step as f64 * cfg.dt,
                        b,
                        s: cur.s.max(b),
                    }
                }
            };
            if check_next && !inversions[k + 1] {
                let (h, bar) = (&mut hints[k + 1], &barriers[k + 1]);
                if next.s >= bar.eval_from(next.b, h) && next.s < barrier.eval(next.b) {
                    inversions[k + 1] = true;
                }
            }
            if next.s >= barrier.eval_from(next.b, &mut hints[k]) {
                let th = crossing(barrier, cur, next);
                let mut hit = along(cur, next, th);
                hit.b = barrier.snap(hit.b);
                stops.push(Stop {
                    t: hit.v,
                    m: hit.b,
                    censored: false,
                });
                if th < 1.0 {
                    pending = Some(next);
                }
                cur = hit;
                break;
            }
            cur = next;
        }
        if exhausted {
            stops.push(Stop {
                t: cur.v,
                m: cur.b,
                censored: true,
            });
        }
    }
    PathOutcome { stops, inversions }
}

/// Runs `cfg.paths` independent Brownian paths and stops each at the
/// Hardy-Littlewood barrier of every time in `times`. Per-path random streams
/// make the result independent of the worker count.
pub fn simulate_embedding(fam: &TimeFamily, times: &[f64], cfg: PathConfig) -> Result<EmbeddingReport> {
    cfg.validate()?;
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::PreconditionFailed("embedding times must be non-empty and strictly increasing".into()));
    }
    let marginals: Vec<Measure> = times.iter().map(|&t| fam.marginal_at(t)).collect::<Result<_>>()?;
    for mu in &marginals {
        require_centered(mu, Tol::default())?;
    }
    let xs = barrier_grid(&marginals);
    let barriers: Vec<Barrier> = marginals.iter().map(|mu| Barrier::new(mu, &xs)).collect::<Result<_>>()?;
    let weaker_next: Vec<bool> = barriers
        .windows(2)
        .map(|w| !w[0].dominated_by(&w[1]))
        .chain(std::iter::once(false))
        .collect();

    let outcomes: Vec<PathOutcome> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| run_path(&barriers, &weaker_next, &cfg, p))
        .collect();

    let nt = times.len();
    let mut stops = Vec::with_capacity(cfg.paths * nt);
    let mut censored = vec![0usize; nt];
    let mut violations = vec![0usize; nt];
    for o in outcomes {
        for (k, s) in o.stops.iter().enumerate() {
            censored[k] += usize::from(s.censored);
            violations[k] += usize::from(o.inversions[k]);
        }
        stops.extend(o.stops);
    }
    let mut report = EmbeddingReport {
        config: cfg,
        times: times.to_vec(),
        stops,
        censored,
        violations,
        ks: Vec::new(),
        martingale: Vec::new(),
    };
    report.ks = marginals
        .iter()
        .zip(times)
        .map(|(mu, &t)| Ok(ks_distance(&report.stopped_values(t)?, mu)))
        .collect::<Result<_>>()?;
    report.martingale = times.windows(2).map(|w| verify_martingale(&report, w[0], w[1], 10)).collect();
    Ok(report)
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `sample` and `mu`, comparing against both `F(v)` and `F(v-)` so atoms count.
pub fn ks_distance(sample: &[f64], mu: &Measure) -> f64 {
    if sample.is_empty() {
        return 1.0;
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    // distinct values with the index range they occupy
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if g.0 == x => g.2 = i + 1,
            _ => groups.push((x, i, i + 1)),
        }
    }
    groups
        .par_iter()
        .map(|&(x, first, last)| {
            let f = 1.0 - mu.survival_open(x);
            let f_left = mu.cdf(x);
            (last as f64 / n - f).max(f_left - first as f64 / n)
        })
        .reduce(|| 0.0, f64::max)
        .max(0.0)
}

/// KS distance of the stopped values against each marginal of `fam`.
pub fn verify_embedding(report: &EmbeddingReport, fam: &TimeFamily, times: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| Ok(ks_distance(&report.stopped_values(t)?, &fam.marginal_at(t)?)))
        .collect()
}

/// Bins paths by `M_{t1}` into `bins` equal-count groups and tests that the
/// mean increment to `t2` vanishes in each: `|mean| <= 3 stderr + 1e-3`.
/// Paths censored at either time are left out.
pub fn verify_martingale(report: &EmbeddingReport, t1: f64, t2: f64, bins: usize) -> Result<MartingaleTable> {
    let (k1, k2) = (report.time_index(t1)?, report.time_index(t2)?);
    if k1 >= k2 {
        return Err(Error::PreconditionFailed(format!("martingale check needs t1 < t2, got {t1} and {t2}")));
    }
    if bins == 0 {
        return Err(Error::PreconditionFailed("need at least one bin".into()));
    }
    let mut pairs: Vec<(f64, f64)> = (0..report.paths())
        .map(|p| (report.stop(p, k1), report.stop(p, k2)))
        .filter(|(a, b)| !a.censored && !b.censored)
        .map(|(a, b)| (a.m, b.m - a.m))
        .collect();
    // stable sort keeps path order among ties
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut out = Vec::with_capacity(bins);
    for i in 0..bins {
        let (lo, hi) = (i * n / bins, (i + 1) * n / bins);
        let count = hi - lo;
        if count < MIN_BIN_PATHS {
            return Err(Error::InsufficientPaths {
                bin: i,
                count,
                min: MIN_BIN_PATHS,
            });
        }
        let chunk = &pairs[lo..hi];
        let mean = chunk.iter().map(|p| p.1).sum::<f64>() / count as f64;
        let var = chunk.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        let stderr = (var / count as f64).sqrt();
        out.push(MartingaleBin {
            count,
            lo: chunk[0].0,
            hi: chunk[count - 1].0,
            mean,
            stderr,
            pass: mean.abs() <= 3.0 * stderr + 1e-3,
        });
    }
    Ok(MartingaleTable { t1, t2, bins: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn two_point() -> Measure {
        Measure::atomic(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    fn scaled_two_point() -> TimeFamily {
        TimeFamily::new(
            "t*two_point",
            Arc::new(|t| Measure::affine(two_point(), t, 0.0)),
            vec![1.0, 2.0],
        )
        .unwrap()
    }

    fn cfg(paths: usize, seed: u64) -> PathConfig {
        PathConfig {
            paths,
            seed,
            ..PathConfig::default()
        }
    }

    #[test]
    fn barrier_of_two_point_law() {
        let mu = two_point();
        let b = Barrier::new(&mu, &barrier_grid(std::slice::from_ref(&mu))).unwrap();
        assert_eq!(b.eval(-3.0), 0.0);
        assert_eq!(b.eval(-1.0), 0.0);
        assert_eq!(b.eval(-0.5), 1.0);
        assert_eq!(b.eval(1.0), 1.0);
        assert_eq!(b.eval(2.5), 2.5);
    }

    #[test]
    fn dirac_family_stops_immediately() {
        let fam = TimeFamily::new("delta0", Arc::new(|_| Ok(Measure::dirac(0.0))), vec![1.0, 2.0]).unwrap();
        let r = simulate_embedding(&fam, &[1.0, 2.0], cfg(1000, 1)).unwrap();
        assert!(r.stops.iter().all(|s| s.t == 0.0 && s.m == 0.0 && !s.censored));
        assert_eq!(r.ks, vec![0.0, 0.0]);
        let m = r.martingale[0].as_ref().unwrap();
        assert!(m.bins.iter().all(|b| b.mean == 0.0 && b.pass));
    }

    #[test]
    fn symmetric_exit_frequencies() {
        let fam = TimeFamily::new("tp", Arc::new(|_| Ok(two_point())), vec![1.0]).unwrap();
        let r = simulate_embedding(&fam, &[1.0], cfg(20_000, 3)).unwrap();
        let m = r.stopped_values(1.0).unwrap();
        let up = m.iter().filter(|&&x| x > 0.0).count() as f64 / m.len() as f64;
        // binomial sd at n = 2e4 is 0.0035
        assert!((up - 0.5).abs() < 0.015, "{up}");
        let off: Vec<f64> = m.iter().copied().filter(|x| (x.abs() - 1.0).abs() >= 1e-6).take(10).collect();
        assert!(off.is_empty(), "stopped values off the atoms: {off:?}");
        assert!(r.ks[0] < ks_threshold(20_000), "{} up {up}", r.ks[0]);
    }

    #[test]
    fn stopping_times_are_monotone_and_reproducible() {
        let fam = scaled_two_point();
        let a = simulate_embedding(&fam, &[1.0, 2.0], cfg(2000, 11)).unwrap();
        for p in 0..a.paths() {
            assert!(a.stop(p, 0).t <= a.stop(p, 1).t);
        }
        assert_eq!(a.violations, vec![0, 0]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_embedding(&fam, &[1.0, 2.0], cfg(2000, 11))).unwrap();
        assert_eq!(a.stops, b.stops);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_report_csv(&mut x).unwrap();
        b.write_report_csv(&mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn mismatched_target_has_large_ks() {
        let fam = scaled_two_point();
        let r = simulate_embedding(&fam, &[1.0, 2.0], cfg(4000, 5)).unwrap();
        let wrong = verify_embedding(&r, &fam.with_times(vec![2.0]).unwrap(), &[2.0]).unwrap();
        assert!(wrong[0] < 0.05);
        let m1 = r.stopped_values(1.0).unwrap();
        assert!(ks_distance(&m1, &fam.marginal_at(2.0).unwrap()) > 0.1);
    }

    #[test]
    fn report_csv_round_trips() {
        let fam = scaled_two_point();
        let r = simulate_embedding(&fam, &[1.0, 2.0], cfg(300, 8)).unwrap();
        let mut buf = Vec::new();
        r.write_report_csv(&mut buf).unwrap();
        let back = read_report_csv(&buf[..], r.config).unwrap();
        assert_eq!(back.stops, r.stops);
        assert_eq!(back.times, r.times);
        assert_eq!(back.censored, r.censored);
        assert!(read_report_csv(&b"path,time,T,M,censored\n1,1,0,0,0\n"[..], r.config).is_err());
    }

    #[test]
    fn tiny_horizon_is_flagged() {
        let fam = scaled_two_point();
        let c = PathConfig {
            v_max: 0.01,
            ..cfg(500, 2)
        };
        let r = simulate_embedding(&fam, &[1.0, 2.0], c).unwrap();
        assert!(r.horizon_exhausted());
        assert!(!r.passes());
        assert!(r.stops.iter().filter(|s| s.censored).all(|s| s.t <= 0.01 + 1e-12));
    }

    #[test]
    fn drifting_mean_is_rejected() {
        let fam = TimeFamily::new("drift", Arc::new(|t| Ok(Measure::dirac(t))), vec![0.0, 1.0]).unwrap();
        let r = simulate_embedding(&fam, &[0.0, 1.0], cfg(10, 0));
        assert!(matches!(r, Err(Error::NotCentered { .. })));
    }

    #[test]
    fn small_bins_are_insufficient() {
        let fam = scaled_two_point();
        let r = simulate_embedding(&fam, &[1.0, 2.0], cfg(500, 4)).unwrap();
        assert!(matches!(
            verify_martingale(&r, 1.0, 2.0, 10),
            Err(Error::InsufficientPaths { count: 50, .. })
        ));
        assert!(verify_martingale(&r, 1.0, 3.0, 2).is_err());
    }

    #[test]
    fn continuous_marginals_embed() {
        use crate::measures::Analytic;
        let fam = TimeFamily::new(
            "gauss",
            Arc::new(|t| Measure::analytic(Analytic::Gaussian { mean: 0.0, sd: t })),
            vec![0.5, 1.0],
        )
        .unwrap();
        // the Euler scheme misses excursions between steps, so a fine step is
        // needed for the KS distance to sit inside the sampling band
        let fine = PathConfig { dt: 1e-4, ..cfg(5000, 9) };
        let r = simulate_embedding(&fam, &[0.5, 1.0], fine).unwrap();
        assert!(r.ks.iter().all(|&d| d < ks_threshold(5000)), "{:?}", r.ks);
        assert_eq!(r.violation_rate(), 0.0);
    }

    #[test]
    fn halving_dt_moves_ks_less_than_sampling_noise() {
        use crate::measures::Analytic;
        let fam = TimeFamily::new(
            "gauss",
            Arc::new(|t| Measure::analytic(Analytic::Gaussian { mean: 0.0, sd: t })),
            vec![1.0],
        )
        .unwrap();
        let n = 5000;
        let coarse = simulate_embedding(&fam, &[1.0], PathConfig { dt: 2e-3, ..cfg(n, 21) }).unwrap();
        let fine = simulate_embedding(&fam, &[1.0], PathConfig { dt: 1e-3, ..cfg(n, 21) }).unwrap();
        let floor = 1.36 / (n as f64).sqrt();
        assert!((coarse.ks[0] - fine.ks[0]).abs() < floor, "{} vs {}", coarse.ks[0], fine.ks[0]);
    }
}
