//! Command-line front end: `peacock <mrl|tp2|embed|verify> --config FILE`.
//!
//! Exit codes: 0 when every verdict holds, 1 when a mathematical verdict
//! fails, 2 for usage, configuration and i/o errors.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::azema_yor::{read_report_csv, simulate_embedding, verify_embedding, verify_martingale, EmbeddingReport};
use crate::error::{Error, Result};
use crate::grids::{linspace, quantile_window};
use crate::measures::{Measure, TimeFamily};
use crate::mrl::{check_dmrl, check_family_mrl, check_madan_yor, check_peacock, fmt_f64, HlCurve};
use crate::totalpos::{
    isf_tp2_check, log_concavity_check, nonstationary_walk_tp2, spacetime_tp2, tp2_check, MarkovKernel, ScanMode,
    StepDensity, Tp2Grid,
};
use crate::verdict::{OrderVerdict, Witness};
pub use config::{Overrides, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "peacock", version, about = "MRL peacock verification and Azema-Yor embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hardy-Littlewood curves and MRL / peacock / DMRL / Madan-Yor verdicts.
    Mrl(Flags),
    /// TP2 scans of a family, a Markov kernel, a density or a grid file.
    Tp2(Flags),
    /// Simulate the Azema-Yor embedding and check it.
    Embed(Flags),
    /// Re-check a previously written embedding report against the family.
    Verify(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    paths: Option<usize>,
    #[arg(long, value_name = "X")]
    dt: Option<f64>,
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            paths: self.paths,
            dt: self.dt,
            tol: self.tol,
        }
    }
}

/// Errors that mean the input was unusable rather than a verdict failing.
fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Io(_) | Error::ModeInvalid { .. })
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let threads = match std::env::var("PEACOCK_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: PEACOCK_THREADS must be a positive integer, found `{v}`");
                return EXIT_USAGE;
            }
        },
        Err(_) => 0,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| pool.install(|| dispatch(&cli.command))));
    match outcome {
        Ok(Ok(true)) => EXIT_PASS,
        Ok(Ok(false)) => EXIT_FAIL,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
        Err(_) => {
            eprintln!("error: internal failure");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: &Command) -> Result<bool> {
    let (flags, f): (&Flags, fn(&RunConfig) -> Result<bool>) = match cmd {
        Command::Mrl(f) => (f, cmd_mrl),
        Command::Tp2(f) => (f, cmd_tp2),
        Command::Embed(f) => (f, cmd_embed),
        Command::Verify(f) => (f, cmd_verify),
    };
    let cfg = RunConfig::load(&flags.config, &flags.overrides())?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    f(&cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// One verdict row: `check,time,holds,worst_violation,witness,error`.
struct VerdictRow {
    check: String,
    time: Option<f64>,
    outcome: Result<OrderVerdict>,
}

impl VerdictRow {
    fn holds(&self) -> bool {
        self.outcome.as_ref().is_ok_and(|v| v.holds)
    }

    fn record(&self) -> Vec<String> {
        let time = self.time.map(fmt_f64).unwrap_or_default();
        match &self.outcome {
            Ok(v) => vec![
                self.check.clone(),
                time,
                v.holds.to_string(),
                fmt_f64(v.worst_violation),
                v.witness.map(|w| w.to_string()).unwrap_or_default(),
                String::new(),
            ],
            Err(e) => vec![self.check.clone(), time, "false".into(), String::new(), String::new(), e.to_string()],
        }
    }
}

fn write_verdicts(dir: &Path, rows: &[VerdictRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "verdicts.csv")?);
    w.write_record(["check", "time", "holds", "worst_violation", "witness", "error"])?;
    for r in rows {
        w.write_record(r.record())?;
        println!("{}", r.record()[..3].join(" "));
    }
    w.flush()?;
    Ok(())
}

/// Builds the family; mathematical rejections become a failing row.
fn family_or_row(cfg: &RunConfig) -> Result<std::result::Result<TimeFamily, VerdictRow>> {
    match cfg.family() {
        Ok(f) => Ok(Ok(f)),
        Err(e) if is_usage(&e) => Err(e),
        Err(e) => Ok(Err(VerdictRow {
            check: "family".into(),
            time: None,
            outcome: Err(e),
        })),
    }
}

const MRL_CHECKS: [&str; 4] = ["mrl", "peacock", "dmrl", "madan_yor"];

/// Writes `hl_curves.csv` (`time,x,L,psi`) and `verdicts.csv`.
pub fn cmd_mrl(cfg: &RunConfig) -> Result<bool> {
    let checks = cfg.names("mrl", "check").unwrap_or_else(|| vec!["mrl".into()]);
    if let Some(bad) = checks.iter().find(|c| !MRL_CHECKS.contains(&c.as_str())) {
        return Err(Error::Config(format!("[mrl] unknown check `{bad}`")));
    }
    let mut hl = csv::Writer::from_writer(create(&cfg.out_dir, "hl_curves.csv")?);
    hl.write_record(["time", "x", "L", "psi"])?;
    let fam = match family_or_row(cfg)? {
        Ok(f) => f,
        Err(row) => {
            hl.flush()?;
            write_verdicts(&cfg.out_dir, &[row])?;
            return Ok(false);
        }
    };
    let marginals = fam.marginals()?;
    let xs = cfg.x_grid(&marginals, 257)?;
    for (&t, mu) in fam.times().iter().zip(&marginals) {
        let c = HlCurve::new(mu, &xs)?;
        for i in 0..xs.len() {
            hl.write_record([fmt_f64(t), fmt_f64(xs[i]), fmt_f64(c.l[i]), fmt_f64(c.psi[i])])?;
        }
    }
    hl.flush()?;

    let mut rows = Vec::new();
    for check in &checks {
        match check.as_str() {
            "mrl" => rows.push(VerdictRow {
                check: "mrl".into(),
                time: None,
                outcome: check_family_mrl(&fam, &xs, cfg.tol),
            }),
            "peacock" => rows.push(VerdictRow {
                check: "peacock".into(),
                time: None,
                outcome: check_peacock(&fam, &xs, cfg.tol),
            }),
            "dmrl" => {
                for (&t, mu) in fam.times().iter().zip(&marginals) {
                    rows.push(VerdictRow {
                        check: "dmrl".into(),
                        time: Some(t),
                        outcome: check_dmrl(mu, &xs, cfg.tol),
                    });
                }
            }
            _ => {
                let a = madan_yor_grid(cfg, &marginals)?;
                for (&t, mu) in fam.times().iter().zip(&marginals) {
                    rows.push(VerdictRow {
                        check: "madan_yor".into(),
                        time: Some(t),
                        outcome: check_madan_yor(mu, &a, cfg.tol),
                    });
                }
            }
        }
    }
    write_verdicts(&cfg.out_dir, &rows)?;
    if let Some(e) = rows.iter().filter_map(|r| r.outcome.as_ref().err()).find(|e| is_usage(e)) {
        return Err(e.clone());
    }
    Ok(rows.iter().all(VerdictRow::holds))
}

/// `[grids] a`, or 513 points on `(0, q]` with `q` the largest upper quantile.
fn madan_yor_grid(cfg: &RunConfig, marginals: &[Measure]) -> Result<Vec<f64>> {
    if let Some(a) = cfg.grid("grids", "a")? {
        if a[0] <= 0.0 {
            return Err(Error::Config("[grids] `a` must be positive".into()));
        }
        return Ok(a);
    }
    let hi = marginals.iter().map(|m| quantile_window(m, 1e-6).1).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > 0.0) {
        return Err(Error::Config("no positive range for the Madan-Yor grid; set [grids] a".into()));
    }
    Ok(linspace(hi / 513.0, hi, 513))
}

/// One `minors.csv` row: `check,holds,worst_violation,r1,r2,c1,c2,value,error`.
fn minor_record(check: &str, outcome: &Result<OrderVerdict>) -> Vec<String> {
    match outcome {
        Ok(v) => {
            let mut coords = vec![String::new(); 5];
            match v.witness {
                Some(Witness::Window { r1, r2, c1, c2, value }) => coords = [r1, r2, c1, c2, value].map(fmt_f64).to_vec(),
                Some(Witness::TimePair { t1, t2, x, value }) => coords = [t1, t2, x, x, value].map(fmt_f64).to_vec(),
                Some(Witness::Pair { a, b, value }) => {
                    coords = vec![fmt_f64(a), fmt_f64(b), String::new(), String::new(), fmt_f64(value)]
                }
                Some(Witness::Point { x, value }) => {
                    coords = vec![fmt_f64(x), String::new(), String::new(), String::new(), fmt_f64(value)]
                }
                None => {}
            }
            let mut rec = vec![check.to_string(), v.holds.to_string(), fmt_f64(v.worst_violation)];
            rec.extend(coords);
            rec.push(String::new());
            rec
        }
        Err(e) => {
            let mut rec = vec![check.to_string(), "false".into()];
            rec.extend(vec![String::new(); 6]);
            rec.push(e.to_string());
            rec
        }
    }
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("[tp2] `{v}` is not a number")))
                })
                .collect()
        })
        .collect()
}

fn tp2_grid(cfg: &RunConfig) -> Result<Tp2Grid> {
    if let Some(file) = cfg.get("tp2", "file") {
        let path = cfg.base_dir().join(file);
        let f = File::open(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return Tp2Grid::read_csv(f);
    }
    let table = parse_matrix(cfg.require("tp2", "matrix")?)?;
    let n = table.len();
    let m = table.first().map_or(0, Vec::len);
    let rows = match cfg.get("tp2", "rows") {
        Some(_) => cfg.list("tp2", "rows")?,
        None => (0..n).map(|i| i as f64).collect(),
    };
    let cols = match cfg.get("tp2", "cols") {
        Some(_) => cfg.list("tp2", "cols")?,
        None => (0..m).map(|j| j as f64).collect(),
    };
    Tp2Grid::from_rows(rows, cols, table).map_err(|e| Error::Config(e.to_string()))
}

fn kernel(cfg: &RunConfig) -> Result<MarkovKernel> {
    let rate = || cfg.f64_or("tp2", "rate", 1.0);
    let k = match cfg.require("tp2", "kernel")? {
        "exp_walk" => MarkovKernel::ExpWalk { rate: rate()? },
        "laplace_walk" => MarkovKernel::ReflectedLaplaceWalk { rate: rate()? },
        "chain" => MarkovKernel::Chain {
            matrix: parse_matrix(cfg.require("tp2", "matrix")?)?,
        },
        other => return Err(Error::Config(format!("[tp2] unknown kernel `{other}`"))),
    };
    k.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(k)
}

/// Writes `minors.csv` with the worst window of the requested scan.
pub fn cmd_tp2(cfg: &RunConfig) -> Result<bool> {
    let kind = cfg.get("tp2", "kind").unwrap_or("family");
    let require_grid = |key: &str| -> Result<Vec<f64>> {
        cfg.grid("tp2", key)?
            .ok_or_else(|| Error::Config(format!("[tp2] missing key `{key}`")))
    };
    let outcome = match kind {
        "family" => match family_or_row(cfg)? {
            Ok(fam) => {
                let xs = cfg.x_grid(&fam.marginals()?, 257)?;
                isf_tp2_check(&fam, &xs, cfg.tol)
            }
            Err(row) => row.outcome,
        },
        "grid" => {
            let grid = tp2_grid(cfg)?;
            let mode = match cfg.get("tp2", "mode").unwrap_or("all_pairs") {
                "all_pairs" => ScanMode::AllPairs,
                "adjacent" => ScanMode::Adjacent,
                other => return Err(Error::Config(format!("[tp2] unknown mode `{other}`"))),
            };
            tp2_check(&grid, mode, cfg.tol)
        }
        "spacetime" => spacetime_tp2(&kernel(cfg)?, &require_grid("steps")?, &require_grid("states")?, cfg.tol),
        "nonstationary" => {
            let steps: Vec<StepDensity> = cfg
                .list("tp2", "rates")?
                .into_iter()
                .map(|rate| StepDensity::Exponential { rate })
                .collect();
            nonstationary_walk_tp2(&steps, &require_grid("states")?, cfg.tol)
        }
        "log_concavity" => {
            let mu = cfg.measure("tp2", "density")?;
            let xs = require_grid("x")?;
            let samples = xs
                .iter()
                .map(|&x| mu.density(x).ok_or_else(|| Error::Config("[tp2] `density` has no closed-form density".into())))
                .collect::<Result<Vec<_>>>()?;
            log_concavity_check(&xs, &samples, cfg.tol)
        }
        other => return Err(Error::Config(format!("[tp2] unknown kind `{other}`"))),
    };
    if let Err(e) = &outcome {
        if is_usage(e) {
            return Err(e.clone());
        }
    }
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir, "minors.csv")?);
    w.write_record(["check", "holds", "worst_violation", "r1", "r2", "c1", "c2", "value", "error"])?;
    let rec = minor_record(kind, &outcome);
    println!("{}", rec[..3].join(" "));
    w.write_record(&rec)?;
    w.flush()?;
    Ok(outcome.is_ok_and(|v| v.holds))
}

fn embed_times(cfg: &RunConfig, fam: &TimeFamily) -> Result<Vec<f64>> {
    Ok(cfg.grid("embed", "times")?.unwrap_or_else(|| fam.times().to_vec()))
}

fn bins(cfg: &RunConfig) -> Result<usize> {
    let b = cfg.uint_or("embed", "bins", 10)?;
    if b == 0 {
        return Err(Error::Config("[embed] `bins` must be positive".into()));
    }
    Ok(b as usize)
}

fn write_embedding(cfg: &RunConfig, report: &EmbeddingReport, prefix: &str) -> Result<()> {
    if prefix.is_empty() {
        report.write_report_csv(create(&cfg.out_dir, "report.csv")?)?;
    }
    report.write_summary_csv(create(&cfg.out_dir, &format!("{prefix}summary.csv"))?)?;
    report.write_martingale_csv(create(&cfg.out_dir, &format!("{prefix}martingale.csv"))?)?;
    for (k, &t) in report.times.iter().enumerate() {
        println!(
            "t={t} ks={:.5} censored={:.5} violations={}",
            report.ks[k],
            report.censored_fraction(k),
            report.violations[k]
        );
    }
    Ok(())
}

fn recheck_martingale(report: &mut EmbeddingReport, bins: usize) {
    report.martingale = report
        .times
        .windows(2)
        .map(|w| verify_martingale(report, w[0], w[1], bins))
        .collect();
}

/// Writes `report.csv`, `summary.csv` and `martingale.csv`.
pub fn cmd_embed(cfg: &RunConfig) -> Result<bool> {
    let bins = bins(cfg)?;
    let fam = match family_or_row(cfg)? {
        Ok(f) => f,
        Err(row) => {
            eprintln!("family rejected: {}", row.outcome.unwrap_err());
            return Ok(false);
        }
    };
    let times = embed_times(cfg, &fam)?;
    let mut report = match simulate_embedding(&fam, &times, cfg.path) {
        Ok(r) => r,
        Err(e) if is_usage(&e) => return Err(e),
        Err(e) => {
            eprintln!("embedding rejected: {e}");
            return Ok(false);
        }
    };
    recheck_martingale(&mut report, bins);
    write_embedding(cfg, &report, "")?;
    Ok(report.passes())
}

/// Reads `report.csv` from the output directory (or `[verify] report`) and
/// writes `verify_summary.csv` and `verify_martingale.csv`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    let bins = bins(cfg)?;
    let path = match cfg.get("verify", "report") {
        Some(p) => cfg.base_dir().join(p),
        None => cfg.out_dir.join("report.csv"),
    };
    let file = File::open(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut report = read_report_csv(std::io::BufReader::new(file), cfg.path)?;
    let fam = match family_or_row(cfg)? {
        Ok(f) => f,
        Err(row) => {
            eprintln!("family rejected: {}", row.outcome.unwrap_err());
            return Ok(false);
        }
    };
    let times = report.times.clone();
    report.ks = verify_embedding(&report, &fam, &times)?;
    recheck_martingale(&mut report, bins);
    write_embedding(cfg, &report, "verify_")?;
    Ok(report.passes())
}

/// Entry point of the binary.
pub fn main_exit() -> ! {
    let code = run(std::env::args_os());
    let _ = std::io::stdout().flush();
    std::process::exit(code)
}
