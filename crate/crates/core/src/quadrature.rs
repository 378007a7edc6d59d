//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Infinite endpoints are mapped onto `(0, 1]` with `x = a + (1 - t) / t`,
//! the usual QUADPACK substitution, so tails are integrated rather than cut.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Accuracy requested from the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Relative accuracy the refinement aims for.
    pub rel: f64,
    /// Absolute floor, used when the integral is (close to) zero.
    pub abs: f64,
    /// Relative accuracy below which the result is reported as a failure.
    pub fail_rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-12,
            abs: 1e-300,
            fail_rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Integral of `|f|` over the segment.
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Segment {
        a,
        b,
        value,
        error: err,
        abs: res_abs * half.abs(),
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: &Tolerance) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let first = gk15(f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_abs = first.abs;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut settled_value = 0.0;
    let mut settled_err = 0.0;
    let mut settled_abs = 0.0;
    let mut count = 1usize;
    // With cancellation the signed total cannot be resolved below a few ulp of
    // the integral of |f|, so that also bounds the target.
    let target = |total: f64, total_abs: f64| tol.abs.max(tol.rel * total.abs()).max(1e-13 * total_abs);
    loop {
        if total_err <= target(total, total_abs) || count >= tol.max_intervals {
            // running sums lose everything when a large segment is replaced by
            // tiny halves, so confirm with fresh sums before stopping
            total = settled_value + heap.iter().map(|s| s.value).sum::<f64>();
            total_err = settled_err + heap.iter().map(|s| s.error).sum::<f64>();
            total_abs = settled_abs + heap.iter().map(|s| s.abs).sum::<f64>();
            if total_err <= target(total, total_abs) || count >= tol.max_intervals {
                break;
            }
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        // Intervals that can no longer be split in floating point are frozen.
        if !(mid > seg.a.min(seg.b) && mid < seg.a.max(seg.b)) || (seg.b - seg.a).abs() < 1e-14 * (seg.a.abs() + seg.b.abs()) {
            settled_value += seg.value;
            settled_err += seg.error;
            settled_abs += seg.abs;
            total = settled_value + heap.iter().map(|s| s.value).sum::<f64>();
            total_err = settled_err + heap.iter().map(|s| s.error).sum::<f64>();
            total_abs = settled_abs + heap.iter().map(|s| s.abs).sum::<f64>();
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gk15(f, seg.a, mid);
        let right = gk15(f, mid, seg.b);
        total += left.value + right.value - seg.value;
        total_err += left.error + right.error - seg.error;
        total_abs += left.abs + right.abs - seg.abs;
        heap.push(left);
        heap.push(right);
        count += 1;
        // Resynchronise running sums now and then to avoid drift.
        if count % 64 == 0 {
            total = settled_value + heap.iter().map(|s| s.value).sum::<f64>();
            total_err = settled_err + heap.iter().map(|s| s.error).sum::<f64>();
            total_abs = settled_abs + heap.iter().map(|s| s.abs).sum::<f64>();
        }
    }
    let value = settled_value + heap.iter().map(|s| s.value).sum::<f64>();
    let err = settled_err + heap.iter().map(|s| s.error).sum::<f64>();
    let abs = settled_abs + heap.iter().map(|s| s.abs).sum::<f64>();
    if !value.is_finite() || err > tol.abs.max(tol.fail_rel * value.abs()).max(1e-12 * abs) {
        return Err(Error::QuadratureFailure {
            lo: a,
            hi: b,
            estimate: value,
            error: err,
            target: tol.fail_rel,
        });
    }
    Ok((value, err))
}

/// Integrates `f` over `[a, b]`; either endpoint may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_with(f, a, b, &Tolerance::default())
}

pub fn integrate_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    integrate_ref(&f, a, b, tol)
}

fn integrate_ref<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::InvalidMeasure("NaN integration bound".into()));
    }
    if a > b {
        return integrate_ref(f, b, a, tol).map(|v| -v);
    }
    if a == b {
        return Ok(0.0);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, tol).map(|r| r.0),
        (true, false) => {
            let g = |t: f64| {
                let x = a + (1.0 - t) / t;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v / (t * t)
                }
            };
            adaptive(&g, 0.0, 1.0, tol).map(|r| r.0)
        }
        (false, true) => {
            let g = |t: f64| {
                let x = b - (1.0 - t) / t;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v / (t * t)
                }
            };
            adaptive(&g, 0.0, 1.0, tol).map(|r| r.0)
        }
        (false, false) => {
            let left = integrate_ref(f, f64::NEG_INFINITY, 0.0, tol)?;
            let right = integrate_ref(f, 0.0, f64::INFINITY, tol)?;
            Ok(left + right)
        }
    }
}

/// Integrates over `[a, b]` after splitting at the interior `breaks`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1])?;
    }
    Ok(total)
}
