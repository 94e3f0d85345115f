//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 21-point Kronrod extension of the 10-point Gauss rule is applied on each
//! panel; the panel with the largest error estimate is bisected until the
//! global estimate meets the requested tolerance. Error estimates follow the
//! QUADPACK heuristic. Integrands with endpoint singularities must be
//! regularised by a change of variables before they reach this module.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_529_164_775,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Relative and absolute stopping thresholds. The integration stops once the
/// error estimate is below `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Tolerance {
    pub const fn relative(rel: f64) -> Self {
        Self {
            rel,
            abs: 0.0,
            max_panels: 4000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::relative(1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    round_off: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single-panel 21-point Kronrod estimate with its QUADPACK error estimate.
pub fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (value, error, _) = kronrod_panel(f, a, b);
    (value, error)
}

// Returns the estimate, its error and the rounding floor of the panel.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let round_off = 50.0 * f64::EPSILON * abs_sum;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(round_off);
    }
    (value, error, round_off)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` (which must be sorted; repeated points are skipped).
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Integral> {
    integrate_with_panels(f, points, tol).map(|(i, _)| i)
}

/// Applies the 21-point Kronrod rule on each of the given panels. With the
/// panels held fixed the result is a smooth function of any parameter of `f`.
pub fn fixed_rule<F: Fn(f64) -> f64>(f: F, panels: &[(f64, f64)]) -> f64 {
    panels
        .iter()
        .map(|&(a, b)| gauss_kronrod_21(&f, a, b).0)
        .sum()
}

/// Like [`integrate`], also returning the final panels sorted by position.
pub fn integrate_with_panels<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<(Integral, Vec<(f64, f64)>)> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut total_round = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error, round_off) = kronrod_panel(&f, a, b);
        total += value;
        total_err += error;
        total_round += round_off;
        heap.push(Panel {
            a,
            b,
            value,
            error,
            round_off,
        });
    }
    if heap.is_empty() {
        return Ok((
            Integral {
                value: 0.0,
                error: 0.0,
                panels: 0,
            },
            Vec::new(),
        ));
    }
    loop {
        // Requests below the accumulated rounding floor cannot be met.
        let target = tol.abs.max(tol.rel * total.abs()).max(2.0 * total_round);
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::Quadrature {
                value: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel collapsed to machine resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1, r1) = kronrod_panel(&f, worst.a, mid);
        let (v2, e2, r2) = kronrod_panel(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_round += r1 + r2 - worst.round_off;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            round_off: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            round_off: r2,
        });
    }
    // Re-sum to shed the drift of the running totals.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    let bounds = panels.iter().map(|p| (p.a, p.b)).collect();
    Ok((
        Integral {
            value,
            error,
            panels: panels.len(),
        },
        bounds,
    ))
}
