//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! The integrand may be vector valued (`[f64; D]`), which lets moment
//! problems integrate every moment in a single pass over shared nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_037_148,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad<const D: usize> {
    pub value: [f64; D],
    pub abs_error: f64,
    pub intervals: usize,
}

struct Segment<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    err: f64,
}

impl<const D: usize> PartialEq for Segment<D> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<const D: usize> Eq for Segment<D> {}
impl<const D: usize> PartialOrd for Segment<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Segment<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod<const D: usize, F: FnMut(f64) -> [f64; D]>(f: &mut F, a: f64, b: f64) -> Segment<D> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = [0.0; D];
    let mut resg = [0.0; D];
    let mut resabs = [0.0; D];
    let mut fvals = [[0.0; D]; 21];
    for d in 0..D {
        resk[d] = fc[d] * WGK[10];
        resabs[d] = fc[d].abs() * WGK[10];
    }
    fvals[20] = fc;
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for d in 0..D {
            resk[d] += WGK[j] * (f1[d] + f2[d]);
            resabs[d] += WGK[j] * (f1[d].abs() + f2[d].abs());
            if j % 2 == 1 {
                resg[d] += WG[j / 2] * (f1[d] + f2[d]);
            }
        }
        fvals[2 * j] = f1;
        fvals[2 * j + 1] = f2;
    }
    let mut err = 0.0f64;
    let mut value = [0.0; D];
    for d in 0..D {
        let mean = 0.5 * resk[d];
        let mut resasc = WGK[10] * (fc[d] - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fvals[2 * j][d] - mean).abs() + (fvals[2 * j + 1][d] - mean).abs());
        }
        resasc *= half.abs();
        let mut e = ((resk[d] - resg[d]) * half).abs();
        if resasc != 0.0 && e != 0.0 {
            e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
        }
        let round = 50.0 * f64::EPSILON * resabs[d] * half.abs();
        if round > f64::MIN_POSITIVE {
            e = e.max(round);
        }
        err = err.max(e);
        value[d] = resk[d] * half;
    }
    Segment { a, b, value, err }
}

/// Integrates a vector-valued `f` over consecutive sub-intervals delimited
/// by `breaks` (at least two increasing points).
pub fn integrate_vec<const D: usize, F>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<Quad<D>>
where
    F: FnMut(f64) -> [f64; D],
{
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(format!("quadrature breakpoints must increase: {breaks:?}")));
    }
    if breaks.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("quadrature limits must be finite".into()));
    }
    let mut heap: BinaryHeap<Segment<D>> = BinaryHeap::new();
    for w in breaks.windows(2) {
        heap.push(kronrod(&mut f, w[0], w[1]));
    }
    let mut intervals = heap.len();
    // segments too narrow to split further are parked here
    let mut frozen: Vec<Segment<D>> = Vec::new();
    loop {
        let (value, err) = totals(&heap, &frozen);
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite integral on [{}, {}]", breaks[0], breaks[breaks.len() - 1])));
        }
        let scale = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = opts.abs_tol.max(opts.rel_tol * scale);
        if err <= tol || heap.is_empty() || intervals >= opts.max_intervals {
            // a miss by orders of magnitude is a genuine failure; small misses
            // are rounding-limited
            if err > 1e3 * tol && err > 1e-10 * scale.max(1e-300) {
                return Err(Error::Divergence(format!(
                    "estimated error {err:e} exceeds tolerance {tol:e} after {intervals} intervals"
                )));
            }
            return Ok(Quad { value, abs_error: err, intervals });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * worst.a.abs().max(worst.b.abs()).max(1e-300) {
            frozen.push(worst);
            continue;
        }
        heap.push(kronrod(&mut f, worst.a, mid));
        heap.push(kronrod(&mut f, mid, worst.b));
        intervals += 1;
    }
}

fn totals<const D: usize>(heap: &BinaryHeap<Segment<D>>, frozen: &[Segment<D>]) -> ([f64; D], f64) {
    let mut value = [0.0; D];
    let mut err = 0.0;
    for s in heap.iter().chain(frozen.iter()) {
        for (v, x) in value.iter_mut().zip(&s.value) {
            *v += x;
        }
        err += s.err;
    }
    (value, err)
}

/// Scalar integral of `f` over the sub-intervals delimited by `breaks`.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<f64> {
    integrate_vec(|x| [f(x)], breaks, opts).map(|q| q.value[0])
}

/// Scalar integral of `f` over [a, b] with default tolerances.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_breaks(f, &[a, b], QuadOptions::default())
}

/// Breakpoints splitting [a, b] geometrically towards `a`; helps integrands
/// with an integrable endpoint singularity or a sharp peak near `a`.
pub fn graded_breaks(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mut pts = vec![a];
    let width = b - a;
    for k in (1..=levels).rev() {
        pts.push(a + width * 0.5f64.powi(k as i32 * 2));
    }
    pts.push(b);
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0).unwrap();
        assert!((v - (8.0 + 1.0 - 4.0 + 1.0 + 3.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_and_log_singularity() {
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-13);
        // ∫_0^1 ln x dx = -1
        let v = integrate(|x| if x > 0.0 { x.ln() } else { 0.0 }, 0.0, 1.0).unwrap();
        assert!((v + 1.0).abs() < 1e-11);
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate_breaks(|x| if x > 0.0 { x.powf(-0.5) } else { 0.0 }, &graded_breaks(0.0, 1.0, 8), QuadOptions::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn vector_integrand_shares_nodes() {
        let q = integrate_vec(|x| [1.0, x, x * x], &[0.0, 1.0], QuadOptions::default()).unwrap();
        assert!((q.value[0] - 1.0).abs() < 1e-15);
        assert!((q.value[1] - 0.5).abs() < 1e-15);
        assert!((q.value[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_breaks() {
        assert!(integrate(|x| x, 1.0, 1.0).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn non_integrable_reports_divergence() {
        let r = integrate(|x| if x > 0.0 { 1.0 / x } else { 0.0 }, 0.0, 1.0);
        assert!(matches!(r, Err(Error::Divergence(_))), "{r:?}");
    }
}
