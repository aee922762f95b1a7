//! Adaptive Gauss–Kronrod quadrature.
//!
//! [`integrate`] is the general entry point. It splits `[lo, hi]` at the
//! midpoint and maps each half onto `t ∈ [0, 745]` through
//! `u = endpoint ± h·e^{-t}`, which turns integrable endpoint singularities of
//! logarithmic type into exponentially decaying tails. `t = 745` is where
//! `e^{-t}` underflows in double precision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0 && rel_tol > 0.0) || max_subdivisions == 0 {
            return Err(Error::domain(
                "quadrature tolerances must be positive and max_subdivisions >= 1",
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    /// Same limits with tighter tolerances.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// 21-point Kronrod rule with the embedded 10-point Gauss rule.
/// Returns (estimate, error estimate).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
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
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
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

/// Globally adaptive integration over a union of initial segments.
fn adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[(f64, f64)], spec: &QuadratureSpec) -> Result<f64> {
    let mut heap = BinaryHeap::with_capacity(breaks.len() + spec.max_subdivisions);
    let mut frozen_value = 0.0;
    for &(a, b) in breaks {
        let (value, error) = gk21(f, a, b);
        heap.push(Segment { a, b, value, error });
    }
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut err: f64 = heap.iter().map(|s| s.error).sum();
    let mut splits = 0usize;
    loop {
        if !total.is_finite() || err.is_nan() {
            return Err(Error::domain("integrand produced a non-finite value"));
        }
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= tol {
            // Re-sum to drop the drift of the running totals.
            let exact: f64 = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
            return Ok(exact);
        }
        let Some(worst) = heap.pop() else {
            return Ok(total);
        };
        if splits >= spec.max_subdivisions {
            return Err(Error::Convergence {
                what: "adaptive quadrature",
                best_estimate: total,
                error_estimate: err,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            frozen_value += worst.value;
            continue;
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        splits += 1;
    }
}

/// Adaptive integration of a smooth (bounded) integrand on a finite interval.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_interval(lo, hi)?;
    if lo == hi {
        return Ok(0.0);
    }
    adaptive(&f, &[(lo, hi)], spec)
}

/// Upper truncation of the exponential substitution.
const T_MAX: f64 = 745.0;

fn t_breaks() -> Vec<(f64, f64)> {
    let mut v = vec![(0.0, 0.5), (0.5, 1.0)];
    let mut a = 1.0;
    while a < T_MAX {
        let b = (2.0 * a).min(T_MAX);
        v.push((a, b));
        a = b;
    }
    v
}

/// ∫_lo^hi f(u) du for integrands that may carry integrable singularities
/// (logarithmic or weak algebraic) at either endpoint.
///
/// Points that would land exactly on an endpoint are skipped, so `f` is never
/// evaluated at `lo` or `hi`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_interval(lo, hi)?;
    if lo == hi {
        return Ok(0.0);
    }
    let h = 0.5 * (hi - lo);
    // Encode the two halves on disjoint t ranges: t >= 0 for the left half,
    // t + OFFSET for the right half.
    const OFFSET: f64 = 1000.0;
    let g = |s: f64| {
        let (t, left) = if s < OFFSET { (s, true) } else { (s - OFFSET, false) };
        let w = h * (-t).exp();
        if w == 0.0 {
            return 0.0;
        }
        let u = if left { lo + w } else { hi - w };
        if u <= lo || u >= hi {
            return 0.0;
        }
        f(u) * w
    };
    let mut breaks = t_breaks();
    let right: Vec<_> = breaks.iter().map(|&(a, b)| (a + OFFSET, b + OFFSET)).collect();
    breaks.extend(right);
    adaptive(&g, &breaks, spec)
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::domain(format!("invalid integration interval [{lo}, {hi}]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant() {
        let v = integrate(|_| 1.0, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_singularity() {
        let spec = QuadratureSpec::default();
        let v = integrate(|u: f64| u.ln(), 0.0, 1.0, &spec).unwrap();
        assert!((v + 1.0).abs() < 1e-10);
        let v2 = integrate(|u: f64| u.ln().powi(2), 0.0, 1.0, &spec).unwrap();
        assert!((v2 - 2.0).abs() < 1e-9);
        let v3 = integrate(|u: f64| u.ln().powi(3), 0.0, 1.0, &spec).unwrap();
        assert!((v3 + 6.0).abs() < 1e-8);
    }

    #[test]
    fn partial_interval_and_both_ends() {
        let spec = QuadratureSpec::tight();
        // ∫_0^x ln u du = x ln x - x
        let x: f64 = 0.05;
        let v = integrate(|u: f64| u.ln(), 0.0, x, &spec).unwrap();
        assert!((v - (x * x.ln() - x)).abs() < 1e-12);
        // ∫_0^1 ln(u) ln(1-u) du = 2 - π²/6
        let v = integrate(|u: f64| u.ln() * (1.0 - u).ln(), 0.0, 1.0, &spec).unwrap();
        let exact = 2.0 - std::f64::consts::PI.powi(2) / 6.0;
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let v = integrate(|u: f64| 1.0 / u.sqrt(), 0.0, 4.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 4.0).abs() < 1e-8);
    }

    #[test]
    fn finite_rule() {
        let v = integrate_finite(|x: f64| x.sin(), 0.0, std::f64::consts::PI, &QuadratureSpec::tight()).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn convergence_error_carries_estimate() {
        let spec = QuadratureSpec::new(1e-15, 1e-15, 1).unwrap();
        match integrate_finite(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &spec) {
            Err(Error::Convergence { best_estimate, .. }) => assert!(best_estimate.is_finite()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(QuadratureSpec::new(0.0, 1e-8, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-8, 0).is_err());
    }
}
