//! Exact null distribution of the TFisher statistic.
//!
//! Under the null the number `N` of p-values passing `τ₁` is
//! Binomial(n, τ₁), and given `N = k` the statistic is
//! `2k·ln(τ₂/τ₁) + χ²₂ₖ`. Mixing over `k` gives
//!
//! `P(W ≥ w) = (1−τ₁)ⁿ·1{w ≤ 0} + Σₖ₌₁ⁿ Bin(k; n, τ₁)·Q₂ₖ(max(w + 2k·ln(τ₁/τ₂), 0))`
//!
//! with `Q₂ₖ` the χ²₂ₖ survival function. Terms are formed in log space and
//! only the band of `k` that can matter at double precision is evaluated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{ln_binom_pmf, ln_upper_gamma_int, CompensatedSum};
use crate::statistic::{statistic, PValues, TFisherParams};

/// Terms whose binomial weight is below `e^-LN_CUTOFF` times the largest term
/// found so far are dropped.
const LN_CUTOFF: f64 = 50.0;

/// Null distribution of `W(τ₁, τ₂)` for `n` independent uniform p-values.
#[derive(Debug, Clone, Copy)]
pub struct NullDistribution {
    n: u64,
    params: TFisherParams,
    ln_ratio: f64,
}

impl NullDistribution {
    pub fn new(n: usize, params: TFisherParams) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(Self {
            n: n as u64,
            params,
            ln_ratio: (params.tau1() / params.tau2()).ln(),
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn params(&self) -> TFisherParams {
        self.params
    }

    /// `P(W ≥ w)`.
    ///
    /// Exactly 1 for `w ≤ 0` when `τ₂ ≥ τ₁`. With `τ₂ < τ₁` single terms can
    /// be negative, so the survival below zero is evaluated from the mixture.
    pub fn survival(&self, w: f64) -> Result<f64> {
        if w.is_nan() {
            return Err(Error::domain("statistic value is NaN"));
        }
        if w <= 0.0 && self.ln_ratio <= 0.0 {
            return Ok(1.0);
        }
        if w == f64::INFINITY {
            return Ok(0.0);
        }
        let mass = if w <= 0.0 { self.zero_mass() } else { 0.0 };
        Ok((mass + self.continuous_part(w)).min(1.0))
    }

    /// `P(W = 0 from no p-value passing) = (1 − τ₁)ⁿ`.
    pub fn zero_mass(&self) -> f64 {
        (self.n as f64 * (-self.params.tau1()).ln_1p()).exp()
    }

    /// `lim_{w→0+} P(W ≥ w)`, the largest level a non-randomized test with a
    /// nonnegative critical value can have.
    pub fn max_level(&self) -> f64 {
        self.continuous_part(0.0)
    }

    /// Smallest `w` with `P(W ≥ w) ≤ alpha`, to 1e-10 in `w`.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let max_level = self.max_level();
        if alpha >= max_level {
            if self.ln_ratio > 0.0 && alpha >= self.survival(0.0)? {
                // Negative critical values exist only when τ₂ < τ₁; each term
                // is bounded below by 2·ln(τ₂/τ₁).
                let floor = -2.0 * self.n as f64 * self.ln_ratio - 1.0;
                return self.bisect(alpha, floor, 0.0);
            }
            return Err(Error::InfeasibleLevel { alpha, max_level });
        }
        let mut hi = 1.0;
        while self.survival(hi)? > alpha {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoSolution(format!(
                    "no critical value below {hi} for level {alpha}"
                )));
            }
        }
        self.bisect(alpha, 0.0, hi)
    }

    /// p-value of an observed statistic, `P(W ≥ w_obs)`.
    pub fn pvalue(&self, w_obs: f64) -> Result<f64> {
        self.survival(w_obs)
    }

    /// Invariant: survival(lo) > alpha (or lo is the excluded left end) and
    /// survival(hi) ≤ alpha.
    fn bisect(&self, alpha: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.survival(mid)? <= alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `Σₖ≥₁ Bin(k)·Q₂ₖ(max(w + 2k·ln(τ₁/τ₂), 0))`.
    fn continuous_part(&self, w: f64) -> f64 {
        let n = self.n;
        let t1 = self.params.tau1();
        let mode = (((n + 1) as f64 * t1).floor() as u64).clamp(1, n);
        let mut ln_terms = Vec::with_capacity(64);
        let mut best = f64::NEG_INFINITY;
        let mut visit = |k: u64| -> bool {
            let ln_pmf = ln_binom_pmf(k, n, t1);
            if ln_pmf < best - LN_CUTOFF || ln_pmf == f64::NEG_INFINITY {
                return false;
            }
            let x = (w + 2.0 * k as f64 * self.ln_ratio).max(0.0);
            let t = ln_pmf + ln_upper_gamma_int(k, 0.5 * x);
            best = best.max(t);
            ln_terms.push(t);
            true
        };
        // The binomial weights decrease monotonically away from the mode, so
        // each walk can stop at the first negligible weight.
        for k in (1..=mode).rev() {
            if !visit(k) {
                break;
            }
        }
        for k in mode + 1..=n {
            if !visit(k) {
                break;
            }
        }
        if best == f64::NEG_INFINITY {
            return 0.0;
        }
        let mut sum = CompensatedSum::default();
        for t in &ln_terms {
            sum.add((t - best).exp());
        }
        (best + sum.value().ln()).exp()
    }
}

/// `P_H0(W ≥ w)` for `n` p-values.
pub fn null_survival(w: f64, n: usize, params: TFisherParams) -> Result<f64> {
    NullDistribution::new(n, params)?.survival(w)
}

/// Exact null p-value of the observed statistic.
pub fn null_pvalue(p: &PValues, params: TFisherParams) -> Result<f64> {
    NullDistribution::new(p.len(), params)?.survival(statistic(p, params))
}

/// Smallest `w` with `P_H0(W ≥ w) ≤ alpha`.
pub fn critical_value(alpha: f64, n: usize, params: TFisherParams) -> Result<f64> {
    NullDistribution::new(n, params)?.critical_value(alpha)
}

/// Null mean and variance of the half-scale per-term contribution
/// `Yᵢ = −ln(Pᵢ/τ₂)·1{Pᵢ ≤ τ₁}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullMoments {
    pub e0: f64,
    pub v0: f64,
}

pub fn null_moments(params: TFisherParams) -> NullMoments {
    let (t1, t2) = (params.tau1(), params.tau2());
    let c = 1.0 - t1.ln() + t2.ln();
    NullMoments {
        e0: t1 * c,
        v0: t1 * (1.0 + (1.0 - t1) * c * c),
    }
}
