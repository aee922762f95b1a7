//! Distribution of the TFisher statistic under a mixture alternative and the
//! resulting power.
//!
//! Moments of one term `Y = −2·ln(P/τ₂)·1{P ≤ τ₁}` are integrated in the
//! p-value variable against `D′`, scaled to the sum of `n` terms, and matched
//! by a skew-normal (or a shifted gamma when the skewness is out of the
//! skew-normal range).

mod distortion;
mod skew_normal;

use serde::Serialize;

pub use distortion::{Distortion, GaussianMixture, Identity};
pub use skew_normal::{owens_t, sn_fit, ShiftedGamma, SkewNormalParams, MAX_SN_SKEWNESS};

use crate::error::{Error, Result};
use crate::nulldist::NullDistribution;
use crate::numerics::{integrate, QuadratureSpec};
use crate::statistic::TFisherParams;

/// `n` one-sided p-values from `X ~ (1−ε)N(0,1) + εN(μ,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalModel {
    epsilon: f64,
    mu: f64,
    n: usize,
}

impl SignalModel {
    pub fn new(epsilon: f64, mu: f64, n: usize) -> Result<Self> {
        GaussianMixture::new(epsilon, mu)?;
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(Self { epsilon, mu, n })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distortion(&self) -> GaussianMixture {
        gaussian_mixture_distortion(self)
    }
}

pub fn gaussian_mixture_distortion(model: &SignalModel) -> GaussianMixture {
    GaussianMixture::new(model.epsilon, model.mu).expect("validated by SignalModel")
}

/// `D(x) − x`.
pub fn delta(d: &dyn Distortion, x: f64) -> f64 {
    d.delta(x)
}

/// Raw moments `E Yᵏ`, `k = 1, 2, 3`, of one term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AltMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl AltMoments {
    /// Mean, variance and third central moment.
    pub fn central(&self) -> (f64, f64, f64) {
        let (m1, m2, m3) = (self.m1, self.m2, self.m3);
        (m1, m2 - m1 * m1, m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1)
    }
}

pub fn alt_moments(d: &dyn Distortion, params: TFisherParams) -> Result<AltMoments> {
    let (t1, ln_t2) = (params.tau1(), params.tau2().ln());
    let spec = QuadratureSpec::tight();
    let moment = |k: i32| integrate(|v| (-2.0 * (v.ln() - ln_t2)).powi(k) * d.d_prime(v), 0.0, t1, &spec);
    Ok(AltMoments {
        m1: moment(1)?,
        m2: moment(2)?,
        m3: moment(3)?,
    })
}

/// Fitted approximation to the distribution of `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AltApproximation {
    SkewNormal(SkewNormalParams),
    /// Used when the skewness is beyond the skew-normal range.
    ShiftedGamma(ShiftedGamma),
}

impl AltApproximation {
    /// Matches the moments of a sum of `n` independent terms.
    pub fn fit(n: usize, moments: &AltMoments) -> Result<Self> {
        let (m, v, c) = moments.central();
        let nf = n as f64;
        let (mean, var, third) = (nf * m, nf * v, nf * c);
        match sn_fit(mean, var, third) {
            Ok(sn) => Ok(Self::SkewNormal(sn)),
            Err(Error::Domain(_)) if var > 0.0 => Ok(Self::ShiftedGamma(ShiftedGamma::fit(mean, var, third)?)),
            Err(e) => Err(e),
        }
    }

    pub fn survival(&self, w: f64) -> f64 {
        match self {
            Self::SkewNormal(p) => p.survival(w),
            Self::ShiftedGamma(g) => g.survival(w),
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, Self::ShiftedGamma(_))
    }
}

pub fn alt_distribution(model: &SignalModel, params: TFisherParams) -> Result<AltApproximation> {
    AltApproximation::fit(model.n, &alt_moments(&model.distortion(), params)?)
}

/// Approximate `P_H1(W ≥ w)`.
pub fn alt_survival(w: f64, model: &SignalModel, params: TFisherParams) -> Result<f64> {
    Ok(alt_distribution(model, params)?.survival(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerResult {
    pub power: f64,
    pub critical_value: f64,
    pub approximation: AltApproximation,
}

/// Power of the level-`alpha` test, with the fitted approximation.
pub fn power_detailed(model: &SignalModel, params: TFisherParams, alpha: f64) -> Result<PowerResult> {
    let critical_value = NullDistribution::new(model.n, params)?.critical_value(alpha)?;
    let approximation = alt_distribution(model, params)?;
    Ok(PowerResult {
        power: approximation.survival(critical_value),
        critical_value,
        approximation,
    })
}

pub fn power(model: &SignalModel, params: TFisherParams, alpha: f64) -> Result<f64> {
    Ok(power_detailed(model, params, alpha)?.power)
}
