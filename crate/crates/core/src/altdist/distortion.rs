//! Distortions `D` with `P(P_i ≤ x) = D(x)` under the alternative.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{norm_isf, norm_sf};

/// Distribution function of an input p-value under the alternative.
///
/// `d` must be a non-decreasing map of `[0, 1]` onto itself with `d(0) = 0`
/// and `d(1) = 1`; `d_prime` is its density. The default `delta` and
/// `delta_prime` subtract the identity; implementations may override them
/// when `D − x` can be formed without cancellation.
pub trait Distortion: Sync {
    fn d(&self, x: f64) -> f64;
    fn d_prime(&self, x: f64) -> f64;

    /// `δ(x) = D(x) − x`.
    fn delta(&self, x: f64) -> f64 {
        self.d(x) - x
    }

    /// `δ′(x) = D′(x) − 1`.
    fn delta_prime(&self, x: f64) -> f64 {
        self.d_prime(x) - 1.0
    }
}

/// The null: p-values stay uniform.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Distortion for Identity {
    fn d(&self, x: f64) -> f64 {
        x
    }
    fn d_prime(&self, _x: f64) -> f64 {
        1.0
    }
    fn delta(&self, _x: f64) -> f64 {
        0.0
    }
    fn delta_prime(&self, _x: f64) -> f64 {
        0.0
    }
}

/// One-sided p-values `P = Φ̄(X)` from `X ~ (1−ε)N(0,1) + εN(μ,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMixture {
    epsilon: f64,
    mu: f64,
}

impl GaussianMixture {
    /// `epsilon ∈ [0, 1]`, `mu ≥ 0` finite.
    pub fn new(epsilon: f64, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!("mu must be finite and nonnegative, got {mu}")));
        }
        Ok(Self { epsilon, mu })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `Φ̄(Φ̄⁻¹(x) − μ) − x`, the shift of a pure signal p-value.
    fn signal_gap(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        norm_sf(norm_isf(x) - self.mu) - x
    }

    /// `e^{μz − μ²/2} − 1` with `z = Φ̄⁻¹(x)`, the likelihood ratio minus one.
    fn signal_ratio_m1(&self, x: f64) -> f64 {
        let z = norm_isf(x);
        if z == f64::INFINITY {
            return if self.mu > 0.0 { f64::INFINITY } else { 0.0 };
        }
        if z == f64::NEG_INFINITY {
            return if self.mu > 0.0 { -1.0 } else { 0.0 };
        }
        (self.mu * z - 0.5 * self.mu * self.mu).exp_m1()
    }
}

impl Distortion for GaussianMixture {
    fn d(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        x + self.delta(x)
    }

    fn d_prime(&self, x: f64) -> f64 {
        1.0 + self.delta_prime(x)
    }

    fn delta(&self, x: f64) -> f64 {
        self.epsilon * self.signal_gap(x)
    }

    fn delta_prime(&self, x: f64) -> f64 {
        if self.epsilon == 0.0 {
            return 0.0;
        }
        self.epsilon * self.signal_ratio_m1(x)
    }
}
