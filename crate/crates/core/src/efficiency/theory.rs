//! Stationary points and optimality boundaries for the Gaussian mixture.
//!
//! `g̃ₖ(μ) = ∫₀¹ lnᵏu·(e^{μΦ̄⁻¹(u) − μ²/2} − 1) du` carries all the
//! dependence on `μ`.

use std::sync::OnceLock;

use super::{EfficiencyConfig, TauProfile};
use crate::altdist::{Distortion, GaussianMixture};
use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate, scan_for_bracket, QuadratureSpec, RootBracket};

/// `g̃ₖ(μ)` for `k ∈ {1, 2}`.
pub fn g_tilde(k: u32, mu: f64) -> Result<f64> {
    if !(k == 1 || k == 2) {
        return Err(Error::domain(format!("g_tilde is defined for k = 1, 2, got {k}")));
    }
    let signal = GaussianMixture::new(1.0, mu)?;
    let spec = QuadratureSpec::tight();
    integrate(|u| u.ln().powi(k as i32) * signal.delta_prime(u), 0.0, 1.0, &spec)
}

/// The signal strength below which soft thresholding stops being a BE
/// stationary point: the root of `1 + g̃₁(μ)` on `[0.5, 1.5]`.
pub fn mu_lower_bound() -> Result<f64> {
    static CACHE: OnceLock<f64> = OnceLock::new();
    if let Some(&v) = CACHE.get() {
        return Ok(v);
    }
    let f = |mu: f64| 1.0 + g_tilde(1, mu).unwrap_or(f64::NAN);
    let root = find_root(f, RootBracket::new(0.5, 1.5)?, 1e-12)?;
    Ok(*CACHE.get_or_init(|| root))
}

/// APR boundary `h_b(μ) = (1 + g̃₁)/(g̃₁² − g̃₁ − g̃₂)`, defined above
/// [`mu_lower_bound`].
pub fn boundary_b(mu: f64) -> Result<f64> {
    let lower = mu_lower_bound()?;
    if !(mu > lower) {
        return Err(Error::domain(format!(
            "h_b is defined only for mu > {lower:.6}, got {mu}"
        )));
    }
    let (g1, g2) = (g_tilde(1, mu)?, g_tilde(2, mu)?);
    Ok((1.0 + g1) / (g1 * g1 - g1 - g2))
}

fn boundary_a_parts(mu: f64, c_n: f64) -> Result<(f64, f64)> {
    let (g1, g2) = (g_tilde(1, mu)?, g_tilde(2, mu)?);
    let k = 1.0 - c_n;
    Ok((k * (1.0 + g1) + 2.0 * g1 + g2, k * (g1 * g1 - g1 - g2) + 2.0 * g1 + g2))
}

/// APE boundary `h_a(μ)`; fails when `μ` is at or below the zero of its
/// numerator or when its denominator is not positive.
pub fn boundary_a(mu: f64, config: &EfficiencyConfig) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("mu must be positive, got {mu}")));
    }
    let (num, den) = boundary_a_parts(mu, config.c_n())?;
    if !(den > 0.0) {
        return Err(Error::domain(format!("h_a denominator is {den:e} at mu = {mu}")));
    }
    if !(num > 0.0) {
        return Err(Error::domain(format!("mu = {mu} is below the lower bound of h_a")));
    }
    Ok(num / den)
}

/// Zero of the `h_a` numerator, found by scanning upward from small `μ`.
pub fn mu_lower_bound_a(config: &EfficiencyConfig) -> Result<f64> {
    let c_n = config.c_n();
    let num = |mu: f64| boundary_a_parts(mu, c_n).map(|p| p.0).unwrap_or(f64::NAN);
    let points: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    let bracket = scan_for_bracket(num, &points)
        .ok_or_else(|| Error::NoSolution("h_a numerator has no sign change on (0, 10]".into()))?;
    find_root(num, bracket, 1e-12)
}

/// `f(τ) = ∫₀^τ ln u·δ′(u) du − δ(τ)·(ln τ − (2−τ)/(1−τ))`.
fn stationary_equation(profile: &TauProfile) -> f64 {
    let t = profile.tau1;
    profile.a_delta - profile.delta * (t.ln() - (2.0 - t) / (1.0 - t))
}

/// Soft threshold `τ*` at which BE is stationary in both `τ₁` and `τ₂`.
///
/// The first sign change of the stationarity equation over 200
/// log-spaced points in `[1e-6, 1 − 1e-6]` is refined by Brent's method.
pub fn be_stationary_tau(d: &dyn Distortion) -> Result<f64> {
    let (lo, hi) = (1e-6f64.ln(), (1.0 - 1e-6f64).ln());
    let taus: Vec<f64> = (0..200).map(|i| (lo + (hi - lo) * i as f64 / 199.0).exp()).collect();
    let profiles = TauProfile::along(d, &taus)?;
    let values: Vec<f64> = profiles.iter().map(stationary_equation).collect();
    let i = values
        .windows(2)
        .position(|w| w[0].is_finite() && w[1].is_finite() && (w[0] <= 0.0) != (w[1] <= 0.0))
        .ok_or_else(|| Error::NoSolution("stationarity equation has no sign change on (0, 1)".into()))?;
    let f = |t: f64| {
        TauProfile::new(d, t)
            .map(|p| stationary_equation(&p))
            .unwrap_or(f64::NAN)
    };
    find_root(f, RootBracket::new(taus[i], taus[i + 1])?, 1e-12)
}

/// Second-order condition at a soft-threshold stationary point:
/// `δ(τ*) > (2 − τ*)·δ′(τ*)`.
///
/// Where `δ′ > 0` this is `δ/δ′ > 2 − τ*`; where `δ′ ≤ 0` and `δ > 0` it
/// holds outright.
pub fn local_max_condition(d: &dyn Distortion, tau_star: f64) -> bool {
    if !(tau_star > 0.0 && tau_star < 1.0) {
        return false;
    }
    d.delta(tau_star) > (2.0 - tau_star) * d.delta_prime(tau_star)
}
