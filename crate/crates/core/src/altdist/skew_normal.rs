//! Three-moment approximations: the skew-normal family, with a shifted gamma
//! when the skewness is beyond the skew-normal range.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::numerics::{integrate_finite, norm_sf, QuadratureSpec};

/// Largest |standardized skewness| a skew-normal can reach.
pub const MAX_SN_SKEWNESS: f64 = 0.995_271_746_431_156;

/// Location `xi`, scale `omega > 0`, shape `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewNormalParams {
    pub xi: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl SkewNormalParams {
    pub fn new(xi: f64, omega: f64, alpha: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) || !xi.is_finite() || !alpha.is_finite() {
            return Err(Error::domain(format!("invalid skew-normal ({xi}, {omega}, {alpha})")));
        }
        Ok(Self { xi, omega, alpha })
    }

    /// Mean, variance and third central moment.
    pub fn moments(&self) -> (f64, f64, f64) {
        let d = self.alpha / (1.0 + self.alpha * self.alpha).sqrt();
        let b = self.omega * d * (2.0 / PI).sqrt();
        (
            self.xi + b,
            self.omega * self.omega - b * b,
            0.5 * (4.0 - PI) * b * b * b,
        )
    }

    pub fn survival(&self, x: f64) -> f64 {
        let z = (x - self.xi) / self.omega;
        (norm_sf(z) + 2.0 * owens_t(z, self.alpha)).clamp(0.0, 1.0)
    }
}

/// Skew-normal with the given mean, variance and third central moment.
///
/// Fails with a domain error when the standardized skewness is outside
/// `(−MAX_SN_SKEWNESS, MAX_SN_SKEWNESS)`.
pub fn sn_fit(mean: f64, variance: f64, third_central: f64) -> Result<SkewNormalParams> {
    if !(variance > 0.0) || !mean.is_finite() || !third_central.is_finite() {
        return Err(Error::domain(format!(
            "cannot fit moments ({mean}, {variance}, {third_central})"
        )));
    }
    let a = (2.0 * third_central / (4.0 - PI)).cbrt();
    let denom = 2.0 * variance + (2.0 - PI) * a * a;
    if !(denom > 0.0) {
        return Err(Error::domain(format!(
            "skewness {} is outside the skew-normal range",
            third_central / variance.powf(1.5)
        )));
    }
    let alpha = a.signum() * (PI * a * a / denom).sqrt();
    SkewNormalParams::new(mean - a, (variance + a * a).sqrt(), if a == 0.0 { 0.0 } else { alpha })
}

/// Owen's T function `T(h, a) = (1/2π) ∫₀ᵃ exp(−h²(1+x²)/2) / (1+x²) dx`.
pub fn owens_t(h: f64, a: f64) -> f64 {
    if a == 0.0 || h.abs() > 40.0 {
        return 0.0;
    }
    let hh = 0.5 * h * h;
    let f = |x: f64| {
        let q = 1.0 + x * x;
        (-hh * q).exp() / q
    };
    let spec = QuadratureSpec::new(1e-15, 1e-12, 2000).expect("valid spec");
    let v = match integrate_finite(f, 0.0, a.abs(), &spec) {
        Ok(v) => v,
        Err(Error::Convergence { best_estimate, .. }) => best_estimate,
        Err(_) => 0.0,
    };
    a.signum() * v / (2.0 * PI)
}

/// Gamma distribution shifted by `loc` and reflected when `scale < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedGamma {
    pub shape: f64,
    pub scale: f64,
    pub loc: f64,
}

impl ShiftedGamma {
    /// Matches mean, variance and third central moment; skewness must be
    /// nonzero.
    pub fn fit(mean: f64, variance: f64, third_central: f64) -> Result<Self> {
        let sd = variance.sqrt();
        let skew = third_central / (variance * sd);
        if !(variance > 0.0) || skew == 0.0 || !skew.is_finite() {
            return Err(Error::domain(
                "shifted gamma needs positive variance and nonzero skewness",
            ));
        }
        let shape = 4.0 / (skew * skew);
        let scale = 0.5 * sd * skew;
        Ok(Self {
            shape,
            scale,
            loc: mean - shape * scale,
        })
    }

    pub fn survival(&self, x: f64) -> f64 {
        let t = (x - self.loc) / self.scale;
        if t <= 0.0 {
            return if self.scale > 0.0 { 1.0 } else { 0.0 };
        }
        if self.scale > 0.0 {
            gamma_ur(self.shape, t)
        } else {
            gamma_lr(self.shape, t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, norm_pdf};

    #[test]
    fn symmetric_input_is_normal() {
        let p = sn_fit(3.0, 4.0, 0.0).unwrap();
        assert_eq!(p.alpha, 0.0);
        assert_eq!(p.xi, 3.0);
        assert_eq!(p.omega, 2.0);
    }

    #[test]
    fn round_trip() {
        for (m, v, c) in [
            (10.0, 4.0, 1.0),
            (0.5, 0.01, -0.0003),
            (100.0, 250.0, 3000.0),
            (1.0, 1.0, 0.99),
        ] {
            let p = sn_fit(m, v, c).unwrap();
            let (m2, v2, c2) = p.moments();
            assert!((m2 - m).abs() < 1e-10 * m.abs().max(1.0));
            assert!((v2 - v).abs() < 1e-10 * v);
            assert!((c2 - c).abs() < 1e-10 * c.abs().max(1e-12), "{c} vs {c2}");
        }
    }

    #[test]
    fn sign_follows_third_moment() {
        assert!(sn_fit(0.0, 1.0, -0.5).unwrap().alpha < 0.0);
        assert!(sn_fit(0.0, 1.0, 0.5).unwrap().alpha > 0.0);
    }

    #[test]
    fn out_of_range_skewness() {
        assert!(sn_fit(0.0, 1.0, 0.996).is_err());
        assert!(sn_fit(0.0, 1.0, -1.5).is_err());
        assert!(sn_fit(0.0, 1.0, 0.995).is_ok());
        assert!(sn_fit(0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn owens_t_known_values() {
        // T(h, 1) = Φ(h)Φ̄(h)/2 and T(0, a) = atan(a)/(2π).
        for h in [0.0, 0.3, 1.0, 2.5] {
            let want = 0.5 * norm_sf(h) * (1.0 - norm_sf(h));
            assert!((owens_t(h, 1.0) - want).abs() < 1e-14);
        }
        for a in [0.2, 3.0, 50.0] {
            assert!((owens_t(0.0, a) - a.atan() / (2.0 * PI)).abs() < 1e-14);
        }
        assert!((owens_t(1.0, -0.5) + owens_t(1.0, 0.5)).abs() < 1e-16);
    }

    #[test]
    fn sn_survival_matches_density_integral() {
        let p = SkewNormalParams::new(1.0, 2.0, 3.0).unwrap();
        let pdf = |x: f64| {
            let z = (x - p.xi) / p.omega;
            2.0 / p.omega * norm_pdf(z) * (1.0 - norm_sf(p.alpha * z))
        };
        for x in [-1.0, 1.0, 2.5, 6.0] {
            let want = integrate(pdf, x, x + 40.0, &QuadratureSpec::tight()).unwrap();
            assert!((p.survival(x) - want).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn gamma_moments() {
        let g = ShiftedGamma::fit(5.0, 2.0, 3.0).unwrap();
        assert!((g.loc + g.shape * g.scale - 5.0).abs() < 1e-12);
        assert!((g.shape * g.scale * g.scale - 2.0).abs() < 1e-12);
        assert!((2.0 * g.shape * g.scale.powi(3) - 3.0).abs() < 1e-12);
        assert_eq!(g.survival(g.loc - 1.0), 1.0);
        let r = ShiftedGamma::fit(5.0, 2.0, -3.0).unwrap();
        // Mirror image about the mean.
        assert!((r.survival(6.0) - (1.0 - g.survival(4.0))).abs() < 1e-12);
    }
}
