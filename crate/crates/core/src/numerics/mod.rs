//! Special functions, quadrature and root finding shared by the statistics
//! modules. Everything here is pure and thread-safe.

mod gamma;
mod normal;
mod quadrature;
mod roots;

pub(crate) use gamma::ln_binom_pmf;
pub use gamma::{chisq_survival, ln_upper_gamma_int, log_binom_coeff};
pub use normal::{norm_cdf, norm_isf, norm_pdf, norm_quantile, norm_sf, std_normal_cdf, std_normal_quantile};
pub use quadrature::{integrate, integrate_finite, QuadratureSpec};
pub use roots::{find_root, scan_for_bracket, RootBracket};

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
