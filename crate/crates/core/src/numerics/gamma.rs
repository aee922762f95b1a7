//! Chi-square survival, integer-order incomplete gamma and binomial
//! coefficients.

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// ln(j!) for small j is summed once; larger arguments go through ln Γ.
fn ln_factorial(j: u64) -> f64 {
    if j < 2 {
        0.0
    } else {
        ln_gamma(j as f64 + 1.0)
    }
}

/// Natural log of the regularized upper incomplete gamma Q(k, y) for an
/// integer order `k ≥ 1`, i.e. `ln P(Poisson(y) ≤ k − 1)`.
///
/// Only O(√y) Poisson terms around the mode are summed. When `k − 1 ≤ y` the
/// lower sum is accumulated downward from `j = k − 1`; otherwise the upper
/// tail is accumulated and subtracted from one.
pub fn ln_upper_gamma_int(k: u64, y: f64) -> f64 {
    debug_assert!(k >= 1);
    if y <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as f64;
    let ln_y = y.ln();
    if km1 <= y {
        let top = km1 * ln_y - y - ln_factorial(k - 1);
        let mut ratio = 1.0;
        let mut sum = 1.0;
        let mut j = k - 1;
        while j > 0 {
            ratio *= j as f64 / y;
            sum += ratio;
            if ratio < 1e-17 * sum {
                break;
            }
            j -= 1;
        }
        top + sum.ln()
    } else {
        let first = k as f64 * ln_y - y - ln_factorial(k);
        let mut ratio = 1.0;
        let mut sum = 1.0;
        let mut j = k;
        loop {
            j += 1;
            ratio *= y / j as f64;
            sum += ratio;
            if ratio < 1e-17 * sum {
                break;
            }
        }
        let tail = (first + sum.ln()).exp();
        (-tail).ln_1p()
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
///
/// Returns 1 for `x ≤ 0`. Even degrees of freedom use the finite Poisson sum;
/// odd ones use the regularized incomplete gamma function.
pub fn chisq_survival(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("chi-square survival needs df >= 1"));
    }
    if x.is_nan() {
        return Err(Error::domain("chi-square survival of NaN"));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if df.is_multiple_of(2) {
        Ok(ln_upper_gamma_int(u64::from(df / 2), 0.5 * x).exp())
    } else {
        Ok(gamma_ur(0.5 * f64::from(df), 0.5 * x))
    }
}

/// ln C(n, k). Exact (up to the final logarithm) while the coefficient fits
/// in a `u128`; beyond that ln Γ is used.
pub fn log_binom_coeff(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("binomial coefficient with k={k} > n={n}")));
    }
    let k = k.min(n - k);
    if n <= 120 {
        let mut c: u128 = 1;
        for i in 0..k {
            // c * (n - i) / (i + 1) stays integral at every step.
            c = c * u128::from(n - i) / u128::from(i + 1);
        }
        return Ok((c as f64).ln());
    }
    Ok(ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
}

/// `a * ln(b)` with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

/// ln of the Binomial(n, p) probability mass at k.
pub(crate) fn ln_binom_pmf(k: u64, n: u64, p: f64) -> f64 {
    let lc = log_binom_coeff(n, k).expect("k <= n");
    let rest = (n - k) as f64;
    let ln_q = if rest == 0.0 { 0.0 } else { rest * (-p).ln_1p() };
    lc + xlogy(k as f64, p) + ln_q
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct series e^{-x/2} Σ_{j<k} (x/2)^j / j! in plain arithmetic.
    fn even_series(x: f64, k: u32) -> f64 {
        let y = 0.5 * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..k {
            term *= y / f64::from(j);
            sum += term;
        }
        (-y).exp() * sum
    }

    #[test]
    fn survival_at_zero() {
        assert_eq!(chisq_survival(0.0, 2).unwrap(), 1.0);
        assert_eq!(chisq_survival(-3.0, 7).unwrap(), 1.0);
    }

    #[test]
    fn two_df_closed_form() {
        let s = chisq_survival(5.9915, 2).unwrap();
        assert!((s - 0.05).abs() < 1e-5);
        assert!((s - (-5.9915f64 / 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn six_df_series() {
        let s = chisq_survival(12.5916, 6).unwrap();
        assert!((s - 0.05).abs() < 1e-4);
        assert!((s - even_series(12.5916, 3)).abs() < 1e-14);
    }

    #[test]
    fn zero_df_rejected() {
        assert!(chisq_survival(1.0, 0).is_err());
    }

    #[test]
    fn even_df_matches_series_form() {
        for k in 1..=40u32 {
            for &x in &[0.1, 1.0, 5.0, 20.0, 60.0, 150.0] {
                let a = chisq_survival(x, 2 * k).unwrap();
                let b = even_series(x, k);
                assert!((a - b).abs() < 1e-12, "k={k} x={x} a={a} b={b}");
            }
        }
    }

    #[test]
    fn odd_df_known_values() {
        // chi2(1) at 3.841459 is the two-sided 5% point
        assert!((chisq_survival(3.841_458_820_694_124, 1).unwrap() - 0.05).abs() < 1e-12);
        assert!((chisq_survival(11.070_497_693_516_35, 5).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_x_and_df() {
        let mut prev = 1.0;
        for i in 1..200 {
            let x = i as f64 * 0.5;
            let s = chisq_survival(x, 5).unwrap();
            assert!(s <= prev);
            prev = s;
            assert!(chisq_survival(x, 6).unwrap() >= s);
        }
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(log_binom_coeff(5, 0).unwrap(), 0.0);
        assert!((log_binom_coeff(5, 2).unwrap() - 10f64.ln()).abs() < 1e-15);
        // ln C(200,100) = Σ_{i=1}^{100} ln((100 + i) / i)
        let oracle: f64 = (1..=100).map(|i| ((100 + i) as f64 / i as f64).ln()).sum();
        assert!((oracle - 135.753_236_081_278_5).abs() < 1e-9);
        assert!((log_binom_coeff(200, 100).unwrap() - oracle).abs() < 1e-10);
        assert!(log_binom_coeff(3, 4).is_err());
    }

    #[test]
    fn binomial_exact_small() {
        assert_eq!(log_binom_coeff(30, 15).unwrap(), (155_117_520f64).ln());
        assert_eq!(log_binom_coeff(60, 30).unwrap(), (118_264_581_564_861_424f64).ln());
    }
}
