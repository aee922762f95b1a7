//! The TFisher family `W = Σ −2·ln(Pᵢ/τ₂)·1{Pᵢ ≤ τ₁}`.
//!
//! Soft thresholding is the member with `τ₁ = τ₂`, hard thresholding (the
//! truncated product method) the member with `τ₂ = 1`, and Fisher's
//! combination the member with `τ₁ = τ₂ = 1`. All of them go through the same
//! formula.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation `tau1 ∈ (0, 1]` and weighting `tau2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct TFisherParams {
    tau1: f64,
    tau2: f64,
}

#[derive(Deserialize)]
struct RawParams {
    tau1: f64,
    tau2: f64,
}

impl TryFrom<RawParams> for TFisherParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        Self::new(r.tau1, r.tau2)
    }
}

impl TFisherParams {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau1 <= 1.0) {
            return Err(Error::domain(format!("tau1 must lie in (0, 1], got {tau1}")));
        }
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::domain(format!("tau2 must be positive and finite, got {tau2}")));
        }
        Ok(Self { tau1, tau2 })
    }

    /// Soft thresholding, `τ₁ = τ₂ = tau`.
    pub fn soft(tau: f64) -> Result<Self> {
        Self::new(tau, tau)
    }

    /// Hard thresholding (truncated product), `τ₁ = tau`, `τ₂ = 1`.
    pub fn hard(tau: f64) -> Result<Self> {
        Self::new(tau, 1.0)
    }

    /// Fisher's combination.
    pub fn fisher() -> Self {
        Self { tau1: 1.0, tau2: 1.0 }
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn is_soft(&self) -> bool {
        self.tau1 == self.tau2
    }
}

impl fmt::Display for TFisherParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(tau1={}, tau2={})", self.tau1, self.tau2)
    }
}

/// A non-empty list of p-values in (0, 1].
///
/// The values are kept in input order; an ascending copy is kept alongside so
/// that statistics are summed in a fixed order, which makes them exactly
/// invariant under permutation of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct PValues {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl PValues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("at least one p-value is required"));
        }
        if let Some((i, &p)) = values.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::domain(format!("p-value #{} = {p} is outside (0, 1]", i + 1)));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Values in ascending order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

impl TryFrom<Vec<f64>> for PValues {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

/// TFisher statistic. Zero when no p-value passes the truncation.
pub fn statistic(p: &PValues, params: TFisherParams) -> f64 {
    statistic_sorted(p.sorted(), params)
}

/// Soft-thresholding statistic `Σ (−2 ln Pᵢ + 2 ln τ)₊`.
pub fn soft_statistic(p: &PValues, tau: f64) -> Result<f64> {
    Ok(statistic(p, TFisherParams::soft(tau)?))
}

/// Same as [`statistic`] on an ascending slice of valid p-values.
pub(crate) fn statistic_sorted(sorted: &[f64], params: TFisherParams) -> f64 {
    let ln_tau2 = params.tau2.ln();
    let mut w = 0.0;
    for &p in sorted {
        if p > params.tau1 {
            break;
        }
        w += -2.0 * (p.ln() - ln_tau2);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> PValues {
        PValues::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_term_fisher() {
        let w = statistic(&pv(&[0.5]), TFisherParams::fisher());
        assert!((w - 1.386_294_361_119_890_6).abs() < 1e-15);
    }

    #[test]
    fn nothing_passes() {
        let w = statistic(&pv(&[0.2, 0.9]), TFisherParams::new(0.1, 0.1).unwrap());
        assert_eq!(w, 0.0);
    }

    #[test]
    fn hand_evaluated_soft() {
        let w = statistic(&pv(&[0.01, 0.03, 0.8]), TFisherParams::soft(0.05).unwrap());
        let want = -2.0 * (0.01f64 / 0.05).ln() - 2.0 * (0.03f64 / 0.05).ln();
        assert!((w - want).abs() < 1e-13);
        assert!((w - 4.240_527_072_400_182).abs() < 1e-12);
    }

    #[test]
    fn soft_examples() {
        assert_eq!(soft_statistic(&pv(&[0.05]), 0.05).unwrap(), 0.0);
        assert!((soft_statistic(&pv(&[0.01]), 0.05).unwrap() - 2.0 * 5f64.ln()).abs() < 1e-14);
        assert_eq!(soft_statistic(&pv(&[0.5, 0.6]), 0.05).unwrap(), 0.0);
    }

    #[test]
    fn boundary_tie_is_included() {
        let w = statistic(&pv(&[0.1]), TFisherParams::hard(0.1).unwrap());
        assert!((w + 2.0 * 0.1f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unit_pvalues_contribute_only_without_truncation() {
        let p = pv(&[1.0, 1.0]);
        assert_eq!(statistic(&p, TFisherParams::new(0.5, 2.0).unwrap()), 0.0);
        let w = statistic(&p, TFisherParams::new(1.0, 2.0).unwrap());
        assert!((w - 4.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(PValues::new(vec![]).is_err());
        assert!(PValues::new(vec![0.0]).is_err());
        assert!(PValues::new(vec![0.5, 1.2]).is_err());
        assert!(PValues::new(vec![f64::NAN]).is_err());
        assert!(TFisherParams::new(0.0, 1.0).is_err());
        assert!(TFisherParams::new(1.5, 1.0).is_err());
        assert!(TFisherParams::new(0.5, 0.0).is_err());
        assert!(TFisherParams::new(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn params_deserialize_with_validation() {
        let ok: TFisherParams = serde_json::from_str(r#"{"tau1":0.05,"tau2":0.25}"#).unwrap();
        assert_eq!((ok.tau1(), ok.tau2()), (0.05, 0.25));
        assert!(serde_json::from_str::<TFisherParams>(r#"{"tau1":2.0,"tau2":0.25}"#).is_err());
    }

    fn pvalue_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-12f64..=1.0, 1..40)
    }

    proptest! {
        #[test]
        fn fisher_special_case(v in pvalue_vec()) {
            let w = statistic(&pv(&v), TFisherParams::fisher());
            let direct: f64 = v.iter().map(|p| -2.0 * p.ln()).sum();
            prop_assert!((w - direct).abs() <= 1e-12 * direct.max(1.0));
        }

        #[test]
        fn soft_is_bitwise_the_general_formula(v in pvalue_vec(), tau in 1e-4f64..=1.0) {
            let p = pv(&v);
            prop_assert_eq!(
                soft_statistic(&p, tau).unwrap().to_bits(),
                statistic(&p, TFisherParams::new(tau, tau).unwrap()).to_bits()
            );
        }

        #[test]
        fn permutation_invariant(v in pvalue_vec(), t1 in 1e-3f64..=1.0, t2 in 1e-3f64..5.0, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let params = TFisherParams::new(t1, t2).unwrap();
            let mut shuffled = v.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(
                statistic(&pv(&v), params).to_bits(),
                statistic(&pv(&shuffled), params).to_bits()
            );
        }

        #[test]
        fn non_increasing_in_each_pvalue(v in pvalue_vec(), idx in any::<prop::sample::Index>(),
                                         shrink in 0.01f64..1.0, t1 in 1e-3f64..=1.0, t2 in 1e-3f64..=1.0) {
            let params = TFisherParams::new(t1, t2).unwrap();
            let i = idx.index(v.len());
            prop_assume!(v[i] <= t1);
            let mut smaller = v.clone();
            smaller[i] *= shrink;
            prop_assert!(statistic(&pv(&smaller), params) >= statistic(&pv(&v), params) - 1e-12);
        }
    }
}
