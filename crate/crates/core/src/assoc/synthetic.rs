//! Synthetic case-control cohorts for calibration studies.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{logistic, GroupTestInput};
use crate::error::{Error, Result};
use crate::numerics::norm_sf;

/// Attempts at drawing a genotype column that is not constant.
const MAX_REDRAWS: usize = 1000;

/// Cohort layout: subjects, variants with correlated dosages, standard
/// normal covariates plus an intercept, and an optional causal variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticDesign {
    pub subjects: usize,
    pub variants: usize,
    /// Covariates besides the intercept.
    pub covariates: usize,
    /// Minor allele frequencies are drawn uniformly from this range.
    pub maf: (f64, f64),
    /// Lag-one correlation of the latent haplotype process across variants.
    pub ld: f64,
    /// Logistic intercept of the phenotype model.
    pub intercept: f64,
    /// Log-odds per unit of each covariate.
    pub covariate_effect: f64,
    /// Causal variant index and its log-odds per allele.
    pub causal: Option<(usize, f64)>,
}

impl SyntheticDesign {
    pub fn null(subjects: usize, variants: usize, covariates: usize) -> Self {
        Self {
            subjects,
            variants,
            covariates,
            maf: (0.05, 0.3),
            ld: 0.5,
            intercept: -0.5,
            covariate_effect: 0.3,
            causal: None,
        }
    }

    pub fn with_causal(mut self, index: usize, log_odds: f64) -> Self {
        self.causal = Some((index, log_odds));
        self
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.maf;
        if self.subjects <= self.covariates + 1 || self.variants == 0 {
            return Err(Error::domain("need variants and more subjects than covariate columns"));
        }
        if !(lo > 0.0 && lo <= hi && hi <= 0.5) || !(self.ld.abs() < 1.0) {
            return Err(Error::domain("maf range must lie in (0, 0.5] and |ld| < 1"));
        }
        if self.causal.is_some_and(|(i, _)| i >= self.variants) {
            return Err(Error::domain("causal variant index out of range"));
        }
        Ok(())
    }

    /// Draws a cohort deterministically from `seed`.
    pub fn generate(&self, seed: u64) -> Result<GroupTestInput> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_sub, m) = (self.subjects, self.variants);
        let z = DMatrix::from_fn(n_sub, self.covariates + 1, |_, j| {
            if j == 0 {
                1.0
            } else {
                StandardNormal.sample(&mut rng)
            }
        });
        let maf: Vec<f64> = (0..m).map(|_| rng.random_range(self.maf.0..=self.maf.1)).collect();
        let mut g = DMatrix::zeros(n_sub, m);
        for _ in 0..MAX_REDRAWS {
            self.draw_genotypes(&mut rng, &maf, &mut g);
            if g.column_iter().all(|c| c.iter().any(|&v| v != c[0])) {
                let y = self.draw_phenotype(&mut rng, &z, &g);
                if y.sum() > 0.0 && y.sum() < n_sub as f64 {
                    return GroupTestInput::new(y, g, z);
                }
            }
        }
        Err(Error::Model(
            "could not draw a cohort with polymorphic variants and both classes".into(),
        ))
    }

    fn draw_genotypes(&self, rng: &mut ChaCha8Rng, maf: &[f64], g: &mut DMatrix<f64>) {
        let rho = self.ld;
        let innov = (1.0 - rho * rho).sqrt();
        g.fill(0.0);
        for i in 0..g.nrows() {
            for _hap in 0..2 {
                let mut h: f64 = StandardNormal.sample(rng);
                for (j, &q) in maf.iter().enumerate() {
                    if j > 0 {
                        let e: f64 = StandardNormal.sample(rng);
                        h = rho * h + innov * e;
                    }
                    if norm_sf(h) < q {
                        g[(i, j)] += 1.0;
                    }
                }
            }
        }
    }

    fn draw_phenotype(&self, rng: &mut ChaCha8Rng, z: &DMatrix<f64>, g: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(z.nrows(), |i, _| {
            let mut eta = self.intercept;
            for j in 1..z.ncols() {
                eta += self.covariate_effect * z[(i, j)];
            }
            if let Some((k, b)) = self.causal {
                eta += b * g[(i, k)];
            }
            if rng.random::<f64>() < logistic(eta) {
                1.0
            } else {
                0.0
            }
        })
    }
}
