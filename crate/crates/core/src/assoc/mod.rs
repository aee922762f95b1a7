//! Grouped association testing: a logistic null model, marginal score
//! statistics for the variants of a group, decorrelation, and a TFisher or
//! omnibus p-value per group.

mod io;
mod synthetic;

pub use io::{
    read_covariates, read_gene, read_genes, read_phenotype, run_pipeline, write_qq, write_results, GeneFile, GeneReport,
};
pub use synthetic::SyntheticDesign;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nulldist::null_pvalue;
use crate::numerics::norm_sf;
use crate::omnibus::{OmnibusTest, TauGrid};
use crate::statistic::{statistic, PValues, TFisherParams};

const GRADIENT_TOL: f64 = 1e-8;
const MAX_IRLS_ITER: usize = 100;
/// Coefficients beyond this size mean fitted probabilities indistinguishable
/// from 0 or 1, i.e. (quasi-)separation.
const SEPARATION_BOUND: f64 = 30.0;
/// Relative eigenvalue floor of the score covariance.
const EIGEN_FLOOR: f64 = 1e-8;

/// Phenotype, genotype and covariates of one group of variants.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTestInput {
    phenotype: DVector<f64>,
    genotype: DMatrix<f64>,
    covariates: DMatrix<f64>,
}

impl GroupTestInput {
    /// `covariates` must already contain an intercept column if one is
    /// wanted.
    pub fn new(phenotype: DVector<f64>, genotype: DMatrix<f64>, covariates: DMatrix<f64>) -> Result<Self> {
        check_design(&phenotype, &covariates)?;
        check_genotype(&genotype, phenotype.len())?;
        Ok(Self {
            phenotype,
            genotype,
            covariates,
        })
    }

    pub fn phenotype(&self) -> &DVector<f64> {
        &self.phenotype
    }

    pub fn genotype(&self) -> &DMatrix<f64> {
        &self.genotype
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn null_fit(&self) -> Result<NullFit> {
        fit_null_logistic(&self.phenotype, &self.covariates)
    }
}

fn check_design(y: &DVector<f64>, z: &DMatrix<f64>) -> Result<()> {
    if y.len() != z.nrows() {
        return Err(Error::domain(format!(
            "phenotype has {} subjects but covariates have {} rows",
            y.len(),
            z.nrows()
        )));
    }
    if z.ncols() == 0 || y.len() <= z.ncols() {
        return Err(Error::domain(format!(
            "need more subjects ({}) than covariate columns ({}) and at least one column",
            y.len(),
            z.ncols()
        )));
    }
    if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::domain(format!(
            "phenotype of subject {} is {}, not 0 or 1",
            i + 1,
            y[i]
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("covariates must be finite"));
    }
    Ok(())
}

fn check_genotype(g: &DMatrix<f64>, subjects: usize) -> Result<()> {
    if g.nrows() != subjects {
        return Err(Error::domain(format!(
            "genotype has {} rows but there are {subjects} subjects",
            g.nrows()
        )));
    }
    if g.ncols() == 0 {
        return Err(Error::domain("genotype has no variant columns"));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("genotype values must be finite"));
    }
    for (j, col) in g.column_iter().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::Model(format!("genotype column {} is constant", j + 1)));
        }
    }
    Ok(())
}

/// Maximum-likelihood logistic fit of the phenotype on covariates only.
#[derive(Debug, Clone, PartialEq)]
pub struct NullFit {
    phenotype: DVector<f64>,
    covariates: DMatrix<f64>,
    coefficients: DVector<f64>,
    fitted: DVector<f64>,
    iterations: usize,
}

impl NullFit {
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Fitted case probabilities.
    pub fn fitted(&self) -> &DVector<f64> {
        &self.fitted
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn subjects(&self) -> usize {
        self.phenotype.len()
    }

    /// Score statistics of a genotype matrix against this null model.
    pub fn score(&self, genotype: &DMatrix<f64>, sided: Sidedness) -> Result<ScoreResult> {
        check_genotype(genotype, self.subjects())?;
        score_with_fit(self, genotype, sided)
    }

    /// Group p-value of a genotype matrix against this null model.
    pub fn gene_test(&self, genotype: &DMatrix<f64>, method: &GeneMethod, sided: Sidedness) -> Result<GeneResult> {
        let score = self.score(genotype, sided)?;
        test_scores(&score, method)
    }
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Iteratively reweighted least squares for `logit E(Y | Z) = Z'γ`.
pub fn fit_null_logistic(phenotype: &DVector<f64>, covariates: &DMatrix<f64>) -> Result<NullFit> {
    check_design(phenotype, covariates)?;
    let z = covariates;
    let c = z.ncols();
    let svd = z.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if svd.rank(smax * 1e-10 * (z.nrows().max(c) as f64)) < c {
        return Err(Error::Model("covariate matrix is not of full column rank".into()));
    }
    let cases = phenotype.sum();
    if cases == 0.0 || cases == phenotype.len() as f64 {
        return Err(Error::Model(
            "phenotype has a single class; the logistic fit is separated".into(),
        ));
    }
    let mut gamma = DVector::zeros(c);
    for iter in 0..MAX_IRLS_ITER {
        let fitted = (z * &gamma).map(logistic);
        let grad = z.tr_mul(&(phenotype - &fitted));
        if grad.norm() <= GRADIENT_TOL {
            return Ok(NullFit {
                phenotype: phenotype.clone(),
                covariates: z.clone(),
                coefficients: gamma,
                fitted,
                iterations: iter,
            });
        }
        let w = fitted.map(|m| m * (1.0 - m));
        let mut zw = z.clone();
        for (mut row, &wi) in zw.row_iter_mut().zip(w.iter()) {
            row *= wi.sqrt();
        }
        let info = zw.tr_mul(&zw);
        let step = info
            .cholesky()
            .ok_or_else(|| Error::Model("information matrix is singular; the outcome may be separated".into()))?
            .solve(&grad);
        gamma += step;
        if gamma.amax() > SEPARATION_BOUND {
            return Err(Error::Model(
                "logistic coefficients diverge; the outcome is (quasi-)separated by the covariates".into(),
            ));
        }
    }
    Err(Error::Convergence {
        what: "logistic null fit",
        best_estimate: gamma.norm(),
        error_estimate: z.tr_mul(&(phenotype - (z * &gamma).map(logistic))).norm(),
    })
}

/// One- or two-sided conversion of decorrelated scores to p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    OneSided,
}

impl Sidedness {
    fn pvalue(self, x: f64) -> f64 {
        let p = match self {
            Self::TwoSided => 2.0 * norm_sf(x.abs()),
            Self::OneSided => norm_sf(x),
        };
        p.clamp(f64::MIN_POSITIVE, 1.0)
    }
}

/// Scores, their covariance, and the decorrelated statistics of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResult {
    pub u: DVector<f64>,
    pub sigma_hat: DMatrix<f64>,
    /// Decorrelated statistics; shorter than `u` when the covariance is
    /// rank-deficient.
    pub x_decorrelated: DVector<f64>,
    pub input_pvalues: PValues,
}

impl ScoreResult {
    /// Number of variants in the group.
    pub fn n_variants(&self) -> usize {
        self.u.len()
    }

    /// Number of decorrelated components kept.
    pub fn rank(&self) -> usize {
        self.x_decorrelated.len()
    }
}

/// Score statistics `U`, covariance `Σ̂`, and `X = Σ̂^{-1/2} U`.
pub fn score_statistics(input: &GroupTestInput, sided: Sidedness) -> Result<ScoreResult> {
    score_with_fit(&input.null_fit()?, &input.genotype, sided)
}

fn score_with_fit(fit: &NullFit, g: &DMatrix<f64>, sided: Sidedness) -> Result<ScoreResult> {
    let resid = &fit.phenotype - &fit.fitted;
    let u = g.tr_mul(&resid);
    // Σ̂ = R'R where R is √W G with its projection onto √W Z removed.
    let sw = fit.fitted.map(|m| (m * (1.0 - m)).sqrt());
    let scale_rows = |m: &DMatrix<f64>| {
        let mut out = m.clone();
        for (mut row, &s) in out.row_iter_mut().zip(sw.iter()) {
            row *= s;
        }
        out
    };
    let a = scale_rows(g);
    let b = scale_rows(&fit.covariates);
    let btb = b
        .tr_mul(&b)
        .cholesky()
        .ok_or_else(|| Error::Model("weighted covariate cross-product is singular".into()))?;
    let r = &a - &b * btb.solve(&b.tr_mul(&a));
    let sigma = r.tr_mul(&r);
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let x = decorrelate(&sigma, &u)?;
    let pvals = PValues::new(x.iter().map(|&xi| sided.pvalue(xi)).collect())?;
    Ok(ScoreResult {
        u,
        sigma_hat: sigma,
        x_decorrelated: x,
        input_pvalues: pvals,
    })
}

/// `Σ^{-1/2} u` by symmetric eigendecomposition. Eigenvalues below
/// `1e-8·λ_max` are dropped, and the result is then expressed in the kept
/// eigenbasis, one component per kept eigenvalue, largest first.
fn decorrelate(sigma: &DMatrix<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    let trace = sigma.trace();
    let eig = sigma.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmax > 0.0) {
        return Err(Error::Model(
            "score covariance is zero: the variants carry no information beyond the covariates".into(),
        ));
    }
    if lmin < -1e-8 * trace {
        return Err(Error::Model(format!(
            "score covariance is not positive semidefinite (λ_min = {lmin:e})"
        )));
    }
    let floor = EIGEN_FLOOR * lmax;
    let mut kept: Vec<usize> = (0..u.len()).filter(|&i| eig.eigenvalues[i] > floor).collect();
    if kept.len() == u.len() {
        let vt_u = eig.eigenvectors.tr_mul(u);
        let scaled = DVector::from_iterator(u.len(), (0..u.len()).map(|i| vt_u[i] / eig.eigenvalues[i].sqrt()));
        return Ok(&eig.eigenvectors * scaled);
    }
    kept.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    Ok(DVector::from_iterator(
        kept.len(),
        kept.iter()
            .map(|&i| eig.eigenvectors.column(i).dot(u) / eig.eigenvalues[i].sqrt()),
    ))
}

/// Group test: one TFisher member or an omnibus over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneMethod {
    Single { params: TFisherParams },
    Omnibus { grid: TauGrid },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneResult {
    pub n_snv: usize,
    /// Decorrelated components used; equals `n_snv` unless variants are
    /// collinear.
    pub rank: usize,
    /// TFisher statistic, or the omnibus minimum p-value.
    pub statistic: f64,
    pub pvalue: f64,
}

fn test_scores(score: &ScoreResult, method: &GeneMethod) -> Result<GeneResult> {
    let p = &score.input_pvalues;
    let (stat, pvalue) = match method {
        GeneMethod::Single { params } => (statistic(p, *params), null_pvalue(p, *params)?),
        GeneMethod::Omnibus { grid } => {
            let test = OmnibusTest::new(p.len(), grid.clone())?;
            let s = test.statistic(p)?;
            (s.w_o, test.pvalue_at(s.w_o)?.pvalue)
        }
    };
    Ok(GeneResult {
        n_snv: score.n_variants(),
        rank: score.rank(),
        statistic: stat,
        pvalue,
    })
}

/// Group p-value from the decorrelated input p-values.
pub fn gene_test(input: &GroupTestInput, method: &GeneMethod, sided: Sidedness) -> Result<GeneResult> {
    test_scores(&score_statistics(input, sided)?, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn intercept(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    fn soft(t: f64) -> TFisherParams {
        TFisherParams::soft(t).unwrap()
    }

    #[test]
    fn intercept_only_fits_the_case_fraction() {
        let y = DVector::from_fn(10, |i, _| (i % 2) as f64);
        let fit = fit_null_logistic(&y, &intercept(10)).unwrap();
        assert!(fit.fitted().iter().all(|&p| (p - 0.5).abs() < 1e-12));
        let y = DVector::from_fn(10, |i, _| f64::from(i < 3));
        let fit = fit_null_logistic(&y, &intercept(10)).unwrap();
        assert!(fit.fitted().iter().all(|&p| (p - 0.3).abs() < 1e-10));
    }

    #[test]
    fn matches_two_parameter_newton_oracle() {
        let design = SyntheticDesign::null(200, 1, 1);
        let input = design.generate(11).unwrap();
        let (y, z) = (input.phenotype(), input.covariates());
        let fit = input.null_fit().unwrap();
        // Newton with the explicit 2×2 inverse.
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..200 {
                let x = z[(i, 1)];
                let p = 1.0 / (1.0 + (-(a + b * x)).exp());
                let w = p * (1.0 - p);
                g0 += y[i] - p;
                g1 += (y[i] - p) * x;
                h00 += w;
                h01 += w * x;
                h11 += w * x * x;
            }
            let det = h00 * h11 - h01 * h01;
            a += (h11 * g0 - h01 * g1) / det;
            b += (h00 * g1 - h01 * g0) / det;
        }
        assert!((fit.coefficients()[0] - a).abs() < 1e-6);
        assert!((fit.coefficients()[1] - b).abs() < 1e-6);
    }

    #[test]
    fn single_variant_matches_classical_score_test() {
        let input = SyntheticDesign::null(300, 1, 0).generate(3).unwrap();
        let s = score_statistics(&input, Sidedness::TwoSided).unwrap();
        let y = input.phenotype();
        let g = input.genotype().column(0);
        let ybar = y.mean();
        let gbar = g.mean();
        let u: f64 = g.iter().zip(y.iter()).map(|(gi, yi)| gi * (yi - ybar)).sum();
        let var = ybar * (1.0 - ybar) * g.iter().map(|gi| (gi - gbar).powi(2)).sum::<f64>();
        let chi2 = u * u / var;
        assert!((s.x_decorrelated[0].powi(2) - chi2).abs() < 1e-8 * chi2.max(1.0));
    }

    #[test]
    fn orthogonal_variant_has_zero_score() {
        let y = DVector::from_fn(40, |i, _| (i % 2) as f64);
        let g = DMatrix::from_fn(40, 1, |i, _| f64::from(i % 4 < 2));
        let input = GroupTestInput::new(y, g, intercept(40)).unwrap();
        let s = score_statistics(&input, Sidedness::TwoSided).unwrap();
        assert!(s.u[0].abs() < 1e-12);
        assert_eq!(s.input_pvalues.as_slice()[0], 1.0);
    }

    #[test]
    fn permutation_null_is_uniform_and_decorrelated() {
        let base = SyntheticDesign::null(200, 4, 0).generate(5).unwrap();
        let z = intercept(200);
        let mut y: Vec<f64> = base.phenotype().iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reps = 1000;
        let mut xs = Vec::with_capacity(reps);
        let mut first_p = Vec::with_capacity(reps);
        for _ in 0..reps {
            y.shuffle(&mut rng);
            let input = GroupTestInput::new(DVector::from_vec(y.clone()), base.genotype().clone(), z.clone()).unwrap();
            let s = score_statistics(&input, Sidedness::TwoSided).unwrap();
            first_p.push(s.input_pvalues.as_slice()[0]);
            xs.push(s.x_decorrelated);
        }
        first_p.sort_by(f64::total_cmp);
        let ks = first_p
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                (p - i as f64 / reps as f64)
                    .abs()
                    .max(((i + 1) as f64 / reps as f64 - p).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / (reps as f64).sqrt(), "KS {ks}");
        for a in 0..4 {
            for b in 0..4 {
                let c = xs.iter().map(|x| x[a] * x[b]).sum::<f64>() / reps as f64;
                let target = f64::from(a == b);
                let se = if a == b {
                    (2.0 / reps as f64).sqrt()
                } else {
                    (1.0 / reps as f64).sqrt()
                };
                assert!((c - target).abs() <= 3.0 * se, "cov[{a},{b}] = {c}");
            }
        }
    }

    #[test]
    fn collinear_variants_reduce_rank() {
        let base = SyntheticDesign::null(150, 2, 1).generate(8).unwrap();
        let g = base.genotype();
        let dup = DMatrix::from_fn(150, 3, |i, j| if j < 2 { g[(i, j)] } else { g[(i, 0)] + g[(i, 1)] });
        let input = GroupTestInput::new(base.phenotype().clone(), dup, base.covariates().clone()).unwrap();
        let s = score_statistics(&input, Sidedness::TwoSided).unwrap();
        assert_eq!(s.n_variants(), 3);
        assert_eq!(s.rank(), 2);
        let r = gene_test(&input, &GeneMethod::Single { params: soft(0.05) }, Sidedness::TwoSided).unwrap();
        assert_eq!(r.rank, 2);
    }

    #[test]
    fn sigma_hat_is_psd() {
        let input = SyntheticDesign::null(200, 6, 2).generate(1).unwrap();
        let s = score_statistics(&input, Sidedness::TwoSided).unwrap();
        let lmin = s.sigma_hat.clone().symmetric_eigen().eigenvalues.min();
        assert!(lmin >= -1e-8 * s.sigma_hat.trace());
        assert_eq!(s.sigma_hat, s.sigma_hat.transpose());
    }

    #[test]
    fn singleton_grid_equals_fixed_parameters() {
        let input = SyntheticDesign::null(200, 5, 1).generate(2).unwrap();
        let single = gene_test(&input, &GeneMethod::Single { params: soft(0.05) }, Sidedness::TwoSided).unwrap();
        let grid = TauGrid::new(vec![soft(0.05)]).unwrap();
        let omni = gene_test(&input, &GeneMethod::Omnibus { grid }, Sidedness::TwoSided).unwrap();
        assert!((single.pvalue - omni.pvalue).abs() < 1e-12);
    }

    #[test]
    fn truncation_favours_a_single_strong_variant() {
        let design = SyntheticDesign::null(600, 8, 2).with_causal(3, 1.2);
        let mut wins = 0;
        for seed in 0..100 {
            let input = design.generate(seed).unwrap();
            let s = score_statistics(&input, Sidedness::TwoSided).unwrap();
            let soft_p = test_scores(&s, &GeneMethod::Single { params: soft(0.05) })
                .unwrap()
                .pvalue;
            let fisher_p = test_scores(
                &s,
                &GeneMethod::Single {
                    params: TFisherParams::fisher(),
                },
            )
            .unwrap()
            .pvalue;
            wins += usize::from(soft_p < fisher_p);
        }
        assert!(wins > 50, "soft won {wins} of 100");
    }

    #[test]
    fn invalid_inputs() {
        let y = DVector::from_fn(10, |i, _| (i % 2) as f64);
        let g = DMatrix::from_element(10, 1, 1.0);
        assert!(matches!(
            GroupTestInput::new(y.clone(), g, intercept(10)),
            Err(Error::Model(_))
        ));
        let bad_y = DVector::from_fn(10, |i, _| i as f64);
        assert!(fit_null_logistic(&bad_y, &intercept(10)).is_err());
        let collinear = DMatrix::from_fn(10, 2, |_, _| 1.0);
        assert!(matches!(fit_null_logistic(&y, &collinear), Err(Error::Model(_))));
        let separated_z = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { (i % 2) as f64 });
        assert!(matches!(fit_null_logistic(&y, &separated_z), Err(Error::Model(_))));
        let ones = DVector::from_element(10, 1.0);
        assert!(matches!(fit_null_logistic(&ones, &intercept(10)), Err(Error::Model(_))));
    }

    #[test]
    fn one_sided_pvalues() {
        assert!((Sidedness::OneSided.pvalue(0.0) - 0.5).abs() < 1e-15);
        assert!((Sidedness::TwoSided.pvalue(1.959963984540054) - 0.05).abs() < 1e-12);
        assert!(Sidedness::OneSided.pvalue(-40.0) == 1.0);
        assert!(Sidedness::TwoSided.pvalue(60.0) >= f64::MIN_POSITIVE);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let d = SyntheticDesign::null(50, 3, 1);
        assert_eq!(d.generate(4).unwrap(), d.generate(4).unwrap());
        assert_ne!(d.generate(4).unwrap(), d.generate(5).unwrap());
    }
}
