//! The adaptive omnibus test `W_o = min_j G_j(W_j)` over a grid of
//! `(τ₁, τ₂)` pairs, with its p-value from a multivariate normal
//! approximation of the joint null of `(W_1, …, W_m)`.

mod mvn;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

pub use mvn::{MvnEstimate, MvnOptions};

use crate::error::{Error, Result};
use crate::nulldist::NullDistribution;
use crate::statistic::{statistic_sorted, PValues, TFisherParams};

/// Ordered, duplicate-free list of parameter pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TauGrid(Vec<TFisherParams>);

impl TauGrid {
    pub fn new(pairs: Vec<TFisherParams>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::domain("the grid needs at least one (tau1, tau2) pair"));
        }
        for (i, a) in pairs.iter().enumerate() {
            if pairs[..i].contains(a) {
                return Err(Error::domain(format!("duplicate grid entry {a}")));
            }
        }
        Ok(Self(pairs))
    }

    /// Soft-thresholding grid `τ₁ = τ₂ = τ` for each listed `τ`.
    pub fn soft(taus: &[f64]) -> Result<Self> {
        Self::new(taus.iter().map(|&t| TFisherParams::soft(t)).collect::<Result<_>>()?)
    }

    pub fn pairs(&self) -> &[TFisherParams] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for TauGrid {
    /// Soft thresholding at `τ ∈ {0.01, 0.05, 0.5, 1}`.
    fn default() -> Self {
        Self::soft(&[0.01, 0.05, 0.5, 1.0]).expect("valid default grid")
    }
}

/// Mean vector and covariance matrix of `(W_1, …, W_m)` under the null.
#[derive(Debug, Clone, PartialEq)]
pub struct OmnibusNullModel {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl OmnibusNullModel {
    /// Validates dimensions, symmetry, a positive diagonal and positive
    /// semi-definiteness up to `1e-10·trace`.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let m = mean.len();
        if m == 0 || covariance.shape() != (m, m) {
            return Err(Error::domain(format!(
                "mean of length {m} with a {}x{} covariance",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if (0..m).any(|i| !(covariance[(i, i)] > 0.0)) {
            return Err(Error::Model("covariance diagonal must be positive".into()));
        }
        let sym = (&covariance + covariance.transpose()) * 0.5;
        let trace = sym.trace();
        let min_eig = SymmetricEigen::new(sym.clone()).eigenvalues.min();
        if min_eig < -1e-10 * trace {
            return Err(Error::Model(format!(
                "covariance is not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { mean, covariance: sym })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn repaired_covariance(&self) -> DMatrix<f64> {
        let m = self.dim();
        let bump = 1e-10 * self.covariance.trace() / m as f64;
        let mut c = self.covariance.clone();
        for i in 0..m {
            c[(i, i)] += bump;
        }
        c
    }
}

/// Null mean and covariance of the grid statistics for `n` p-values.
pub fn omnibus_null_model(n: usize, grid: &TauGrid) -> Result<OmnibusNullModel> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    let g = grid.pairs();
    let m = g.len();
    // 1 + ln(τ₂/τ₁) for each entry.
    let a = |p: &TFisherParams, t1: f64| 1.0 + (p.tau2() / t1).ln();
    let mean = DVector::from_iterator(m, g.iter().map(|p| 2.0 * nf * p.tau1() * a(p, p.tau1())));
    let cov = DMatrix::from_fn(m, m, |j, k| {
        let (pj, pk) = (&g[j], &g[k]);
        let t = pj.tau1().min(pk.tau1());
        4.0 * nf * t
            + 4.0 * nf * (t * a(pj, t) * a(pk, t) - pj.tau1() * pk.tau1() * a(pj, pj.tau1()) * a(pk, pk.tau1()))
    });
    OmnibusNullModel::new(mean, cov)
}

/// `P(W' < upper)` for `W' ~ MVN(model)`, after a `1e-10·trace/m` diagonal
/// repair, with default integrator settings.
pub fn mvn_rectangle(model: &OmnibusNullModel, upper: &[f64]) -> Result<MvnEstimate> {
    mvn_rectangle_with(model, upper, &MvnOptions::default())
}

pub fn mvn_rectangle_with(model: &OmnibusNullModel, upper: &[f64], opts: &MvnOptions) -> Result<MvnEstimate> {
    mvn::mvn_cdf(model.mean(), &model.repaired_covariance(), upper, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmnibusStatistic {
    /// Smallest per-entry p-value.
    pub w_o: f64,
    /// First grid index attaining it.
    pub argmin: usize,
    /// Per-entry statistics and exact p-values, in grid order.
    pub statistics: Vec<f64>,
    pub pvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmnibusPValue {
    pub pvalue: f64,
    /// Standard error of the multivariate normal integration; zero when the
    /// p-value is exact.
    pub std_error: f64,
}

/// Omnibus test for a fixed number of p-values, with the per-entry null
/// distributions and the joint null model prepared once.
#[derive(Debug, Clone)]
pub struct OmnibusTest {
    grid: TauGrid,
    nulls: Vec<NullDistribution>,
    model: OmnibusNullModel,
    options: MvnOptions,
}

impl OmnibusTest {
    pub fn new(n: usize, grid: TauGrid) -> Result<Self> {
        let model = omnibus_null_model(n, &grid)?;
        let nulls = grid
            .pairs()
            .iter()
            .map(|&p| NullDistribution::new(n, p))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid,
            nulls,
            model,
            options: MvnOptions::default(),
        })
    }

    pub fn with_options(mut self, options: MvnOptions) -> Self {
        self.options = options;
        self
    }

    pub fn n(&self) -> usize {
        self.nulls[0].n()
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn null_model(&self) -> &OmnibusNullModel {
        &self.model
    }

    pub fn statistic(&self, p: &PValues) -> Result<OmnibusStatistic> {
        if p.len() != self.n() {
            return Err(Error::domain(format!(
                "expected {} p-values, got {}",
                self.n(),
                p.len()
            )));
        }
        self.statistic_sorted(p.sorted())
    }

    /// Same as [`statistic`](Self::statistic) for ascending valid p-values.
    pub(crate) fn statistic_sorted(&self, sorted: &[f64]) -> Result<OmnibusStatistic> {
        let mut statistics = Vec::with_capacity(self.nulls.len());
        let mut pvalues = Vec::with_capacity(self.nulls.len());
        let (mut w_o, mut argmin) = (f64::INFINITY, 0);
        for (j, null) in self.nulls.iter().enumerate() {
            let w = statistic_sorted(sorted, null.params());
            let pv = null.survival(w)?;
            if pv < w_o {
                w_o = pv;
                argmin = j;
            }
            statistics.push(w);
            pvalues.push(pv);
        }
        Ok(OmnibusStatistic {
            w_o,
            argmin,
            statistics,
            pvalues,
        })
    }

    /// Per-entry thresholds `w_j = G_j⁻¹(w_o)`; entries that cannot reach
    /// level `w_o` get the threshold 0.
    pub fn bounds(&self, w_o: f64) -> Result<Vec<f64>> {
        self.nulls
            .par_iter()
            .map(|null| match null.critical_value(w_o) {
                Ok(c) => Ok(c),
                Err(Error::InfeasibleLevel { .. }) => Ok(0.0),
                Err(e) => Err(e),
            })
            .collect()
    }

    /// `P(W_o ≤ w_o)` under the null. A single-entry grid is exact; larger
    /// grids use `1 − P(W'_j < w_j ∀j)`, raised to `w_o` where the normal
    /// tail undershoots it, since no entry alone can be below its level.
    pub fn pvalue_at(&self, w_o: f64) -> Result<OmnibusPValue> {
        if w_o.is_nan() {
            return Err(Error::domain("omnibus statistic is NaN"));
        }
        let exact = |pvalue: f64| OmnibusPValue { pvalue, std_error: 0.0 };
        if w_o >= 1.0 {
            return Ok(exact(1.0));
        }
        if w_o <= 0.0 {
            return Ok(exact(0.0));
        }
        if self.nulls.len() == 1 {
            return Ok(exact(w_o));
        }
        let upper = self.bounds(w_o)?;
        let inside = mvn_rectangle_with(&self.model, &upper, &self.options)?;
        Ok(OmnibusPValue {
            pvalue: (1.0 - inside.probability).clamp(w_o, 1.0),
            std_error: inside.std_error,
        })
    }

    pub fn pvalue(&self, p: &PValues) -> Result<OmnibusPValue> {
        self.pvalue_at(self.statistic(p)?.w_o)
    }
}

pub fn omnibus_statistic(p: &PValues, grid: &TauGrid) -> Result<OmnibusStatistic> {
    OmnibusTest::new(p.len(), grid.clone())?.statistic(p)
}

pub fn omnibus_pvalue(p: &PValues, grid: &TauGrid) -> Result<f64> {
    Ok(OmnibusTest::new(p.len(), grid.clone())?.pvalue(p)?.pvalue)
}
