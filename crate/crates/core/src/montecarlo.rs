//! Seedable simulation of TFisher-type tests: empirical null survival,
//! empirical power, and the Monte-Carlo-calibrated comparators RTP, ARTP
//! and ATPM.
//!
//! Every replicate draws from its own ChaCha stream keyed by
//! `(seed, layer, index)`, so results do not depend on how replicates are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::altdist::{GaussianMixture, SignalModel};
use crate::error::{Error, Result};
use crate::nulldist::NullDistribution;
use crate::numerics::{norm_sf, CompensatedSum};
use crate::omnibus::{OmnibusTest, TauGrid};
use crate::statistic::{statistic_sorted, PValues, TFisherParams};

/// Independent random streams used by one plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layer {
    Main = 0,
    Reference = 1,
    Calibration = 2,
}

/// Replicate counts for the Monte-Carlo calibrated methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CalibrationBudget {
    /// Null replicates used to turn a per-rank statistic into a p-value.
    pub reference: usize,
    /// Null replicates used to calibrate the minimum p-value.
    pub calibration: usize,
}

impl Default for CalibrationBudget {
    fn default() -> Self {
        Self {
            reference: 1_000,
            calibration: 10_000,
        }
    }
}

/// What to simulate: `n` p-values per replicate, null or from the Gaussian
/// mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationPlan {
    n: usize,
    replicates: usize,
    seed: u64,
    #[serde(skip)]
    signal: Option<GaussianMixture>,
    two_sided: bool,
    budget: CalibrationBudget,
}

impl SimulationPlan {
    pub fn null(n: usize, replicates: usize, seed: u64) -> Result<Self> {
        if n == 0 || replicates == 0 {
            return Err(Error::domain("n and the number of replicates must be at least 1"));
        }
        Ok(Self {
            n,
            replicates,
            seed,
            signal: None,
            two_sided: false,
            budget: CalibrationBudget::default(),
        })
    }

    pub fn alternative(model: &SignalModel, replicates: usize, seed: u64) -> Result<Self> {
        let mut plan = Self::null(model.n(), replicates, seed)?;
        plan.signal = Some(model.distortion());
        Ok(plan)
    }

    /// Use `2Φ̄(|X|)` instead of `Φ̄(X)` for the input p-values.
    pub fn two_sided(mut self, yes: bool) -> Self {
        self.two_sided = yes;
        self
    }

    pub fn with_budget(mut self, budget: CalibrationBudget) -> Result<Self> {
        if budget.reference == 0 || budget.calibration == 0 {
            return Err(Error::domain("calibration budgets must be positive"));
        }
        self.budget = budget;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_null(&self) -> bool {
        self.signal.is_none_or(|g| g.epsilon() == 0.0)
    }

    pub fn budget(&self) -> CalibrationBudget {
        self.budget
    }

    fn rng(&self, layer: Layer, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((layer as u64) << 56) ^ index);
        rng
    }

    /// Ascending p-values of replicate `index` in `layer`. Reference and
    /// calibration layers are always null.
    fn draw(&self, layer: Layer, index: u64, out: &mut Vec<f64>) {
        let mut rng = self.rng(layer, index);
        out.clear();
        let signal = if layer == Layer::Main { self.signal } else { None };
        match signal {
            None if !self.two_sided => out.extend((0..self.n).map(|_| 1.0 - rng.random::<f64>())),
            _ => {
                let (eps, mu) = signal.map_or((0.0, 0.0), |g| (g.epsilon(), g.mu()));
                for _ in 0..self.n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let x = if rng.random::<f64>() < eps { z + mu } else { z };
                    let p = if self.two_sided {
                        2.0 * norm_sf(x.abs())
                    } else {
                        norm_sf(x)
                    };
                    out.push(p.clamp(f64::MIN_POSITIVE, 1.0));
                }
            }
        }
        out.sort_by(f64::total_cmp);
    }

    /// Runs `f` on the sorted p-values of every replicate of `layer`, in
    /// parallel, returning results in replicate order.
    fn map_replicates<T, F>(&self, layer: Layer, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64]) -> Result<T> + Sync,
    {
        (0..count as u64)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                self.draw(layer, i, buf);
                f(buf)
            })
            .collect()
    }

    /// The p-values of replicate `index`, e.g. to inspect a single draw.
    pub fn sample(&self, index: u64) -> PValues {
        let mut buf = Vec::new();
        self.draw(Layer::Main, index, &mut buf);
        PValues::new(buf).expect("simulated p-values are valid")
    }
}

/// Test procedures that can be simulated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "tfisher")]
    TFisher {
        params: TFisherParams,
    },
    Omnibus {
        grid: TauGrid,
    },
    Rtp {
        k: usize,
    },
    Artp {
        ranks: Vec<usize>,
    },
    Atpm {
        grid: TauGrid,
    },
}

impl Method {
    /// Ranks `{1, 0.05n, 0.5n, n}`, rounded and deduplicated.
    pub fn default_artp_ranks(n: usize) -> Vec<usize> {
        let mut r: Vec<usize> = [1.0, 0.05 * n as f64, 0.5 * n as f64, n as f64]
            .iter()
            .map(|x| (x.round() as usize).clamp(1, n))
            .collect();
        r.dedup();
        r
    }

    /// Hard-threshold grid `τ₁ ∈ {0.01, 0.05, 0.5, 1}`, `τ₂ = 1`.
    pub fn default_atpm_grid() -> TauGrid {
        TauGrid::new(
            [0.01, 0.05, 0.5, 1.0]
                .iter()
                .map(|&t| TFisherParams::hard(t).expect("valid"))
                .collect(),
        )
        .expect("valid grid")
    }

    pub fn label(&self) -> String {
        match self {
            Self::TFisher { params } => format!("tfisher{params}"),
            Self::Omnibus { grid } => format!("omnibus[{} entries]", grid.len()),
            Self::Rtp { k } => format!("rtp(k={k})"),
            Self::Artp { ranks } => format!("artp{ranks:?}"),
            Self::Atpm { grid } => format!("atpm[{} entries]", grid.len()),
        }
    }
}

/// `−2 Σ ln` of the `k` smallest p-values.
pub fn rtp_statistic(p: &PValues, k: usize) -> Result<f64> {
    if k == 0 || k > p.len() {
        return Err(Error::domain(format!("rank k = {k} must lie in 1..={}", p.len())));
    }
    Ok(rtp_sorted(p.sorted(), k))
}

fn rtp_sorted(sorted: &[f64], k: usize) -> f64 {
    -2.0 * sorted[..k].iter().map(|p| p.ln()).sum::<f64>()
}

/// Monte-Carlo p-value `(1 + #{reference ≥ obs}) / (M + 1)` with an
/// ascending reference sample.
fn upper_mc_pvalue(sorted_ref: &[f64], obs: f64) -> f64 {
    let below = sorted_ref.partition_point(|&x| x < obs);
    (1 + sorted_ref.len() - below) as f64 / (sorted_ref.len() + 1) as f64
}

/// Monte-Carlo p-value `(1 + #{reference ≤ obs}) / (M + 1)` for a statistic
/// where small is extreme.
fn lower_mc_pvalue(sorted_ref: &[f64], obs: f64) -> f64 {
    let at_most = sorted_ref.partition_point(|&x| x <= obs);
    (1 + at_most) as f64 / (sorted_ref.len() + 1) as f64
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Null reference distributions for RTP at several ranks and the
/// calibration sample of their minimum p-value.
#[derive(Debug, Clone)]
pub struct ArtpCalibrator {
    ranks: Vec<usize>,
    reference: Vec<Vec<f64>>,
    calibration: Vec<f64>,
}

impl ArtpCalibrator {
    pub fn new(plan: &SimulationPlan, ranks: &[usize]) -> Result<Self> {
        if ranks.is_empty() || ranks.iter().any(|&k| k == 0 || k > plan.n) {
            return Err(Error::domain(format!(
                "ranks {ranks:?} must be nonempty and within 1..={}",
                plan.n
            )));
        }
        let stats = plan.map_replicates(Layer::Reference, plan.budget.reference, |p| {
            Ok(ranks.iter().map(|&k| rtp_sorted(p, k)).collect::<Vec<_>>())
        })?;
        let reference: Vec<Vec<f64>> = (0..ranks.len())
            .map(|j| sorted(stats.iter().map(|s| s[j]).collect()))
            .collect();
        let mut cal = Self {
            ranks: ranks.to_vec(),
            reference,
            calibration: Vec::new(),
        };
        if ranks.len() > 1 {
            let minp = plan.map_replicates(Layer::Calibration, plan.budget.calibration, |p| Ok(cal.min_p(p)))?;
            cal.calibration = sorted(minp);
        }
        Ok(cal)
    }

    fn min_p(&self, sorted_p: &[f64]) -> f64 {
        self.ranks
            .iter()
            .zip(&self.reference)
            .map(|(&k, r)| upper_mc_pvalue(r, rtp_sorted(sorted_p, k)))
            .fold(f64::INFINITY, f64::min)
    }

    fn pvalue_sorted(&self, sorted_p: &[f64]) -> f64 {
        let m = self.min_p(sorted_p);
        if self.ranks.len() == 1 {
            m
        } else {
            lower_mc_pvalue(&self.calibration, m)
        }
    }

    pub fn pvalue(&self, p: &PValues) -> Result<f64> {
        check_len(p, self.reference_n())?;
        Ok(self.pvalue_sorted(p.sorted()))
    }

    fn reference_n(&self) -> usize {
        *self.ranks.iter().max().expect("nonempty")
    }
}

fn check_len(p: &PValues, at_least: usize) -> Result<()> {
    if p.len() < at_least {
        return Err(Error::domain(format!(
            "need at least {at_least} p-values, got {}",
            p.len()
        )));
    }
    Ok(())
}

/// ARTP p-value: the smallest per-rank RTP p-value, each from a null
/// reference sample, calibrated by a second null sample. A single rank
/// returns its RTP p-value directly.
pub fn artp_pvalue(p: &PValues, ranks: &[usize], plan: &SimulationPlan) -> Result<f64> {
    if p.len() != plan.n {
        return Err(Error::domain(format!(
            "plan is for n = {}, got {} p-values",
            plan.n,
            p.len()
        )));
    }
    ArtpCalibrator::new(plan, ranks)?.pvalue(p)
}

/// Minimum exact p-value over a grid, calibrated by a null sample.
#[derive(Debug, Clone)]
pub struct AtpmCalibrator {
    nulls: Vec<NullDistribution>,
    calibration: Vec<f64>,
}

impl AtpmCalibrator {
    pub fn new(plan: &SimulationPlan, grid: &TauGrid) -> Result<Self> {
        let nulls = grid
            .pairs()
            .iter()
            .map(|&g| NullDistribution::new(plan.n, g))
            .collect::<Result<Vec<_>>>()?;
        let mut cal = Self {
            nulls,
            calibration: Vec::new(),
        };
        if grid.len() > 1 {
            let minp = plan.map_replicates(Layer::Calibration, plan.budget.calibration, |p| cal.min_p(p))?;
            cal.calibration = sorted(minp);
        }
        Ok(cal)
    }

    fn min_p(&self, sorted_p: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        for null in &self.nulls {
            best = best.min(null.survival(statistic_sorted(sorted_p, null.params()))?);
        }
        Ok(best)
    }

    fn pvalue_sorted(&self, sorted_p: &[f64]) -> Result<f64> {
        let m = self.min_p(sorted_p)?;
        Ok(if self.nulls.len() == 1 {
            m
        } else {
            lower_mc_pvalue(&self.calibration, m)
        })
    }

    pub fn pvalue(&self, p: &PValues) -> Result<f64> {
        if p.len() != self.nulls[0].n() {
            return Err(Error::domain("number of p-values does not match the calibration"));
        }
        self.pvalue_sorted(p.sorted())
    }
}

/// Largest `t` with omnibus p-value `≤ alpha`; the omnibus test rejects when
/// `W_o ≤ t`.
pub fn omnibus_rejection_threshold(test: &OmnibusTest, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if test.pvalue_at(mid)?.pvalue <= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalPoint {
    pub w: f64,
    pub survival: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub std_error: f64,
    pub replicates: usize,
}

impl PowerEstimate {
    fn from_hits(hits: usize, replicates: usize) -> Self {
        let p = hits as f64 / replicates as f64;
        Self {
            power: p,
            std_error: (p * (1.0 - p) / replicates as f64).sqrt(),
            replicates,
        }
    }
}

/// Simulated TFisher statistics, in replicate order.
pub fn simulate_statistics(plan: &SimulationPlan, params: TFisherParams) -> Result<Vec<f64>> {
    plan.map_replicates(Layer::Main, plan.replicates, |p| Ok(statistic_sorted(p, params)))
}

/// Empirical `P(W ≥ w)` on a grid, under the null.
pub fn simulate_null_survival(
    plan: &SimulationPlan,
    params: TFisherParams,
    w_grid: &[f64],
) -> Result<Vec<SurvivalPoint>> {
    if !plan.is_null() {
        return Err(Error::domain("null survival needs a null simulation plan"));
    }
    let stats = sorted(simulate_statistics(plan, params)?);
    let r = stats.len() as f64;
    Ok(w_grid
        .iter()
        .map(|&w| {
            let s = (stats.len() - stats.partition_point(|&x| x < w)) as f64 / r;
            SurvivalPoint {
                w,
                survival: s,
                std_error: (s * (1.0 - s) / r).sqrt(),
            }
        })
        .collect())
}

/// Simulated omnibus statistics `W_o`, in replicate order.
pub fn simulate_omnibus_statistics(plan: &SimulationPlan, grid: &TauGrid) -> Result<Vec<f64>> {
    let test = OmnibusTest::new(plan.n, grid.clone())?;
    plan.map_replicates(Layer::Main, plan.replicates, |p| Ok(test.statistic_sorted(p)?.w_o))
}

/// Fraction of replicates in which the method rejects at level `alpha`.
pub fn simulate_power(plan: &SimulationPlan, method: &Method, alpha: f64) -> Result<PowerEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let rejections: Vec<bool> = match method {
        Method::TFisher { params } => {
            let null = NullDistribution::new(plan.n, *params)?;
            match null.critical_value(alpha) {
                Ok(c) => {
                    plan.map_replicates(Layer::Main, plan.replicates, |p| Ok(statistic_sorted(p, *params) >= c))?
                }
                Err(Error::InfeasibleLevel { .. }) => plan.map_replicates(Layer::Main, plan.replicates, |p| {
                    Ok(null.survival(statistic_sorted(p, *params))? <= alpha)
                })?,
                Err(e) => return Err(e),
            }
        }
        Method::Omnibus { grid } => {
            let test = OmnibusTest::new(plan.n, grid.clone())?;
            let t = omnibus_rejection_threshold(&test, alpha)?;
            // `W_o ≤ t` iff some entry has `S_j(W_j) ≤ t`, i.e. `W_j ≥ c_j(t)`.
            let rules = grid
                .pairs()
                .iter()
                .map(|&params| {
                    let null = NullDistribution::new(plan.n, params)?;
                    match null.critical_value(t) {
                        Ok(c) => Ok((params, None, c)),
                        Err(Error::InfeasibleLevel { .. }) => Ok((params, Some(null), 0.0)),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            plan.map_replicates(Layer::Main, plan.replicates, |p| {
                for (params, null, c) in &rules {
                    let w = statistic_sorted(p, *params);
                    let reject = match null {
                        None => w >= *c,
                        Some(null) => null.survival(w)? <= t,
                    };
                    if reject {
                        return Ok(true);
                    }
                }
                Ok(false)
            })?
        }
        Method::Rtp { k } => {
            let cal = ArtpCalibrator::new(plan, &[*k])?;
            plan.map_replicates(Layer::Main, plan.replicates, |p| Ok(cal.pvalue_sorted(p) <= alpha))?
        }
        Method::Artp { ranks } => {
            let cal = ArtpCalibrator::new(plan, ranks)?;
            plan.map_replicates(Layer::Main, plan.replicates, |p| Ok(cal.pvalue_sorted(p) <= alpha))?
        }
        Method::Atpm { grid } => {
            let cal = AtpmCalibrator::new(plan, grid)?;
            plan.map_replicates(Layer::Main, plan.replicates, |p| Ok(cal.pvalue_sorted(p)? <= alpha))?
        }
    };
    let hits = rejections.iter().filter(|&&r| r).count();
    Ok(PowerEstimate::from_hits(hits, plan.replicates))
}

/// Mean of simulated values with a fixed summation order.
pub fn ordered_mean(values: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    for &v in values {
        s.add(v);
    }
    s.value() / values.len() as f64
}

/// One row of a power table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRecord {
    pub method: String,
    pub n: usize,
    pub epsilon: f64,
    pub mu: f64,
    pub alpha: f64,
    pub power: f64,
    pub se: f64,
}

impl PowerRecord {
    pub fn new(method: &Method, plan: &SimulationPlan, alpha: f64, est: &PowerEstimate) -> Self {
        let (epsilon, mu) = plan.signal.map_or((0.0, 0.0), |g| (g.epsilon(), g.mu()));
        Self {
            method: method.label(),
            n: plan.n,
            epsilon,
            mu,
            alpha,
            power: est.power,
            se: est.std_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nulldist::null_survival;

    fn soft(t: f64) -> TFisherParams {
        TFisherParams::soft(t).unwrap()
    }

    #[test]
    fn rtp_examples() {
        let p = PValues::new(vec![0.3, 0.1, 0.2]).unwrap();
        let want = -2.0 * (0.1f64.ln() + 0.2f64.ln());
        assert!((rtp_statistic(&p, 2).unwrap() - want).abs() < 1e-14);
        assert!((rtp_statistic(&p, 2).unwrap() - 7.8240).abs() < 1e-4);
        assert!((rtp_statistic(&p, 1).unwrap() + 2.0 * 0.1f64.ln()).abs() < 1e-15);
        let fisher = crate::statistic(&p, TFisherParams::fisher());
        assert!((rtp_statistic(&p, 3).unwrap() - fisher).abs() < 1e-13);
        assert!(rtp_statistic(&p, 0).is_err());
        assert!(rtp_statistic(&p, 4).is_err());
    }

    #[test]
    fn single_replicate_is_zero_or_one() {
        let plan = SimulationPlan::null(5, 1, 9).unwrap();
        for s in simulate_null_survival(&plan, soft(0.2), &[0.0, 1.0, 5.0, 50.0]).unwrap() {
            assert!(s.survival == 0.0 || s.survival == 1.0);
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let plan = SimulationPlan::null(10, 2000, 42).unwrap();
        let a = simulate_statistics(&plan, soft(0.1)).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_statistics(&plan, soft(0.1)).unwrap());
        assert_eq!(a, b);
        let c = simulate_statistics(&SimulationPlan::null(10, 2000, 43).unwrap(), soft(0.1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fisher_null_survival_against_chi_square() {
        let plan = SimulationPlan::null(5, 100_000, 1).unwrap();
        let fisher = TFisherParams::fisher();
        let grid: Vec<f64> = (1..10)
            .map(|i| {
                // deciles of χ²₁₀
                [4.865, 6.179, 7.267, 8.295, 9.342, 10.473, 11.781, 13.442, 15.987][i - 1]
            })
            .collect();
        for s in simulate_null_survival(&plan, fisher, &grid).unwrap() {
            let exact = null_survival(s.w, 5, fisher).unwrap();
            assert!((s.survival - exact).abs() <= 3.0 * s.std_error, "{s:?} vs {exact}");
        }
    }

    #[test]
    fn null_plan_required_for_null_survival() {
        let model = SignalModel::new(0.1, 2.0, 10).unwrap();
        let plan = SimulationPlan::alternative(&model, 10, 1).unwrap();
        assert!(simulate_null_survival(&plan, soft(0.1), &[1.0]).is_err());
    }

    #[test]
    fn level_of_exact_tests() {
        let model = SignalModel::new(0.0, 2.0, 40).unwrap();
        let plan = SimulationPlan::alternative(&model, 10_000, 5).unwrap();
        for method in [
            Method::TFisher { params: soft(0.05) },
            Method::TFisher {
                params: TFisherParams::new(0.1, 0.5).unwrap(),
            },
        ] {
            for alpha in [0.01, 0.05] {
                let e = simulate_power(&plan, &method, alpha).unwrap();
                let se = (alpha * (1.0 - alpha) / 10_000f64).sqrt();
                assert!((e.power - alpha).abs() <= 3.0 * se, "{method:?} {alpha}: {e:?}");
            }
        }
    }

    #[test]
    fn level_of_calibrated_tests() {
        let plan = SimulationPlan::null(30, 4000, 8)
            .unwrap()
            .with_budget(CalibrationBudget {
                reference: 1000,
                calibration: 4000,
            })
            .unwrap();
        let alpha = 0.05;
        let se = (alpha * (1.0 - alpha) / 4000f64).sqrt();
        for method in [
            Method::Rtp { k: 3 },
            Method::Artp {
                ranks: Method::default_artp_ranks(30),
            },
            Method::Atpm {
                grid: Method::default_atpm_grid(),
            },
        ] {
            let e = simulate_power(&plan, &method, alpha).unwrap();
            assert!((e.power - alpha).abs() <= 3.0 * se + 1.0 / 1001.0, "{method:?}: {e:?}");
        }
    }

    #[test]
    fn overwhelming_signal() {
        let model = SignalModel::new(0.5, 5.0, 50).unwrap();
        let plan = SimulationPlan::alternative(&model, 2000, 2).unwrap();
        let e = simulate_power(&plan, &Method::TFisher { params: soft(0.05) }, 0.05).unwrap();
        assert!(e.power > 0.99);
    }

    #[test]
    fn singleton_artp_is_rtp() {
        let plan = SimulationPlan::null(20, 1, 4).unwrap();
        let p = plan.sample(0);
        let a = artp_pvalue(&p, &[3], &plan).unwrap();
        let cal = ArtpCalibrator::new(&plan, &[3]).unwrap();
        assert_eq!(a, upper_mc_pvalue(&cal.reference[0], rtp_statistic(&p, 3).unwrap()));
    }

    #[test]
    fn singleton_atpm_is_exact_tpm() {
        let plan = SimulationPlan::null(20, 1, 4).unwrap();
        let p = plan.sample(0);
        let grid = TauGrid::new(vec![TFisherParams::hard(0.05).unwrap()]).unwrap();
        let cal = AtpmCalibrator::new(&plan, &grid).unwrap();
        let exact = crate::null_pvalue(&p, TFisherParams::hard(0.05).unwrap()).unwrap();
        assert_eq!(cal.pvalue(&p).unwrap(), exact);
    }

    #[test]
    fn omnibus_rule_matches_statistic() {
        let model = SignalModel::new(0.1, 1.5, 20).unwrap();
        let plan = SimulationPlan::alternative(&model, 500, 6).unwrap();
        let grid = TauGrid::default();
        let test = OmnibusTest::new(20, grid.clone()).unwrap();
        let t = omnibus_rejection_threshold(&test, 0.05).unwrap();
        let hits = simulate_omnibus_statistics(&plan, &grid)
            .unwrap()
            .iter()
            .filter(|&&w| w <= t)
            .count();
        let e = simulate_power(&plan, &Method::Omnibus { grid }, 0.05).unwrap();
        assert!((e.power * 500.0 - hits as f64).abs() <= 1.0, "{e:?} vs {hits}");
        assert!(test.pvalue_at(t).unwrap().pvalue <= 0.05);
    }

    #[test]
    fn default_ranks() {
        assert_eq!(Method::default_artp_ranks(100), vec![1, 5, 50, 100]);
        assert_eq!(Method::default_artp_ranks(10), vec![1, 5, 10]);
        assert_eq!(Method::default_artp_ranks(1), vec![1]);
    }

    #[test]
    fn mc_pvalue_conventions() {
        let r = [1.0, 2.0, 3.0];
        assert_eq!(upper_mc_pvalue(&r, 2.0), 3.0 / 4.0);
        assert_eq!(upper_mc_pvalue(&r, 10.0), 1.0 / 4.0);
        assert_eq!(lower_mc_pvalue(&r, 2.0), 3.0 / 4.0);
        assert_eq!(lower_mc_pvalue(&r, 0.5), 1.0 / 4.0);
    }

    #[test]
    fn two_sided_null_is_uniform() {
        let plan = SimulationPlan::null(1, 20_000, 3).unwrap().two_sided(true);
        let stats = simulate_statistics(&plan, TFisherParams::fisher()).unwrap();
        // −2 ln U is exponential with mean 2.
        let m = ordered_mean(&stats);
        assert!((m - 2.0).abs() < 3.0 * 2.0 / (20_000f64).sqrt());
    }
}
