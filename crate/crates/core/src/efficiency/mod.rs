//! Asymptotic efficiency measures of the TFisher family: Bahadur efficiency
//! (BE), asymptotic power rate (APR) and asymptotic power efficiency (APE),
//! with grid optimization over `(τ₁, τ₂)`.
//!
//! All three are built from the half-scale per-term contribution
//! `Yᵢ = −ln(Pᵢ/τ₂)·1{Pᵢ ≤ τ₁}`:
//!
//! * `Δ = E₁ − E₀ = −∫₀^τ₁ ln u·δ′(u) du + ln τ₂·δ(τ₁)`
//! * `BE = Δ²/V₀`, `APR = Δ/√V₁`, `APE = z_α√(V₀/V₁) − √n·Δ/√V₁`
//!
//! Only the integrals over `u` depend on the alternative, and they depend on
//! `τ₁` alone, so a [`TauProfile`] is computed once per `τ₁` and every `τ₂`
//! is then closed form.

mod theory;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

pub use theory::{
    be_stationary_tau, boundary_a, boundary_b, g_tilde, local_max_condition, mu_lower_bound, mu_lower_bound_a,
};

use crate::altdist::Distortion;
use crate::error::{Error, Result};
use crate::nulldist::null_moments;
use crate::numerics::{integrate, integrate_finite, norm_isf, QuadratureSpec};
use crate::statistic::TFisherParams;

/// Sample size and level entering the APE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyConfig {
    n: usize,
    alpha: f64,
    z_alpha: f64,
    c_n: f64,
}

impl EfficiencyConfig {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 0.5), got {alpha}")));
        }
        let z_alpha = norm_isf(alpha);
        Ok(Self {
            n,
            alpha,
            z_alpha,
            c_n: (n as f64).sqrt() / z_alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Upper `alpha` quantile of the standard normal.
    pub fn z_alpha(&self) -> f64 {
        self.z_alpha
    }

    /// `√n / z_α`.
    pub fn c_n(&self) -> f64 {
        self.c_n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EfficiencyKind {
    Be,
    Apr,
    Ape,
}

impl EfficiencyKind {
    /// APE is minimized, the others maximized.
    pub fn minimizes(self) -> bool {
        matches!(self, Self::Ape)
    }

    fn better(self, a: f64, b: f64) -> bool {
        if self.minimizes() {
            a < b
        } else {
            a > b
        }
    }
}

impl std::str::FromStr for EfficiencyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "be" => Ok(Self::Be),
            "apr" => Ok(Self::Apr),
            "ape" => Ok(Self::Ape),
            other => Err(Error::domain(format!("unknown efficiency kind '{other}'"))),
        }
    }
}

/// Alternative-dependent integrals at one truncation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauProfile {
    tau1: f64,
    /// `∫₀^τ₁ ln u·δ′(u) du`.
    a_delta: f64,
    /// `∫₀^τ₁ ln²u·δ′(u) du`.
    b_delta: f64,
    /// `δ(τ₁)`.
    delta: f64,
}

impl TauProfile {
    pub fn new(d: &dyn Distortion, tau1: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau1 <= 1.0) {
            return Err(Error::domain(format!("tau1 must lie in (0, 1], got {tau1}")));
        }
        let spec = QuadratureSpec::tight();
        Ok(Self {
            tau1,
            a_delta: integrate(|u| u.ln() * d.delta_prime(u), 0.0, tau1, &spec)?,
            b_delta: integrate(|u| u.ln().powi(2) * d.delta_prime(u), 0.0, tau1, &spec)?,
            delta: d.delta(tau1),
        })
    }

    /// Profiles at every point of an ascending grid, by cumulative
    /// integration over consecutive cells.
    pub fn along(d: &dyn Distortion, taus: &[f64]) -> Result<Vec<Self>> {
        if taus.is_empty() {
            return Ok(Vec::new());
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("tau1 grid must be strictly increasing"));
        }
        let spec = QuadratureSpec::tight();
        let first = Self::new(d, taus[0])?;
        let pieces: Vec<(f64, f64)> = taus
            .par_windows(2)
            .map(|w| {
                let a = integrate_finite(|u| u.ln() * d.delta_prime(u), w[0], w[1], &spec)?;
                let b = integrate_finite(|u| u.ln().powi(2) * d.delta_prime(u), w[0], w[1], &spec)?;
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(taus.len());
        out.push(first);
        let (mut a, mut b) = (first.a_delta, first.b_delta);
        for (&t, (da, db)) in taus[1..].iter().zip(pieces) {
            a += da;
            b += db;
            out.push(Self {
                tau1: t,
                a_delta: a,
                b_delta: b,
                delta: d.delta(t),
            });
        }
        Ok(out)
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    /// `Δ = E₁ − E₀` at weighting `tau2`.
    pub fn mean_shift(&self, tau2: f64) -> f64 {
        -self.a_delta + tau2.ln() * self.delta
    }

    /// Alternative variance `V₁` of one half-scale term.
    pub fn alt_variance(&self, tau2: f64) -> f64 {
        let t = self.tau1;
        let lt = t.ln();
        let a = self.a_delta + t * lt - t;
        let b = self.b_delta + t * (lt * lt - 2.0 * lt + 2.0);
        let d = t + self.delta;
        let l2 = tau2.ln();
        b - a * a + 2.0 * (d - 1.0) * l2 * a + l2 * l2 * d * (1.0 - d)
    }

    pub fn be(&self, tau2: f64) -> f64 {
        let v0 = null_variance(self.tau1, tau2);
        self.mean_shift(tau2).powi(2) / v0
    }

    pub fn apr(&self, tau2: f64) -> f64 {
        self.mean_shift(tau2) / self.alt_variance(tau2).sqrt()
    }

    pub fn ape(&self, tau2: f64, config: &EfficiencyConfig) -> f64 {
        let v0 = null_variance(self.tau1, tau2);
        let v1 = self.alt_variance(tau2);
        config.z_alpha * (v0 / v1).sqrt() - (config.n as f64).sqrt() * self.mean_shift(tau2) / v1.sqrt()
    }

    pub fn value(&self, kind: EfficiencyKind, tau2: f64, config: &EfficiencyConfig) -> f64 {
        match kind {
            EfficiencyKind::Be => self.be(tau2),
            EfficiencyKind::Apr => self.apr(tau2),
            EfficiencyKind::Ape => self.ape(tau2, config),
        }
    }
}

fn null_variance(tau1: f64, tau2: f64) -> f64 {
    null_moments(TFisherParams::new(tau1, tau2).expect("validated grid point")).v0
}

/// Bahadur efficiency `Δ²/V₀`.
pub fn be(d: &dyn Distortion, params: TFisherParams) -> Result<f64> {
    Ok(TauProfile::new(d, params.tau1())?.be(params.tau2()))
}

/// Asymptotic power rate `Δ/√V₁`.
pub fn apr(d: &dyn Distortion, params: TFisherParams) -> Result<f64> {
    Ok(TauProfile::new(d, params.tau1())?.apr(params.tau2()))
}

/// Asymptotic power efficiency `z_α√(V₀/V₁) − √n·Δ/√V₁`; smaller is better.
pub fn ape(d: &dyn Distortion, params: TFisherParams, config: &EfficiencyConfig) -> Result<f64> {
    Ok(TauProfile::new(d, params.tau1())?.ape(params.tau2(), config))
}

/// Lattice `τ₁ ∈ {s₁, 2s₁, …} ∩ (0, τ₁max]`, `τ₂ ∈ {s₂, 2s₂, …} ∩ (0, τ₂max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub tau1_step: f64,
    pub tau1_max: f64,
    pub tau2_step: f64,
    pub tau2_max: f64,
    /// Run one coordinate-descent pass at a tenth of the step after the
    /// exhaustive search.
    pub refine: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tau1_step: 0.001,
            tau1_max: 1.0,
            tau2_step: 0.001,
            tau2_max: 10.0,
            refine: true,
        }
    }
}

impl GridSpec {
    /// Step 0.01 on both axes, `τ₂ ≤ 3`, no refinement.
    pub fn coarse() -> Self {
        Self {
            tau1_step: 0.01,
            tau1_max: 1.0,
            tau2_step: 0.01,
            tau2_max: 3.0,
            refine: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |s: f64, m: f64| s > 0.0 && s.is_finite() && m >= s && m.is_finite();
        if !ok(self.tau1_step, self.tau1_max) || !ok(self.tau2_step, self.tau2_max) || self.tau1_max > 1.0 {
            return Err(Error::domain(format!("invalid grid specification {self:?}")));
        }
        Ok(())
    }

    fn axis(step: f64, max: f64) -> Vec<f64> {
        let count = ((max / step) * (1.0 + 1e-12)).floor() as usize;
        (1..=count).map(|i| i as f64 * step).collect()
    }

    pub fn tau1_values(&self) -> Vec<f64> {
        Self::axis(self.tau1_step, self.tau1_max)
    }

    pub fn tau2_values(&self) -> Vec<f64> {
        Self::axis(self.tau2_step, self.tau2_max)
    }
}

/// Values of one efficiency measure on a `(τ₁, τ₂)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencySurface {
    pub kind: EfficiencyKind,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
    /// Row-major: `values[i * tau2.len() + j]` is at `(tau1[i], tau2[j])`.
    #[serde(skip)]
    pub values: Vec<f64>,
    /// Best lattice point; ties go to the lexicographically smallest pair.
    pub grid_optimum: (f64, f64),
    pub grid_value: f64,
    /// After refinement (equal to the lattice optimum without it).
    pub maximizer: (f64, f64),
    pub max_value: f64,
}

impl EfficiencySurface {
    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tau2.len() + j]
    }

    /// CSV with columns `tau1,tau2,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["tau1", "tau2", "value"]).map_err(io)?;
        for (i, t1) in self.tau1.iter().enumerate() {
            for (j, t2) in self.tau2.iter().enumerate() {
                w.write_record(&[t1.to_string(), t2.to_string(), self.value_at(i, j).to_string()])
                    .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Exhaustive grid search, optionally followed by coordinate descent.
pub fn optimize(
    kind: EfficiencyKind,
    d: &dyn Distortion,
    config: &EfficiencyConfig,
    grid: &GridSpec,
) -> Result<EfficiencySurface> {
    grid.validate()?;
    let tau1 = grid.tau1_values();
    let tau2 = grid.tau2_values();
    let profiles = TauProfile::along(d, &tau1)?;
    let rows: Vec<Vec<f64>> = profiles
        .par_iter()
        .map(|p| tau2.iter().map(|&t2| p.value(kind, t2, config)).collect())
        .collect();

    let mut best: Option<(usize, usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, _, b)| kind.better(v, b)) {
                best = Some((i, j, v));
            }
        }
    }
    let (bi, bj, bv) = best.ok_or_else(|| Error::NoSolution("no finite value on the grid".into()))?;
    let grid_optimum = (tau1[bi], tau2[bj]);

    let (maximizer, max_value) = if grid.refine {
        refine(kind, d, config, grid, grid_optimum, bv)?
    } else {
        (grid_optimum, bv)
    };

    Ok(EfficiencySurface {
        kind,
        tau1,
        tau2,
        values: rows.into_iter().flatten().collect(),
        grid_optimum,
        grid_value: bv,
        maximizer,
        max_value,
    })
}

/// Coordinate descent with step a tenth of the grid step, until no move in
/// either coordinate improves the value.
fn refine(
    kind: EfficiencyKind,
    d: &dyn Distortion,
    config: &EfficiencyConfig,
    grid: &GridSpec,
    start: (f64, f64),
    start_value: f64,
) -> Result<((f64, f64), f64)> {
    let (h1, h2) = (grid.tau1_step / 10.0, grid.tau2_step / 10.0);
    let (mut t1, mut t2) = start;
    let mut best = start_value;
    let mut profile = TauProfile::new(d, t1)?;
    // Each accepted move strictly improves the value; the cap only guards
    // against a pathological plateau.
    for _ in 0..1000 {
        let mut moved = false;
        for cand in [t1 - h1, t1 + h1] {
            if cand <= 0.0 || cand > grid.tau1_max + 1e-12 {
                continue;
            }
            let cand = cand.min(grid.tau1_max);
            let p = TauProfile::new(d, cand)?;
            let v = p.value(kind, t2, config);
            if v.is_finite() && kind.better(v, best) {
                (t1, best, profile, moved) = (cand, v, p, true);
                break;
            }
        }
        for cand in [t2 - h2, t2 + h2] {
            if cand <= 0.0 || cand > grid.tau2_max + 1e-12 {
                continue;
            }
            let v = profile.value(kind, cand, config);
            if v.is_finite() && kind.better(v, best) {
                (t2, best, moved) = (cand, v, true);
                break;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(((t1, t2), best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::altdist::{power, GaussianMixture, Identity, SignalModel};

    fn gm(e: f64, m: f64) -> GaussianMixture {
        GaussianMixture::new(e, m).unwrap()
    }

    fn params(t1: f64, t2: f64) -> TFisherParams {
        TFisherParams::new(t1, t2).unwrap()
    }

    /// Midpoint Riemann sum on a log-spaced grid in `u`.
    fn riemann(f: impl Fn(f64) -> f64, hi: f64, points: usize) -> f64 {
        let (lo_s, hi_s) = ((1e-300f64).ln(), hi.ln());
        let h = (hi_s - lo_s) / points as f64;
        (0..points)
            .map(|i| {
                let s = lo_s + (i as f64 + 0.5) * h;
                let u = s.exp();
                f(u) * u * h
            })
            .sum()
    }

    #[test]
    fn null_alternative_has_no_shift() {
        let p = TauProfile::new(&Identity, 0.3).unwrap();
        assert_eq!(p.mean_shift(0.7), 0.0);
        let config = EfficiencyConfig::new(50, 0.05).unwrap();
        for (t1, t2) in [(0.3, 0.7), (0.05, 0.05), (1.0, 1.0), (0.8, 2.0)] {
            let a = ape(&Identity, params(t1, t2), &config).unwrap();
            assert!((a - config.z_alpha()).abs() < 1e-8, "{t1} {t2}: {a}");
            assert_eq!(apr(&gm(0.0, 1.0), params(t1, t2)).unwrap(), 0.0);
        }
    }

    #[test]
    fn null_alternative_variance_is_null_variance() {
        for (t1, t2) in [(0.3, 0.7), (0.05, 0.05), (1.0, 1.0), (0.8, 2.0)] {
            let p = TauProfile::new(&Identity, t1).unwrap();
            assert!((p.alt_variance(t2) - null_variance(t1, t2)).abs() < 1e-12);
        }
    }

    #[test]
    fn apr_against_riemann_oracle() {
        let g = gm(0.1, 2.0);
        let (t1, t2) = (0.05, 0.05);
        let got = apr(&g, params(t1, t2)).unwrap();
        assert!(got > 0.0);
        let n = 2_000_000;
        let dp = |u: f64| g.d_prime(u);
        let e1 = riemann(|u| -(u / t2).ln() * dp(u), t1, n);
        let e2 = riemann(|u| (u / t2).ln().powi(2) * dp(u), t1, n);
        let e0 = null_moments(params(t1, t2)).e0;
        let want = (e1 - e0) / (e2 - e1 * e1).sqrt();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn shift_is_linear_in_epsilon() {
        let (mu, t1, t2) = (1.3, 0.2, 0.6);
        let base = TauProfile::new(&gm(1.0, mu), t1).unwrap().mean_shift(t2);
        for e in [0.01, 0.1, 0.5, 0.9] {
            let s = TauProfile::new(&gm(e, mu), t1).unwrap().mean_shift(t2);
            assert!((s / e - base).abs() < 1e-8 * base.abs());
        }
    }

    #[test]
    fn cumulative_profiles_match_direct() {
        let g = gm(0.3, 1.4);
        let taus: Vec<f64> = (1..=50).map(|i| i as f64 * 0.02).collect();
        let along = TauProfile::along(&g, &taus).unwrap();
        for (p, &t) in along.iter().zip(&taus).step_by(7) {
            let direct = TauProfile::new(&g, t).unwrap();
            assert!((p.a_delta - direct.a_delta).abs() < 1e-11);
            assert!((p.b_delta - direct.b_delta).abs() < 1e-11);
        }
    }

    #[test]
    fn be_soft_optimum_at_mu_one() {
        let config = EfficiencyConfig::new(100, 0.05).unwrap();
        let s = optimize(EfficiencyKind::Be, &gm(0.5, 1.0), &config, &GridSpec::coarse()).unwrap();
        assert!((s.grid_optimum.0 - 0.39).abs() <= 0.01 + 1e-12);
        assert!((s.grid_optimum.1 - 0.39).abs() <= 0.01 + 1e-12);
        assert!((s.grid_value - 0.394).abs() < 0.002);
    }

    #[test]
    fn refinement_never_worsens() {
        let config = EfficiencyConfig::new(100, 0.05).unwrap();
        let mut grid = GridSpec::coarse();
        grid.refine = true;
        grid.tau2_max = 2.0;
        for kind in [EfficiencyKind::Be, EfficiencyKind::Apr, EfficiencyKind::Ape] {
            let s = optimize(kind, &gm(0.2, 1.2), &config, &grid).unwrap();
            assert!(!kind.better(s.grid_value, s.max_value));
        }
    }

    #[test]
    fn ties_go_to_smallest_pair() {
        // Under the null every APR is exactly zero.
        let config = EfficiencyConfig::new(10, 0.05).unwrap();
        let grid = GridSpec {
            tau1_step: 0.25,
            tau1_max: 1.0,
            tau2_step: 0.5,
            tau2_max: 1.0,
            refine: false,
        };
        let s = optimize(EfficiencyKind::Apr, &Identity, &config, &grid).unwrap();
        assert_eq!(s.grid_optimum, (0.25, 0.5));
    }

    #[test]
    fn csv_export() {
        let config = EfficiencyConfig::new(10, 0.05).unwrap();
        let grid = GridSpec {
            tau1_step: 0.5,
            tau1_max: 1.0,
            tau2_step: 0.5,
            tau2_max: 1.0,
            refine: false,
        };
        let s = optimize(EfficiencyKind::Be, &gm(0.5, 1.0), &config, &grid).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau1,tau2,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0.5,0.5,"));
    }

    #[test]
    fn ape_ranking_approaches_apr_ranking() {
        let g = gm(0.1, 2.0);
        let config = EfficiencyConfig::new(1_000_000, 0.05).unwrap();
        let cands = [
            (0.05, 0.05),
            (0.1, 0.5),
            (0.05, 1.0),
            (1.0, 1.0),
            (0.5, 0.5),
            (0.01, 0.3),
        ];
        let mut by_ape: Vec<(f64, usize)> = cands
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (ape(&g, params(a, b), &config).unwrap(), i))
            .collect();
        let mut by_apr: Vec<(f64, usize)> = cands
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (-apr(&g, params(a, b)).unwrap(), i))
            .collect();
        by_ape.sort_by(|a, b| a.0.total_cmp(&b.0));
        by_apr.sort_by(|a, b| a.0.total_cmp(&b.0));
        let a: Vec<usize> = by_ape.iter().map(|x| x.1).collect();
        let b: Vec<usize> = by_apr.iter().map(|x| x.1).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn ape_optimum_has_at_least_the_power_of_standard_choices() {
        let (n, alpha) = (50, 0.05);
        let g = gm(0.1, 2.0);
        let config = EfficiencyConfig::new(n, alpha).unwrap();
        let grid = GridSpec {
            tau1_step: 0.005,
            tau1_max: 1.0,
            tau2_step: 0.005,
            tau2_max: 3.0,
            refine: true,
        };
        let s = optimize(EfficiencyKind::Ape, &g, &config, &grid).unwrap();
        let model = SignalModel::new(0.1, 2.0, n).unwrap();
        let opt = power(&model, params(s.maximizer.0, s.maximizer.1), alpha).unwrap();
        for (t1, t2) in [(0.05, 0.05), (0.05, 1.0), (1.0, 1.0)] {
            let other = power(&model, params(t1, t2), alpha).unwrap();
            assert!(opt >= other - 0.005, "({t1},{t2}): {opt} < {other}");
        }
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("BE".parse::<EfficiencyKind>().unwrap(), EfficiencyKind::Be);
        assert_eq!("ape".parse::<EfficiencyKind>().unwrap(), EfficiencyKind::Ape);
        assert!("xyz".parse::<EfficiencyKind>().is_err());
    }

    #[test]
    fn bad_grid_rejected() {
        let config = EfficiencyConfig::new(10, 0.05).unwrap();
        let mut g = GridSpec::coarse();
        g.tau1_step = 0.0;
        assert!(optimize(EfficiencyKind::Be, &Identity, &config, &g).is_err());
        assert!(EfficiencyConfig::new(0, 0.05).is_err());
        assert!(EfficiencyConfig::new(10, 0.7).is_err());
    }
}
