//! Multivariate normal orthant-type probabilities `P(X < b)` by the
//! separation-of-variables transform with randomized lattice rules.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{norm_cdf, norm_pdf, norm_quantile};

/// Settings for the randomized quasi-Monte-Carlo integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnOptions {
    pub seed: u64,
    /// Target standard error of the estimate.
    pub target_se: f64,
    /// Number of independent random shifts of the lattice.
    pub shifts: usize,
    pub initial_points: usize,
    pub max_points: usize,
}

impl Default for MvnOptions {
    fn default() -> Self {
        Self {
            seed: 20_170_101,
            target_se: 1e-4,
            shifts: 12,
            initial_points: 500,
            max_points: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MvnEstimate {
    pub probability: f64,
    pub std_error: f64,
}

const PRIMES: [f64; 40] = [
    2., 3., 5., 7., 11., 13., 17., 19., 23., 29., 31., 37., 41., 43., 47., 53., 59., 61., 67., 71., 73., 79., 83., 89.,
    97., 101., 103., 107., 109., 113., 127., 131., 137., 139., 149., 151., 157., 163., 167., 173.,
];

/// `P(X_j < upper_j for all j)` for `X ~ N(mean, cov)`.
///
/// `cov` must be symmetric positive semi-definite; tiny pivots left after the
/// caller's diagonal repair are treated as deterministic coordinates.
pub fn mvn_cdf(mean: &DVector<f64>, cov: &DMatrix<f64>, upper: &[f64], opts: &MvnOptions) -> Result<MvnEstimate> {
    let m = mean.len();
    if cov.nrows() != m || cov.ncols() != m || upper.len() != m {
        return Err(Error::domain(format!(
            "dimension mismatch: mean {m}, covariance {}x{}, bounds {}",
            cov.nrows(),
            cov.ncols(),
            upper.len()
        )));
    }
    if m == 0 {
        return Err(Error::domain("empty distribution"));
    }
    if upper.iter().any(|b| b.is_nan()) {
        return Err(Error::domain("NaN bound"));
    }
    if m > PRIMES.len() + 1 {
        return Err(Error::domain(format!(
            "at most {} dimensions are supported",
            PRIMES.len() + 1
        )));
    }
    let b: Vec<f64> = upper.iter().zip(mean.iter()).map(|(u, mu)| u - mu).collect();
    let factor = ReorderedCholesky::new(cov, &b)?;
    if m == 1 || factor.dim_sampled() == 0 {
        return Ok(MvnEstimate {
            probability: factor.integrand(&[]),
            std_error: 0.0,
        });
    }

    let dim = factor.dim_sampled();
    let generator: Vec<f64> = PRIMES[..dim].iter().map(|p| p.sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> = (0..opts.shifts.max(2))
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();

    let mut points = opts.initial_points.max(1);
    loop {
        let means: Vec<f64> = shifts
            .par_iter()
            .map(|shift| lattice_mean(&factor, &generator, shift, points))
            .collect();
        let k = means.len() as f64;
        let avg = means.iter().sum::<f64>() / k;
        let var = means.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        if se <= opts.target_se {
            return Ok(MvnEstimate {
                probability: avg.clamp(0.0, 1.0),
                std_error: se,
            });
        }
        if points >= opts.max_points {
            return Err(Error::Convergence {
                what: "multivariate normal integration",
                best_estimate: avg,
                error_estimate: se,
            });
        }
        points = (points * 2).min(opts.max_points);
    }
}

fn lattice_mean(factor: &ReorderedCholesky, generator: &[f64], shift: &[f64], points: usize) -> f64 {
    let mut w = vec![0.0; generator.len()];
    let mut sum = 0.0;
    for k in 1..=points {
        for ((wi, z), s) in w.iter_mut().zip(generator).zip(shift) {
            let x = (k as f64 * z + s).fract();
            // Baker's transform periodizes the integrand.
            *wi = 1.0 - (2.0 * x - 1.0).abs();
        }
        sum += factor.integrand(&w);
    }
    sum / points as f64
}

/// Lower-triangular factor with rows permuted so that the most constraining
/// bounds come first, together with the permuted bounds.
struct ReorderedCholesky {
    l: DMatrix<f64>,
    b: Vec<f64>,
    /// Rows whose pivot vanished; their bound acts as an indicator.
    degenerate: Vec<bool>,
}

impl ReorderedCholesky {
    fn new(cov: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let m = b.len();
        let scale = (0..m).map(|i| cov[(i, i)]).fold(0.0f64, f64::max);
        let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let mut c = cov.clone();
        let mut b = b.to_vec();
        let mut l = DMatrix::<f64>::zeros(m, m);
        let mut degenerate = vec![false; m];
        let mut y = vec![0.0; m];
        for i in 0..m {
            // Pick the remaining coordinate with the smallest conditional
            // probability given the expected values of those already chosen.
            let mut best = i;
            let mut best_p = f64::INFINITY;
            for j in i..m {
                let s2 = c[(j, j)] - (0..i).map(|k| l[(j, k)].powi(2)).sum::<f64>();
                let shift: f64 = (0..i).map(|k| l[(j, k)] * y[k]).sum();
                let p = if s2 > tiny {
                    norm_cdf((b[j] - shift) / s2.sqrt())
                } else if b[j] - shift > 0.0 {
                    1.0
                } else {
                    0.0
                };
                if p < best_p {
                    best_p = p;
                    best = j;
                }
            }
            if best != i {
                c.swap_rows(i, best);
                c.swap_columns(i, best);
                l.swap_rows(i, best);
                b.swap(i, best);
            }
            let s2 = c[(i, i)] - (0..i).map(|k| l[(i, k)].powi(2)).sum::<f64>();
            let shift: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
            if s2 <= tiny {
                if s2 < -1e-8 * scale {
                    return Err(Error::Model(format!(
                        "covariance is not positive semi-definite (pivot {s2:e})"
                    )));
                }
                degenerate[i] = true;
                y[i] = 0.0;
                continue;
            }
            let lii = s2.sqrt();
            l[(i, i)] = lii;
            for j in i + 1..m {
                let v = c[(j, i)] - (0..i).map(|k| l[(j, k)] * l[(i, k)]).sum::<f64>();
                l[(j, i)] = v / lii;
            }
            // Mean of a standard normal truncated above at the scaled bound.
            let t = (b[i] - shift) / lii;
            let phi = norm_cdf(t);
            y[i] = if phi > 0.0 { -norm_pdf(t) / phi } else { t };
        }
        Ok(Self { l, b, degenerate })
    }

    /// Number of uniform coordinates the integrand consumes: one for every
    /// non-degenerate row that has rows after it.
    fn dim_sampled(&self) -> usize {
        let m = self.degenerate.len();
        self.degenerate[..m - 1].iter().filter(|d| !**d).count()
    }

    fn integrand(&self, w: &[f64]) -> f64 {
        let m = self.b.len();
        let mut y = [0.0f64; 64];
        let mut y_heap;
        let y: &mut [f64] = if m <= 64 {
            &mut y[..m]
        } else {
            y_heap = vec![0.0; m];
            &mut y_heap
        };
        let mut f = 1.0;
        let mut next_w = 0;
        for i in 0..m {
            let shift: f64 = (0..i).map(|k| self.l[(i, k)] * y[k]).sum();
            if self.degenerate[i] {
                if self.b[i] - shift <= 0.0 {
                    return 0.0;
                }
                continue;
            }
            let e = norm_cdf((self.b[i] - shift) / self.l[(i, i)]);
            f *= e;
            if f == 0.0 {
                return 0.0;
            }
            if next_w < w.len() {
                let u = (w[next_w] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                y[i] = norm_quantile(u);
                next_w += 1;
            }
        }
        f
    }
}
