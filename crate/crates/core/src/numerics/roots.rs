//! Bracketed scalar root finding (Brent's method: bisection, secant and
//! inverse quadratic interpolation, never leaving the bracket).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    lo: f64,
    hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(format!("invalid root bracket [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

const MAX_ITER: usize = 200;

/// Finds `x` in the bracket with `f(x) = 0`, to an absolute width `tol` in x.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: RootBracket, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::domain("root function is NaN at a bracket end"));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let tol = tol.max(0.0);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::domain(format!("root function is NaN at {b}")));
        }
    }
    Err(Error::Convergence {
        what: "root finding",
        best_estimate: b,
        error_estimate: (c - b).abs(),
    })
}

/// Finds the first sign change of `f` on an increasing list of points and
/// returns the bracketing pair.
pub fn scan_for_bracket<F: FnMut(f64) -> f64>(mut f: F, points: &[f64]) -> Option<RootBracket> {
    let mut prev: Option<(f64, f64)> = None;
    for &x in points {
        let fx = f(x);
        if fx.is_nan() {
            prev = None;
            continue;
        }
        if let Some((px, pf)) = prev {
            if pf == 0.0 {
                return RootBracket::new(px, x).ok();
            }
            if pf.signum() != fx.signum() || fx == 0.0 {
                return RootBracket::new(px, x).ok();
            }
        }
        prev = Some((x, fx));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let r = find_root(|x| x - 0.3, RootBracket::new(0.0, 1.0).unwrap(), 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sqrt_two() {
        let r = find_root(|x| x * x - 2.0, RootBracket::new(1.0, 2.0).unwrap(), 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-6);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-11);
    }

    #[test]
    fn no_sign_change() {
        let b = RootBracket::new(-1.0, 1.0).unwrap();
        assert!(matches!(
            find_root(|x| x * x + 1.0, b, 1e-10),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn bad_bracket() {
        assert!(RootBracket::new(1.0, 1.0).is_err());
        assert!(RootBracket::new(2.0, 1.0).is_err());
    }

    #[test]
    fn discontinuous_step_converges_to_jump() {
        let r = find_root(
            |x| if x < 0.7 { -1.0 } else { 1.0 },
            RootBracket::new(0.0, 1.0).unwrap(),
            1e-12,
        )
        .unwrap();
        assert!((r - 0.7).abs() < 1e-11);
    }

    #[test]
    fn scan() {
        let pts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let b = scan_for_bracket(|x| x - 0.55, &pts).unwrap();
        assert_eq!((b.lo(), b.hi()), (0.5, 0.6));
        assert!(scan_for_bracket(|x| x + 1.0, &pts).is_none());
    }
}
