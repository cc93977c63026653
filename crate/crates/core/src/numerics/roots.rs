use crate::error::{Error, Result};

/// A sign-changing interval `[lo, hi]` with cached endpoint values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends and checks `lo < hi` and `f(lo)·f(hi) <= 0`.
    pub fn new<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<Self> {
        let f_lo = f(lo);
        let f_hi = f(hi);
        Self::from_values(lo, hi, f_lo, f_hi)
    }

    pub fn from_values(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        let valid = lo < hi
            && f_lo.is_finite()
            && f_hi.is_finite()
            && (f_lo <= 0.0 && f_hi >= 0.0 || f_lo >= 0.0 && f_hi <= 0.0);
        if !valid {
            return Err(Error::InvalidBracket { lo, hi, f_lo, f_hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bracketed root of a continuous function.
///
/// Even iterations try a secant step and fall back to bisection when the
/// secant point leaves the open bracket; odd iterations always bisect, so the
/// width at least halves every two steps. Returns the endpoint of the final
/// bracket (width `<= tol_x`) with the smaller `|f|`.
pub fn find_root<F: FnMut(f64) -> f64>(
    mut f: F,
    bracket: Bracket,
    tol_x: f64,
    max_iter: usize,
) -> Result<f64> {
    let Bracket { lo: mut a, hi: mut b, f_lo: mut fa, f_hi: mut fb } = bracket;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let best = |a: f64, b: f64, fa: f64, fb: f64| if fa.abs() <= fb.abs() { a } else { b };
    for iter in 0..max_iter {
        if b - a <= tol_x {
            return Ok(best(a, b, fa, fb));
        }
        let mid = 0.5 * (a + b);
        let x = if iter % 2 == 0 {
            let s = b - fb * (b - a) / (fb - fa);
            if s.is_finite() && s > a && s < b {
                s
            } else {
                mid
            }
        } else {
            mid
        };
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::NonFinite { x });
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    if b - a <= tol_x {
        return Ok(best(a, b, fa, fb));
    }
    Err(Error::NoConvergence { best: best(a, b, fa, fb), iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
        let br = Bracket::new(&mut f, lo, hi).unwrap();
        find_root(f, br, 1e-13, 500).unwrap()
    }

    #[test]
    fn linear_root() {
        let r = solve(|x| x - 1.0, 0.0, 2.0);
        assert!((r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn strong_scheme_transcendental() {
        // scipy brentq on the same bracket: 0.41677827980045434
        let r = solve(|t| (1.0 / t).exp() - (1.0 + 2.0 * t) / (1.0 - 2.0 * t), 0.3, 0.49);
        assert!((r - 0.416_778_279_800_454).abs() < 1e-10);
    }

    #[test]
    fn imperfect_thermalization_stationarity() {
        let r = solve(
            |b| b * (3.0 * b.sinh() - 2.0 * (b / 2.0).tanh()) - (3.0 * b.cosh() - 1.0),
            1.0,
            1.5,
        );
        // scipy brentq: 1.2586490826000263
        assert!((r - 1.258_649_082_600_026).abs() < 1e-10);
        assert!((1.0 / r - 0.79).abs() < 0.005);
    }

    #[test]
    fn no_sign_change_is_rejected() {
        let mut f = |x: f64| x * x + 1.0;
        assert!(matches!(Bracket::new(&mut f, -1.0, 1.0), Err(Error::InvalidBracket { .. })));
        assert!(Bracket::new(&mut |x: f64| x, 1.0, -1.0).is_err());
    }

    #[test]
    fn iteration_budget_exhausted() {
        let mut f = |x: f64| x - 0.3;
        let br = Bracket::new(&mut f, 0.0, 1.0).unwrap();
        match find_root(|x| x.powi(3) - 0.027, br, 1e-15, 2) {
            Err(Error::NoConvergence { best, iterations }) => {
                assert_eq!(iterations, 2);
                assert!(best > 0.0 && best < 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let a = solve(|x| x.cos() - x, 0.0, 1.0);
        let b = solve(|x| x.cos() - x, 0.0, 1.0);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
