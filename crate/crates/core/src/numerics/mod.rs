//! Shared numerical kernels.
//!
//! Everything here is a pure function of its inputs. Root finding and
//! minimization are one-dimensional and bracketed; the spherical quadrature is
//! a fixed Gauss–Legendre × trapezoid product rule.

mod fft;
mod optimize;
mod quadrature;
mod roots;

use core::ops::{Div, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use fft::{fft, ifft};
pub use optimize::{minimize_golden, minimize_on_grid, GridMinimum, Minimum};
pub use quadrature::{gauss_legendre, sphere_average, SphereNode, SphereQuadrature};
pub use roots::{find_root, Bracket};

/// Principal-branch inverse hyperbolic tangent.
///
/// On the branch cuts (real `|z| > 1`) the imaginary part is taken as `+π/2`,
/// so the result always has imaginary part in `(-π/2, π/2]`.
pub fn complex_arctanh(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && (z.re == 1.0 || z.re == -1.0) {
        return Err(Error::ArctanhSingularity { re: z.re, im: z.im });
    }
    let one = Complex64::new(1.0, 0.0);
    let mut w = ((one + z).ln() - (one - z).ln()) * 0.5;
    if w.im <= -core::f64::consts::FRAC_PI_2 {
        w.im += core::f64::consts::PI;
    }
    Ok(w)
}

/// Symmetric difference quotient `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference<T, F>(mut f: F, x: f64, h: f64) -> T
where
    T: Sub<Output = T> + Div<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// [`central_difference`] for fallible functions.
pub fn try_central_difference<T, F>(mut f: F, x: f64, h: f64) -> Result<T>
where
    T: Sub<Output = T> + Div<f64, Output = T>,
    F: FnMut(f64) -> Result<T>,
{
    let hi = f(x + h)?;
    let lo = f(x - h)?;
    Ok((hi - lo) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arctanh_zero() {
        let w = complex_arctanh(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(w, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn arctanh_inverts_tanh_half() {
        // tanh(0.5) = 0.46211715726000974
        let w = complex_arctanh(Complex64::new(0.5_f64.tanh(), 0.0)).unwrap();
        assert!((w.re - 0.5).abs() < 1e-14);
        let w = complex_arctanh(Complex64::new(0.4621, 0.0)).unwrap();
        assert!((w.re - 0.5).abs() < 2e-4);
    }

    #[test]
    fn arctanh_round_trip_off_axis() {
        let z = Complex64::new(0.9, -0.1);
        let w = complex_arctanh(z).unwrap();
        assert!((w.tanh() - z).norm() < 1e-12);
    }

    #[test]
    fn arctanh_singular_points() {
        assert!(matches!(
            complex_arctanh(Complex64::new(1.0, 0.0)),
            Err(Error::ArctanhSingularity { .. })
        ));
        assert!(complex_arctanh(Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn arctanh_branch_cut_takes_upper_side() {
        let w = complex_arctanh(Complex64::new(2.0, 0.0)).unwrap();
        assert!((w.im - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let w = complex_arctanh(Complex64::new(-3.0, -0.0)).unwrap();
        assert!((w.im - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn central_difference_quadratic() {
        let d = central_difference(|x: f64| x * x, 3.0, 1e-4);
        assert!((d - 6.0).abs() < 1e-7);
    }

    #[test]
    fn central_difference_tanh_half() {
        let d = central_difference(|x: f64| (x / 2.0).tanh(), 1.0, 1e-5);
        let exact = (1.0 - 0.5_f64.tanh().powi(2)) / 2.0;
        assert!((d - exact).abs() < 1e-10);
        assert!((d - 0.3932).abs() < 1e-4);
    }

    #[test]
    fn central_difference_complex() {
        let d = central_difference(|x: f64| Complex64::new(0.0, x * x * x), 2.0, 1e-5);
        assert!((d - Complex64::new(0.0, 12.0)).norm() < 1e-8);
    }

    #[test]
    fn try_central_difference_propagates() {
        let r: Result<f64> = try_central_difference(
            |x| if x > 1.0 { Err(Error::NonFinite { x }) } else { Ok(x) },
            1.0,
            0.1,
        );
        assert!(r.is_err());
    }
}
