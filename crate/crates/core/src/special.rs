//! Fresnel integral and cardinal sine.
//!
//! The Fresnel integral is used in its complex form
//! `F(x) = ∫₀ˣ exp(jπt²/2) dt = C(x) + jS(x)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

const SERIES_LIMIT: f64 = 2.0;
const CF_MAX_ITER: usize = 500;

/// Complex Fresnel integral `F(x) = C(x) + jS(x)`.
///
/// Power series for `|x| <= 2`, continued fraction for the complementary
/// error function beyond. Odd in `x`.
pub fn fresnel(x: f64) -> Result<Complex64> {
    if !x.is_finite() {
        return Err(invalid(format!("fresnel argument must be finite, got {x}")));
    }
    let ax = x.abs();
    let value = if ax == 0.0 {
        Complex64::new(0.0, 0.0)
    } else if ax <= SERIES_LIMIT {
        fresnel_series(ax)
    } else {
        fresnel_continued_fraction(ax)?
    };
    Ok(if x < 0.0 { -value } else { value })
}

/// `Σ (jπ/2)^n x^(2n+1) / (n! (2n+1))`
fn fresnel_series(x: f64) -> Complex64 {
    let step = Complex64::new(0.0, 0.5 * PI * x * x);
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..200 {
        if n > 0 {
            power = power * step / n as f64;
        }
        let term = power / (2 * n + 1) as f64;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum * x
}

/// Modified Lentz evaluation of the erfc continued fraction, x > 0.
fn fresnel_continued_fraction(x: f64) -> Result<Complex64> {
    let tiny = 1e-300;
    let pix2 = PI * x * x;
    let mut b = Complex64::new(1.0, -pix2);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut n = -1.0_f64;
    let mut converged = false;
    for _ in 0..CF_MAX_ITER {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(crate::Error::NumericalAccuracy(format!(
            "fresnel continued fraction did not converge at x = {x}"
        )));
    }
    h *= Complex64::new(x, -x);
    let phase = Complex64::from_polar(1.0, 0.5 * pix2);
    Ok(Complex64::new(0.5, 0.5) * (Complex64::new(1.0, 0.0) - phase * h))
}

/// `sin(πx)` with exact zeros at the integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let s = (PI * (x - n)).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

/// Normalized cardinal sine `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let p2 = (PI * x) * (PI * x);
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        sin_pi(x) / (PI * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresnel_zero_and_odd() {
        assert_eq!(fresnel(0.0).unwrap(), Complex64::new(0.0, 0.0));
        let a = fresnel(1.3).unwrap();
        let b = fresnel(-1.3).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn fresnel_known_value() {
        // C(1), S(1) from an independent reference implementation
        let f = fresnel(1.0).unwrap();
        assert!((f.re - 0.779_893_400_376_823).abs() < 1e-14);
        assert!((f.im - 0.438_259_147_390_354_7).abs() < 1e-14);
    }

    #[test]
    fn fresnel_rejects_non_finite() {
        assert!(fresnel(f64::NAN).is_err());
        assert!(fresnel(f64::INFINITY).is_err());
    }

    #[test]
    fn fresnel_small_argument_limit() {
        // F(x)/x = 1 + jπx²/6 + O(x⁴)
        for &x in &[1e-8, 1e-3, 0.01, 0.049, -0.03] {
            let f = fresnel(x).unwrap();
            assert!((f / x - 1.0).norm() <= PI * x * x / 6.0 * 1.001 + 1e-15, "x={x}");
        }
    }

    #[test]
    fn fresnel_large_argument_limit() {
        let f = fresnel(50.0).unwrap();
        assert!((f - Complex64::new(0.5, 0.5)).norm() < 0.01);
    }

    #[test]
    fn fresnel_continuous_across_branch() {
        let below = fresnel(SERIES_LIMIT).unwrap();
        let above = fresnel_continued_fraction(SERIES_LIMIT).unwrap();
        assert!((below - above).norm() < 1e-13);
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc(1.0), 0.0);
        assert_eq!(sinc(-3.0), 0.0);
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
        // series branch meets the direct branch
        let x = 1e-4 * 0.999_999;
        assert!((sinc(x) - (PI * x).sin() / (PI * x)).abs() < 1e-15);
    }
}
