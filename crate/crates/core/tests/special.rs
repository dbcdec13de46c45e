mod common;

use std::f64::consts::PI;

use nfrange::special::{fresnel, sinc};
use num_complex::Complex64;

#[test]
fn fresnel_examples() {
    assert_eq!(fresnel(0.0).unwrap(), Complex64::new(0.0, 0.0));
    let a = fresnel(1.3).unwrap();
    let b = fresnel(-1.3).unwrap();
    assert_eq!(a, -b);
    let f1 = fresnel(1.0).unwrap();
    assert!((f1.re - 0.7798934).abs() < 1e-7);
    assert!((f1.im - 0.4382591).abs() < 1e-7);
    assert!(fresnel(f64::NAN).is_err());
    assert!(fresnel(f64::INFINITY).is_err());
}

#[test]
fn fresnel_matches_quadrature_oracle() {
    let mut x = -10.0;
    while x <= 10.0 {
        let got = fresnel(x).unwrap();
        let want = common::fresnel_quad(x);
        assert!((got - want).norm() < 1e-9, "x={x}: {got} vs {want}");
        x += 0.173;
    }
}

#[test]
fn fresnel_limits() {
    // F(x)/x - 1 = jπx²/6 + O(x⁴): below 1e-4 only for |x| < 0.0138.
    for x in [1e-6, 1e-3, 0.01, 0.0138, -0.0138] {
        assert!((fresnel(x).unwrap() / x - 1.0).norm() < 1e-4);
    }
    for x in [0.02, 0.035, 0.049, -0.049] {
        let lead = PI * x * x / 6.0;
        assert!(((fresnel(x).unwrap() / x - 1.0).norm() - lead).abs() < 1e-3 * lead);
    }
    assert!((fresnel(50.0).unwrap() - Complex64::new(0.5, 0.5)).norm() < 0.01);
    assert!((fresnel(1e4).unwrap() - Complex64::new(0.5, 0.5)).norm() < 1e-4);
}

#[test]
fn fresnel_relative_accuracy_wide_range() {
    // Large-argument check against the asymptotic expansion with three terms.
    for x in [20.0f64, 47.3, 99.0] {
        let t = PI * x * x / 2.0;
        let f = 1.0 / (PI * x) * (1.0 - 3.0 / (PI * PI * x.powi(4)));
        let g = 1.0 / (PI * PI * x.powi(3)) * (1.0 - 15.0 / (PI * PI * x.powi(4)));
        let c = 0.5 + f * t.sin() - g * t.cos();
        let s = 0.5 - f * t.cos() - g * t.sin();
        let got = fresnel(x).unwrap();
        assert!((got - Complex64::new(c, s)).norm() / got.norm() < 1e-10, "x={x}");
    }
}

#[test]
fn sinc_examples() {
    assert_eq!(sinc(0.0), 1.0);
    assert_eq!(sinc(1.0), 0.0);
    assert_eq!(sinc(-3.0), 0.0);
    assert_eq!(sinc(1e6), 0.0);
    assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
    assert!((sinc(1e-5) - 1.0).abs() < 2e-10);
    assert!((sinc(0.3) - (PI * 0.3).sin() / (PI * 0.3)).abs() < 1e-15);
}
