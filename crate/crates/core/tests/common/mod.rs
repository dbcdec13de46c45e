#![allow(dead_code)]

use nfrange::{ArrayConfig, ConfigTag, Scenario, TargetKind, TargetModel, Waveform};
use num_complex::Complex64;

pub const C: f64 = 299_792_458.0;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Straight transcription of the four propagation-distance formulas.
pub fn naive_distance(kind: TargetKind, fresnel: bool, r: f64, z: f64, y: f64) -> f64 {
    match (kind, fresnel) {
        (TargetKind::Pt, false) => (r * r + z * z).sqrt() + (r * r + y * y).sqrt(),
        (TargetKind::Et, false) => (4.0 * r * r + (z - y) * (z - y)).sqrt(),
        (TargetKind::Pt, true) => 2.0 * r + (z * z + y * y) / (2.0 * r),
        (TargetKind::Et, true) => 2.0 * r + (z - y) * (z - y) / (4.0 * r),
    }
}

/// Distance difference `d(ρ) - d(R)` in rationalized form, so the oracle is
/// not limited by cancellation between two ~2R quantities.
pub fn naive_difference(kind: TargetKind, fresnel: bool, rho: f64, r: f64, z: f64, y: f64) -> f64 {
    // Subtract the common 2ρ - 2R part analytically, then the small remainders.
    let rem = |x: f64| match (kind, fresnel) {
        (TargetKind::Pt, false) => z * z / ((x * x + z * z).sqrt() + x) + y * y / ((x * x + y * y).sqrt() + x),
        (TargetKind::Et, false) => (z - y) * (z - y) / ((4.0 * x * x + (z - y) * (z - y)).sqrt() + 2.0 * x),
        (TargetKind::Pt, true) => (z * z + y * y) / (2.0 * x),
        (TargetKind::Et, true) => (z - y) * (z - y) / (4.0 * x),
    };
    2.0 * (rho - r) + (rem(rho) - rem(r))
}

pub fn pairs(array: &ArrayConfig) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &y in array.rx_positions() {
        for &z in array.tx_positions() {
            out.push((z, y));
        }
    }
    out
}

/// Brute-force `|mean over pairs of exp(jkΔ) C(Δ/c)/E_c|`.
pub fn brute_chi(s: &Scenario, rho: f64, fresnel: bool, with_waveform: bool) -> f64 {
    let k = 2.0 * std::f64::consts::PI * s.carrier / C;
    let mut acc = Complex64::new(0.0, 0.0);
    for &y in s.array.rx_positions() {
        for &z in s.array.tx_positions() {
            let d = naive_difference(s.target.kind, fresnel, rho, s.range, z, y);
            let mut term = Complex64::new((k * d).cos(), (k * d).sin());
            if with_waveform {
                term *= s.waveform.autocorrelation(d / C) / s.waveform.energy();
            }
            acc += term;
        }
    }
    acc.norm() / s.array.n_pairs() as f64
}

pub fn tagged(tag: ConfigTag, n: usize, aperture: f64) -> ArrayConfig {
    ArrayConfig::tagged(tag, n, n, aperture).unwrap()
}

/// Sinc waveform, unit gain, SNR in dB, exact distances.
pub fn scenario(fc: f64, b: f64, range: f64, snr_db: f64, array: ArrayConfig, kind: TargetKind) -> Scenario {
    Scenario::with_snr_db(
        fc,
        range,
        snr_db,
        Waveform::cardinal_sine(b, 1.0).unwrap(),
        array,
        TargetModel::exact(kind),
    )
    .unwrap()
}

/// Adaptive Simpson on a real integrand.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Fresnel integral by adaptive quadrature of its definition, split into
/// unit panels so the oscillation is resolved.
pub fn fresnel_quad(x: f64) -> Complex64 {
    let (lo, hi, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (0.0, -x, -1.0) };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut re = 0.0;
    let mut im = 0.0;
    let panels = (hi - lo).ceil().max(1.0) as usize * 4;
    let h = (hi - lo) / panels as f64;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        let b = a + h;
        re += adaptive_simpson(&|t: f64| (half_pi * t * t).cos(), a, b, 1e-14);
        im += adaptive_simpson(&|t: f64| (half_pi * t * t).sin(), a, b, 1e-14);
    }
    Complex64::new(sign * re, sign * im)
}
