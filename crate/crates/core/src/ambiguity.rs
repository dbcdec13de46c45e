//! Normalized ambiguity functions of the ML range estimator.
//!
//! The exact function sums, over antenna pairs, the carrier phase
//! difference times the waveform autocorrelation at the pair's delay
//! difference. Far enough from the array it factors into a waveform term
//! `χ_C(ρ-R) = |C(2(ρ-R)/c)| / E_c` and a phase term computed with Fresnel
//! distances, and with dense arrays the phase term has closed forms in
//! the Fresnel integral.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::geometry::{
    distance_difference, ConfigTag, DistanceMode, Geometry, TargetKind, TargetModel, SPEED_OF_LIGHT,
};
use crate::scenario::Scenario;
use crate::special::{fresnel, sinc};

const BETA_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityMethod {
    /// Pairwise sum with exact distances.
    Exact,
    /// Waveform factor times discrete Fresnel phase factor.
    Product,
    /// Waveform factor times the closed-form phase factor.
    Analytic,
    /// ET truth, PT hypothesis, SIMO: waveform factor times closed form in γ.
    Mismatch,
}

impl AmbiguityMethod {
    pub fn name(self) -> &'static str {
        match self {
            AmbiguityMethod::Exact => "exact",
            AmbiguityMethod::Product => "product",
            AmbiguityMethod::Analytic => "analytic",
            AmbiguityMethod::Mismatch => "mismatch",
        }
    }
}

impl fmt::Display for AmbiguityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AmbiguityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(AmbiguityMethod::Exact),
            "product" => Ok(AmbiguityMethod::Product),
            "analytic" => Ok(AmbiguityMethod::Analytic),
            "mismatch" => Ok(AmbiguityMethod::Mismatch),
            other => Err(invalid(format!("unknown ambiguity method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySample {
    pub rho: f64,
    pub chi_total: f64,
    pub chi_waveform: Option<f64>,
    pub chi_phase: Option<f64>,
    pub method: AmbiguityMethod,
}

impl AmbiguitySample {
    pub const CSV_HEADER: &'static str = "rho,chi_total,chi_waveform,chi_phase,method";

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        format!(
            "{:.12e},{:.12e},{},{},{}",
            self.rho,
            self.chi_total,
            opt(self.chi_waveform),
            opt(self.chi_phase),
            self.method
        )
    }
}

fn check_rho(rho: f64) -> Result<()> {
    ensure_positive("hypothesized range rho", rho)
}

/// Exact normalized ambiguity `χ(ρ, R)`.
pub fn chi_exact(s: &Scenario, rho: f64) -> Result<AmbiguitySample> {
    check_rho(rho)?;
    let model = TargetModel::exact(s.target.kind);
    let k = s.wavenumber();
    let e = s.waveform.energy();
    let sum: Complex64 = s
        .array
        .pairs()
        .map(|(z, y)| {
            let d = distance_difference(model, rho, s.range, z, y);
            Complex64::from_polar(1.0, k * d) * s.waveform.autocorrelation(d / SPEED_OF_LIGHT) / e
        })
        .sum();
    Ok(AmbiguitySample {
        rho,
        chi_total: sum.norm() / s.array.n_pairs() as f64,
        chi_waveform: None,
        chi_phase: None,
        method: AmbiguityMethod::Exact,
    })
}

/// Discrete phase ambiguity with Fresnel distances, for a given pair of
/// truth and hypothesis target models.
pub fn chi_phase_between(s: &Scenario, truth: TargetKind, hypothesis: TargetKind, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let k = s.wavenumber();
    let truth = TargetModel::fresnel(truth);
    let hyp = TargetModel::fresnel(hypothesis);
    let sum: Complex64 = s
        .array
        .pairs()
        .map(|(z, y)| {
            let d = if truth == hyp {
                distance_difference(hyp, rho, s.range, z, y)
            } else {
                // Common 2(ρ - R) term only rotates the sum.
                let qh = crate::geometry::distance_unchecked(hyp, rho, z, y) - 2.0 * rho;
                let qt = crate::geometry::distance_unchecked(truth, s.range, z, y) - 2.0 * s.range;
                qh - qt
            };
            Complex64::from_polar(1.0, k * d)
        })
        .sum();
    Ok((sum.norm() / s.array.n_pairs() as f64).min(1.0))
}

/// Phase-shift ambiguity `χ_Δφ(ρ, R)` with Fresnel distances.
pub fn chi_phase(s: &Scenario, rho: f64) -> Result<f64> {
    chi_phase_between(s, s.target.kind, s.target.kind, rho)
}

/// Waveform-only ambiguity `χ_C(ρ - R)`.
pub fn chi_waveform(s: &Scenario, rho: f64) -> f64 {
    let tau = 2.0 * (rho - s.range) / SPEED_OF_LIGHT;
    (s.waveform.autocorrelation(tau).norm() / s.waveform.energy()).min(1.0)
}

fn warn_assumptions(s: &Scenario) {
    let a = s.assumptions();
    if !a.range_vs_aperture {
        log::warn!(
            "range {} m is below 1.2 D = {} m; Fresnel distances are inaccurate",
            s.range,
            1.2 * s.array.aperture()
        );
    }
    if !a.range_vs_bandwidth {
        log::warn!(
            "range {} m is below R_D B / f_c = {} m; waveform and phase terms do not factor",
            s.range,
            s.rayleigh_distance() * s.waveform.bandwidth() / s.carrier
        );
    }
}

/// Product approximation `χ_C(ρ - R) χ_Δφ(ρ, R)`.
pub fn chi_product(s: &Scenario, rho: f64) -> Result<AmbiguitySample> {
    check_rho(rho)?;
    warn_assumptions(s);
    let w = chi_waveform(s, rho);
    let p = chi_phase(s, rho)?;
    Ok(AmbiguitySample {
        rho,
        chi_total: w * p,
        chi_waveform: Some(w),
        chi_phase: Some(p),
        method: AmbiguityMethod::Product,
    })
}

/// `β = sqrt(R_D |1/ρ - 1/R|)`.
pub fn beta_param(rho: f64, range: f64, rayleigh: f64) -> Result<f64> {
    check_rho(rho)?;
    ensure_positive("range", range)?;
    if !(rayleigh.is_finite() && rayleigh >= 0.0) {
        return Err(invalid("Rayleigh distance must be finite and >= 0"));
    }
    Ok((rayleigh * ((range - rho) / (rho * range)).abs()).sqrt())
}

/// `γ = sqrt(R_D |2/ρ - 1/R|)`, the mismatch counterpart of `β`.
pub fn gamma_param(rho: f64, range: f64, rayleigh: f64) -> Result<f64> {
    check_rho(rho)?;
    ensure_positive("range", range)?;
    Ok((rayleigh * ((2.0 * range - rho) / (rho * range)).abs()).sqrt())
}

/// `|2 F(β/2) / β|`, the one-dimensional aperture phase ambiguity.
pub fn chi_phase_line(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if beta < BETA_LIMIT {
        return Ok(1.0);
    }
    Ok((fresnel(0.5 * beta)? * (2.0 / beta)).norm().min(1.0))
}

/// `|2 F(β)/β - exp(jπβ²/4) sinc(β²/4)|`, the transmit-receive difference
/// aperture phase ambiguity.
pub fn chi_phase_difference(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if beta < BETA_LIMIT {
        return Ok(1.0);
    }
    let b2 = beta * beta;
    let v = fresnel(beta)? * (2.0 / beta) - Complex64::from_polar(sinc(0.25 * b2), 0.25 * PI * b2);
    Ok(v.norm().min(1.0))
}

/// Closed-form phase ambiguity as a function of `β` for the four
/// target/layout combinations.
pub fn chi_phase_analytic(geometry: Geometry, beta: f64) -> Result<f64> {
    match geometry {
        Geometry::PtSimo => chi_phase_line(beta),
        Geometry::PtMimo => chi_phase_line(beta).map(|v| v * v),
        Geometry::EtSimo => chi_phase_line(beta / SQRT_2),
        Geometry::EtMimo => chi_phase_difference(beta / SQRT_2),
    }
}

/// Waveform factor times the closed-form phase factor at `β(ρ)`.
pub fn chi_analytic(s: &Scenario, rho: f64) -> Result<AmbiguitySample> {
    check_rho(rho)?;
    let geometry = s.geometry()?;
    let beta = beta_param(rho, s.range, s.rayleigh_distance())?;
    let w = chi_waveform(s, rho);
    let p = chi_phase_analytic(geometry, beta)?;
    Ok(AmbiguitySample {
        rho,
        chi_total: w * p,
        chi_waveform: Some(w),
        chi_phase: Some(p),
        method: AmbiguityMethod::Analytic,
    })
}

/// Ambiguity when an extended target is ranged with the point-target model
/// (SIMO only). The phase factor peaks at `ρ = 2R`.
pub fn chi_mismatch(s: &Scenario, rho: f64) -> Result<AmbiguitySample> {
    check_rho(rho)?;
    if s.array.tag() != ConfigTag::Simo {
        return Err(Error::UnsupportedConfiguration(
            "model-mismatch ambiguity is available for SIMO layouts only".into(),
        ));
    }
    if s.target.kind != TargetKind::Et {
        return Err(Error::UnsupportedConfiguration(
            "model-mismatch ambiguity expects an extended-target truth".into(),
        ));
    }
    let gamma = gamma_param(rho, s.range, s.rayleigh_distance())?;
    let w = chi_waveform(s, rho);
    let p = chi_phase_line(gamma / SQRT_2)?;
    Ok(AmbiguitySample {
        rho,
        chi_total: w * p,
        chi_waveform: Some(w),
        chi_phase: Some(p),
        method: AmbiguityMethod::Mismatch,
    })
}

pub fn evaluate(s: &Scenario, rho: f64, method: AmbiguityMethod) -> Result<AmbiguitySample> {
    match method {
        AmbiguityMethod::Exact => chi_exact(s, rho),
        AmbiguityMethod::Product => chi_product(s, rho),
        AmbiguityMethod::Analytic => chi_analytic(s, rho),
        AmbiguityMethod::Mismatch => chi_mismatch(s, rho),
    }
}

/// Evaluates `method` on every point of a non-empty increasing grid.
pub fn ambiguity_surface(s: &Scenario, rho_grid: &[f64], method: AmbiguityMethod) -> Result<Vec<AmbiguitySample>> {
    if rho_grid.is_empty() {
        return Err(invalid("rho grid is empty"));
    }
    if rho_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("rho grid must be strictly increasing"));
    }
    if s.target.distance_mode != DistanceMode::Exact && method == AmbiguityMethod::Exact {
        log::debug!("exact ambiguity ignores the scenario's Fresnel distance mode");
    }
    rho_grid.par_iter().map(|&rho| evaluate(s, rho, method)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayConfig;
    use crate::waveform::Waveform;

    fn scenario(target: TargetKind, array: ArrayConfig, range: f64) -> Scenario {
        Scenario::with_snr_db(
            24e9,
            range,
            10.0,
            Waveform::cardinal_sine(100e6, 1.0).unwrap(),
            array,
            TargetModel::exact(target),
        )
        .unwrap()
    }

    #[test]
    fn matched_hypothesis_is_one() {
        let s = scenario(TargetKind::Et, ArrayConfig::mimo(5, 7, 1.5).unwrap(), 12.0);
        assert_eq!(chi_exact(&s, 12.0).unwrap().chi_total, 1.0);
        assert_eq!(chi_phase(&s, 12.0).unwrap(), 1.0);
        let p = chi_product(&s, 12.0).unwrap();
        assert_eq!((p.chi_total, p.chi_waveform, p.chi_phase), (1.0, Some(1.0), Some(1.0)));
        assert!(chi_exact(&s, 0.0).is_err());
        assert!(chi_phase(&s, -1.0).is_err());
    }

    #[test]
    fn single_pair_is_waveform_only() {
        let array = ArrayConfig::custom(vec![0.2], vec![-0.4]).unwrap();
        let s = scenario(TargetKind::Pt, array, 5.0);
        for &rho in &[4.0f64, 5.3, 6.1] {
            let z = 0.2_f64;
            let y = -0.4_f64;
            let d = (rho.hypot(z) + rho.hypot(y)) - (5.0_f64.hypot(z) + 5.0_f64.hypot(y));
            let expect = s.waveform.autocorrelation(d / SPEED_OF_LIGHT).norm();
            assert!((chi_exact(&s, rho).unwrap().chi_total - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn waveform_zero_kills_product() {
        let s = scenario(TargetKind::Pt, ArrayConfig::simo(16, 1.5).unwrap(), 30.0);
        let rho = 30.0 + SPEED_OF_LIGHT / (2.0 * 100e6);
        let p = chi_product(&s, rho).unwrap();
        assert!(p.chi_waveform.unwrap() < 1e-12);
        assert!(p.chi_total < 1e-12);
    }

    #[test]
    fn vanishing_carrier_has_flat_phase() {
        let mut s = scenario(TargetKind::Pt, ArrayConfig::mimo(25, 25, 1.5).unwrap(), 3.0);
        s.carrier = 1.0;
        for &rho in &[2.0, 3.5, 10.0] {
            assert!((chi_phase(&s, rho).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_param(7.0, 7.0, 100.0).unwrap(), 0.0);
        assert!((beta_param(50.0, 100.0, 100.0).unwrap() - 1.0).abs() < 1e-15);
        // |1/ρ - 1/R| = 0.01 in both orderings
        let a = beta_param(50.0, 100.0, 100.0).unwrap();
        let b = beta_param(100.0, 50.0, 100.0).unwrap();
        assert_eq!(a, b);
        assert!(beta_param(0.0, 1.0, 1.0).is_err());
        assert!(beta_param(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn analytic_limits_and_structure() {
        for g in Geometry::ALL {
            assert_eq!(chi_phase_analytic(g, 0.0).unwrap(), 1.0);
            assert!((chi_phase_analytic(g, 2e-6).unwrap() - 1.0).abs() < 1e-9);
        }
        for &b in &[0.3, 1.0, 2.5, 4.0, 7.9] {
            let simo = chi_phase_analytic(Geometry::PtSimo, b).unwrap();
            let mimo = chi_phase_analytic(Geometry::PtMimo, b).unwrap();
            assert!((mimo - simo * simo).abs() < 1e-15);
            let et = chi_phase_analytic(Geometry::EtSimo, b).unwrap();
            assert_eq!(et, chi_phase_analytic(Geometry::PtSimo, b / SQRT_2).unwrap());
        }
        assert!(chi_phase_analytic(Geometry::EtMimo, -0.1).is_err());
    }

    #[test]
    fn mismatch_peaks_at_double_range() {
        let s = scenario(TargetKind::Et, ArrayConfig::simo(64, 1.5).unwrap(), 10.0);
        let at2r = chi_mismatch(&s, 20.0).unwrap();
        assert_eq!(at2r.chi_phase, Some(1.0));
        let atr = chi_mismatch(&s, 10.0).unwrap();
        assert!(atr.chi_phase.unwrap() < 1.0);
        assert_eq!(atr.chi_waveform, Some(1.0));

        let mimo = scenario(TargetKind::Et, ArrayConfig::mimo(4, 4, 1.5).unwrap(), 10.0);
        assert!(matches!(
            chi_mismatch(&mimo, 20.0),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn surface_is_a_map() {
        let s = scenario(TargetKind::Et, ArrayConfig::simo(16, 1.5).unwrap(), 30.0);
        let single = ambiguity_surface(&s, &[30.0], AmbiguityMethod::Exact).unwrap();
        assert_eq!(single[0].chi_total, 1.0);
        let grid = [29.5, 30.2, 31.0];
        for method in [
            AmbiguityMethod::Exact,
            AmbiguityMethod::Product,
            AmbiguityMethod::Analytic,
            AmbiguityMethod::Mismatch,
        ] {
            let batch = ambiguity_surface(&s, &grid, method).unwrap();
            for (sample, &rho) in batch.iter().zip(&grid) {
                assert_eq!(*sample, evaluate(&s, rho, method).unwrap());
            }
        }
        assert!(ambiguity_surface(&s, &[], AmbiguityMethod::Exact).is_err());
        assert!(ambiguity_surface(&s, &[2.0, 1.0], AmbiguityMethod::Exact).is_err());
    }

    #[test]
    fn csv_row_format() {
        let row = AmbiguitySample {
            rho: 1.0,
            chi_total: 0.5,
            chi_waveform: None,
            chi_phase: Some(0.5),
            method: AmbiguityMethod::Exact,
        }
        .to_csv_row();
        assert_eq!(row.split(',').count(), 5);
        assert!(row.ends_with(",exact"));
        assert!(row.contains(",,"));
    }
}
