use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure_positive, invalid, Result};
use crate::geometry::{rayleigh_distance, ArrayConfig, Geometry, TargetModel, SPEED_OF_LIGHT};
use crate::waveform::Waveform;

/// Full experiment description: carrier, true range, complex gain, noise
/// level, waveform, antenna layout and target model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub carrier: f64,
    pub range: f64,
    pub gain: Complex64,
    /// Noise power spectral density `γ_n`.
    pub noise_psd: f64,
    pub waveform: Waveform,
    pub array: ArrayConfig,
    pub target: TargetModel,
}

/// Validity of the two far-from-array assumptions behind the product
/// form of the ambiguity function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assumptions {
    /// `R >= 1.2 D`
    pub range_vs_aperture: bool,
    /// `R >= R_D B / f_c`
    pub range_vs_bandwidth: bool,
}

impl Assumptions {
    pub fn all_hold(&self) -> bool {
        self.range_vs_aperture && self.range_vs_bandwidth
    }
}

impl Scenario {
    pub fn new(
        carrier: f64,
        range: f64,
        gain: Complex64,
        noise_psd: f64,
        waveform: Waveform,
        array: ArrayConfig,
        target: TargetModel,
    ) -> Result<Self> {
        let s = Self {
            carrier,
            range,
            gain,
            noise_psd,
            waveform,
            array,
            target,
        };
        s.validate()?;
        Ok(s)
    }

    /// Unit gain and unit-energy waveform, noise set from the SNR in dB
    /// (`+inf` gives a noise-free scenario).
    pub fn with_snr_db(
        carrier: f64,
        range: f64,
        snr_db: f64,
        waveform: Waveform,
        array: ArrayConfig,
        target: TargetModel,
    ) -> Result<Self> {
        if snr_db.is_nan() {
            return Err(invalid("SNR must not be NaN"));
        }
        let noise_psd = waveform.energy() * 10f64.powf(-snr_db / 10.0);
        Self::new(
            carrier,
            range,
            Complex64::new(1.0, 0.0),
            noise_psd,
            waveform,
            array,
            target,
        )
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("carrier frequency", self.carrier)?;
        ensure_positive("range", self.range)?;
        if !(self.noise_psd >= 0.0) || self.noise_psd.is_infinite() {
            return Err(invalid(format!(
                "noise PSD must be finite and >= 0, got {}",
                self.noise_psd
            )));
        }
        if !(self.gain.re.is_finite() && self.gain.im.is_finite()) {
            return Err(invalid("gain must be finite"));
        }
        Ok(())
    }

    /// Returns a copy with a different range.
    pub fn at_range(&self, range: f64) -> Self {
        Self { range, ..self.clone() }
    }

    /// `k = 2π f_c / c`
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI * self.carrier / SPEED_OF_LIGHT
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// `|ξ|² E_c / γ_n`; infinite for a noise-free scenario.
    pub fn snr(&self) -> f64 {
        self.gain.norm_sqr() * self.waveform.energy() / self.noise_psd
    }

    pub fn rayleigh_distance(&self) -> f64 {
        rayleigh_distance(self.array.aperture(), self.carrier).unwrap_or(0.0)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.target.kind, self.array.tag())
    }

    pub fn assumptions(&self) -> Assumptions {
        let d = self.array.aperture();
        Assumptions {
            range_vs_aperture: self.range >= 1.2 * d,
            range_vs_bandwidth: self.range >= self.rayleigh_distance() * self.waveform.bandwidth() / self.carrier,
        }
    }
}
