//! Baseband waveform descriptors.
//!
//! A waveform is described in the frequency domain by its energy spectral
//! density `|S(f)|²`, supported on `[-B/2, B/2]`. The autocorrelation
//! `C(τ) = ∫ |S(f)|² exp(j2πfτ) df` and a zero-phase pulse
//! `s(t) = ∫ |S(f)| exp(j2πft) df` are derived from it, so every descriptor
//! comes from the same spectrum.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::special::{sin_pi, sinc};

/// Default number of quadrature points for the spectral moments.
pub const DEFAULT_QUADRATURE_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    CardinalSine,
    Custom,
}

/// Tabulation settings for custom (spectrum-defined) waveforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomOptions {
    /// Lag/time grid step is `1 / (oversampling * B)`.
    pub oversampling: usize,
    /// Tabulated support of `C(τ)` and `s(t)` is `±span_lobes / B`.
    pub span_lobes: usize,
}

impl Default for CustomOptions {
    fn default() -> Self {
        Self {
            oversampling: 16,
            span_lobes: 64,
        }
    }
}

#[derive(Debug, Clone)]
struct Tabulated {
    /// `|S(f)|²` on a uniform grid over `[-B/2, B/2]`.
    spectrum: Vec<f64>,
    /// Grid step of both the lag and the time tables.
    step: f64,
    /// `C(τ)` on `τ = (m - half) * step`.
    autocorr: Vec<Complex64>,
    /// `s(t)` on `t = (m - half) * step`.
    pulse: Vec<Complex64>,
    half: usize,
}

#[derive(Debug, Clone)]
pub struct Waveform {
    bandwidth: f64,
    energy: f64,
    table: Option<Box<Tabulated>>,
}

impl Waveform {
    /// Cardinal-sine pulse: flat spectrum `E_c / B` on `[-B/2, B/2]` and
    /// `C(τ) = E_c sinc(Bτ)`.
    pub fn cardinal_sine(bandwidth: f64, energy: f64) -> Result<Self> {
        ensure_positive("bandwidth", bandwidth)?;
        ensure_positive("energy", energy)?;
        Ok(Self {
            bandwidth,
            energy,
            table: None,
        })
    }

    /// Waveform defined by `|S(f)|²` samples on a uniform grid spanning
    /// exactly `[-B/2, B/2]`.
    ///
    /// When `energy` is given the spectrum is rescaled so that its
    /// integral equals it; otherwise the energy is the integral itself.
    pub fn from_spectrum(bandwidth: f64, spectrum: Vec<f64>, energy: Option<f64>) -> Result<Self> {
        Self::from_spectrum_with(bandwidth, spectrum, energy, CustomOptions::default())
    }

    pub fn from_spectrum_with(
        bandwidth: f64,
        mut spectrum: Vec<f64>,
        energy: Option<f64>,
        options: CustomOptions,
    ) -> Result<Self> {
        ensure_positive("bandwidth", bandwidth)?;
        if spectrum.len() < 2 {
            return Err(invalid("spectrum needs at least two samples"));
        }
        if spectrum.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("spectrum samples must be finite and non-negative"));
        }
        if options.oversampling < 2 || options.span_lobes < 1 {
            return Err(invalid("oversampling must be >= 2 and span_lobes >= 1"));
        }
        let df = bandwidth / (spectrum.len() - 1) as f64;
        let integral = trapezoid(&spectrum, df);
        ensure_positive("spectrum integral", integral)?;
        let energy = match energy {
            Some(e) => {
                ensure_positive("energy", e)?;
                let scale = e / integral;
                spectrum.iter_mut().for_each(|v| *v *= scale);
                e
            }
            None => integral,
        };

        let step = 1.0 / (options.oversampling as f64 * bandwidth);
        let lags = options.span_lobes * options.oversampling;
        let f0 = -0.5 * bandwidth;
        let weights = trapezoid_weights(spectrum.len(), df);

        let positive: Vec<Complex64> = (0..=lags)
            .map(|m| fourier_sum(&spectrum, &weights, f0, df, m as f64 * step))
            .collect();
        let autocorr: Vec<Complex64> = (0..=2 * lags)
            .map(|m| match m.cmp(&lags) {
                std::cmp::Ordering::Less => positive[lags - m].conj(),
                std::cmp::Ordering::Equal => Complex64::new(energy, 0.0),
                std::cmp::Ordering::Greater => positive[m - lags],
            })
            .collect();

        let magnitude: Vec<f64> = spectrum.iter().map(|v| v.sqrt()).collect();
        let pulse: Vec<Complex64> = (0..=2 * lags)
            .map(|m| fourier_sum(&magnitude, &weights, f0, df, (m as f64 - lags as f64) * step))
            .collect();

        Ok(Self {
            bandwidth,
            energy,
            table: Some(Box::new(Tabulated {
                spectrum,
                step,
                autocorr,
                pulse,
                half: lags,
            })),
        })
    }

    /// Reads a two-column text file (`frequency_hz  |S(f)|²`); lines
    /// starting with `#` are ignored. The frequency grid must be uniform
    /// and symmetric about zero.
    pub fn load_spectrum(path: impl AsRef<Path>, energy: Option<f64>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(parse_err(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| parse_err(format!("line {}: {e}", lineno + 1)))
            };
            freqs.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        if freqs.len() < 2 {
            return Err(parse_err("fewer than two spectrum samples".into()));
        }
        let span = freqs[freqs.len() - 1] - freqs[0];
        if span <= 0.0 {
            return Err(parse_err("frequencies must be increasing".into()));
        }
        let df = span / (freqs.len() - 1) as f64;
        for (i, f) in freqs.iter().enumerate() {
            if (f - (freqs[0] + i as f64 * df)).abs() > 1e-6 * df {
                return Err(parse_err(format!("frequency grid is not uniform at sample {i}")));
            }
        }
        if (freqs[0] + freqs[freqs.len() - 1]).abs() > 1e-6 * span {
            return Err(parse_err("frequency grid must be symmetric about 0 Hz".into()));
        }
        Self::from_spectrum(span, values, energy)
    }

    pub fn kind(&self) -> WaveformKind {
        if self.table.is_some() {
            WaveformKind::Custom
        } else {
            WaveformKind::CardinalSine
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `E_c = C(0)`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Energy spectral density `|S(f)|²`.
    pub fn spectral_density(&self, f: f64) -> f64 {
        let half = 0.5 * self.bandwidth;
        if f.abs() > half {
            return 0.0;
        }
        match &self.table {
            None => self.energy / self.bandwidth,
            Some(t) => {
                let df = self.bandwidth / (t.spectrum.len() - 1) as f64;
                let x = (f + half) / df;
                let i = (x.floor() as usize).min(t.spectrum.len() - 2);
                let frac = x - i as f64;
                t.spectrum[i] * (1.0 - frac) + t.spectrum[i + 1] * frac
            }
        }
    }

    /// Spectrum samples and grid step used by the moment quadratures.
    fn quadrature_grid(&self, points: usize) -> (Vec<f64>, f64) {
        match &self.table {
            Some(t) => (t.spectrum.clone(), self.bandwidth / (t.spectrum.len() - 1) as f64),
            None => {
                let n = points.max(2);
                (vec![self.energy / self.bandwidth; n], self.bandwidth / (n - 1) as f64)
            }
        }
    }

    /// Zeroth, first and second (central) spectral moments by trapezoid
    /// quadrature.
    fn moments(&self, points: usize) -> (f64, f64, f64) {
        let (spectrum, df) = self.quadrature_grid(points);
        let f0 = -0.5 * self.bandwidth;
        let w = trapezoid_weights(spectrum.len(), df);
        let freq = |i: usize| f0 + i as f64 * df;
        let e: f64 = spectrum.iter().zip(&w).map(|(p, w)| p * w).sum();
        let m1 = spectrum
            .iter()
            .zip(&w)
            .enumerate()
            .map(|(i, (p, w))| freq(i) * p * w)
            .sum::<f64>()
            / e;
        let m2 = spectrum
            .iter()
            .zip(&w)
            .enumerate()
            .map(|(i, (p, w))| (freq(i) - m1).powi(2) * p * w)
            .sum::<f64>()
            / e;
        (e, m1, m2)
    }

    /// `(1/E_c) ∫ |S(f)|² df` evaluated numerically; one for a consistent waveform.
    pub fn normalized_spectral_energy(&self) -> f64 {
        self.moments(DEFAULT_QUADRATURE_POINTS).0 / self.energy
    }

    /// Central frequency `f_M`, the first spectral moment.
    pub fn central_frequency(&self) -> f64 {
        self.moments(DEFAULT_QUADRATURE_POINTS).1
    }

    /// RMS bandwidth `B_RMS`, the spectral standard deviation around `f_M`.
    pub fn rms_bandwidth(&self) -> f64 {
        self.moments(DEFAULT_QUADRATURE_POINTS).2.sqrt()
    }

    /// Same as [`central_frequency`](Self::central_frequency) and
    /// [`rms_bandwidth`](Self::rms_bandwidth) with an explicit quadrature
    /// size (ignored for custom waveforms, which use their own grid).
    pub fn spectral_descriptors(&self, points: usize) -> (f64, f64) {
        let (_, fm, var) = self.moments(points);
        (fm, var.sqrt())
    }

    /// Autocorrelation `C(τ)`; exact for the cardinal sine, band-limited
    /// interpolation of the lag table for custom waveforms, zero beyond
    /// the tabulated support.
    pub fn autocorrelation(&self, tau: f64) -> Complex64 {
        match &self.table {
            None => Complex64::new(self.energy * sinc(self.bandwidth * tau), 0.0),
            Some(t) => {
                let v = table_interp(&t.autocorr, tau / t.step + t.half as f64);
                let mag = v.norm();
                if mag > self.energy {
                    v * (self.energy / mag)
                } else {
                    v
                }
            }
        }
    }

    /// Zero-phase baseband pulse `s(t)` with energy `E_c`.
    pub fn pulse(&self, t: f64) -> Complex64 {
        match &self.table {
            None => Complex64::new((self.energy * self.bandwidth).sqrt() * sinc(self.bandwidth * t), 0.0),
            Some(tab) => table_interp(&tab.pulse, t / tab.step + tab.half as f64),
        }
    }

    /// Writes `s(t0 + n/fs - delay)` for `n = 0..out.len()`.
    pub fn fill_delayed(&self, t0: f64, fs: f64, delay: f64, out: &mut [Complex64]) {
        match &self.table {
            None => fill_sinc(self.energy, self.bandwidth, t0 - delay, fs, out),
            Some(_) => {
                for (n, v) in out.iter_mut().enumerate() {
                    *v = self.pulse(t0 + n as f64 / fs - delay);
                }
            }
        }
    }
}

/// `sqrt(E B) sinc(B (start + n/fs))` via a phase recurrence, re-anchored
/// every block so rounding does not accumulate.
fn fill_sinc(energy: f64, bandwidth: f64, start: f64, fs: f64, out: &mut [Complex64]) {
    const BLOCK: usize = 256;
    let amp = (energy * bandwidth).sqrt();
    let dt = 1.0 / fs;
    let rot = Complex64::from_polar(1.0, PI * bandwidth * dt);
    for (b, chunk) in out.chunks_mut(BLOCK).enumerate() {
        let first = b * BLOCK;
        let x0 = bandwidth * (start + first as f64 * dt);
        let mut phasor = Complex64::new((PI * (x0 - x0.round())).cos(), sin_pi(x0));
        if x0.round().rem_euclid(2.0) != 0.0 {
            phasor.re = -phasor.re;
        }
        for (i, v) in chunk.iter_mut().enumerate() {
            let x = bandwidth * (start + (first + i) as f64 * dt);
            let s = if x.abs() < 1e-4 { sinc(x) } else { phasor.im / (PI * x) };
            *v = Complex64::new(amp * s, 0.0);
            phasor *= rot;
        }
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    values
        .iter()
        .zip(trapezoid_weights(values.len(), h))
        .map(|(v, w)| v * w)
        .sum()
}

/// `Σ w_i v_i exp(j2π f_i x)` over the uniform grid `f_i = f0 + i df`.
fn fourier_sum(values: &[f64], weights: &[f64], f0: f64, df: f64, x: f64) -> Complex64 {
    const BLOCK: usize = 512;
    let rot = Complex64::from_polar(1.0, 2.0 * PI * df * x);
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, (vals, ws)) in values.chunks(BLOCK).zip(weights.chunks(BLOCK)).enumerate() {
        let f = f0 + (b * BLOCK) as f64 * df;
        let mut phasor = Complex64::from_polar(1.0, 2.0 * PI * f * x);
        for (v, w) in vals.iter().zip(ws) {
            acc += phasor * (v * w);
            phasor *= rot;
        }
    }
    acc
}

const INTERP_HALF_POINTS: isize = 4;

/// 8-point Lagrange interpolation of a table sampled well above Nyquist;
/// `x` in table units, zero outside the table.
fn table_interp(table: &[Complex64], x: f64) -> Complex64 {
    let n = table.len() as isize;
    if !(x >= 0.0 && x <= (n - 1) as f64) {
        return Complex64::new(0.0, 0.0);
    }
    let base = x.floor() as isize;
    let nodes = (base - INTERP_HALF_POINTS + 1)..=(base + INTERP_HALF_POINTS);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in nodes.clone() {
        if i < 0 || i >= n {
            continue;
        }
        let w: f64 = nodes
            .clone()
            .filter(|&j| j != i)
            .map(|j| (x - j as f64) / (i - j) as f64)
            .product();
        acc += table[i as usize] * w;
    }
    acc
}
