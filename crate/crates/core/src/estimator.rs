//! Received-signal synthesis, the maximum-likelihood range statistic and a
//! Monte Carlo harness comparing the estimator against the range bound.
//!
//! Each antenna pair gets its own record (orthogonal TDMA slots), so the
//! noise realizations are independent across pairs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crb::{crb_range, CrbMethod};
use crate::error::{ensure_positive, invalid, Error, Result};
use crate::geometry::{distance_unchecked, TargetModel, SPEED_OF_LIGHT};
use crate::scenario::Scenario;

/// Default sampling rate as a multiple of the bandwidth.
pub const DEFAULT_OVERSAMPLING: f64 = 8.0;

/// Hypothesis delays must stay this many `1/B` inside the record.
const COVERAGE_GUARD_LOBES: f64 = 8.0;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Noisy baseband records, one per antenna pair, rx-major
/// (`index = l' N_t + l`), all on the time grid `t0 + n / fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBatch {
    pub samples: Vec<Vec<Complex64>>,
    pub fs: f64,
    pub t0: f64,
    pub seed: u64,
}

impl ReceivedBatch {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.len().max(1) - 1) as f64 / self.fs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Record extends this many `1/B` beyond the earliest and latest pair
    /// delays.
    pub window_lobes: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { window_lobes: 256.0 }
    }
}

pub fn synthesize(s: &Scenario, fs: f64, seed: u64) -> Result<ReceivedBatch> {
    synthesize_with(s, fs, seed, &SynthesisOptions::default())
}

/// `u = ξ exp(-jkr) s(t - r/c) + w` per pair with exact distances; `w` is
/// complex white Gaussian noise with per-sample variance `γ_n f_s`.
pub fn synthesize_with(s: &Scenario, fs: f64, seed: u64, options: &SynthesisOptions) -> Result<ReceivedBatch> {
    s.validate()?;
    let b = s.waveform.bandwidth();
    if !(fs >= 2.0 * b) || !fs.is_finite() {
        return Err(invalid(format!("sampling rate {fs} Hz is below 2B = {} Hz", 2.0 * b)));
    }
    ensure_positive("window_lobes", options.window_lobes)?;
    let truth = TargetModel::exact(s.target.kind);
    let distances: Vec<f64> = s
        .array
        .pairs()
        .map(|(z, y)| distance_unchecked(truth, s.range, z, y))
        .collect();
    let d_min = distances.iter().cloned().fold(f64::INFINITY, f64::min) / SPEED_OF_LIGHT;
    let d_max = distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / SPEED_OF_LIGHT;
    let half = 0.5 * (d_max - d_min) + options.window_lobes / b;
    let n_samples = (2.0 * half * fs).ceil() as usize + 1;
    let t0 = 0.5 * (d_min + d_max) - 0.5 * (n_samples - 1) as f64 / fs;

    let k = s.wavenumber();
    let sigma = (0.5 * s.noise_psd * fs).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = distances
        .iter()
        .map(|&r| {
            let mut out = vec![Complex64::new(0.0, 0.0); n_samples];
            s.waveform.fill_delayed(t0, fs, r / SPEED_OF_LIGHT, &mut out);
            let a = s.gain * Complex64::from_polar(1.0, -k * r);
            for v in out.iter_mut() {
                *v *= a;
            }
            if sigma > 0.0 {
                for v in out.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *v += Complex64::new(sigma * re, sigma * im);
                }
            }
            out
        })
        .collect();
    Ok(ReceivedBatch { samples, fs, t0, seed })
}

/// `Λ(ρ)` under the scenario's own target model.
pub fn ml_statistic(batch: &ReceivedBatch, s: &Scenario, rho: f64) -> Result<f64> {
    ml_statistic_with(batch, s, s.target, rho)
}

/// `Λ(ρ) = |Σ∫ u μ*_ρ dt| / sqrt(Σ∫ |μ_ρ|² dt)` with the hypothesis signal
/// `μ_ρ = exp(-jk r(ρ)) s(t - r(ρ)/c)` built from `hypothesis`, which may
/// differ from the model that generated the data.
pub fn ml_statistic_with(batch: &ReceivedBatch, s: &Scenario, hypothesis: TargetModel, rho: f64) -> Result<f64> {
    let mut scratch = vec![Complex64::new(0.0, 0.0); batch.len()];
    statistic(batch, s, hypothesis, rho, &mut scratch)
}

fn statistic(
    batch: &ReceivedBatch,
    s: &Scenario,
    hypothesis: TargetModel,
    rho: f64,
    scratch: &mut [Complex64],
) -> Result<f64> {
    ensure_positive("rho", rho)?;
    if batch.samples.len() != s.array.n_pairs() {
        return Err(invalid(format!(
            "batch has {} records but the array has {} pairs",
            batch.samples.len(),
            s.array.n_pairs()
        )));
    }
    let guard = COVERAGE_GUARD_LOBES / s.waveform.bandwidth();
    let (lo, hi) = (batch.t0 + guard, batch.t_end() - guard);
    let k = s.wavenumber();
    let mut num = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for ((z, y), u) in s.array.pairs().zip(&batch.samples) {
        let r = distance_unchecked(hypothesis, rho, z, y);
        let delay = r / SPEED_OF_LIGHT;
        if delay < lo || delay > hi {
            return Err(Error::WindowCoverage(format!(
                "hypothesis delay {delay:e} s at rho = {rho} m is outside the record [{lo:e}, {hi:e}] s"
            )));
        }
        s.waveform.fill_delayed(batch.t0, batch.fs, delay, scratch);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut e = 0.0;
        for (x, p) in u.iter().zip(scratch.iter()) {
            acc += x * p.conj();
            e += p.norm_sqr();
        }
        // conj(exp(-jkr)) = exp(jkr)
        num += acc * Complex64::from_polar(1.0, k * r);
        energy += e;
    }
    let dt = 1.0 / batch.fs;
    Ok((num * dt).norm() / (energy * dt).sqrt())
}

/// Search interval and coarse step of the range estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub min: f64,
    pub max: f64,
    /// Coarse step; `c / (4B)` when absent.
    pub step: Option<f64>,
}

impl SearchGrid {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max, step: None }
    }

    /// `[centre - half_width, centre + half_width]`, clipped at zero.
    pub fn around(centre: f64, half_width: f64) -> Self {
        Self::new((centre - half_width).max(f64::MIN_POSITIVE), centre + half_width)
    }

    /// Coarse grid points for a waveform of bandwidth `b`.
    pub fn points(&self, b: f64) -> Result<Vec<f64>> {
        ensure_positive("grid min", self.min)?;
        if !(self.max > self.min) || !self.max.is_finite() {
            return Err(invalid(format!("grid max {} must exceed min {}", self.max, self.min)));
        }
        let step = self.coarse_step(b)?;
        let n = (((self.max - self.min) / step).ceil() as usize + 1).max(3);
        let h = (self.max - self.min) / (n - 1) as f64;
        Ok((0..n)
            .map(|i| if i + 1 == n { self.max } else { self.min + i as f64 * h })
            .collect())
    }

    pub fn coarse_step(&self, b: f64) -> Result<f64> {
        let step = self.step.unwrap_or(SPEED_OF_LIGHT / (4.0 * b));
        ensure_positive("grid step", step)?;
        Ok(step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub r_hat: f64,
    pub lambda_peak: f64,
    /// The coarse peak sat on the edge of the search interval.
    pub boundary: bool,
    /// Coarse-grid `(ρ, Λ(ρ))` pairs.
    pub evaluations: Option<Vec<(f64, f64)>>,
}

pub fn estimate_range(batch: &ReceivedBatch, s: &Scenario, grid: &SearchGrid) -> Result<EstimationResult> {
    estimate_range_with(batch, s, s.target, grid, false)
}

/// Coarse search over the grid, then golden-section refinement between
/// the neighbours of the coarse peak down to `1e-4` of the coarse step.
pub fn estimate_range_with(
    batch: &ReceivedBatch,
    s: &Scenario,
    hypothesis: TargetModel,
    grid: &SearchGrid,
    record: bool,
) -> Result<EstimationResult> {
    let b = s.waveform.bandwidth();
    let points = grid.points(b)?;
    let tol = 1e-4 * grid.coarse_step(b)?;
    let mut scratch = vec![Complex64::new(0.0, 0.0); batch.len()];
    let mut eval = |rho: f64| statistic(batch, s, hypothesis, rho, &mut scratch);

    let values = points.iter().map(|&rho| eval(rho)).collect::<Result<Vec<f64>>>()?;
    let (peak, _) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, &v)| if v > best.1 { (i, v) } else { best },
    );
    let boundary = peak == 0 || peak + 1 == points.len();
    if boundary {
        log::warn!(
            "range estimate at the edge of the search interval [{}, {}] m",
            grid.min,
            grid.max
        );
    }

    let mut best = (points[peak], values[peak]);
    let mut a = points[peak.saturating_sub(1)];
    let mut c = points[(peak + 1).min(points.len() - 1)];
    let mut x1 = c - GOLDEN * (c - a);
    let mut x2 = a + GOLDEN * (c - a);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    while c - a > tol {
        if f1 >= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - GOLDEN * (c - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (c - a);
            f2 = eval(x2)?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }

    Ok(EstimationResult {
        r_hat: best.0,
        lambda_peak: best.1,
        boundary,
        evaluations: record.then(|| points.into_iter().zip(values).collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub fs: f64,
    pub grid: SearchGrid,
    pub seed: u64,
    /// Record length beyond the delays, in `1/B`. Shorter than the
    /// synthesis default since only the peak region matters here.
    pub window_lobes: f64,
}

impl MonteCarloConfig {
    /// `f_s = 8B`, search interval `R ± 4 c/(2B)`.
    pub fn for_scenario(s: &Scenario, trials: usize, seed: u64) -> Self {
        let b = s.waveform.bandwidth();
        Self {
            trials,
            fs: DEFAULT_OVERSAMPLING * b,
            grid: SearchGrid::around(s.range, 4.0 * SPEED_OF_LIGHT / (2.0 * b)),
            seed,
            window_lobes: 32.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub r_hat: f64,
    pub error: f64,
    pub boundary: bool,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str = "trial,seed,r_hat,error,boundary";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.15e},{:.15e},{}",
            self.trial, self.seed, self.r_hat, self.error, self.boundary
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub rmse: f64,
    pub bias: f64,
    /// RMSE over trials whose error is inside the outlier gate.
    pub rmse_gated: f64,
    pub outlier_gate: f64,
    pub outlier_fraction: f64,
    /// Trials whose coarse peak was on the search boundary.
    pub boundary_failures: usize,
    /// Refinement resolution of the estimator, m.
    pub resolution: f64,
    /// Exact-sum range bound; absent for noise-free scenarios.
    pub crb: Option<f64>,
    /// `rmse_gated / sqrt(crb)`
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub records: Vec<TrialRecord>,
    pub summary: MonteCarloSummary,
}

/// Independent trials in parallel; trial `t` draws its noise from seed
/// `seed ^ t`, and results are reduced in trial order, so the outcome does
/// not depend on scheduling.
pub fn monte_carlo(s: &Scenario, config: &MonteCarloConfig) -> Result<MonteCarloResult> {
    if config.trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    s.validate()?;
    let b = s.waveform.bandwidth();
    let options = SynthesisOptions {
        window_lobes: config.window_lobes,
    };
    let records = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = config.seed ^ t as u64;
            let batch = synthesize_with(s, config.fs, seed, &options)?;
            let est = estimate_range(&batch, s, &config.grid)?;
            Ok(TrialRecord {
                trial: t,
                seed,
                r_hat: est.r_hat,
                error: est.r_hat - s.range,
                boundary: est.boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = records.len() as f64;
    let bias = records.iter().map(|r| r.error).sum::<f64>() / n;
    let rmse = (records.iter().map(|r| r.error * r.error).sum::<f64>() / n).sqrt();
    let gate = 3.0 * SPEED_OF_LIGHT / (2.0 * b);
    let inliers: Vec<f64> = records.iter().map(|r| r.error).filter(|e| e.abs() <= gate).collect();
    let rmse_gated = if inliers.is_empty() {
        f64::NAN
    } else {
        (inliers.iter().map(|e| e * e).sum::<f64>() / inliers.len() as f64).sqrt()
    };
    let boundary_failures = records.iter().filter(|r| r.boundary).count();
    if boundary_failures > 0 {
        log::warn!(
            "{boundary_failures} of {} trials peaked on the search boundary",
            records.len()
        );
    }
    let crb = if s.noise_psd > 0.0 {
        Some(crb_range(s, CrbMethod::ExactSum)?.crb)
    } else {
        None
    };
    let summary = MonteCarloSummary {
        trials: records.len(),
        rmse,
        bias,
        rmse_gated,
        outlier_gate: gate,
        outlier_fraction: 1.0 - inliers.len() as f64 / n,
        boundary_failures,
        resolution: 1e-4 * config.grid.coarse_step(b)?,
        crb,
        ratio: crb.map(|c| rmse_gated / c.sqrt()),
    };
    Ok(MonteCarloResult { records, summary })
}
