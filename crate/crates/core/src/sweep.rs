//! Parameter sweeps: bound versus range, the
//! near-field term versus `R/D`, and the closed-form phase ambiguity
//! versus `β`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::chi_phase_analytic;
use crate::crb::{
    alpha_factor, crb_range, effective_nf_range, eta_beta_analytic, eta_beta_exact, CrbMethod, TAYLOR_DENOMINATOR,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{ArrayConfig, Geometry};
use crate::scenario::Scenario;

/// Parses a number with an optional SI suffix: `24G`, `100M`, `2.5k`,
/// `30m` (milli), `1u`, `5n`, `inf`.
pub fn parse_si(text: &str) -> Result<f64> {
    let t = text.trim();
    let bad = || invalid(format!("cannot parse number '{text}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let split = t.len()
        - t.chars()
            .last()
            .map_or(0, |c| if c.is_ascii_alphabetic() { c.len_utf8() } else { 0 });
    let (number, suffix) = t.split_at(split);
    let scale = match suffix {
        "" => 1.0,
        "T" => 1e12,
        "G" => 1e9,
        "M" => 1e6,
        "k" | "K" => 1e3,
        "m" => 1e-3,
        "u" => 1e-6,
        "n" => 1e-9,
        _ => return t.parse::<f64>().map_err(|_| bad()),
    };
    number.parse::<f64>().map(|v| v * scale).map_err(|_| bad())
}

/// `min:max:points[:log]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize, log: bool) -> Result<Self> {
        let g = Self { min, max, points, log };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || !(self.max > self.min) {
            return Err(invalid(format!("grid max {} must exceed min {}", self.max, self.min)));
        }
        if self.points < 2 {
            return Err(invalid("grid needs at least 2 points"));
        }
        if self.log && !(self.min > 0.0) {
            return Err(invalid("log grid needs min > 0"));
        }
        Ok(())
    }

    /// Grid values; the end points are returned exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    self.min
                } else if i + 1 == n {
                    self.max
                } else {
                    let f = i as f64 / (n - 1) as f64;
                    if self.log {
                        (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                    } else {
                        self.min + f * (self.max - self.min)
                    }
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(invalid(format!("grid '{s}' is not min:max:points[:log]")));
        }
        let log = match parts.get(3).copied() {
            None | Some("lin") | Some("linear") => false,
            Some("log") => true,
            Some(other) => return Err(invalid(format!("grid scale '{other}' is not 'log' or 'lin'"))),
        };
        let points = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("grid point count '{}' is not an integer", parts[2])))?;
        Self::new(parse_si(parts[0])?, parse_si(parts[1])?, points, log)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbSweepRow {
    pub range: f64,
    pub exact: Option<f64>,
    pub analytic: Option<f64>,
    pub taylor: Option<f64>,
    /// `method=code` for every null cell, `;`-separated.
    pub reason: Option<String>,
}

impl CrbSweepRow {
    pub const CSV_HEADER: &'static str = "range,crb_exact,crb_analytic,crb_taylor,reason";

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        format!(
            "{:.12e},{},{},{},{}",
            self.range,
            opt(self.exact),
            opt(self.analytic),
            opt(self.taylor),
            self.reason.as_deref().unwrap_or("")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbSweep {
    pub rows: Vec<CrbSweepRow>,
    /// Balance point of the expanded bound; absent for custom layouts.
    pub effective_nf_range: Option<f64>,
    /// Range of maximum curvature of the exact bound on log-log axes.
    pub knee: Option<f64>,
}

/// Bound versus range by the three closed-form routes. Failures become
/// null cells with a reason code instead of aborting the sweep.
pub fn crb_sweep(s: &Scenario, ranges: &[f64]) -> Result<CrbSweep> {
    if ranges.is_empty() {
        return Err(invalid("range grid is empty"));
    }
    let rows: Vec<CrbSweepRow> = ranges
        .par_iter()
        .map(|&r| {
            let at = s.at_range(r);
            let mut reasons = Vec::new();
            let mut cell = |method: CrbMethod| match crb_range(&at, method) {
                Ok(b) => Some(b.crb),
                Err(e) => {
                    reasons.push(format!("{method}={}", e.code()));
                    None
                }
            };
            let exact = cell(CrbMethod::ExactSum);
            let analytic = cell(CrbMethod::AnalyticProp3);
            let taylor = cell(CrbMethod::TaylorCor3);
            CrbSweepRow {
                range: r,
                exact,
                analytic,
                taylor,
                reason: (!reasons.is_empty()).then(|| reasons.join(";")),
            }
        })
        .collect();

    let effective = match s.geometry() {
        Ok(g) => Some(effective_nf_range(
            g,
            s.array.aperture(),
            s.carrier,
            s.waveform.central_frequency(),
            s.waveform.rms_bandwidth(),
        )?),
        Err(_) => None,
    };
    let curve: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.exact.map(|c| (r.range, c))).collect();
    Ok(CrbSweep {
        rows,
        effective_nf_range: effective,
        knee: knee(&curve),
    })
}

/// Point of largest `|d² log y / d(log x)²|`, by three-point differences
/// on a possibly non-uniform grid. Needs at least three positive points.
pub fn knee(curve: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    pts.windows(3)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            let d2 = 2.0 * ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0);
            (x1, d2.abs())
        })
        .filter(|(_, c)| c.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, _)| x.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfTermRow {
    /// `R/D`
    pub u: f64,
    /// Closed-form `η - β²`, in [`Geometry::ALL`] order.
    pub analytic: [f64; 4],
    /// `α (D/R)⁴ / 11520`
    pub taylor: [f64; 4],
    /// Pair sums for `N_t = N_r = n` tagged layouts, when requested.
    pub exact: Option<[f64; 4]>,
}

impl NfTermRow {
    pub fn csv_header(with_exact: bool) -> String {
        let mut cols = vec!["u".to_string()];
        for kind in ["analytic", "taylor", "exact"] {
            if kind == "exact" && !with_exact {
                continue;
            }
            cols.extend(
                Geometry::ALL
                    .iter()
                    .map(|g| format!("{kind}_{}", g.name().to_lowercase().replace('-', "_"))),
            );
        }
        cols.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let mut cols = vec![format!("{:.12e}", self.u)];
        let groups = [Some(self.analytic), Some(self.taylor), self.exact];
        for v in groups.iter().flatten().flatten() {
            cols.push(format!("{v:.12e}"));
        }
        cols.join(",")
    }
}

/// `η - β²` versus `u = R/D` for the four configurations.
pub fn nf_term_sweep(u_values: &[f64], elements: Option<usize>) -> Result<Vec<NfTermRow>> {
    let arrays = match elements {
        Some(n) => Some(
            Geometry::ALL
                .iter()
                .map(|g| ArrayConfig::tagged(g.tag(), n, n, 1.0))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    u_values
        .iter()
        .map(|&u| {
            let mut analytic = [0.0; 4];
            let mut taylor = [0.0; 4];
            let mut exact = [0.0; 4];
            for (i, &g) in Geometry::ALL.iter().enumerate() {
                analytic[i] = eta_beta_analytic(g, u)?.nf_geometry_term;
                taylor[i] = alpha_factor(g) / (TAYLOR_DENOMINATOR * u.powi(4));
                if let Some(a) = &arrays {
                    exact[i] = eta_beta_exact(&a[i], g.target(), u)?.nf_geometry_term;
                }
            }
            Ok(NfTermRow {
                u,
                analytic,
                taylor,
                exact: arrays.as_ref().map(|_| exact),
            })
        })
        .collect()
}

/// Closed-form phase ambiguity of the four configurations at each `β`.
pub fn beta_sweep(betas: &[f64]) -> Result<Vec<(f64, [f64; 4])>> {
    betas
        .iter()
        .map(|&b| {
            let mut row = [0.0; 4];
            for (i, &g) in Geometry::ALL.iter().enumerate() {
                row[i] = chi_phase_analytic(g, b)?;
            }
            Ok((b, row))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_suffixes() {
        assert_eq!(parse_si("24G").unwrap(), 24e9);
        assert_eq!(parse_si("100M").unwrap(), 100e6);
        assert_eq!(parse_si("2.5k").unwrap(), 2500.0);
        assert_eq!(parse_si("30m").unwrap(), 0.03);
        assert_eq!(parse_si("24e9").unwrap(), 24e9);
        assert_eq!(parse_si(" -3 ").unwrap(), -3.0);
        assert_eq!(parse_si("inf").unwrap(), f64::INFINITY);
        assert!(parse_si("12X").is_err());
        assert!(parse_si("G").is_err());
        assert!(parse_si("").is_err());
    }

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "1.8:150:5:log".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert_eq!((v[0], v[4]), (1.8, 150.0));
        assert!(((v[1] / v[0]).ln() - (v[4] / v[3]).ln()).abs() < 1e-12);
        let lin: GridSpec = "0:8:801".parse().unwrap();
        assert!((lin.values()[400] - 4.0).abs() < 1e-12);
        assert!("1:0:10".parse::<GridSpec>().is_err());
        assert!("0:1:1".parse::<GridSpec>().is_err());
        assert!("0:1:10:log".parse::<GridSpec>().is_err());
        assert!("0:1".parse::<GridSpec>().is_err());
        assert!("0:1:10:cubic".parse::<GridSpec>().is_err());
    }

    #[test]
    fn knee_of_a_broken_power_law() {
        // y = x^-4 + 1: curvature peaks at the crossover x = 1
        let curve: Vec<(f64, f64)> = GridSpec::new(0.01, 100.0, 401, true)
            .unwrap()
            .values()
            .into_iter()
            .map(|x| (x, x.powi(-4) + 1.0))
            .collect();
        let k = knee(&curve).unwrap();
        assert!((k - 1.0).abs() < 0.05, "{k}");
        assert_eq!(knee(&curve[..2]), None);
    }

    #[test]
    fn beta_sweep_starts_at_one() {
        let rows = beta_sweep(&[0.0, 1.0]).unwrap();
        assert!(rows[0].1.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(rows[1].1.iter().all(|&v| v < 1.0));
    }
}
