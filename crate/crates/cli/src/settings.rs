//! Scenario parameters from defaults, an optional `key=value` file and
//! command-line flags, in increasing priority.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nfrange::sweep::parse_si;
use nfrange::{ArrayConfig, ConfigTag, Scenario, TargetKind, TargetModel, Waveform};

/// Every accepted key with its default (empty means unset).
const KEYS: &[(&str, &str)] = &[
    ("fc", "24G"),
    ("bandwidth", "100M"),
    ("waveform", "sinc"),
    ("range", "10"),
    ("aperture", "1.5"),
    ("nt", "25"),
    ("nr", "25"),
    ("target", "et"),
    ("config-tag", "mimo"),
    ("array", ""),
    ("snr-db", "10"),
    ("grid", ""),
    ("seed", "0"),
    ("format", "csv"),
    ("out", ""),
    ("methods", ""),
    ("elements", ""),
    ("trials", ""),
    ("fs", ""),
];

#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Settings {
    pub fn resolve(file: Option<&Path>, flags: &[(&str, Option<String>)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(path) = file {
            for (k, v) in read_config(path)? {
                values.insert(k, v);
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Self { values })
    }

    /// Resolved parameters, for the reproducibility header.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key).ok_or_else(|| anyhow!("missing --{key}"))?;
        parse_si(raw).with_context(|| format!("--{key}"))
    }

    pub fn optional_number(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|_| self.number(key)).transpose()
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        let raw = self.raw(key).ok_or_else(|| anyhow!("missing --{key}"))?;
        raw.trim()
            .parse()
            .with_context(|| format!("--{key}: '{raw}' is not a non-negative integer"))
    }

    pub fn seed(&self) -> Result<u64> {
        let raw = self.raw("seed").unwrap_or("0");
        raw.trim()
            .parse()
            .with_context(|| format!("--seed: '{raw}' is not a non-negative integer"))
    }

    pub fn format(&self) -> Result<Format> {
        match self.raw("format").unwrap_or("csv") {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("--format: '{other}' is not csv or json"),
        }
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.raw("out").map(PathBuf::from)
    }

    pub fn target(&self) -> Result<TargetKind> {
        match self.raw("target").unwrap_or("et").to_ascii_lowercase().as_str() {
            "pt" => Ok(TargetKind::Pt),
            "et" => Ok(TargetKind::Et),
            other => bail!("--target: '{other}' is not pt or et"),
        }
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        if let Some(path) = self.raw("array") {
            return Ok(ArrayConfig::load(path)?);
        }
        let tag = match self.raw("config-tag").unwrap_or("mimo").to_ascii_lowercase().as_str() {
            "simo" => ConfigTag::Simo,
            "mimo" => ConfigTag::Mimo,
            other => bail!("--config-tag: '{other}' is not simo or mimo (use --array for custom layouts)"),
        };
        Ok(ArrayConfig::tagged(
            tag,
            self.count("nt")?,
            self.count("nr")?,
            self.number("aperture")?,
        )?)
    }

    pub fn waveform(&self) -> Result<Waveform> {
        let bandwidth = self.number("bandwidth")?;
        match self.raw("waveform").unwrap_or("sinc") {
            "sinc" | "cardinal-sine" => Ok(Waveform::cardinal_sine(bandwidth, 1.0)?),
            path => Ok(Waveform::load_spectrum(path, Some(1.0))?),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let s = Scenario::with_snr_db(
            self.number("fc")?,
            self.number("range")?,
            self.number("snr-db")?,
            self.waveform()?,
            self.array()?,
            TargetModel::exact(self.target()?),
        )?;
        let a = s.assumptions();
        if !a.range_vs_aperture {
            log::warn!(
                "range {} m is below 1.2 D; far-from-array approximations are inaccurate",
                s.range
            );
        }
        Ok(s)
    }
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.iter().any(|(known, _)| *known == key) {
            bail!("{}:{}: unknown key '{}'", path.display(), i + 1, k.trim());
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}
