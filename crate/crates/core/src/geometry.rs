//! Linear antenna layouts and round-trip propagation distances.
//!
//! Antennas sit on the z axis; the target (point scatterer at `z = 0`, or
//! a planar reflector parallel to the arrays) is at range `R`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// Isotropic point scatterer on boresight.
    Pt,
    /// Planar reflector parallel to the arrays (specular-point model).
    Et,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    Exact,
    /// Second-order expansion in the antenna coordinates.
    Fresnel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetModel {
    pub kind: TargetKind,
    pub distance_mode: DistanceMode,
}

impl TargetModel {
    pub const fn exact(kind: TargetKind) -> Self {
        Self {
            kind,
            distance_mode: DistanceMode::Exact,
        }
    }

    pub const fn fresnel(kind: TargetKind) -> Self {
        Self {
            kind,
            distance_mode: DistanceMode::Fresnel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigTag {
    /// One transmit antenna at the origin, receive array of aperture `D`.
    Simo,
    /// Transmit and receive arrays both of aperture `D`, centred.
    Mimo,
    Custom,
}

/// One of the four target/layout combinations that have closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    PtSimo,
    PtMimo,
    EtSimo,
    EtMimo,
}

impl Geometry {
    pub const ALL: [Geometry; 4] = [Geometry::PtSimo, Geometry::PtMimo, Geometry::EtSimo, Geometry::EtMimo];

    pub fn new(target: TargetKind, tag: ConfigTag) -> Result<Self> {
        match (target, tag) {
            (TargetKind::Pt, ConfigTag::Simo) => Ok(Geometry::PtSimo),
            (TargetKind::Pt, ConfigTag::Mimo) => Ok(Geometry::PtMimo),
            (TargetKind::Et, ConfigTag::Simo) => Ok(Geometry::EtSimo),
            (TargetKind::Et, ConfigTag::Mimo) => Ok(Geometry::EtMimo),
            (_, ConfigTag::Custom) => Err(Error::UnsupportedConfiguration(
                "closed forms exist only for SIMO/MIMO-tagged layouts".into(),
            )),
        }
    }

    pub fn target(self) -> TargetKind {
        match self {
            Geometry::PtSimo | Geometry::PtMimo => TargetKind::Pt,
            Geometry::EtSimo | Geometry::EtMimo => TargetKind::Et,
        }
    }

    pub fn tag(self) -> ConfigTag {
        match self {
            Geometry::PtSimo | Geometry::EtSimo => ConfigTag::Simo,
            Geometry::PtMimo | Geometry::EtMimo => ConfigTag::Mimo,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::PtSimo => "pt_simo",
            Geometry::PtMimo => "pt_mimo",
            Geometry::EtSimo => "et_simo",
            Geometry::EtMimo => "et_mimo",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `n` equally spaced positions spanning exactly `[-D/2, D/2]`.
pub fn make_ula(n: usize, aperture: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("array needs at least one element"));
    }
    if !(aperture.is_finite() && aperture >= 0.0) {
        return Err(invalid(format!("aperture must be >= 0, got {aperture}")));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let step = aperture / (n - 1) as f64;
    Ok((0..n).map(|i| -0.5 * aperture + i as f64 * step).collect())
}

/// `n` elements at the centres of `n` equal cells tiling `[-D/2, D/2]`
/// (pitch `D/n`). Used by the SIMO/MIMO layouts: their sums over antennas
/// are midpoint rules of the continuous-aperture integrals.
pub fn make_cell_centered(n: usize, aperture: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("array needs at least one element"));
    }
    if !(aperture.is_finite() && aperture >= 0.0) {
        return Err(invalid(format!("aperture must be >= 0, got {aperture}")));
    }
    let pitch = aperture / n as f64;
    Ok((0..n).map(|i| -0.5 * aperture + (i as f64 + 0.5) * pitch).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    tx: Vec<f64>,
    rx: Vec<f64>,
    aperture: f64,
    tag: ConfigTag,
}

impl ArrayConfig {
    /// Single transmitter at `z = 0`, `n_rx` receivers over aperture `D`.
    pub fn simo(n_rx: usize, aperture: f64) -> Result<Self> {
        ensure_positive("aperture", aperture)?;
        Ok(Self {
            tx: vec![0.0],
            rx: make_cell_centered(n_rx, aperture)?,
            aperture,
            tag: ConfigTag::Simo,
        })
    }

    pub fn mimo(n_tx: usize, n_rx: usize, aperture: f64) -> Result<Self> {
        ensure_positive("aperture", aperture)?;
        Ok(Self {
            tx: make_cell_centered(n_tx, aperture)?,
            rx: make_cell_centered(n_rx, aperture)?,
            aperture,
            tag: ConfigTag::Mimo,
        })
    }

    pub fn tagged(tag: ConfigTag, n_tx: usize, n_rx: usize, aperture: f64) -> Result<Self> {
        match tag {
            ConfigTag::Simo => Self::simo(n_rx, aperture),
            ConfigTag::Mimo => Self::mimo(n_tx, n_rx, aperture),
            ConfigTag::Custom => Err(invalid("custom layouts need explicit positions")),
        }
    }

    /// Arbitrary layout; the aperture is the largest span of either array.
    pub fn custom(tx: Vec<f64>, rx: Vec<f64>) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return Err(invalid("both arrays need at least one element"));
        }
        if tx.iter().chain(&rx).any(|p| !p.is_finite()) {
            return Err(invalid("antenna positions must be finite"));
        }
        let span = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let aperture = span(&tx).max(span(&rx));
        Ok(Self {
            tx,
            rx,
            aperture,
            tag: ConfigTag::Custom,
        })
    }

    /// Reads a layout file with `[tx]` and `[rx]` sections, one position
    /// (metres) per line; `#` starts a comment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut tx = Vec::new();
        let mut rx = Vec::new();
        let mut section: Option<&mut Vec<f64>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.to_ascii_lowercase().as_str() {
                "[tx]" => section = Some(&mut tx),
                "[rx]" => section = Some(&mut rx),
                _ => {
                    let value: f64 = line
                        .parse()
                        .map_err(|e| parse_err(format!("line {}: {e}", lineno + 1)))?;
                    match section.as_deref_mut() {
                        Some(v) => v.push(value),
                        None => {
                            return Err(parse_err(format!(
                                "line {}: position before [tx]/[rx] header",
                                lineno + 1
                            )))
                        }
                    }
                }
            }
        }
        Self::custom(tx, rx).map_err(|e| parse_err(e.to_string()))
    }

    pub fn tx_positions(&self) -> &[f64] {
        &self.tx
    }

    pub fn rx_positions(&self) -> &[f64] {
        &self.rx
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    /// `N_r N_t`.
    pub fn n_pairs(&self) -> usize {
        self.tx.len() * self.rx.len()
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn tag(&self) -> ConfigTag {
        self.tag
    }

    /// `(z_l, y_l')` for every pair, receive index outer.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rx.iter().flat_map(move |&y| self.tx.iter().map(move |&z| (z, y)))
    }
}

/// Round-trip propagation distance from transmitter `z` to receiver `y`.
pub fn distance(model: TargetModel, range: f64, z: f64, y: f64) -> Result<f64> {
    ensure_positive("range", range)?;
    Ok(distance_unchecked(model, range, z, y))
}

#[inline]
pub(crate) fn distance_unchecked(model: TargetModel, r: f64, z: f64, y: f64) -> f64 {
    match (model.kind, model.distance_mode) {
        (TargetKind::Pt, DistanceMode::Exact) => r.hypot(z) + r.hypot(y),
        (TargetKind::Et, DistanceMode::Exact) => (2.0 * r).hypot(z - y),
        (TargetKind::Pt, DistanceMode::Fresnel) => 2.0 * r + (z * z + y * y) / (2.0 * r),
        (TargetKind::Et, DistanceMode::Fresnel) => 2.0 * r + (z - y) * (z - y) / (4.0 * r),
    }
}

/// `distance(ρ) - distance(R)` without the cancellation of the two
/// `2R`-sized terms.
#[inline]
pub(crate) fn distance_difference(model: TargetModel, rho: f64, r: f64, z: f64, y: f64) -> f64 {
    // sqrt(a² + q) - a = q / (sqrt(a² + q) + a)
    let excess = |a: f64, q: f64| if q == 0.0 { 0.0 } else { q / (a.hypot(q.sqrt()) + a) };
    let base = 2.0 * (rho - r);
    match (model.kind, model.distance_mode) {
        (TargetKind::Pt, DistanceMode::Exact) => {
            base + excess(rho, z * z) - excess(r, z * z) + excess(rho, y * y) - excess(r, y * y)
        }
        (TargetKind::Et, DistanceMode::Exact) => {
            let q = (z - y) * (z - y);
            base + excess(2.0 * rho, q) - excess(2.0 * r, q)
        }
        (TargetKind::Pt, DistanceMode::Fresnel) => base + (z * z + y * y) * (r - rho) / (2.0 * rho * r),
        (TargetKind::Et, DistanceMode::Fresnel) => base + (z - y) * (z - y) * (r - rho) / (4.0 * rho * r),
    }
}

/// `∂r/∂R` for the exact distance models.
pub fn distance_derivative(model: TargetModel, range: f64, z: f64, y: f64) -> Result<f64> {
    ensure_positive("range", range)?;
    if model.distance_mode != DistanceMode::Exact {
        return Err(Error::UnsupportedMode(
            "range derivatives are defined for exact distances only".into(),
        ));
    }
    Ok(2.0 * (1.0 - half_derivative_deficit(model.kind, range, z, y)))
}

/// `1 - ½ ∂r/∂R`, computed without cancellation so that its spread over
/// antenna pairs keeps full relative precision far from the array.
#[inline]
pub(crate) fn half_derivative_deficit(kind: TargetKind, r: f64, z: f64, y: f64) -> f64 {
    // 1 - 1/sqrt(1+w²) = w² / (sqrt(1+w²) (1 + sqrt(1+w²)))
    let deficit = |w2: f64| {
        let s = (1.0 + w2).sqrt();
        w2 / (s * (1.0 + s))
    };
    match kind {
        TargetKind::Pt => 0.5 * (deficit((z / r) * (z / r)) + deficit((y / r) * (y / r))),
        TargetKind::Et => {
            let w = (z - y) / (2.0 * r);
            deficit(w * w)
        }
    }
}

/// Rayleigh distance `2D²/λ`.
pub fn rayleigh_distance(aperture: f64, carrier: f64) -> Result<f64> {
    if !(aperture.is_finite() && aperture >= 0.0) {
        return Err(invalid(format!("aperture must be >= 0, got {aperture}")));
    }
    ensure_positive("carrier frequency", carrier)?;
    Ok(2.0 * aperture * aperture * carrier / SPEED_OF_LIGHT)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PT: TargetModel = TargetModel::exact(TargetKind::Pt);
    const ET: TargetModel = TargetModel::exact(TargetKind::Et);

    #[test]
    fn ula_layouts() {
        assert_eq!(make_ula(1, 1.5).unwrap(), vec![0.0]);
        assert_eq!(make_ula(3, 2.0).unwrap(), vec![-1.0, 0.0, 1.0]);
        let p = make_ula(25, 1.5).unwrap();
        assert!((p[1] - p[0] - 0.0625).abs() < 1e-15);
        assert_eq!(p[0], -0.75);
        assert!((p[24] - 0.75).abs() < 1e-15);
        assert!(make_ula(0, 1.0).is_err());
    }

    #[test]
    fn cell_centered_layouts() {
        assert_eq!(make_cell_centered(1, 1.5).unwrap(), vec![0.0]);
        let p = make_cell_centered(4, 2.0).unwrap();
        assert_eq!(p, vec![-0.75, -0.25, 0.25, 0.75]);
        let a = ArrayConfig::mimo(25, 25, 1.5).unwrap();
        assert!(a.tx_positions().iter().all(|z| z.abs() <= 0.75));
        let s: f64 = a.rx_positions().iter().sum();
        assert!(s.abs() < 1e-14);
        let simo = ArrayConfig::simo(8, 1.0).unwrap();
        assert_eq!(simo.tx_positions(), &[0.0]);
        assert_eq!(simo.n_pairs(), 8);
    }

    #[test]
    fn custom_aperture_is_max_span() {
        let a = ArrayConfig::custom(vec![0.0, 0.5], vec![-1.0, 0.2, 1.0]).unwrap();
        assert_eq!(a.aperture(), 2.0);
        assert_eq!(a.tag(), ConfigTag::Custom);
        assert!(ArrayConfig::custom(vec![], vec![0.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(PT, 10.0, 0.0, 0.0).unwrap(), 20.0);
        assert!((distance(ET, 10.0, 3.0, -1.0).unwrap() - 416f64.sqrt()).abs() < 1e-12);
        let f = distance(TargetModel::fresnel(TargetKind::Et), 10.0, 3.0, -1.0).unwrap();
        assert!((f - 20.4).abs() < 1e-12);
        assert!(distance(PT, 0.0, 0.0, 0.0).is_err());
        assert!(distance(PT, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(distance_derivative(PT, 10.0, 0.0, 0.0).unwrap(), 2.0);
        let d = distance_derivative(ET, 10.0, 3.0, -1.0).unwrap();
        assert!((d - 2.0 / 1.04f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            distance_derivative(TargetModel::fresnel(TargetKind::Pt), 10.0, 0.0, 0.0),
            Err(Error::UnsupportedMode(_))
        ));
    }

    #[test]
    fn difference_matches_direct() {
        for model in [
            PT,
            ET,
            TargetModel::fresnel(TargetKind::Pt),
            TargetModel::fresnel(TargetKind::Et),
        ] {
            for &(rho, r, z, y) in &[(10.5, 10.0, 0.3, -0.7), (3.0, 4.0, 0.75, 0.75), (20.0, 20.0, 0.1, 0.2)] {
                let direct = distance(model, rho, z, y).unwrap() - distance(model, r, z, y).unwrap();
                let diff = distance_difference(model, rho, r, z, y);
                assert!((direct - diff).abs() < 1e-13, "{model:?}");
            }
        }
    }

    #[test]
    fn rayleigh_examples() {
        let r24 = rayleigh_distance(1.5, 24e9).unwrap();
        let r77 = rayleigh_distance(1.5, 77e9).unwrap();
        assert!((r24 / 360.0 - 1.0).abs() < 5e-3);
        assert!((r77 / 1155.0 - 1.0).abs() < 5e-3);
        assert_eq!(rayleigh_distance(0.0, 24e9).unwrap(), 0.0);
        assert!(rayleigh_distance(1.0, 0.0).is_err());
    }

    #[test]
    fn load_layout_file() {
        let dir = std::env::temp_dir().join(format!("nfrange-layout-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("layout.txt");
        std::fs::write(&path, "# layout\n[tx]\n0.0\n[rx]\n-0.5 # left\n0.5\n").unwrap();
        let a = ArrayConfig::load(&path).unwrap();
        assert_eq!(a.tx_positions(), &[0.0]);
        assert_eq!(a.rx_positions(), &[-0.5, 0.5]);
        assert_eq!(a.aperture(), 1.0);
        std::fs::write(&path, "0.1\n[rx]\n0.2\n").unwrap();
        assert!(matches!(ArrayConfig::load(&path), Err(Error::Parse { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn geometry_requires_tag() {
        assert_eq!(
            Geometry::new(TargetKind::Et, ConfigTag::Mimo).unwrap(),
            Geometry::EtMimo
        );
        assert!(matches!(
            Geometry::new(TargetKind::Pt, ConfigTag::Custom),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }
}
