//! Experiment configuration files (TOML) and bundled presets.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZevcaError};
use crate::grid::GridSpec;
use crate::jet::{GaussianParams, Particle};
use crate::observables::{SetupThresholds, DEFAULT_DETECTION_TOL, DEFAULT_WINDOW_FRACTION};
use crate::potential::PotentialSpec;
use crate::propagator::{IntegrationConfig, Scheme};

pub const DEFAULT_N_LIST: [usize; 5] = [2, 4, 6, 8, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Tunnel,
    Eigen,
    Compare,
}

/// Initial packet. Give either `pc` or the mean kinetic `energy`
/// (`pc = sqrt(2 m E)`); `gamma0 = [re, im]` defaults to unit norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSection {
    pub alpha0: f64,
    pub xc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSection {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: SchemeName,
    pub atol: f64,
    pub rtol: f64,
    pub record_stride: usize,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        IntegrationSection {
            dt: 1e-3,
            t_final: 3.0,
            scheme: SchemeName::Rk4,
            atol: 1e-10,
            rtol: 1e-10,
            record_stride: 10,
        }
    }
}

impl IntegrationSection {
    pub fn to_config(&self) -> IntegrationConfig {
        IntegrationConfig {
            dt: self.dt,
            t_final: self.t_final,
            scheme: match self.scheme {
                SchemeName::Rk4 => Scheme::Rk4,
                SchemeName::Rk45 => Scheme::Rk45 {
                    atol: self.atol,
                    rtol: self.rtol,
                },
            },
            record_stride: self.record_stride,
        }
    }
}

/// Split-operator reference run. `t_final` defaults to the ZEVCA run length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub xmin: f64,
    pub xmax: f64,
    pub npoints: usize,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    pub record_stride: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            xmin: -12.0,
            xmax: 12.0,
            npoints: 4096,
            dt: 5e-4,
            t_final: None,
            record_stride: 20,
        }
    }
}

impl OracleSection {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            xmin: self.xmin,
            xmax: self.xmax,
            npoints: self.npoints,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Trailing fraction of the run used for asymptote/plateau detection.
    pub window_fraction: f64,
    pub tol: f64,
    pub potential_threshold: f64,
    pub density_threshold: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let t = SetupThresholds::default();
        AnalysisSection {
            window_fraction: DEFAULT_WINDOW_FRACTION,
            tol: DEFAULT_DETECTION_TOL,
            potential_threshold: t.potential,
            density_threshold: t.density,
        }
    }
}

impl AnalysisSection {
    pub fn thresholds(&self) -> SetupThresholds {
        SetupThresholds {
            potential: self.potential_threshold,
            density: self.density_threshold,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_n_list() -> Vec<usize> {
    DEFAULT_N_LIST.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("zevca-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub potential: PotentialSpec,
    pub gaussian: GaussianSection,
    #[serde(default)]
    pub integration: IntegrationSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl ExperimentConfig {
    pub fn particle(&self) -> Particle {
        Particle {
            mass: self.mass,
            hbar: self.hbar,
        }
    }

    pub fn gaussian_params(&self) -> Result<GaussianParams> {
        let g = &self.gaussian;
        let pc = match (g.pc, g.energy) {
            (Some(pc), None) => pc,
            (None, Some(e)) => (2.0 * self.mass * e).sqrt(),
            (None, None) => 0.0,
            (Some(_), Some(_)) => return Err(ZevcaError::arg("gaussian: give either pc or energy, not both")),
        };
        match g.gamma0 {
            Some([re, im]) => GaussianParams::new(g.alpha0, g.xc, pc, Complex64::new(re, im)),
            None => GaussianParams::normalized(g.alpha0, g.xc, pc, self.hbar),
        }
    }

    pub fn oracle_t_final(&self) -> f64 {
        self.oracle.t_final.unwrap_or(self.integration.t_final)
    }

    /// Semantic checks. Each failure names the offending key as a dotted
    /// path (`gaussian.alpha0`), or a bare section name for section-wide errors.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("{key} must be positive, got {v}")))
            }
        };
        positive("hbar", self.hbar)?;
        positive("mass", self.mass)?;
        if !self.x0.is_finite() {
            return Err(("x0", "x0 must be finite".into()));
        }
        if self.n_list.is_empty() {
            return Err(("n_list", "n_list must not be empty".into()));
        }
        positive("gaussian.alpha0", self.gaussian.alpha0)?;
        if !self.gaussian.xc.is_finite() {
            return Err(("gaussian.xc", "gaussian.xc must be finite".into()));
        }
        if let Some(e) = self.gaussian.energy {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(("gaussian.energy", format!("gaussian.energy must be non-negative, got {e}")));
            }
        }
        if self.gaussian.pc.is_some() && self.gaussian.energy.is_some() {
            return Err(("gaussian.energy", "gaussian: give either pc or energy, not both".into()));
        }
        self.potential.validate().map_err(|e| ("potential", e.to_string()))?;
        self.integration
            .to_config()
            .validate()
            .map_err(|e| ("integration", e.to_string()))?;
        self.oracle.grid().validate().map_err(|e| ("oracle", e.to_string()))?;
        positive("oracle.dt", self.oracle.dt)?;
        if let Some(t) = self.oracle.t_final {
            positive("oracle.t_final", t)?;
        }
        if self.oracle.record_stride == 0 {
            return Err(("oracle.record_stride", "oracle.record_stride must be at least 1".into()));
        }
        let w = self.analysis.window_fraction;
        if !(w > 0.0 && w <= 1.0) {
            return Err(("analysis.window_fraction", format!("analysis.window_fraction must lie in (0, 1], got {w}")));
        }
        positive("analysis.tol", self.analysis.tol)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

/// 1-based line of the assignment named by a dotted `path`, or of the
/// section header when `path` names a section without such a key.
fn line_of_key(text: &str, path: &str) -> Option<usize> {
    let (section, key) = path.rsplit_once('.').unwrap_or(("", path));
    let mut current = "";
    let mut header = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if section.is_empty() && current == key {
                header = Some(i + 1);
            }
            continue;
        }
        let assigns = line
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='));
        if current == section && assigns {
            return Some(i + 1);
        }
    }
    header
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        ZevcaError::config(line, e.message().trim().to_string())
    })?;
    cfg.validate()
        .map_err(|(key, msg)| ZevcaError::config(line_of_key(text, key), msg))?;
    Ok(cfg)
}

/// Names of the bundled experiment presets.
pub const PRESETS: [&str; 6] = ["eckart_e20", "eckart_p0", "quartic", "morse_h2", "harmonic", "harmonic_compare"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "eckart_e20" => include_str!("../presets/eckart_e20.toml"),
        "eckart_p0" => include_str!("../presets/eckart_p0.toml"),
        "quartic" => include_str!("../presets/quartic.toml"),
        "morse_h2" => include_str!("../presets/morse_h2.toml"),
        "harmonic" => include_str!("../presets/harmonic.toml"),
        "harmonic_compare" => include_str!("../presets/harmonic_compare.toml"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = preset_text(name).ok_or_else(|| {
        ZevcaError::config(None, format!("unknown preset '{name}' (available: {})", PRESETS.join(", ")))
    })?;
    parse_config(text)
}
