//! Physical quantities read off a propagated jet: local density and flux,
//! the cumulative tunneling probability, and the imaginary-time energy
//! estimator, plus convergence detection and setup diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZevcaError};
use crate::jet::{GaussianParams, Particle, PhaseJet};
use crate::potential::PotentialSpec;
use crate::propagator::{TimeMode, TrajectoryRecord};

/// Densities below this are treated as nodal: the flux is reported as zero.
pub const NODAL_DENSITY: f64 = 1e-300;

/// Default trailing window, as a fraction of the run length, for
/// asymptote and plateau detection.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;
pub const DEFAULT_DETECTION_TOL: f64 = 1e-3;

const ASYMPTOTE_FLOOR: f64 = 1e-12;

/// A value that may have been clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged {
    pub value: f64,
    /// The value overflowed (clamped to `f64::MAX`) or sat in a nodal region.
    pub saturated: bool,
}

/// `|psi|^2 = exp(-2 Im S_0 / hbar)`.
pub fn probability_density(jet: &PhaseJet, hbar: f64) -> Flagged {
    let exponent = -2.0 * jet.get(0).im / hbar;
    if exponent > f64::MAX.ln() {
        Flagged {
            value: f64::MAX,
            saturated: true,
        }
    } else {
        Flagged {
            value: exponent.exp(),
            saturated: false,
        }
    }
}

/// `J = |psi|^2 Re(S_1) / m`.
pub fn probability_current(jet: &PhaseJet, particle: Particle) -> Flagged {
    let rho = probability_density(jet, particle.hbar);
    if rho.value < NODAL_DENSITY {
        return Flagged {
            value: 0.0,
            saturated: true,
        };
    }
    Flagged {
        value: rho.value * jet.get(1).re / particle.mass,
        saturated: rho.saturated,
    }
}

/// Density, flux and cumulative transmitted probability at the flux plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingSeries {
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    pub current: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Number of samples whose density or current was clamped.
    pub saturated_samples: usize,
    pub asymptote: Option<f64>,
}

impl TunnelingSeries {
    /// `T` at the last recorded time.
    pub fn terminal(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

/// Integrates the flux through `rec.x0` with the trapezoidal rule.
///
/// The asymptote is detected over the trailing
/// [`DEFAULT_WINDOW_FRACTION`] of the run; use [`detect_asymptote`] directly
/// for other windows.
pub fn accumulate_tunneling(rec: &TrajectoryRecord) -> Result<TunnelingSeries> {
    if rec.mode != TimeMode::RealTime {
        return Err(ZevcaError::Mode("tunneling needs a real-time record".into()));
    }
    let mut series = TunnelingSeries {
        times: rec.times.clone(),
        density: Vec::with_capacity(rec.jets.len()),
        current: Vec::with_capacity(rec.jets.len()),
        cumulative: Vec::with_capacity(rec.jets.len()),
        saturated_samples: 0,
        asymptote: None,
    };
    for jet in &rec.jets {
        let rho = probability_density(jet, rec.particle.hbar);
        let j = probability_current(jet, rec.particle);
        if rho.saturated || j.saturated {
            series.saturated_samples += 1;
        }
        series.density.push(rho.value);
        series.current.push(j.value);
    }
    series.cumulative = trapezoid_running(&series.times, &series.current);
    let span = rec.times.last().copied().unwrap_or(0.0) - rec.times[0];
    series.asymptote = detect_asymptote(&series, DEFAULT_WINDOW_FRACTION * span, DEFAULT_DETECTION_TOL);
    Ok(series)
}

/// Running trapezoidal integral, starting at zero.
pub fn trapezoid_running(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Indices of samples with `time >= t_last - window`.
fn trailing(times: &[f64], window: f64) -> std::ops::Range<usize> {
    let Some(&t_last) = times.last() else {
        return 0..0;
    };
    let start = times.partition_point(|&t| t < t_last - window);
    start..times.len()
}

fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// The final `T` if it varied by less than `tol * max(|T|, 1e-12)` over the
/// trailing `window` of time.
pub fn detect_asymptote(series: &TunnelingSeries, window: f64, tol: f64) -> Option<f64> {
    let range = trailing(&series.times, window);
    if range.len() < 2 {
        return None;
    }
    let tail = &series.cumulative[range];
    let last = *tail.last()?;
    if !last.is_finite() {
        return None;
    }
    (spread(tail) < tol * last.abs().max(ASYMPTOTE_FLOOR)).then_some(last)
}

/// Algebraic ground-state energy estimator on an imaginary-time jet:
/// `E = -Re[(i hbar / 2m) S_2 - S_1^2 / 2m - V(x0)]`.
///
/// This is the negated `S_0` velocity in the complex time `t = -(i hbar/2) tau`,
/// which is the form that returns `hbar omega / 2` on the harmonic ground state.
pub fn energy_estimate(jet: &PhaseJet, v0: f64, particle: Particle) -> Result<f64> {
    if !jet.is_finite() {
        return Err(ZevcaError::InvalidJet("energy estimate on a non-finite jet".into()));
    }
    let m = particle.mass;
    let s1 = jet.get(1);
    let velocity = Complex64::new(0.0, particle.hbar / (2.0 * m)) * jet.get(2) - s1 * s1 / (2.0 * m) - v0;
    Ok(-velocity.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub taus: Vec<f64>,
    pub estimates: Vec<f64>,
    pub plateau: Option<f64>,
}

impl EnergySeries {
    pub fn terminal(&self) -> f64 {
        *self.estimates.last().unwrap_or(&f64::NAN)
    }
}

/// Energy estimator along an imaginary-time record.
pub fn energy_series(rec: &TrajectoryRecord) -> Result<EnergySeries> {
    if rec.mode != TimeMode::ImaginaryTime {
        return Err(ZevcaError::Mode("energy estimates need an imaginary-time record".into()));
    }
    let estimates = rec
        .jets
        .iter()
        .map(|jet| energy_estimate(jet, rec.vstack[0], rec.particle))
        .collect::<Result<Vec<_>>>()?;
    let mut series = EnergySeries {
        taus: rec.times.clone(),
        estimates,
        plateau: None,
    };
    let span = rec.times.last().copied().unwrap_or(0.0) - rec.times[0];
    series.plateau = detect_plateau(&series, DEFAULT_WINDOW_FRACTION * span, DEFAULT_DETECTION_TOL);
    Ok(series)
}

/// The final estimate if its relative variation over the trailing `window`
/// is below `tol`.
pub fn detect_plateau(series: &EnergySeries, window: f64, tol: f64) -> Option<f64> {
    let range = trailing(&series.taus, window);
    if range.len() < 2 {
        return None;
    }
    let tail = &series.estimates[range];
    let last = *tail.last()?;
    if !last.is_finite() {
        return None;
    }
    (spread(tail) < tol * last.abs()).then_some(last)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetupThresholds {
    /// Minimum `max_n |V_n(x0)|`, `n = 1..=N`.
    pub potential: f64,
    /// Minimum initial `|psi(x0)|^2`.
    pub density: f64,
}

impl Default for SetupThresholds {
    fn default() -> Self {
        SetupThresholds {
            potential: 1e-8,
            density: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum SetupWarning {
    /// No potential derivative at the fixed point is significant.
    FlatPotential { max_derivative: f64, threshold: f64 },
    /// The initial packet barely reaches the fixed point.
    LowDensity { density: f64, threshold: f64 },
}

/// Checks that the fixed point sees both the potential and the initial packet.
/// Never blocks a run.
pub fn validate_setup(
    potential: &PotentialSpec,
    g: &GaussianParams,
    x0: f64,
    order: usize,
    thresholds: SetupThresholds,
    hbar: f64,
) -> Vec<SetupWarning> {
    let mut warnings = Vec::new();
    let stack = potential.derivative_stack(x0, order);
    let max_derivative = stack.iter().skip(1).fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_derivative < thresholds.potential {
        warnings.push(SetupWarning::FlatPotential {
            max_derivative,
            threshold: thresholds.potential,
        });
    }
    let density = g.eval(x0, hbar).norm_sqr();
    if density < thresholds.density {
        warnings.push(SetupWarning::LowDensity {
            density,
            threshold: thresholds.density,
        });
    }
    warnings
}
