//! Truncated hierarchy of complex-phase derivatives at a fixed position.
//!
//! With the ansatz `psi = exp(i S / hbar)` the wavefunction at a point `x0` is
//! described by the derivative values `S_n = d^n S / dx^n` at `x0`. Along a
//! characteristic with `dx/dt = 0` these obey
//!
//! ```text
//! dS_n/dt = (i hbar / 2m) S_{n+2} - (1/2m) (S_1^2)_n - V_n(x0),   n = 0..=N
//! ```
//!
//! closed by `S_{N+1} = S_{N+2} = 0`. Coefficients are stored as derivative
//! values, not as Taylor coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZevcaError};
use crate::propagator::TimeMode;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mass and reduced Planck constant of the propagated particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub mass: f64,
    pub hbar: f64,
}

impl Particle {
    pub fn new(mass: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(ZevcaError::arg(format!("mass must be positive, got {mass}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(ZevcaError::arg(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Particle { mass, hbar })
    }

    /// Atomic units, `hbar = 1`.
    pub fn atomic(mass: f64) -> Self {
        Particle { mass, hbar: 1.0 }
    }
}

/// Phase derivatives `S_0..=S_N` at one position and one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseJet {
    coeffs: Vec<Complex64>,
    position: f64,
    time: f64,
}

impl PhaseJet {
    /// Builds a jet from user-supplied derivative values. At least one
    /// coefficient (the action itself) is required.
    pub fn new(coeffs: Vec<Complex64>, position: f64, time: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(ZevcaError::arg("a phase jet needs at least S_0"));
        }
        if !position.is_finite() || !time.is_finite() {
            return Err(ZevcaError::arg("jet position and time must be finite"));
        }
        Ok(PhaseJet {
            coeffs,
            position,
            time,
        })
    }

    pub fn zeros(order: usize, position: f64) -> Self {
        PhaseJet {
            coeffs: vec![Complex64::new(0.0, 0.0); order + 1],
            position,
            time: 0.0,
        }
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `S_n`, or zero for any index above the truncation order.
    pub fn get(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn with_state(&self, coeffs: Vec<Complex64>, time: f64) -> Self {
        PhaseJet {
            coeffs,
            position: self.position,
            time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Keeps `S_0..=S_order`, dropping the rest.
    pub fn truncated(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::new(0.0, 0.0));
        self.with_state(coeffs, self.time)
    }
}

/// Parameters of the Gaussian wavepacket
/// `exp[-alpha0 (x-xc)^2 + (i/hbar) pc (x-xc) + (i/hbar) gamma0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub alpha0: f64,
    pub xc: f64,
    pub pc: f64,
    pub gamma0: Complex64,
}

impl GaussianParams {
    pub fn new(alpha0: f64, xc: f64, pc: f64, gamma0: Complex64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(ZevcaError::arg(format!("alpha0 must be positive, got {alpha0}")));
        }
        if !xc.is_finite() || !pc.is_finite() || !gamma0.re.is_finite() || !gamma0.im.is_finite() {
            return Err(ZevcaError::arg("Gaussian parameters must be finite"));
        }
        Ok(GaussianParams {
            alpha0,
            xc,
            pc,
            gamma0,
        })
    }

    /// Unit-norm packet: `gamma0 = -(i hbar / 4) ln(2 alpha0 / pi)`.
    pub fn normalized(alpha0: f64, xc: f64, pc: f64, hbar: f64) -> Result<Self> {
        if !(alpha0 > 0.0) {
            return Err(ZevcaError::arg(format!("alpha0 must be positive, got {alpha0}")));
        }
        let gamma0 = -I * (hbar / 4.0) * (2.0 * alpha0 / std::f64::consts::PI).ln();
        Self::new(alpha0, xc, pc, gamma0)
    }

    /// Wavefunction value at `x`.
    pub fn eval(&self, x: f64, hbar: f64) -> Complex64 {
        let d = x - self.xc;
        let exponent = -self.alpha0 * d * d + I * (self.pc * d + self.gamma0) / hbar;
        exponent.exp()
    }
}

/// `n`-th spatial derivative of `S_1^2`, by the Leibniz rule
/// `sum_j C(n,j) S_{j+1} S_{n-j+1}`. Indices past the truncation read as zero.
pub fn leibniz_square(jet: &PhaseJet, n: usize) -> Complex64 {
    leibniz_square_slice(jet.coeffs(), n)
}

fn leibniz_square_slice(s: &[Complex64], n: usize) -> Complex64 {
    let at = |k: usize| s.get(k).copied().unwrap_or_default();
    let mut binom = 1.0_f64;
    let mut acc = Complex64::new(0.0, 0.0);
    // Symmetric in j <-> n-j, so sum the lower half and double it.
    for j in 0..=n / 2 {
        let term = at(j + 1) * at(n - j + 1) * binom;
        if 2 * j == n {
            acc += term;
        } else {
            acc += term * 2.0;
        }
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Writes the hierarchy vector field into `out`. Slices must have equal length.
pub(crate) fn rhs_into(
    s: &[Complex64],
    vstack: &[f64],
    particle: Particle,
    mode: TimeMode,
    out: &mut [Complex64],
) {
    let order = s.len() - 1;
    let quantum = I * (particle.hbar / (2.0 * particle.mass));
    let inv_2m = 1.0 / (2.0 * particle.mass);
    let factor = match mode {
        TimeMode::RealTime => Complex64::new(1.0, 0.0),
        TimeMode::ImaginaryTime => -I * (particle.hbar / 2.0),
    };
    for (n, slot) in out.iter_mut().enumerate() {
        let upper = if n + 2 <= order { s[n + 2] } else { Complex64::new(0.0, 0.0) };
        let value = quantum * upper - leibniz_square_slice(s, n) * inv_2m - vstack[n];
        *slot = factor * value;
    }
}

/// Time derivative of every `S_n` under the truncated hierarchy.
///
/// In [`TimeMode::ImaginaryTime`] the field is multiplied by `-i hbar / 2`, so
/// integration advances the real progress variable `tau` with
/// `t = -(i hbar / 2) tau`.
pub fn hierarchy_rhs(
    jet: &PhaseJet,
    vstack: &[f64],
    particle: Particle,
    mode: TimeMode,
) -> Result<Vec<Complex64>> {
    if vstack.len() != jet.coeffs.len() {
        return Err(ZevcaError::arg(format!(
            "potential stack has {} entries, jet order {} needs {}",
            vstack.len(),
            jet.order(),
            jet.coeffs.len()
        )));
    }
    Particle::new(particle.mass, particle.hbar)?;
    if !jet.is_finite() || vstack.iter().any(|v| !v.is_finite()) {
        return Err(ZevcaError::InvalidJet("non-finite input to hierarchy".into()));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); jet.coeffs.len()];
    rhs_into(&jet.coeffs, vstack, particle, mode, &mut out);
    Ok(out)
}

/// Exact initial jet for a Gaussian packet. Every `S_n` with `n >= 3` vanishes.
pub fn gaussian_phase_jet(g: &GaussianParams, x0: f64, order: usize, hbar: f64) -> PhaseJet {
    let d = x0 - g.xc;
    let ia = I * (g.alpha0 * hbar);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
    let values = [
        ia * d * d + g.pc * d + g.gamma0,
        ia * (2.0 * d) + g.pc,
        ia * 2.0,
    ];
    for (slot, v) in coeffs.iter_mut().zip(values) {
        *slot = v;
    }
    PhaseJet {
        coeffs,
        position: x0,
        time: 0.0,
    }
}

/// Wavefunction and its first derivative rebuilt from a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub psi: Complex64,
    pub psi_x: Complex64,
    /// Set when `|psi|` would overflow; the magnitude is then clamped to `f64::MAX`.
    pub saturated: bool,
}

/// `psi = exp(i S_0 / hbar)` and `psi_x = (i S_1 / hbar) psi`.
pub fn reconstruct_amplitude(jet: &PhaseJet, hbar: f64) -> Amplitude {
    let s0 = jet.get(0);
    let log_mag = -s0.im / hbar;
    let phase = s0.re / hbar;
    let (mag, saturated) = if log_mag > f64::MAX.ln() {
        (f64::MAX, true)
    } else {
        (log_mag.exp(), false)
    };
    let psi = Complex64::from_polar(mag, phase);
    let psi_x = I * jet.get(1) / hbar * psi;
    Amplitude {
        psi,
        psi_x,
        saturated,
    }
}
