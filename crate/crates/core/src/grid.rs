//! Split-operator Fourier reference solver on a uniform periodic grid.
//!
//! Used as the exact-quantum oracle for the local propagator: tunneling
//! probabilities in real time, ground-state energies in imaginary time.
//! Imaginary time uses the same progress variable as the jet propagator,
//! i.e. a step `dt` applies `exp(-H dt / 2)` (complex time `-(i hbar / 2) dt`).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZevcaError};
use crate::jet::{GaussianParams, Particle};
use crate::par;
use crate::potential::PotentialSpec;
use crate::propagator::TimeMode;

const MIN_POINTS: usize = 256;
/// Edge-to-peak amplitude ratio required of an initial packet.
const CONTAINMENT: f64 = 1e-12;

/// Periodic grid `x_i = xmin + i dx`, `dx = (xmax - xmin) / npoints`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub npoints: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.xmin.is_finite() && self.xmax.is_finite() && self.xmax > self.xmin) {
            return Err(ZevcaError::Setup(format!(
                "grid bounds must satisfy xmin < xmax, got [{}, {}]",
                self.xmin, self.xmax
            )));
        }
        if self.npoints < MIN_POINTS || !self.npoints.is_power_of_two() {
            return Err(ZevcaError::Setup(format!(
                "npoints must be a power of two >= {MIN_POINTS}, got {}",
                self.npoints
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / self.npoints as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.npoints).map(|i| self.x(i))
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.npoints;
        let dk = 2.0 * PI / (self.xmax - self.xmin);
        (0..n)
            .map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dk)
            .collect()
    }

    pub fn max_wavenumber(&self) -> f64 {
        PI / self.dx()
    }
}

/// Wavefunction samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub spec: GridSpec,
    pub particle: Particle,
    pub psi: Vec<Complex64>,
}

impl GridState {
    pub fn new(spec: GridSpec, particle: Particle, psi: Vec<Complex64>) -> Result<Self> {
        spec.validate()?;
        if psi.len() != spec.npoints {
            return Err(ZevcaError::Setup(format!(
                "{} samples for a {}-point grid",
                psi.len(),
                spec.npoints
            )));
        }
        Ok(GridState { spec, particle, psi })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.dx()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let s = 1.0 / n;
            self.psi.iter_mut().for_each(|z| *z *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|psi|^2` within `fraction` of the box width of either edge.
    pub fn edge_density(&self, fraction: f64) -> f64 {
        let n = self.spec.npoints;
        let band = ((n as f64 * fraction).ceil() as usize).clamp(1, n / 2);
        self.psi[..band]
            .iter()
            .chain(&self.psi[n - band..])
            .fold(0.0, |m, z| m.max(z.norm_sqr()))
    }

    /// `<(x - mean)^2>` of the normalized density.
    pub fn variance(&self) -> f64 {
        let dx = self.spec.dx();
        let norm = self.norm_sqr();
        let mean = self.spec.positions().zip(&self.psi).map(|(x, z)| x * z.norm_sqr()).sum::<f64>() * dx / norm;
        self.spec
            .positions()
            .zip(&self.psi)
            .map(|(x, z)| (x - mean).powi(2) * z.norm_sqr())
            .sum::<f64>()
            * dx
            / norm
    }
}

/// Samples and normalizes a Gaussian packet, rejecting packets that reach
/// the grid edges.
pub fn initialize_gaussian(spec: GridSpec, g: &GaussianParams, particle: Particle) -> Result<GridState> {
    spec.validate()?;
    let psi: Vec<Complex64> = spec.positions().map(|x| g.eval(x, particle.hbar)).collect();
    // Amplitudes relative to the packet centre, free of the gamma0 scale.
    let rel = |x: f64| (-g.alpha0 * (x - g.xc).powi(2)).exp();
    let peak = if g.xc >= spec.xmin && g.xc <= spec.xmax { 1.0 } else { rel(g.xc.clamp(spec.xmin, spec.xmax)) };
    let edge = rel(spec.xmin).max(rel(spec.xmax));
    if !(edge < CONTAINMENT * peak) {
        return Err(ZevcaError::Setup(format!(
            "Gaussian centred at {} is not contained in [{}, {}] (edge/peak = {:.3e})",
            g.xc,
            spec.xmin,
            spec.xmax,
            edge / peak
        )));
    }
    let mut state = GridState::new(spec, particle, psi)?;
    state.normalize();
    Ok(state)
}

/// Reusable Strang-split propagator for a fixed grid, potential and step.
pub struct SplitOperator {
    spec: GridSpec,
    mode: TimeMode,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SplitOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitOperator")
            .field("spec", &self.spec)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl SplitOperator {
    pub fn new(
        spec: GridSpec,
        potential: &PotentialSpec,
        particle: Particle,
        dt: f64,
        mode: TimeMode,
    ) -> Result<Self> {
        spec.validate()?;
        potential.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ZevcaError::Setup(format!("grid dt must be positive, got {dt}")));
        }
        let hbar = particle.hbar;
        let m = particle.mass;
        // Complex time increment of one step.
        let step = match mode {
            TimeMode::RealTime => Complex64::new(dt, 0.0),
            TimeMode::ImaginaryTime => Complex64::new(0.0, -hbar * dt / 2.0),
        };
        // Only a real step rotates the kinetic phase; in imaginary time the
        // factor is a plain decay and cannot alias.
        let kmax = spec.max_wavenumber();
        let nyquist_phase = hbar * kmax * kmax / (2.0 * m) * dt;
        if mode == TimeMode::RealTime && nyquist_phase >= PI {
            return Err(ZevcaError::Setup(format!(
                "grid dt {dt} too large: kinetic phase {nyquist_phase:.3} at the Nyquist mode exceeds pi"
            )));
        }
        let minus_i = Complex64::new(0.0, -1.0);
        let half_potential = spec
            .positions()
            .map(|x| (minus_i * potential.value(x) * step / (2.0 * hbar)).exp())
            .collect();
        let n = spec.npoints as f64;
        let kinetic = spec
            .wavenumbers()
            .into_iter()
            // The inverse transform is unnormalized; fold 1/n in here.
            .map(|k| (minus_i * hbar * k * k / (2.0 * m) * step).exp() / n)
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.npoints);
        let inverse = planner.plan_fft_inverse(spec.npoints);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Ok(SplitOperator {
            spec,
            mode,
            half_potential,
            kinetic,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    /// Half potential, full kinetic, half potential. Imaginary-time steps
    /// renormalize the state afterwards.
    pub fn step(&mut self, state: &mut GridState) -> Result<()> {
        if state.spec != self.spec {
            return Err(ZevcaError::Setup("state grid differs from propagator grid".into()));
        }
        par::mul_assign(&mut state.psi, &self.half_potential);
        self.forward.process_with_scratch(&mut state.psi, &mut self.scratch);
        par::mul_assign(&mut state.psi, &self.kinetic);
        self.inverse.process_with_scratch(&mut state.psi, &mut self.scratch);
        par::mul_assign(&mut state.psi, &self.half_potential);
        if self.mode == TimeMode::ImaginaryTime {
            state.normalize();
        }
        Ok(())
    }
}

/// Single step with a throwaway propagator.
pub fn split_operator_step(state: &GridState, potential: &PotentialSpec, dt: f64, mode: TimeMode) -> Result<GridState> {
    let mut op = SplitOperator::new(state.spec, potential, state.particle, dt, mode)?;
    let mut next = state.clone();
    op.step(&mut next)?;
    Ok(next)
}

/// Probability beyond `xcut`, integrating the trigonometric interpolant of
/// `|psi|^2` exactly. `psi` is zero-padded to twice the grid first so the
/// squared interpolant is itself resolved without aliasing.
pub fn transmitted_probability(state: &GridState, xcut: f64) -> f64 {
    let spec = state.spec;
    let n = spec.npoints;
    let len = spec.xmax - spec.xmin;
    let uc = (xcut - spec.xmin).clamp(0.0, len);
    let mut planner = FftPlanner::new();

    let mut spectrum = state.psi.clone();
    planner.plan_fft_forward(n).process(&mut spectrum);
    let zero = Complex64::new(0.0, 0.0);
    let mut fine = vec![zero; 2 * n];
    let half = n / 2;
    fine[..half].copy_from_slice(&spectrum[..half]);
    fine[2 * n - half + 1..].copy_from_slice(&spectrum[half + 1..]);
    // Nyquist mode shared between +k and -k.
    fine[half] = spectrum[half] * 0.5;
    fine[2 * n - half] = spectrum[half] * 0.5;
    planner.plan_fft_inverse(2 * n).process(&mut fine);

    let inv_n = 1.0 / n as f64;
    let mut rho: Vec<Complex64> = fine.iter().map(|z| Complex64::new((z * inv_n).norm_sqr(), 0.0)).collect();
    planner.plan_fft_forward(2 * n).process(&mut rho);

    // rho(u) = (1 / 2n) sum_j rho_j e^{i k_j u}; integrate each mode over [uc, len].
    let m = 2 * n;
    let dk = 2.0 * PI / len;
    let mut total = rho[0].re * (len - uc);
    for (j, c) in rho.iter().enumerate().skip(1) {
        let k = if j < n { j as f64 } else { j as f64 - m as f64 } * dk;
        if j == n {
            // Real cosine mode at the padded Nyquist frequency.
            total += c.re * (-(k * uc).sin()) / k;
        } else {
            let mode = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, k * uc)) / Complex64::new(0.0, k);
            total += (c * mode).re;
        }
    }
    total / m as f64
}

/// `<psi|H|psi> / <psi|psi>` with a spectral kinetic term.
pub fn rayleigh_energy(state: &GridState, potential: &PotentialSpec) -> f64 {
    let spec = state.spec;
    let hbar = state.particle.hbar;
    let m = state.particle.mass;
    let norm: f64 = state.psi.iter().map(|z| z.norm_sqr()).sum();
    let potential_term: f64 = spec
        .positions()
        .zip(&state.psi)
        .map(|(x, z)| potential.value(x) * z.norm_sqr())
        .sum();
    let mut spectrum = state.psi.clone();
    FftPlanner::new().plan_fft_forward(spec.npoints).process(&mut spectrum);
    // Parseval: sum |psi_k|^2 = n sum |psi_x|^2.
    let kinetic_term: f64 = spec
        .wavenumbers()
        .iter()
        .zip(&spectrum)
        .map(|(k, z)| hbar * hbar * k * k / (2.0 * m) * z.norm_sqr())
        .sum::<f64>()
        / spec.npoints as f64;
    (kinetic_term + potential_term) / norm
}

/// `|psi(x0)|^2` from the trigonometric interpolant of the grid samples,
/// which is spectrally accurate between nodes. Zero outside the box.
pub fn local_density(state: &GridState, x0: f64) -> f64 {
    let spec = state.spec;
    let n = spec.npoints;
    let u = x0 - spec.xmin;
    if !(u >= 0.0 && u < spec.xmax - spec.xmin) {
        return 0.0;
    }
    let mut spectrum = state.psi.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
    let ks = spec.wavenumbers();
    let mut psi = Complex64::new(0.0, 0.0);
    for (j, (k, c)) in ks.iter().zip(&spectrum).enumerate() {
        psi += if j == n / 2 {
            // Split the Nyquist mode evenly between +k and -k.
            *c * (k * u).cos()
        } else {
            *c * Complex64::from_polar(1.0, k * u)
        };
    }
    (psi / n as f64).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(xmin: f64, xmax: f64, n: usize) -> GridSpec {
        GridSpec { xmin, xmax, npoints: n }
    }

    #[test]
    fn grid_validation() {
        assert!(spec(-1.0, 1.0, 100).validate().is_err());
        assert!(spec(-1.0, 1.0, 128).validate().is_err());
        assert!(spec(1.0, -1.0, 256).validate().is_err());
        assert!(spec(-1.0, 1.0, 256).validate().is_ok());
    }

    #[test]
    fn gaussian_initialization() {
        let g = GaussianParams::normalized(0.5, 0.0, 0.0, 1.0).unwrap();
        let s = initialize_gaussian(spec(-10.0, 10.0, 1024), &g, Particle::atomic(1.0)).unwrap();
        assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
        let peak = (0..1024).max_by(|&a, &b| s.psi[a].norm().total_cmp(&s.psi[b].norm())).unwrap();
        assert!((s.spec.x(peak) - 0.0).abs() <= s.spec.dx());
        assert_relative_eq!(s.variance(), 1.0 / (4.0 * 0.5), max_relative = 1e-8);
        assert_relative_eq!(local_density(&s, 0.0), (2.0 * 0.5 / PI).sqrt(), max_relative = 1e-8);
        assert!(local_density(&s, 9.9) < 1e-12);
        // Off-node points see the continuous packet, not a chord between nodes.
        let x = 0.5 * s.spec.dx() + 0.3;
        assert_relative_eq!(local_density(&s, x), g.eval(x, 1.0).norm_sqr(), max_relative = 1e-10);
    }

    #[test]
    fn uncontained_gaussian_is_rejected() {
        let g = GaussianParams::normalized(0.05, 0.0, 0.0, 1.0).unwrap();
        let err = initialize_gaussian(spec(-5.0, 5.0, 256), &g, Particle::atomic(1.0)).unwrap_err();
        assert!(matches!(err, ZevcaError::Setup(_)));
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        let s = spec(-10.0, 10.0, 1024);
        let err = SplitOperator::new(s, &PotentialSpec::free(), Particle::atomic(1.0), 0.1, TimeMode::RealTime).unwrap_err();
        assert!(matches!(err, ZevcaError::Setup(_)));
        assert!(SplitOperator::new(s, &PotentialSpec::free(), Particle::atomic(1.0), 0.1, TimeMode::ImaginaryTime).is_ok());
    }

    #[test]
    fn free_spreading_matches_analytic_law() {
        let (m, alpha) = (1.0, 0.5);
        let g = GaussianParams::normalized(alpha, 0.0, 0.0, 1.0).unwrap();
        let s = spec(-20.0, 20.0, 512);
        let mut state = initialize_gaussian(s, &g, Particle::atomic(m)).unwrap();
        let mut op = SplitOperator::new(s, &PotentialSpec::free(), Particle::atomic(m), 1e-3, TimeMode::RealTime).unwrap();
        for _ in 0..1000 {
            op.step(&mut state).unwrap();
        }
        // sigma^2(t) = sigma0^2 (1 + (hbar t / (2 m sigma0^2))^2), sigma0^2 = 1 / (4 alpha).
        let s0 = 1.0 / (4.0 * alpha);
        let expected = s0 * (1.0 + (1.0 / (2.0 * m * s0)).powi(2));
        assert_relative_eq!(state.variance(), expected, max_relative = 1e-8);
    }

    #[test]
    fn harmonic_density_returns_after_one_period() {
        let w = 1.0;
        let p = PotentialSpec::Harmonic { mass: 1.0, omega: w };
        let g = GaussianParams::normalized(0.8, 1.0, 0.5, 1.0).unwrap();
        let s = spec(-10.0, 10.0, 256);
        let start = initialize_gaussian(s, &g, Particle::atomic(1.0)).unwrap();
        let steps = 40_000;
        let mut op = SplitOperator::new(s, &p, Particle::atomic(1.0), 2.0 * PI / w / steps as f64, TimeMode::RealTime).unwrap();
        let mut state = start.clone();
        for _ in 0..steps {
            op.step(&mut state).unwrap();
        }
        let dev = state
            .psi
            .iter()
            .zip(&start.psi)
            .fold(0.0_f64, |m, (a, b)| m.max((a.norm_sqr() - b.norm_sqr()).abs()));
        assert!(dev < 1e-8, "max density deviation {dev}");
    }

    #[test]
    fn imaginary_time_finds_harmonic_ground_state() {
        let p = PotentialSpec::Harmonic { mass: 1.0, omega: 1.0 };
        let s = spec(-10.0, 10.0, 256);
        // Lopsided start with a node-free but non-Gaussian profile.
        let psi = s
            .positions()
            .map(|x| Complex64::new((-(x - 1.3f64).powi(2)).exp() + 0.4 * (-0.3 * (x + 2.0f64).powi(2)).exp(), 0.2 * x.sin()))
            .collect();
        let mut state = GridState::new(s, Particle::atomic(1.0), psi).unwrap();
        state.normalize();
        let mut op = SplitOperator::new(s, &p, Particle::atomic(1.0), 5e-3, TimeMode::ImaginaryTime).unwrap();
        let mut last = rayleigh_energy(&state, &p);
        for _ in 0..8000 {
            op.step(&mut state).unwrap();
            let e = rayleigh_energy(&state, &p);
            assert!(e <= last + 1e-13, "energy rose from {last} to {e}");
            last = e;
        }
        assert_relative_eq!(last, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn exact_ground_state_energy() {
        let g = GaussianParams::normalized(0.5, 0.0, 0.0, 1.0).unwrap();
        let state = initialize_gaussian(spec(-12.0, 12.0, 512), &g, Particle::atomic(1.0)).unwrap();
        let e = rayleigh_energy(&state, &PotentialSpec::Harmonic { mass: 1.0, omega: 1.0 });
        assert_relative_eq!(e, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn transmitted_fractions() {
        let g = GaussianParams::normalized(2.0, 0.0, 0.0, 1.0).unwrap();
        let state = initialize_gaussian(spec(-8.0, 8.0, 256), &g, Particle::atomic(1.0)).unwrap();
        assert_relative_eq!(transmitted_probability(&state, 0.0), 0.5, epsilon = 1e-12);
        assert!(transmitted_probability(&state, 6.0) < 1e-20);
        let left = GaussianParams::normalized(2.0, -4.0, 0.0, 1.0).unwrap();
        let state = initialize_gaussian(spec(-8.0, 8.0, 256), &left, Particle::atomic(1.0)).unwrap();
        assert!(transmitted_probability(&state, 0.0) < 1e-12);

        // Off-centre cut between nodes against fine Simpson quadrature.
        let g = GaussianParams::normalized(1.0, 0.3, 0.7, 1.0).unwrap();
        let state = initialize_gaussian(spec(-8.0, 8.0, 256), &g, Particle::atomic(1.0)).unwrap();
        let cut = 0.011;
        let k = 100_000;
        let h = (8.0 - cut) / k as f64;
        let simpson: f64 = (0..=k)
            .map(|i| {
                let w = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * g.eval(cut + i as f64 * h, 1.0).norm_sqr()
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert_relative_eq!(transmitted_probability(&state, cut), simpson, epsilon = 1e-12);
    }

    #[test]
    fn real_time_is_unitary() {
        let p = PotentialSpec::Eckart { height: 2.0, beta: 1.0 };
        let g = GaussianParams::normalized(1.0, -4.0, 2.0, 1.0).unwrap();
        let s = spec(-20.0, 20.0, 512);
        let mut state = initialize_gaussian(s, &g, Particle::atomic(1.0)).unwrap();
        let mut op = SplitOperator::new(s, &p, Particle::atomic(1.0), 1e-3, TimeMode::RealTime).unwrap();
        for _ in 0..10_000 {
            op.step(&mut state).unwrap();
        }
        assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
