//! Time stepping of a phase jet along its fixed-position characteristic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZevcaError};
use crate::jet::{rhs_into, Particle, PhaseJet};
use crate::potential::PotentialSpec;

/// Real-time dynamics, or imaginary-time relaxation in the progress variable `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    RealTime,
    ImaginaryTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum Scheme {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Dormand-Prince 5(4) with error control; `dt` is the initial step.
    Rk45 { atol: f64, rtol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            dt: 1e-3,
            t_final: 1.0,
            scheme: Scheme::Rk4,
            record_stride: 1,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ZevcaError::arg(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(ZevcaError::arg(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.dt >= self.t_final {
            return Err(ZevcaError::arg(format!(
                "dt ({}) must be smaller than t_final ({})",
                self.dt, self.t_final
            )));
        }
        if self.record_stride == 0 {
            return Err(ZevcaError::arg("record_stride must be at least 1"));
        }
        if let Scheme::Rk45 { atol, rtol } = self.scheme {
            if !(atol > 0.0 && rtol > 0.0) {
                return Err(ZevcaError::arg("adaptive tolerances must be positive"));
            }
        }
        Ok(())
    }
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    /// Index the offending jet would have occupied in the record.
    pub index: usize,
    pub time: f64,
}

/// Jets recorded along one fixed-position characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub mode: TimeMode,
    pub x0: f64,
    pub particle: Particle,
    pub times: Vec<f64>,
    pub jets: Vec<PhaseJet>,
    /// `V_0..=V_N` at `x0`, evaluated once for the whole run.
    pub vstack: Vec<f64>,
    pub blow_up: Option<BlowUp>,
}

impl TrajectoryRecord {
    pub fn order(&self) -> usize {
        self.vstack.len() - 1
    }

    pub fn last(&self) -> &PhaseJet {
        self.jets.last().expect("a record always holds the initial jet")
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Scratch space for the Runge-Kutta stages.
struct Stages {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
}

impl Stages {
    fn new(len: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![ZERO; len]),
            tmp: vec![ZERO; len],
        }
    }
}

struct Field<'a> {
    vstack: &'a [f64],
    particle: Particle,
    mode: TimeMode,
}

impl Field<'_> {
    fn eval(&self, s: &[Complex64], out: &mut [Complex64]) {
        rhs_into(s, self.vstack, self.particle, self.mode, out);
    }
}

fn rk4_step(field: &Field<'_>, y: &mut [Complex64], h: f64, st: &mut Stages) {
    let [k1, k2, k3, k4, ..] = &mut st.k;
    let tmp = &mut st.tmp;
    field.eval(y, k1);
    for i in 0..y.len() {
        tmp[i] = y[i] + k1[i] * (0.5 * h);
    }
    field.eval(tmp, k2);
    for i in 0..y.len() {
        tmp[i] = y[i] + k2[i] * (0.5 * h);
    }
    field.eval(tmp, k3);
    for i in 0..y.len() {
        tmp[i] = y[i] + k3[i] * h;
    }
    field.eval(tmp, k4);
    for i in 0..y.len() {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

// Dormand-Prince 5(4) tableau. The field is autonomous, so the nodes are not needed.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince attempt. Writes the fifth-order solution into `out`
/// and returns the scaled error norm.
fn dp_attempt(
    field: &Field<'_>,
    y: &[Complex64],
    h: f64,
    atol: f64,
    rtol: f64,
    out: &mut [Complex64],
    st: &mut Stages,
) -> f64 {
    field.eval(y, &mut st.k[0]);
    for stage in 1..7 {
        for i in 0..y.len() {
            let mut acc = y[i];
            for (j, a) in DP_A[stage][..stage].iter().enumerate() {
                if *a != 0.0 {
                    acc += st.k[j][i] * (a * h);
                }
            }
            st.tmp[i] = acc;
        }
        field.eval(&st.tmp, &mut st.k[stage]);
    }
    let mut err_norm: f64 = 0.0;
    for i in 0..y.len() {
        let mut sol = y[i];
        let mut err = ZERO;
        for j in 0..7 {
            sol += st.k[j][i] * (DP_B[j] * h);
            err += st.k[j][i] * (DP_E[j] * h);
        }
        out[i] = sol;
        let scale = atol + rtol * y[i].norm().max(sol.norm());
        err_norm = err_norm.max(err.norm() / scale);
    }
    err_norm
}

fn all_finite(y: &[Complex64]) -> bool {
    y.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Advances `jet` by one step of size `cfg.dt` under the configured scheme.
/// For the adaptive scheme this is a single unchecked Dormand-Prince step.
pub fn step(
    jet: &PhaseJet,
    vstack: &[f64],
    cfg: &IntegrationConfig,
    mode: TimeMode,
    particle: Particle,
) -> Result<PhaseJet> {
    if vstack.len() != jet.coeffs().len() {
        return Err(ZevcaError::arg("potential stack does not match jet order"));
    }
    let field = Field {
        vstack,
        particle,
        mode,
    };
    let mut st = Stages::new(vstack.len());
    let mut y = jet.coeffs().to_vec();
    match cfg.scheme {
        Scheme::Rk4 => rk4_step(&field, &mut y, cfg.dt, &mut st),
        Scheme::Rk45 { atol, rtol } => {
            let mut out = vec![ZERO; y.len()];
            dp_attempt(&field, &y, cfg.dt, atol, rtol, &mut out, &mut st);
            y = out;
        }
    }
    if !all_finite(&y) {
        return Err(ZevcaError::InvalidJet(format!(
            "non-finite jet after step at t = {}",
            jet.time() + cfg.dt
        )));
    }
    Ok(jet.with_state(y, jet.time() + cfg.dt))
}

const MAX_REJECTIONS: usize = 60;

/// Integrates the truncated hierarchy from `initial` to `cfg.t_final`.
///
/// The potential stack is evaluated once at the jet's position. A jet that
/// turns non-finite ends the record early with [`TrajectoryRecord::blow_up`]
/// set; only exhausting the adaptive step control is an error.
pub fn propagate(
    initial: &PhaseJet,
    potential: &PotentialSpec,
    cfg: &IntegrationConfig,
    mode: TimeMode,
    particle: Particle,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    potential.validate()?;
    Particle::new(particle.mass, particle.hbar)?;
    if !initial.is_finite() {
        return Err(ZevcaError::InvalidJet("initial jet is not finite".into()));
    }
    let x0 = initial.position();
    let vstack = potential.derivative_stack(x0, initial.order());
    let start = initial.with_state(initial.coeffs().to_vec(), 0.0);

    let mut record = TrajectoryRecord {
        mode,
        x0,
        particle,
        times: vec![0.0],
        jets: vec![start],
        vstack,
        blow_up: None,
    };
    let field = Field {
        vstack: &record.vstack,
        particle,
        mode,
    };
    let mut st = Stages::new(record.vstack.len());
    let mut y = initial.coeffs().to_vec();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut blow_up = None;

    match cfg.scheme {
        Scheme::Rk4 => {
            let n_steps = (cfg.t_final / cfg.dt - 1e-9).ceil() as usize;
            for i in 1..=n_steps {
                let t_prev = (i - 1) as f64 * cfg.dt;
                let t = if i == n_steps { cfg.t_final } else { i as f64 * cfg.dt };
                rk4_step(&field, &mut y, t - t_prev, &mut st);
                if !all_finite(&y) {
                    blow_up = Some(BlowUp {
                        index: times.len() + 1,
                        time: t,
                    });
                    break;
                }
                if i % cfg.record_stride == 0 || i == n_steps {
                    times.push(t);
                    states.push(y.clone());
                }
            }
        }
        Scheme::Rk45 { atol, rtol } => {
            let mut t = 0.0;
            let mut h = cfg.dt;
            let mut accepted = 0usize;
            let mut rejections = 0usize;
            let mut out = vec![ZERO; y.len()];
            while t < cfg.t_final {
                let last = t + h >= cfg.t_final * (1.0 - 1e-14);
                let h_try = if last { cfg.t_final - t } else { h };
                let err = dp_attempt(&field, &y, h_try, atol, rtol, &mut out, &mut st);
                if !all_finite(&out) && err.is_finite() {
                    blow_up = Some(BlowUp {
                        index: times.len() + 1,
                        time: t + h_try,
                    });
                    break;
                }
                if err <= 1.0 {
                    t = if last { cfg.t_final } else { t + h_try };
                    std::mem::swap(&mut y, &mut out);
                    accepted += 1;
                    rejections = 0;
                    if accepted % cfg.record_stride == 0 || last {
                        times.push(t);
                        states.push(y.clone());
                    }
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    h = h_try * grow;
                } else {
                    rejections += 1;
                    let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
                    h = h_try * shrink;
                    if rejections > MAX_REJECTIONS || h < 1e-14 * t.abs().max(1.0) {
                        return Err(ZevcaError::StepRejection { last_time: t });
                    }
                }
            }
        }
    }

    for (t, s) in times.into_iter().zip(states) {
        let jet = record.jets[0].with_state(s, t);
        record.times.push(t);
        record.jets.push(jet);
    }
    record.blow_up = blow_up;
    Ok(record)
}
