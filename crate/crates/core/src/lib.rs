//! Zero-velocity complex action (ZEVCA) propagation.
//!
//! The wavefunction at a single fixed point is followed through a truncated
//! hierarchy of spatial derivatives of its complex phase, in real time
//! (tunneling probabilities through the flux at the point) or in imaginary
//! time (ground-state energies). A split-operator grid solver provides the
//! exact reference for both.

pub mod config;
pub mod error;
pub mod jet;
pub mod grid;
pub mod observables;
pub mod output;
pub mod par;
pub mod potential;
pub mod propagator;
pub mod runner;
pub mod taylor;

pub use config::{parse_config, preset, Experiment, ExperimentConfig};
pub use error::{Result, ZevcaError};
pub use jet::{
    gaussian_phase_jet, hierarchy_rhs, leibniz_square, reconstruct_amplitude, Amplitude, GaussianParams, Particle,
    PhaseJet,
};
pub use output::{RunOutput, RunSummary};
pub use potential::PotentialSpec;
pub use propagator::{propagate, step, BlowUp, IntegrationConfig, Scheme, TimeMode, TrajectoryRecord};
pub use runner::{run, run_compare, run_eigen, run_tunnel, RunOptions};
pub use taylor::{jet_arithmetic, JetOp, Operand, RealJet};
