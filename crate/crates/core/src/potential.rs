//! One-dimensional potentials with exact derivative stacks.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZevcaError};
use crate::taylor::RealJet;

/// Built-in potential families, all in atomic units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `height / cosh(beta x)^2`.
    Eckart { height: f64, beta: f64 },
    /// `quadratic x^2 + quartic x^4`.
    Quartic { quadratic: f64, quartic: f64 },
    /// `depth (1 - exp(-alpha x))^2`.
    Morse { depth: f64, alpha: f64 },
    /// `mass omega^2 x^2 / 2`.
    Harmonic { mass: f64, omega: f64 },
    /// `sum_k coeffs[k] x^k`. An empty list is the free particle.
    Polynomial { coeffs: Vec<f64> },
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec::Polynomial { coeffs: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ZevcaError::arg(format!("{name} must be positive, got {v}")))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ZevcaError::arg(format!("{name} must be finite")))
            }
        };
        match self {
            PotentialSpec::Eckart { height, beta } => {
                positive("height", *height)?;
                positive("beta", *beta)
            }
            PotentialSpec::Quartic { quadratic, quartic } => {
                finite("quadratic", *quadratic)?;
                finite("quartic", *quartic)
            }
            PotentialSpec::Morse { depth, alpha } => {
                positive("depth", *depth)?;
                positive("alpha", *alpha)
            }
            PotentialSpec::Harmonic { mass, omega } => {
                positive("mass", *mass)?;
                positive("omega", *omega)
            }
            PotentialSpec::Polynomial { coeffs } => {
                coeffs.iter().try_for_each(|c| finite("polynomial coefficient", *c))
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            PotentialSpec::Eckart { height, beta } => {
                let c = (beta * x).cosh();
                height / (c * c)
            }
            PotentialSpec::Quartic { quadratic, quartic } => {
                let x2 = x * x;
                quadratic * x2 + quartic * x2 * x2
            }
            PotentialSpec::Morse { depth, alpha } => {
                let u = 1.0 - (-alpha * x).exp();
                depth * u * u
            }
            PotentialSpec::Harmonic { mass, omega } => 0.5 * mass * omega * omega * x * x,
            PotentialSpec::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    /// Truncated Taylor expansion of the potential about `x0`.
    pub fn taylor(&self, x0: f64, order: usize) -> RealJet {
        let x = RealJet::variable(x0, order);
        match self {
            PotentialSpec::Eckart { height, beta } => {
                // cosh never vanishes on the real line.
                let sech = x.scale(*beta).cosh().recip().expect("cosh > 0");
                sech.square().scale(*height)
            }
            PotentialSpec::Quartic { quadratic, quartic } => {
                let x2 = x.square();
                &x2.scale(*quadratic) + &x2.square().scale(*quartic)
            }
            PotentialSpec::Morse { depth, alpha } => {
                let u = x.scale(-alpha).exp().scale(-1.0).add_scalar(1.0);
                u.square().scale(*depth)
            }
            PotentialSpec::Harmonic { mass, omega } => x.square().scale(0.5 * mass * omega * omega),
            PotentialSpec::Polynomial { coeffs } => coeffs
                .iter()
                .rev()
                .fold(RealJet::constant(0.0, x0, order), |acc, &c| (&acc * &x).add_scalar(c)),
        }
    }

    /// `V_0..=V_N` at `x0`.
    pub fn derivative_stack(&self, x0: f64, order: usize) -> Vec<f64> {
        self.taylor(x0, order).derivatives()
    }
}
