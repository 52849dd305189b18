//! Truncated real Taylor series about a fixed expansion point.
//!
//! `RealJet` stores Taylor coefficients `c_k` (so `f^(k)(x0) = k! c_k`). The
//! transcendental operations use the usual power-series recurrences.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Result, ZevcaError};

#[derive(Debug, Clone, PartialEq)]
pub struct RealJet {
    coeffs: Vec<f64>,
    point: f64,
}

/// Binary operations accepted by [`jet_arithmetic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Exp,
    Cosh,
    Reciprocal,
    Square,
}

/// Second operand of [`jet_arithmetic`].
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Jet(&'a RealJet),
    Scalar(f64),
    /// For unary operations.
    None,
}

impl RealJet {
    pub fn new(coeffs: Vec<f64>, point: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(ZevcaError::arg("a jet needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) || !point.is_finite() {
            return Err(ZevcaError::arg("jet coefficients must be finite"));
        }
        Ok(RealJet { coeffs, point })
    }

    pub fn constant(value: f64, point: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        RealJet { coeffs, point }
    }

    /// The identity function `x` expanded about `point`.
    pub fn variable(point: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = point;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        RealJet { coeffs, point }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn point(&self) -> f64 {
        self.point
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Derivative values `f^(k)(x0) = k! c_k`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }

    fn check_compatible(&self, other: &RealJet) -> Result<()> {
        if self.order() != other.order() {
            return Err(ZevcaError::arg(format!(
                "jet orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        if self.point != other.point {
            return Err(ZevcaError::arg(format!(
                "expansion points differ: {} vs {}",
                self.point, other.point
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> RealJet {
        RealJet {
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
            point: self.point,
        }
    }

    fn zip(&self, other: &RealJet, f: impl Fn(f64, f64) -> f64) -> RealJet {
        RealJet {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
            point: self.point,
        }
    }

    pub fn try_add(&self, other: &RealJet) -> Result<RealJet> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &RealJet) -> Result<RealJet> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &RealJet) -> Result<RealJet> {
        self.check_compatible(other)?;
        let n = self.coeffs.len();
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum())
            .collect();
        Ok(RealJet {
            coeffs,
            point: self.point,
        })
    }

    pub fn square(&self) -> RealJet {
        self.try_mul(self).expect("a jet is compatible with itself")
    }

    pub fn scale(&self, s: f64) -> RealJet {
        self.map(|c| c * s)
    }

    pub fn add_scalar(&self, s: f64) -> RealJet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `y = exp(a)`: `y_k = (1/k) sum_{j=1..k} j a_j y_{k-j}`.
    pub fn exp(&self) -> RealJet {
        let a = &self.coeffs;
        let mut y = vec![0.0; a.len()];
        y[0] = a[0].exp();
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * y[k - j]).sum();
            y[k] = s / k as f64;
        }
        RealJet {
            coeffs: y,
            point: self.point,
        }
    }

    /// Coupled recurrence for `(cosh a, sinh a)`.
    pub fn cosh_sinh(&self) -> (RealJet, RealJet) {
        let a = &self.coeffs;
        let mut ch = vec![0.0; a.len()];
        let mut sh = vec![0.0; a.len()];
        ch[0] = a[0].cosh();
        sh[0] = a[0].sinh();
        for k in 1..a.len() {
            let mut c = 0.0;
            let mut s = 0.0;
            for j in 1..=k {
                let w = j as f64 * a[j];
                c += w * sh[k - j];
                s += w * ch[k - j];
            }
            ch[k] = c / k as f64;
            sh[k] = s / k as f64;
        }
        (
            RealJet {
                coeffs: ch,
                point: self.point,
            },
            RealJet {
                coeffs: sh,
                point: self.point,
            },
        )
    }

    pub fn cosh(&self) -> RealJet {
        self.cosh_sinh().0
    }

    /// `b = 1/a`: `b_k = -(1/a_0) sum_{j=1..k} a_j b_{k-j}`.
    pub fn recip(&self) -> Result<RealJet> {
        let a = &self.coeffs;
        if a[0] == 0.0 {
            return Err(ZevcaError::SingularJet(format!(
                "reciprocal of a jet vanishing at x = {}",
                self.point
            )));
        }
        let inv = 1.0 / a[0];
        let mut b = vec![0.0; a.len()];
        b[0] = inv;
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * inv;
        }
        Ok(RealJet {
            coeffs: b,
            point: self.point,
        })
    }
}

/// Dispatches one arithmetic operation. Binary operations take a jet or a
/// scalar; unary ones ignore the second operand.
pub fn jet_arithmetic(a: &RealJet, b: Operand<'_>, op: JetOp) -> Result<RealJet> {
    match (op, b) {
        (JetOp::Add, Operand::Jet(b)) => a.try_add(b),
        (JetOp::Add, Operand::Scalar(s)) => Ok(a.add_scalar(s)),
        (JetOp::Sub, Operand::Jet(b)) => a.try_sub(b),
        (JetOp::Sub, Operand::Scalar(s)) => Ok(a.add_scalar(-s)),
        (JetOp::Mul, Operand::Jet(b)) => a.try_mul(b),
        (JetOp::Mul, Operand::Scalar(s)) => Ok(a.scale(s)),
        (JetOp::Add | JetOp::Sub | JetOp::Mul, Operand::None) => {
            Err(ZevcaError::arg(format!("{op:?} needs a second operand")))
        }
        (JetOp::Exp, _) => Ok(a.exp()),
        (JetOp::Cosh, _) => Ok(a.cosh()),
        (JetOp::Reciprocal, _) => a.recip(),
        (JetOp::Square, _) => Ok(a.square()),
    }
}

impl Add for &RealJet {
    type Output = RealJet;
    fn add(self, rhs: &RealJet) -> RealJet {
        self.try_add(rhs).expect("incompatible jets")
    }
}

impl Sub for &RealJet {
    type Output = RealJet;
    fn sub(self, rhs: &RealJet) -> RealJet {
        self.try_sub(rhs).expect("incompatible jets")
    }
}

impl Mul for &RealJet {
    type Output = RealJet;
    fn mul(self, rhs: &RealJet) -> RealJet {
        self.try_mul(rhs).expect("incompatible jets")
    }
}

impl Mul<f64> for &RealJet {
    type Output = RealJet;
    fn mul(self, rhs: f64) -> RealJet {
        self.scale(rhs)
    }
}

impl Add<f64> for &RealJet {
    type Output = RealJet;
    fn add(self, rhs: f64) -> RealJet {
        self.add_scalar(rhs)
    }
}

impl Neg for &RealJet {
    type Output = RealJet;
    fn neg(self) -> RealJet {
        self.scale(-1.0)
    }
}
