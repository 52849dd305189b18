//! Independent oracles and property checks shared by the property suite and
//! the acceptance run.
#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use zevca::grid::{initialize_gaussian, GridSpec, SplitOperator};
use zevca::observables::probability_current;
use zevca::{
    gaussian_phase_jet, leibniz_square, propagate, GaussianParams, IntegrationConfig, Particle, PhaseJet,
    PotentialSpec, Scheme, TimeMode,
};

pub type CheckResult = Result<(), TestCaseError>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Finite-difference weights for the `m`-th derivative at `z` from nodes `xs`
/// (Fornberg's recursion).
pub fn fd_weights(z: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// `m`-th derivative of `f` at `x0` from a 17-point centred stencil.
pub fn fd_derivative<T>(f: impl Fn(f64) -> T, x0: f64, m: usize, h: f64) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
{
    fd_derivative_wide(f, x0, m, h, 8)
}

/// As [`fd_derivative`] with a `2 half + 1`-point stencil.
pub fn fd_derivative_wide<T>(f: impl Fn(f64) -> T, x0: f64, m: usize, h: f64, half: i32) -> T
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
{
    let xs: Vec<f64> = (-half..=half).map(|j| x0 + j as f64 * h).collect();
    let w = fd_weights(x0, &xs, m);
    xs.iter().zip(&w).fold(T::default(), |acc, (&x, &wi)| acc + f(x) * wi)
}

/// `n`-th derivative of `S_1(x)^2` by squaring the Taylor polynomial of `S_1`.
pub fn brute_leibniz(s: &[Complex64], n: usize) -> Complex64 {
    // Taylor coefficients of S_1 about x0: a_k = S_{k+1} / k!.
    let a: Vec<Complex64> = (0..s.len().saturating_sub(1)).map(|k| s[k + 1] / factorial(k)).collect();
    let mut sq = c(0.0, 0.0);
    for i in 0..=n {
        if let (Some(x), Some(y)) = (a.get(i), a.get(n - i)) {
            sq += x * y;
        }
    }
    sq * factorial(n)
}

pub fn complex_vec(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| c(a, b)), 1..=max_len)
}

pub fn check_leibniz(s: &[Complex64], n: usize) -> CheckResult {
    let jet = PhaseJet::new(s.to_vec(), 0.0, 0.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let got = leibniz_square(&jet, n);
    let want = brute_leibniz(s, n);
    let scale = want.norm().max(1.0);
    prop_assert!((got - want).norm() <= 1e-12 * scale, "n={n}: {got} vs {want}");
    Ok(())
}

/// Flux from the phase gradient versus `(hbar/m) Im(psi* psi_x)` with `psi`
/// built directly from `S_0` and `S_1`.
pub fn check_current_identity(s0: Complex64, s1: Complex64, mass: f64, hbar: f64) -> CheckResult {
    let jet = PhaseJet::new(vec![s0, s1], 0.0, 0.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let got = probability_current(&jet, Particle { mass, hbar }).value;
    let psi = (Complex64::i() * s0 / hbar).exp();
    let psi_x = Complex64::i() * s1 / hbar * psi;
    let want = hbar / mass * (psi.conj() * psi_x).im;
    prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "{got} vs {want}");
    Ok(())
}

pub fn potential_strategy() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (1.0..50.0f64, 0.5..5.0f64).prop_map(|(height, beta)| PotentialSpec::Eckart { height, beta }),
        (-1.0..1.0f64, 0.0..2.0f64).prop_map(|(quadratic, quartic)| PotentialSpec::Quartic { quadratic, quartic }),
        (0.05..5.0f64, 0.3..2.0f64).prop_map(|(depth, alpha)| PotentialSpec::Morse { depth, alpha }),
        (0.5..5.0f64, 0.2..3.0f64).prop_map(|(mass, omega)| PotentialSpec::Harmonic { mass, omega }),
        prop::collection::vec(-2.0..2.0f64, 0..8).prop_map(|coeffs| PotentialSpec::Polynomial { coeffs }),
    ]
}

/// Exact stack against high-order finite differences of `value`, `n <= 6`.
///
/// Errors are measured against the Cauchy bound `M n! / r^n`, with `r` the
/// distance to the nearest complex pole (Eckart) or the decay length of the
/// fastest exponential, and `M` the largest `|V|` on the stencil.
pub fn check_derivative_stack(p: &PotentialSpec, x0: f64) -> CheckResult {
    let stack = p.derivative_stack(x0, 6);
    let (r, half, k) = match p {
        // The sech^2 poles sit pi/(2 beta) off the axis; polynomial
        // interpolation needs a short, dense stencil there.
        PotentialSpec::Eckart { beta, .. } => (std::f64::consts::FRAC_PI_2 / beta, 10, 0.05),
        PotentialSpec::Morse { alpha, .. } => (0.5 / alpha, 8, 0.3),
        _ => (1.0, 8, 0.3),
    };
    let r = f64::min(r, 1.0);
    let h = k * r;
    let amp = (-half..=half).map(|j| p.value(x0 + j as f64 * h).abs()).fold(1.0, f64::max);
    for (n, &exact) in stack.iter().enumerate() {
        let fd = fd_derivative_wide(|x| p.value(x), x0, n, h, half);
        let scale = exact.abs().max(amp * factorial(n) / r.powi(n as i32));
        prop_assert!((fd - exact).abs() <= 1e-6 * scale, "{p:?} n={n} x0={x0}: {fd} vs {exact}");
    }
    Ok(())
}

/// A low-order stack is the prefix of a high-order one.
pub fn check_prefix(p: &PotentialSpec, x0: f64, low: usize, high: usize) -> CheckResult {
    let a = p.derivative_stack(x0, low);
    let b = p.derivative_stack(x0, high);
    prop_assert_eq!(&a[..], &b[..=low]);
    Ok(())
}

/// Polynomial stacks equal the hand-differentiated polynomial.
pub fn check_polynomial_exactness(coeffs: &[f64], x0: f64) -> CheckResult {
    let p = PotentialSpec::Polynomial { coeffs: coeffs.to_vec() };
    let order = coeffs.len() + 2;
    let stack = p.derivative_stack(x0, order);
    for (n, &got) in stack.iter().enumerate() {
        // d^n/dx^n sum_k c_k x^k = sum_{k>=n} c_k k!/(k-n)! x^(k-n)
        let want: f64 = coeffs
            .iter()
            .enumerate()
            .skip(n)
            .map(|(k, &ck)| ck * factorial(k) / factorial(k - n) * x0.powi((k - n) as i32))
            .sum();
        let scale = coeffs
            .iter()
            .enumerate()
            .skip(n)
            .map(|(k, &ck)| (ck * factorial(k) / factorial(k - n) * x0.powi((k - n) as i32)).abs())
            .sum::<f64>()
            .max(1.0);
        prop_assert!((got - want).abs() <= 1e-13 * scale, "n={n}: {got} vs {want}");
    }
    Ok(())
}

/// Free Gaussian: `S_2(t) = S_2(0) / (1 + S_2(0) t / m)` and the width law
/// `|psi(x0)|^2` of the analytic spreading packet.
pub fn check_free_spreading(alpha0: f64, xc: f64, pc: f64, mass: f64, t_final: f64) -> CheckResult {
    let hbar = 1.0;
    let g = GaussianParams::normalized(alpha0, xc, pc, hbar).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let jet = gaussian_phase_jet(&g, 0.0, 4, hbar);
    let cfg = IntegrationConfig {
        dt: 1e-3,
        t_final,
        scheme: Scheme::Rk4,
        record_stride: 1000,
    };
    let particle = Particle { mass, hbar };
    let rec = propagate(&jet, &PotentialSpec::free(), &cfg, TimeMode::RealTime, particle)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let s2_0 = jet.get(2);
    for (t, j) in rec.times.iter().zip(&rec.jets) {
        let want = s2_0 / (1.0 + s2_0 * *t / mass);
        prop_assert!((j.get(2) - want).norm() <= 1e-8 * want.norm(), "t={t}: {} vs {want}", j.get(2));
        // Analytic free packet: centre xc + pc t/m, a(t) = alpha0 / (1 + 2 i hbar alpha0 t / m).
        let a = c(alpha0, 0.0) / (c(1.0, 2.0 * hbar * alpha0 * t / mass));
        let centre = xc + pc * t / mass;
        let rho = (2.0 * a.re / std::f64::consts::PI).sqrt() * (-2.0 * a.re * centre * centre).exp();
        let got = (-2.0 * j.get(0).im / hbar).exp();
        prop_assert!((got - rho).abs() <= 1e-8 * rho.max(1e-300), "t={t}: density {got} vs {rho}");
    }
    Ok(())
}

/// Real-time split-operator steps preserve the norm.
pub fn check_unitarity(alpha0: f64, xc: f64, pc: f64, potential: &PotentialSpec) -> CheckResult {
    let spec = GridSpec {
        xmin: -15.0,
        xmax: 15.0,
        npoints: 512,
    };
    let particle = Particle::atomic(1.0);
    let g = GaussianParams::normalized(alpha0, xc, pc, 1.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut state = initialize_gaussian(spec, &g, particle).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut op = SplitOperator::new(spec, potential, particle, 2e-3, TimeMode::RealTime)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    for _ in 0..200 {
        op.step(&mut state).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    let norm = state.norm_sqr();
    prop_assert!((norm - 1.0).abs() <= 1e-10, "norm {norm}");
    Ok(())
}

/// Ratio of successive RK4 differences under step halving; 16 for a
/// fourth-order method.
pub fn step_halving_factor() -> f64 {
    let p = PotentialSpec::Quartic {
        quadratic: 0.5,
        quartic: 1.0,
    };
    let g = GaussianParams::normalized(0.5, 1.0, 0.0, 1.0).unwrap();
    let jet = gaussian_phase_jet(&g, 0.0, 6, 1.0);
    let run = |dt: f64| {
        let cfg = IntegrationConfig {
            dt,
            t_final: 1.0,
            scheme: Scheme::Rk4,
            record_stride: 1_000_000,
        };
        let rec = propagate(&jet, &p, &cfg, TimeMode::ImaginaryTime, Particle::atomic(1.0)).unwrap();
        rec.last().coeffs().to_vec()
    };
    let (a, b, c) = (run(0.02), run(0.01), run(0.005));
    let diff = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    diff(&a, &b) / diff(&b, &c)
}
