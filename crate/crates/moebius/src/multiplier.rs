//! Multiplier constants λ_k, the Fourier symbol of Q and the derivative bound
//! it implies.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{derivative, sobolev_norm, FourierCurve, SobolevOrder};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Si(x) = ∫₀ˣ sin t / t dt for x ≥ 0 (odd extension for x < 0).
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x <= 4.0 {
        // Σ (−1)^n x^{2n+1} / ((2n+1)(2n+1)!)
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..60 {
            let m = (2 * n) as f64;
            term *= -x2 / (m * (m + 1.0));
            let add = term / (m + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    // E₁(ix) by continued fraction (modified Lentz); Si = π/2 + Im(e^{-ix}·cf).
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..1000 {
        let a = -((i - 1) * (i - 1)) as f64;
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    PI / 2.0 + h.im
}

/// Supremum of Si on [0, ∞), attained at π.
pub fn sine_integral_sup() -> f64 {
    sine_integral(PI)
}

/// Gauss nodes per π-panel in [`lambda_k`].
pub const LAMBDA_NODES: usize = 20;

/// λ_k = (2/3) ∫₀^{kπ} (1/t)(1 − t/(kπ))³ sin t dt.
pub fn lambda_k(k: u32) -> Result<f64> {
    lambda_k_refined(k, 1)
}

/// [`lambda_k`] with each π-panel split into `sub` Gauss panels.
pub fn lambda_k_refined(k: u32, sub: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Input("lambda_k needs k ≥ 1".into()));
    }
    let (x, w) = gauss_legendre(LAMBDA_NODES);
    let kp = k as f64 * PI;
    let h = PI / sub as f64;
    let mut acc = 0.0;
    for p in 0..k as usize * sub {
        let a = p as f64 * h;
        let mut panel = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let t = a + xi * h;
            let u = 1.0 - t / kp;
            panel += wi * sinc(t) * u * u * u;
        }
        acc += panel * h;
    }
    Ok(2.0 / 3.0 * acc)
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Ratio between the symbol realized by the truncated-integral definition of
/// Q and the printed normalization (π³/2)λ_k|k|³.
pub const SYMBOL_FACTOR: f64 = 32.0;

/// Fourier symbol of Q at frequency k: 16π³ λ_|k| |k|³ (zero at k = 0).
pub fn q_symbol(lambda: f64, k: i64) -> f64 {
    let ka = k.unsigned_abs() as f64;
    SYMBOL_FACTOR * PI.powi(3) / 2.0 * lambda * ka * ka * ka
}

/// Lower bound used for λ_k beyond the table: π/3 minus this margin.
pub const TAIL_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierTable {
    pub max_k: usize,
    /// λ_k at index k − 1.
    pub lambda: Vec<f64>,
    pub c_tilde: f64,
}

impl MultiplierTable {
    pub fn new(max_k: usize) -> Result<Self> {
        if max_k == 0 {
            return Err(Error::Input("multiplier table needs max_k ≥ 1".into()));
        }
        let lambda = (1..=max_k as u32)
            .into_par_iter()
            .map(lambda_k)
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = lambda.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::Invariant(format!("lambda_{} = {} is not positive", k + 1, lambda[k])));
        }
        let inf = lambda.iter().cloned().fold(PI / 3.0 - TAIL_MARGIN, f64::min);
        // (inf λ² 2⁻⁸)^{-1/2}
        let c_tilde = (inf * inf / 256.0).powf(-0.5);
        Ok(MultiplierTable { max_k, lambda, c_tilde })
    }

    pub fn lambda(&self, k: i64) -> f64 {
        self.lambda[k.unsigned_abs() as usize - 1]
    }

    pub fn symbol(&self, k: i64) -> f64 {
        if k == 0 {
            0.0
        } else {
            q_symbol(self.lambda(k), k)
        }
    }
}

/// Qγ evaluated in Fourier space.
pub fn apply_q_multiplier(curve: &FourierCurve, table: &MultiplierTable) -> Result<FourierCurve> {
    let k = curve.max_freq();
    if table.max_k < k {
        return Err(Error::Configuration(format!(
            "multiplier table has max_k = {} < curve band {k}",
            table.max_k
        )));
    }
    let mut out = curve.clone();
    for kk in -(k as i64)..=k as i64 {
        let s = table.symbol(kk);
        out.coeff_mut(kk).iter_mut().for_each(|c| *c *= s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub l: u32,
    pub m: f64,
    /// ‖∂^{l+3}γ‖_{H^m}
    pub lhs: f64,
    /// ‖∂^l Qγ‖_{H^m}
    pub rhs: f64,
    pub c_tilde: f64,
    pub holds: bool,
}

/// Checks ‖∂^{l+3}γ‖_{H^m} ≤ C̃ ‖∂^l Qγ‖_{H^m}.
pub fn corollary_bound_check(
    curve: &FourierCurve,
    l: u32,
    m: f64,
    table: &MultiplierTable,
) -> Result<CorollaryReport> {
    let order = SobolevOrder::new(m)?;
    let lhs = sobolev_norm(&derivative(curve, l + 3), order);
    let rhs = sobolev_norm(&derivative(&apply_q_multiplier(curve, table)?, l), order);
    Ok(CorollaryReport { l, m, lhs, rhs, c_tilde: table.c_tilde, holds: lhs <= table.c_tilde * rhs })
}
