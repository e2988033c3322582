//! Möbius energy E(γ) = ∬ (1/|γ(u)−γ(v)|² − 1/D(u,v)²) |γ'(u)||γ'(v)| du dv.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{self, derivative, dot, synthesize, FourierCurve};
use crate::error::{Error, Result};
use crate::quadrature::gregory_weights;

/// Value used on the diagonal cell w = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// Limit κ²|γ'|²/12 of the integrand (κ²/12 at unit speed).
    TaylorLimit,
    /// Drop the diagonal node.
    SkipCell,
}

/// Treatment of the inner integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRule {
    /// `Literal` for constant-speed input, `KernelSubtraction` otherwise.
    Auto,
    /// The integrand as written; D = L|w|, so constant speed is required.
    /// The antipodal kink of 1/D² at w = ±1/2 gets end-corrected weights.
    Literal,
    /// Subtracts the circle kernel π²/(L² sin²(πΔs/L)) in arc length and adds
    /// its exact integral 4/L, which leaves a smooth periodic integrand.
    KernelSubtraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyQuadrature {
    pub n_outer: usize,
    pub n_inner: usize,
    pub diagonal_rule: DiagonalRule,
    pub inner_rule: InnerRule,
}

impl EnergyQuadrature {
    pub fn new(n_outer: usize, n_inner: usize) -> Result<Self> {
        let q = EnergyQuadrature {
            n_outer,
            n_inner,
            diagonal_rule: DiagonalRule::TaylorLimit,
            inner_rule: InnerRule::Auto,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        for n in [self.n_outer, self.n_inner] {
            if n < 16 || n % 2 != 0 {
                return Err(Error::Input(format!("quadrature size {n} must be even and >= 16")));
            }
        }
        Ok(())
    }
}

/// Self-intersection threshold: chord < SIMPLICITY_RATIO · D off the diagonal band.
pub const SIMPLICITY_RATIO: f64 = 1e-6;
/// Half-width (in inner cells) of the diagonal band excluded from the check.
pub const DIAGONAL_BAND: usize = 3;

/// Shorter arc between parameters x and y on a loop of the given length.
pub fn intrinsic_distance(x: f64, y: f64, length: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::Input(format!("length {length} must be positive")));
    }
    let l = (x - y).abs().rem_euclid(length);
    Ok(l.min(length - l))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub length: f64,
    pub inner_rule: InnerRule,
    pub min_chord_ratio: f64,
}

pub fn moebius_energy(curve: &FourierCurve, quad: &EnergyQuadrature) -> Result<f64> {
    Ok(moebius_energy_report(curve, quad)?.energy)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub fn moebius_energy_report(curve: &FourierCurve, quad: &EnergyQuadrature) -> Result<EnergyReport> {
    quad.validate()?;
    let (no, ni) = (quad.n_outer, quad.n_inner);
    let mut m = no / gcd(no, ni) * ni;
    if m > 1 << 20 {
        return Err(Error::Input("n_outer and n_inner have too large a common grid".into()));
    }
    while m < 2 * curve.max_freq() + 2 {
        m *= 2;
    }
    let d = curve.dim();
    let g0 = synthesize(curve, m)?;
    let g1 = synthesize(&derivative(curve, 1), m)?;
    let g2 = synthesize(&derivative(curve, 2), m)?;
    let (s, v, total) = curve::arc_length_grid(curve, m)?;
    let mean = v.iter().sum::<f64>() / m as f64;
    let spread = v.iter().fold(0.0f64, |a, &x| a.max((x - mean).abs())) / mean;
    let min_speed = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_speed > curve::REGULARITY_THRESHOLD * mean) {
        return Err(Error::Degeneracy(format!("speed {min_speed:e} near zero")));
    }
    let rule = match quad.inner_rule {
        InnerRule::Auto if spread <= curve::CONSTANT_SPEED_TOL => InnerRule::Literal,
        InnerRule::Auto => InnerRule::KernelSubtraction,
        InnerRule::Literal if spread > curve::CONSTANT_SPEED_TOL => {
            return Err(Error::Precondition(format!(
                "literal inner rule needs constant speed (spread {spread:e})"
            )))
        }
        r => r,
    };
    let step_o = m / no;
    let step_i = m / ni;
    let half = (ni / 2) as i64;

    // Diagonal value (κ²/12)|γ'|² at node j.
    let diag = |j: usize| -> f64 {
        let (a, b) = (g1.at(j), g2.at(j));
        let a2 = dot(a, a);
        let kappa2 = (a2 * dot(b, b) - dot(a, b).powi(2)) / a2.powi(3);
        kappa2 * a2 / 12.0
    };
    let lit_w = gregory_weights(ni + 1, 1.0 / ni as f64);

    let per_u: Vec<Result<(f64, f64)>> = (0..no)
        .into_par_iter()
        .map(|i| {
            let ju = i * step_o;
            let pu = g0.at(ju);
            let mut acc = 0.0;
            let mut min_ratio = f64::INFINITY;
            let (lo, hi) = match rule {
                InnerRule::Literal => (-half, half),
                _ => (-half, half - 1),
            };
            for mm in lo..=hi {
                let off = mm * step_i as i64;
                if mm == 0 {
                    let val = match quad.diagonal_rule {
                        DiagonalRule::TaylorLimit => match rule {
                            InnerRule::Literal => diag(ju),
                            _ => diag(ju) - v[ju] * v[ju] * PI * PI / (3.0 * total * total),
                        },
                        DiagonalRule::SkipCell => 0.0,
                    };
                    let wt = match rule {
                        InnerRule::Literal => lit_w[half as usize],
                        _ => 1.0 / ni as f64,
                    };
                    acc += wt * val;
                    continue;
                }
                let raw = ju as i64 + off;
                let jv = raw.rem_euclid(m as i64) as usize;
                let wraps = raw.div_euclid(m as i64) as f64;
                let pv = g0.at(jv);
                let mut c2 = 0.0;
                for a in 0..d {
                    let t = pv[a] - pu[a];
                    c2 += t * t;
                }
                let ds = s[jv] + wraps * total - s[ju];
                let dist = ds.abs().min(total - ds.abs());
                let ratio = c2.sqrt() / dist;
                if mm.unsigned_abs() as usize > DIAGONAL_BAND {
                    min_ratio = min_ratio.min(ratio);
                    if ratio < SIMPLICITY_RATIO {
                        return Err(Error::Geometry(format!(
                            "self-intersection near u = {}, w = {}",
                            ju as f64 / m as f64,
                            mm as f64 / ni as f64
                        )));
                    }
                }
                let val = match rule {
                    InnerRule::Literal => {
                        let dl = total * (mm as f64 / ni as f64).abs();
                        (1.0 / c2 - 1.0 / (dl * dl)) * v[ju] * v[jv]
                    }
                    _ => {
                        let sn = (PI * ds / total).sin();
                        (1.0 / c2 - PI * PI / (total * total * sn * sn)) * v[ju] * v[jv]
                    }
                };
                let wt = match rule {
                    InnerRule::Literal => lit_w[(mm + half) as usize],
                    _ => 1.0 / ni as f64,
                };
                acc += wt * val;
            }
            if rule == InnerRule::KernelSubtraction {
                acc += v[ju] * 4.0 / total;
            }
            Ok((acc, min_ratio))
        })
        .collect();
    let mut energy = 0.0;
    let mut min_ratio = f64::INFINITY;
    for r in per_u {
        let (a, mr) = r?;
        energy += a;
        min_ratio = min_ratio.min(mr);
    }
    energy /= no as f64;
    Ok(EnergyReport { energy, length: total, inner_rule: rule, min_chord_ratio: min_ratio })
}

/// Length-independent check that `curve` has constant speed within `tol`.
pub fn is_constant_speed(curve: &FourierCurve, n: usize, tol: f64) -> Result<bool> {
    Ok(curve::speed_spread(curve, n)? <= tol)
}
