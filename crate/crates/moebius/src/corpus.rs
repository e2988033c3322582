//! Reference curves and seeded random families used by tests and the CLI.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{arclength_reparametrize, FourierCurve};
use crate::error::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Round circle of length 1 in the (e₁, e₂) plane of ℝ^dim, radius 1/(2π).
pub fn unit_circle(dim: usize) -> FourierCurve {
    assert!(dim >= 2);
    let mut out = FourierCurve::zeros(dim, 1);
    let r = 1.0 / (4.0 * PI);
    let mut v = vec![c(0.0, 0.0); dim];
    v[0] = c(r, 0.0);
    v[1] = c(0.0, -r);
    out.set_mode(1, &v);
    out
}

/// Curve x ↦ Σ_i (A_i / 2πp_i)(cos 2πp_i x, sin 2πp_i x) in ℝ^{2m}.
///
/// Its speed is (Σ A_i²)^{1/2} everywhere, so with Σ A_i² = 1 it is
/// parametrized by arc length with length 1. Pairwise coprime frequencies
/// make it simple.
pub fn torus_curve(freqs: &[usize], amps: &[f64]) -> FourierCurve {
    assert_eq!(freqs.len(), amps.len());
    let total = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dim = 2 * freqs.len();
    let kmax = *freqs.iter().max().unwrap();
    let mut out = FourierCurve::zeros(dim, kmax);
    for (i, (&p, &a)) in freqs.iter().zip(amps).enumerate() {
        let r = a / total / (2.0 * PI * p as f64);
        let mut v = out.coeff(p as i64).to_vec();
        v[2 * i] += c(0.5 * r, 0.0);
        v[2 * i + 1] += c(0.0, -0.5 * r);
        out.set_mode(p as i64, &v);
    }
    out
}

/// Applies x ↦ R x (R row-major, dim × dim) to every coefficient.
pub fn rotate(curve: &FourierCurve, r: &[f64]) -> FourierCurve {
    let d = curve.dim();
    assert_eq!(r.len(), d * d);
    let k = curve.max_freq() as i64;
    let mut out = FourierCurve::zeros(d, curve.max_freq());
    for kk in 0..=k {
        let src = curve.coeff(kk);
        let v: Vec<Complex64> =
            (0..d).map(|i| (0..d).map(|j| src[j] * r[i * d + j]).sum()).collect();
        out.set_mode(kk, &v);
    }
    out
}

/// Random orthogonal matrix by Gram–Schmidt on Gaussian-like columns.
pub fn random_rotation(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q.into_iter().flatten().collect()
}

/// Planar circle of length ≈ 1 with radial perturbation: r(x) = (1 + a cos 2πkx)/(2π).
/// Not unit speed; see [`unit_speed`].
pub fn perturbed_circle(amplitude: f64, k: usize, dim: usize) -> FourierCurve {
    assert!(dim >= 2 && k >= 1);
    let mut out = FourierCurve::zeros(dim, k + 1);
    let r = 1.0 / (2.0 * PI);
    let mut base = vec![c(0.0, 0.0); dim];
    base[0] = c(0.5 * r, 0.0);
    base[1] = c(0.0, -0.5 * r);
    out.set_mode(1, &base);
    // a cos(2πkx)(cos 2πx, sin 2πx) splits into modes k + 1 and k − 1.
    let q = 0.25 * r * amplitude;
    let mut hi = out.coeff(k as i64 + 1).to_vec();
    hi[0] += c(q, 0.0);
    hi[1] += c(0.0, -q);
    out.set_mode(k as i64 + 1, &hi);
    let mut lo = out.coeff(k as i64 - 1).to_vec();
    if k == 1 {
        lo[0] += c(2.0 * q, 0.0);
    } else {
        lo[0] += c(q, 0.0);
        lo[1] += c(0.0, q);
    }
    out.set_mode(k as i64 - 1, &lo);
    out
}

/// Trefoil (sin t + 2 sin 2t, cos t − 2 cos 2t, −sin 3t), t = 2πx, scaled to
/// length ≈ 1. Not unit speed.
pub fn trefoil() -> FourierCurve {
    let mut out = FourierCurve::zeros(3, 3);
    let s = 1.0 / 17.6;
    // sin θ = (e^{iθ} − e^{−iθ})/2i, so ĉ(k) = −i/2 for sin and 1/2 for cos
    out.set_mode(1, &[c(0.0, -0.5 * s), c(0.5 * s, 0.0), c(0.0, 0.0)]);
    out.set_mode(2, &[c(0.0, -s), c(-s, 0.0), c(0.0, 0.0)]);
    out.set_mode(3, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.5 * s)]);
    out
}

/// Arc-length reparametrization on `n` samples, truncated to band `k`.
pub fn unit_speed(curve: &FourierCurve, n: usize, k: usize) -> Result<FourierCurve> {
    Ok(arclength_reparametrize(curve, n, 1e-12)?.with_band(k))
}

/// Random real trig polynomial of band K with coefficients decaying like ρ^|k|.
pub fn random_trig(dim: usize, k: usize, decay: f64, rng: &mut impl Rng) -> FourierCurve {
    let mut out = FourierCurve::zeros(dim, k);
    for kk in 0..=k as i64 {
        let s = decay.powi(kk as i32);
        let v: Vec<Complex64> = (0..dim)
            .map(|_| {
                let im = if kk == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                c(rng.gen_range(-1.0..1.0) * s, im * s)
            })
            .collect();
        out.set_mode(kk, &v);
    }
    out
}

/// Random simple curve: unit circle in ℝ^dim plus small random smooth
/// perturbation (amplitude ≤ `amp` relative to the radius) in all components.
pub fn random_perturbed_circle(dim: usize, k: usize, amp: f64, rng: &mut impl Rng) -> FourierCurve {
    let base = unit_circle(dim).with_band(k);
    let mut p = random_trig(dim, k, 0.5, rng);
    p.coeff_mut(0).iter_mut().for_each(|z| *z = c(0.0, 0.0));
    let scale = amp / (2.0 * PI) / (2.0 * k as f64);
    base.lin_comb(1.0, &p, scale)
}

/// Ten unit-speed simple curves used by the operator equivalence checks.
///
/// Eight are exactly unit speed (circles and torus curves, some rotated); two
/// are arc-length reparametrizations of perturbed circles, unit speed to
/// reparametrization accuracy.
pub fn gradient_corpus() -> Result<Vec<(String, FourierCurve)>> {
    let mut r = rng(20240611);
    let mut out = vec![
        ("circle_r2".to_string(), unit_circle(2)),
        ("circle_r3_rotated".to_string(), rotate(&unit_circle(3), &random_rotation(3, &mut r))),
        ("torus_1_2".to_string(), torus_curve(&[1, 2], &[0.8, 0.6])),
        ("torus_1_3_rotated".to_string(), rotate(&torus_curve(&[1, 3], &[0.9, 0.3]), &random_rotation(4, &mut r))),
        ("torus_2_3".to_string(), torus_curve(&[2, 3], &[0.8, 0.45])),
        ("torus_1_2_3".to_string(), torus_curve(&[1, 2, 3], &[0.8, 0.5, 0.3])),
        ("torus_1_4".to_string(), torus_curve(&[1, 4], &[0.95, 0.2])),
        ("torus_2_1_rotated".to_string(), rotate(&torus_curve(&[2, 1], &[0.5, 0.85]), &random_rotation(4, &mut r))),
    ];
    out.push(("perturbed_k2".to_string(), unit_speed(&perturbed_circle(0.02, 2, 2), 256, 14)?));
    let p3 = random_perturbed_circle(3, 3, 0.02, &mut r);
    out.push(("random_r3".to_string(), unit_speed(&p3, 256, 14)?));
    Ok(out)
}
