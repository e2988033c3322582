//! First variation H̃γ = Qγ + R1γ + R2γ, Hγ = P⊥H̃γ, on truncated domains
//! ε ≤ |w| ≤ 1/2, with a kernel-form path for P⊥R1, P⊥R2 and a bilinear
//! Hilbert transform path for the tangential part of Q.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::bht::{bht_dot, BhtMethod, BhtQuery};
use crate::curve::{derivative, dot, norm, synthesize, FourierCurve, SampledGrid};
use crate::energy::SIMPLICITY_RATIO;
use crate::error::{Error, Result};
use crate::multiplier::{apply_q_multiplier, MultiplierTable};
use crate::quadrature::{panels_for, Composite, TruncatedRule, GAUSS_NODES};

/// Allowed deviation of |γ'| from 1.
pub const UNIT_SPEED_TOL: f64 = 1e-6;
/// |a| below this is a kernel pole.
pub const KERNEL_POLE_TOL: f64 = 1e-8;
/// Coefficients below this fraction of the peak are ignored when sizing
/// Gauss panels.
const BAND_REL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub eps: f64,
    /// Inner grid size: w runs over j/n.
    pub n: usize,
    pub grid_locked: bool,
}

impl Truncation {
    pub fn new(eps: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Input(format!("eps = {eps} outside (0, 1/2]")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Input(format!("grid size {n} must be even and >= 4")));
        }
        Ok(Truncation { eps, n, grid_locked: TruncatedRule::is_grid_locked(n, eps) })
    }

    /// ε = j/n.
    pub fn cells(j: usize, n: usize) -> Result<Self> {
        Self::new(j as f64 / n as f64, n)
    }

    pub fn doubled(&self) -> Result<Self> {
        Self::new(2.0 * self.eps, self.n)
    }

    fn rule(&self) -> Result<TruncatedRule> {
        if !self.grid_locked {
            return Err(Error::Configuration(format!(
                "eps = {} is not an integer multiple of 1/{}",
                self.eps, self.n
            )));
        }
        TruncatedRule::new(self.n, self.eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    Direct,
    KernelForm,
    SpectralQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RPart {
    R1,
    R2,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub eps: Truncation,
    pub method: GradientMethod,
    pub q: SampledGrid,
    pub r1: SampledGrid,
    pub r2: SampledGrid,
    pub h_tilde: SampledGrid,
    pub h: SampledGrid,
}

/// γ, γ̇, γ̈ on the grid with the unit-speed precondition checked.
struct Frame {
    n: usize,
    dim: usize,
    g0: SampledGrid,
    g1: SampledGrid,
    g2: SampledGrid,
}

impl Frame {
    fn new(curve: &FourierCurve, n: usize) -> Result<Self> {
        if n < 2 * curve.max_freq() + 2 {
            return Err(Error::Configuration(format!(
                "grid of {n} points cannot resolve band {}",
                curve.max_freq()
            )));
        }
        let g1 = synthesize(&derivative(curve, 1), n)?;
        check_unit_speed(&g1)?;
        Ok(Frame {
            n,
            dim: curve.dim(),
            g0: synthesize(curve, n)?,
            g1,
            g2: synthesize(&derivative(curve, 2), n)?,
        })
    }
}

fn check_unit_speed(g1: &SampledGrid) -> Result<()> {
    for j in 0..g1.n {
        let s = norm(g1.at(j));
        if (s - 1.0).abs() > UNIT_SPEED_TOL {
            return Err(Error::Precondition(format!(
                "curve is not unit speed: |gamma'| = {s} at node {j}"
            )));
        }
    }
    Ok(())
}

fn project_with(g: &SampledGrid, tangent: &SampledGrid) -> SampledGrid {
    let mut out = g.clone();
    for j in 0..g.n {
        let t = tangent.at(j);
        let tn = norm(t);
        let p = dot(g.at(j), t) / (tn * tn);
        out.at_mut(j).iter_mut().zip(t).for_each(|(o, ti)| *o -= p * ti);
    }
    out
}

/// g ↦ g − ⟨g, τ⟩τ nodewise, τ the unit tangent.
pub fn project_normal(g: &SampledGrid, curve: &FourierCurve) -> Result<SampledGrid> {
    let t = synthesize(&derivative(curve, 1), g.n)?;
    check_unit_speed(&t)?;
    if g.dim != curve.dim() {
        return Err(Error::Input("field and curve differ in dimension".into()));
    }
    Ok(project_with(g, &t))
}

/// g ↦ ⟨g, τ⟩τ nodewise.
pub fn project_tangent(g: &SampledGrid, curve: &FourierCurve) -> Result<SampledGrid> {
    let t = synthesize(&derivative(curve, 1), g.n)?;
    check_unit_speed(&t)?;
    let mut out = g.clone();
    for j in 0..g.n {
        let tn = norm(t.at(j));
        let p = dot(g.at(j), t.at(j)) / (tn * tn);
        out.at_mut(j).iter_mut().zip(t.at(j)).for_each(|(o, ti)| *o = p * ti);
    }
    Ok(out)
}

/// ∫₀¹ (1−t)² e^{iθt} dt.
pub fn taylor_weight2(theta: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if theta.abs() < 1.0 {
        // Σ (iθ)^n 2/(n+3)!
        let mut term = Complex64::new(1.0 / 3.0, 0.0);
        let mut sum = term;
        for n in 1..40 {
            term *= i * theta / (n as f64 + 3.0);
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        return sum;
    }
    let a = -i * theta;
    let (a2, a3) = (a * a, a * a * a);
    Complex64::new(1.0, 0.0) / a - 2.0 / a2 + 2.0 / a3 - 2.0 * Complex64::from_polar(1.0, theta) / a3
}

struct Synth {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Synth {
    fn new(n: usize) -> Self {
        Synth { n, fft: FftPlanner::new().plan_fft_inverse(n), buf: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Real part of Σ_k ĉ_c(k) m(k) e^{2πikx_j}, added times `scale` into `out`.
    fn add(&mut self, curve: &FourierCurve, m: &[Complex64], scale: f64, out: &mut [f64]) {
        let (n, d, k) = (self.n, curve.dim(), curve.max_freq() as i64);
        for c in 0..d {
            self.buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for kk in -k..=k {
                self.buf[kk.rem_euclid(n as i64) as usize] = curve.coeff(kk)[c] * m[(kk + k) as usize];
            }
            self.fft.process(&mut self.buf);
            for j in 0..n {
                out[j * d + c] += scale * self.buf[j].re;
            }
        }
    }
}

/// Q^εγ via 2∫ [∫₀¹(1−t)²(γ'''(x+tw) − γ'''(x))dt] / w dw, the t-integral
/// taken exactly mode by mode. Linear in γ; unit speed is not needed here.
pub fn q_eps(curve: &FourierCurve, trunc: &Truncation) -> Result<SampledGrid> {
    let rule = trunc.rule()?;
    let n = trunc.n;
    if n < 2 * curve.max_freq() + 2 {
        return Err(Error::Configuration(format!("grid of {n} points cannot resolve band {}", curve.max_freq())));
    }
    let c3 = derivative(curve, 3);
    let k = curve.max_freq() as i64;
    let mut out = SampledGrid::zeros(n, curve.dim());
    let mut synth = Synth::new(n);
    let mut m = vec![Complex64::new(0.0, 0.0); (2 * k + 1) as usize];
    for &(_, w, wt) in &rule.nodes {
        for kk in -k..=k {
            m[(kk + k) as usize] = taylor_weight2(2.0 * PI * kk as f64 * w) - 1.0 / 3.0;
        }
        synth.add(&c3, &m, 2.0 * wt / w, &mut out.values);
    }
    Ok(out)
}

/// Direct-quadrature fields on the grid, all from the same w-nodes.
#[derive(Debug, Clone)]
pub struct DirectTerms {
    /// Q^ε from its defining (singular-difference) integrand.
    pub q_raw: SampledGrid,
    pub r1: SampledGrid,
    pub r2: SampledGrid,
    /// H̃^ε from its defining integrand.
    pub h_tilde: SampledGrid,
    /// Σ_w |weight|·(|q term| + |r1 term| + |r2 term|) per node.
    pub scale: Vec<f64>,
}

pub(crate) fn r1_integrand(delta: &[f64], w: f64, g1: &[f64], out: &mut [f64]) {
    let d2 = dot(delta, delta);
    let f = 4.0 * (1.0 / (d2 * d2) - 1.0 / w.powi(4));
    for c in 0..out.len() {
        out[c] = f * (delta[c] - w * g1[c]);
    }
}

pub(crate) fn r2_integrand(delta: &[f64], w: f64, g2: &[f64], out: &mut [f64]) {
    let d2 = dot(delta, delta);
    let f = -2.0 * (1.0 / d2 - 1.0 / (w * w));
    for c in 0..out.len() {
        out[c] = f * g2[c];
    }
}

pub fn direct_terms(curve: &FourierCurve, trunc: &Truncation) -> Result<DirectTerms> {
    let rule = trunc.rule()?;
    let fr = Frame::new(curve, trunc.n)?;
    let (n, d) = (fr.n, fr.dim);
    let mut q_raw = SampledGrid::zeros(n, d);
    let mut r1 = SampledGrid::zeros(n, d);
    let mut r2 = SampledGrid::zeros(n, d);
    let mut h = SampledGrid::zeros(n, d);
    let mut scale = vec![0.0; n];
    let (mut delta, mut t1, mut t2) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for i in 0..n {
        let (x0, x1, x2) = (fr.g0.at(i), fr.g1.at(i), fr.g2.at(i));
        for &(j, w, wt) in &rule.nodes {
            let y = fr.g0.at((i as i64 + j).rem_euclid(n as i64) as usize);
            for c in 0..d {
                delta[c] = y[c] - x0[c];
            }
            let d2 = dot(&delta, &delta);
            if d2.sqrt() < SIMPLICITY_RATIO * w.abs() {
                return Err(Error::Geometry(format!("chord collapse at x = {}, w = {w}", i as f64 / n as f64)));
            }
            r1_integrand(&delta, w, x1, &mut t1);
            r2_integrand(&delta, w, x2, &mut t2);
            let w2 = w * w;
            let mut s = 0.0;
            for c in 0..d {
                let rem = delta[c] - w * x1[c];
                let tq = 2.0 * (2.0 * rem / w2 - x2[c]) / w2;
                let th = 2.0 * (2.0 * rem / d2 - x2[c]) / d2;
                q_raw.at_mut(i)[c] += wt * tq;
                r1.at_mut(i)[c] += wt * t1[c];
                r2.at_mut(i)[c] += wt * t2[c];
                h.at_mut(i)[c] += wt * th;
                s += wt * (tq.abs() + t1[c].abs() + t2[c].abs());
            }
            scale[i] += s;
        }
    }
    Ok(DirectTerms { q_raw, r1, r2, h_tilde: h, scale })
}

pub fn r1_eps(curve: &FourierCurve, trunc: &Truncation) -> Result<SampledGrid> {
    Ok(direct_terms(curve, trunc)?.r1)
}

pub fn r2_eps(curve: &FourierCurve, trunc: &Truncation) -> Result<SampledGrid> {
    Ok(direct_terms(curve, trunc)?.r2)
}

pub fn h_tilde_eps(curve: &FourierCurve, trunc: &Truncation) -> Result<SampledGrid> {
    Ok(direct_terms(curve, trunc)?.h_tilde)
}

/// Q^ε from the defining integrand (reference for the bounded rewrite).
pub fn q_eps_raw(curve: &FourierCurve, trunc: &Truncation) -> Result<SampledGrid> {
    Ok(direct_terms(curve, trunc)?.q_raw)
}

/// Two-point extrapolation 2F(ε) − F(2ε), removing the O(ε) term.
pub fn richardson(at_eps: &SampledGrid, at_2eps: &SampledGrid) -> SampledGrid {
    at_eps.scale(2.0).sub(at_2eps)
}

/// Three-level extrapolation (16F(ε) − 10F(2ε) + F(4ε))/7. The truncation
/// error of every part is odd in ε, so this removes the ε and ε³ terms.
pub fn richardson3(at_eps: &SampledGrid, at_2eps: &SampledGrid, at_4eps: &SampledGrid) -> SampledGrid {
    at_eps.scale(16.0 / 7.0).sub(&at_2eps.scale(10.0 / 7.0)).add(&at_4eps.scale(1.0 / 7.0))
}

/// Applies [`richardson3`] to F over ε, 2ε, 4ε.
pub fn extrapolate(trunc: &Truncation, f: impl Fn(&Truncation) -> Result<SampledGrid>) -> Result<SampledGrid> {
    let t2 = trunc.doubled()?;
    let t4 = t2.doubled()?;
    Ok(richardson3(&f(trunc)?, &f(&t2)?, &f(&t4)?))
}

/// Q^ε extrapolated to ε → 0.
pub fn q_extrapolated(curve: &FourierCurve, trunc: &Truncation) -> Result<SampledGrid> {
    extrapolate(trunc, |t| q_eps(curve, t))
}

/// Qγ on the grid from the Fourier multiplier.
pub fn q_spectral(curve: &FourierCurve, n: usize) -> Result<SampledGrid> {
    let table = MultiplierTable::new(curve.max_freq().max(1))?;
    synthesize(&apply_q_multiplier(curve, &table)?, n)
}

pub fn h_gamma(curve: &FourierCurve, trunc: &Truncation, method: GradientMethod) -> Result<GradientReport> {
    let n = trunc.n;
    let (q, r1, r2, h_tilde) = match method {
        GradientMethod::Direct => {
            let t = direct_terms(curve, trunc)?;
            (q_eps(curve, trunc)?, t.r1, t.r2, t.h_tilde)
        }
        GradientMethod::KernelForm => {
            let q = q_eps(curve, trunc)?;
            let r1 = r_kernel_form(curve, trunc, RPart::R1)?;
            let r2 = r_kernel_form(curve, trunc, RPart::R2)?;
            let ht = q.add(&r1).add(&r2);
            (q, r1, r2, ht)
        }
        GradientMethod::SpectralQ => {
            let t2 = trunc.doubled()?;
            let a = direct_terms(curve, trunc)?;
            let b = direct_terms(curve, &t2)?;
            let c = direct_terms(curve, &t2.doubled()?)?;
            let q = q_spectral(curve, n)?;
            let r1 = richardson3(&a.r1, &b.r1, &c.r1);
            let r2 = richardson3(&a.r2, &b.r2, &c.r2);
            let ht = q.add(&r1).add(&r2);
            (q, r1, r2, ht)
        }
    };
    let h = project_normal(&h_tilde, curve)?;
    Ok(GradientReport { eps: *trunc, method, q, r1, r2, h_tilde, h })
}

/// G̃₂(a, x, y, z) = −(1/|a|²)⟨x, y⟩z, with ⟨x, y⟩ passed in.
pub fn g2_tilde(a2: f64, xy: f64, z: &[f64], out: &mut [f64]) {
    let f = -xy / a2;
    out.iter_mut().zip(z).for_each(|(o, zi)| *o = f * zi);
}

/// G̃₁(a, x, y, z) = 2(1/|a|⁴ + 1/|a|²)⟨x, y⟩z, with ⟨x, y⟩ passed in.
pub fn g1_tilde(a2: f64, xy: f64, z: &[f64], out: &mut [f64]) {
    let f = 2.0 * (1.0 / (a2 * a2) + 1.0 / a2) * xy;
    out.iter_mut().zip(z).for_each(|(o, zi)| *o = f * zi);
}

/// Pointwise evaluation of a curve at x_i + v for all grid nodes.
struct PointEval {
    n: usize,
    dim: usize,
    k: usize,
    /// rows (i, k, c): ĉ(k) e^{2πikx_i} for k = 0..=K
    rot: Vec<Complex64>,
    tw: Vec<Complex64>,
}

impl PointEval {
    fn new(curve: &FourierCurve, n: usize, k: usize) -> Self {
        let d = curve.dim();
        let mut rot = Vec::with_capacity(n * (k + 1) * d);
        for i in 0..n {
            let x = i as f64 / n as f64;
            for kk in 0..=k as i64 {
                let e = Complex64::from_polar(1.0, 2.0 * PI * kk as f64 * x);
                for c in 0..d {
                    let s = if kk == 0 { 1.0 } else { 2.0 };
                    rot.push(curve.coeff(kk)[c] * e * s);
                }
            }
        }
        PointEval { n, dim: d, k, rot, tw: vec![Complex64::new(0.0, 0.0); k + 1] }
    }

    /// out[i*dim + c] += wt · f_c(x_i + v)
    fn add(&mut self, v: f64, wt: f64, out: &mut [f64]) {
        let step = Complex64::from_polar(1.0, 2.0 * PI * v);
        self.tw[0] = Complex64::new(wt, 0.0);
        for kk in 1..=self.k {
            self.tw[kk] = self.tw[kk - 1] * step;
        }
        let d = self.dim;
        let row = (self.k + 1) * d;
        for i in 0..self.n {
            let r = &self.rot[i * row..(i + 1) * row];
            let o = &mut out[i * d..(i + 1) * d];
            for (kk, t) in self.tw.iter().enumerate() {
                for c in 0..d {
                    let z = r[kk * d + c];
                    o[c] += z.re * t.re - z.im * t.im;
                }
            }
        }
    }
}

/// P⊥R^εγ from the multiple-integral kernel forms:
/// R2: ∫_w ∫∫ (s₁−s₂)² G̃₂(a, x, y, γ̈(·)) with a = ∫₀¹γ̇(·+tw)dt and
///     x, y = ∫₀¹γ̈(·+w(s₂+(s₁−s₂)φ))dφ;
/// R1: same with G̃₁ and z = ∫₀¹γ̈(·+tw)(1−t)dt.
/// Gauss panels per unit-cube axis, the truncated-domain weights in w.
pub fn r_kernel_form(curve: &FourierCurve, trunc: &Truncation, which: RPart) -> Result<SampledGrid> {
    let rule = trunc.rule()?;
    let fr = Frame::new(curve, trunc.n)?;
    let (n, d) = (fr.n, fr.dim);
    let kb = curve.effective_band(BAND_REL).max(1);
    let mut e1 = PointEval::new(&derivative(curve, 1), n, kb);
    let mut e2 = PointEval::new(&derivative(curve, 2), n, kb);
    let mut acc = SampledGrid::zeros(n, d);
    let mut a = vec![0.0; n * d];
    let mut z = vec![0.0; n * d];
    let mut psi = vec![0.0; n * d];
    let mut s_int = vec![0.0; n];
    let mut term = vec![0.0; d];
    for &(_, w, wt) in &rule.nodes {
        let cycles = kb as f64 * w.abs();
        let tq = Composite::new(GAUSS_NODES, panels_for(2.0 * cycles));
        a.iter_mut().for_each(|v| *v = 0.0);
        z.iter_mut().for_each(|v| *v = 0.0);
        for (&t, &tw) in tq.nodes.iter().zip(&tq.weights) {
            e1.add(t * w, tw, &mut a);
            if which == RPart::R1 {
                e2.add(t * w, tw * (1.0 - t), &mut z);
            }
        }
        // ∫∫ (s₁−s₂)² ⟨x, y⟩: the φ₁, φ₂ tensor sum factors as |Ψ|²; the
        // integrand is symmetric in (s₁, s₂) and vanishes on the diagonal.
        let sq = Composite::new(GAUSS_NODES, panels_for(cycles));
        s_int.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..sq.len() {
            for r in p + 1..sq.len() {
                let (s1, s2) = (sq.nodes[p], sq.nodes[r]);
                let ds = s1 - s2;
                let pq = Composite::new(GAUSS_NODES, panels_for(cycles * ds.abs()));
                psi.iter_mut().for_each(|v| *v = 0.0);
                for (&phi, &pw) in pq.nodes.iter().zip(&pq.weights) {
                    e2.add(w * (s2 + ds * phi), pw, &mut psi);
                }
                let f = 2.0 * sq.weights[p] * sq.weights[r] * ds * ds;
                for i in 0..n {
                    let ps = &psi[i * d..(i + 1) * d];
                    s_int[i] += f * dot(ps, ps);
                }
            }
        }
        for i in 0..n {
            let ai = &a[i * d..(i + 1) * d];
            let a2 = dot(ai, ai);
            if a2.sqrt() < KERNEL_POLE_TOL {
                return Err(Error::Degeneracy(format!("|a| = {} at x = {}, w = {w}", a2.sqrt(), i as f64 / n as f64)));
            }
            match which {
                RPart::R2 => g2_tilde(a2, s_int[i], fr.g2.at(i), &mut term),
                RPart::R1 => g1_tilde(a2, s_int[i], &z[i * d..(i + 1) * d], &mut term),
            }
            acc.at_mut(i).iter_mut().zip(&term).for_each(|(o, t)| *o += wt * t);
        }
    }
    Ok(project_with(&acc, &fr.g1))
}

/// P^T Q^εγ = 4∫∫(1−t)(−t) Σ_c H^ε_{t,st}(γ̈_c, γ̈_c) ds dt · γ̇, Gauss in (s, t).
pub fn tangential_q_bht(curve: &FourierCurve, trunc: &Truncation, method: BhtMethod) -> Result<SampledGrid> {
    let fr = Frame::new(curve, trunc.n)?;
    let g2 = derivative(curve, 2);
    let kb = curve.effective_band(BAND_REL).max(1);
    let g2 = g2.with_band(kb);
    // grid for the bilinear output, a refinement of the truncation grid
    let mut nb = trunc.n;
    while nb < 4 * kb + 2 {
        nb *= 2;
    }
    let tq = Composite::new(GAUSS_NODES, panels_for(kb as f64));
    let sq = Composite::new(GAUSS_NODES, panels_for(kb as f64 / 2.0));
    let mut acc = FourierCurve::zeros(1, 2 * kb);
    for (&t, &tw) in tq.nodes.iter().zip(&tq.weights) {
        for (&s, &sw) in sq.nodes.iter().zip(&sq.weights) {
            let q = BhtQuery::new(t, s * t, trunc.eps, method, nb)?;
            let h = bht_dot(&g2, &g2, &q)?;
            acc = acc.lin_comb(1.0, &h, 4.0 * (1.0 - t) * (-t) * tw * sw);
        }
    }
    let scalar = synthesize(&acc, trunc.n)?;
    let mut out = fr.g1.clone();
    for j in 0..trunc.n {
        let v = scalar.values[j];
        out.at_mut(j).iter_mut().for_each(|o| *o *= v);
    }
    Ok(out)
}
