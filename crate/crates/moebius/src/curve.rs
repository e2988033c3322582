//! Band-limited closed curves on the torus ℝ/ℤ and their spectral calculus.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance of the reality constraint ĉ(−k) = conj ĉ(k).
pub const REALITY_TOL: f64 = 1e-12;

/// Closed curve γ: ℝ/ℤ → ℝⁿ stored by its Fourier coefficients for |k| ≤ K.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    dim: usize,
    max_freq: usize,
    /// Row (k + K) holds the vector ĉ(k).
    coeffs: Vec<Complex64>,
}

/// Uniform samples x_j = j/N of a periodic vector field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledGrid {
    pub n: usize,
    pub dim: usize,
    /// Row-major: `values[j * dim + c]`.
    pub values: Vec<f64>,
}

/// Order of the H^s norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevOrder {
    pub s: f64,
    pub m: i32,
}

impl SobolevOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::Input(format!("Sobolev order {s} < 0")));
        }
        Ok(SobolevOrder { s, m: s.floor() as i32 })
    }

    pub fn integer(m: u32) -> Self {
        SobolevOrder { s: m as f64, m: m as i32 }
    }
}

impl SampledGrid {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Input(format!("grid size {n} must be even and >= 4")));
        }
        if values.len() != n * dim {
            return Err(Error::Input("grid value count does not match n * dim".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite sample".into()));
        }
        Ok(SampledGrid { n, dim, values })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        SampledGrid { n, dim, values: vec![0.0; n * dim] }
    }

    pub fn at(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn at_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.dim..(j + 1) * self.dim]
    }

    /// Grid L² norm (1/N Σ|v_j|²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.n as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &SampledGrid) -> SampledGrid {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledGrid) -> SampledGrid {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> SampledGrid {
        SampledGrid { n: self.n, dim: self.dim, values: self.values.iter().map(|v| c * v).collect() }
    }

    fn zip_with(&self, other: &SampledGrid, f: impl Fn(f64, f64) -> f64) -> SampledGrid {
        assert_eq!((self.n, self.dim), (other.n, other.dim));
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        SampledGrid { n: self.n, dim: self.dim, values }
    }
}

impl FourierCurve {
    /// Builds a curve from rows ĉ(−K), …, ĉ(K), checking the reality constraint.
    pub fn new(dim: usize, max_freq: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        if coeffs.len() != (2 * max_freq + 1) * dim {
            return Err(Error::Input("coefficient count does not match (2K+1) * dim".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Input("non-finite coefficient".into()));
        }
        let curve = FourierCurve { dim, max_freq, coeffs };
        curve.check_reality()?;
        Ok(curve)
    }

    pub fn zeros(dim: usize, max_freq: usize) -> Self {
        FourierCurve { dim, max_freq, coeffs: vec![Complex64::new(0.0, 0.0); (2 * max_freq + 1) * dim] }
    }

    /// Sets ĉ(k) and ĉ(−k) = conj ĉ(k) together.
    pub fn set_mode(&mut self, k: i64, c: &[Complex64]) {
        assert_eq!(c.len(), self.dim);
        assert!(k.unsigned_abs() as usize <= self.max_freq);
        let d = self.dim;
        let i = self.row(k);
        let j = self.row(-k);
        for a in 0..d {
            self.coeffs[i * d + a] = c[a];
            self.coeffs[j * d + a] = c[a].conj();
        }
        if k == 0 {
            for a in 0..d {
                self.coeffs[i * d + a] = Complex64::new(c[a].re, 0.0);
            }
        }
    }

    fn row(&self, k: i64) -> usize {
        (k + self.max_freq as i64) as usize
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    pub fn coeff(&self, k: i64) -> &[Complex64] {
        let r = self.row(k);
        &self.coeffs[r * self.dim..(r + 1) * self.dim]
    }

    pub fn coeff_mut(&mut self, k: i64) -> &mut [Complex64] {
        let r = self.row(k);
        let d = self.dim;
        &mut self.coeffs[r * d..(r + 1) * d]
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn check_reality(&self) -> Result<()> {
        let k_max = self.max_freq as i64;
        for k in 0..=k_max {
            let a = self.coeff(k);
            let b = self.coeff(-k);
            for c in 0..self.dim {
                if (a[c] - b[c].conj()).norm() > REALITY_TOL {
                    return Err(Error::Invariant(format!(
                        "reality constraint violated at k = {k}, component {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluates γ(x) at an arbitrary point.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let k_max = self.max_freq as i64;
        for k in -k_max..=k_max {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x);
            for (c, o) in self.coeff(k).iter().zip(out.iter_mut()) {
                *o += (c * e).re;
            }
        }
        out
    }

    /// Componentwise linear combination a·self + b·other (bands are merged).
    pub fn lin_comb(&self, a: f64, other: &FourierCurve, b: f64) -> FourierCurve {
        assert_eq!(self.dim, other.dim);
        let k = self.max_freq.max(other.max_freq);
        let mut out = FourierCurve::zeros(self.dim, k);
        for kk in -(k as i64)..=(k as i64) {
            let row = out.row(kk);
            for c in 0..self.dim {
                let mut v = Complex64::new(0.0, 0.0);
                if kk.unsigned_abs() as usize <= self.max_freq {
                    v += self.coeff(kk)[c] * a;
                }
                if kk.unsigned_abs() as usize <= other.max_freq {
                    v += other.coeff(kk)[c] * b;
                }
                out.coeffs[row * self.dim + c] = v;
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> FourierCurve {
        FourierCurve { dim: self.dim, max_freq: self.max_freq, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Same curve with band K' (zero padded or truncated).
    pub fn with_band(&self, k_new: usize) -> FourierCurve {
        let mut out = FourierCurve::zeros(self.dim, k_new);
        let k = self.max_freq.min(k_new) as i64;
        for kk in -k..=k {
            let src = self.coeff(kk).to_vec();
            out.coeff_mut(kk).copy_from_slice(&src);
        }
        out
    }

    /// Scalar curve holding component `c`.
    pub fn component(&self, c: usize) -> FourierCurve {
        let k = self.max_freq as i64;
        let coeffs = (-k..=k).map(|kk| self.coeff(kk)[c]).collect();
        FourierCurve { dim: 1, max_freq: self.max_freq, coeffs }
    }

    /// Largest |k| whose coefficient exceeds `rel` times the largest non-constant coefficient.
    pub fn effective_band(&self, rel: f64) -> usize {
        let k_max = self.max_freq as i64;
        let norm = |k: i64| self.coeff(k).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let peak = (1..=k_max).map(norm).fold(0.0, f64::max);
        (1..=k_max).rev().find(|&k| norm(k) > rel * peak).unwrap_or(0) as usize
    }

    /// Shift of the parameter: x ↦ γ(x + δ).
    pub fn shifted(&self, delta: f64) -> FourierCurve {
        let mut out = self.clone();
        let k = self.max_freq as i64;
        for kk in -k..=k {
            let e = Complex64::from_polar(1.0, 2.0 * PI * kk as f64 * delta);
            for c in out.coeff_mut(kk) {
                *c *= e;
            }
        }
        out
    }
}

fn planner_fft(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Discrete Fourier analysis of the samples, keeping |k| ≤ N/2 − 1.
pub fn analyze(samples: &SampledGrid) -> Result<FourierCurve> {
    analyze_band(samples, samples.n / 2 - 1)
}

/// Discrete Fourier analysis keeping |k| ≤ K (requires N ≥ 2K + 2).
pub fn analyze_band(samples: &SampledGrid, k: usize) -> Result<FourierCurve> {
    let n = samples.n;
    if n < 2 * k + 2 {
        return Err(Error::Input(format!("N = {n} < 2K + 2 with K = {k}")));
    }
    if samples.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite sample".into()));
    }
    let fft = planner_fft(n, false);
    let d = samples.dim;
    let mut out = FourierCurve::zeros(d, k);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..d {
        for j in 0..n {
            buf[j] = Complex64::new(samples.values[j * d + c], 0.0);
        }
        fft.process(&mut buf);
        for kk in -(k as i64)..=(k as i64) {
            let idx = kk.rem_euclid(n as i64) as usize;
            out.coeff_mut(kk)[c] = buf[idx] / n as f64;
        }
    }
    // Enforce exact conjugate symmetry (removes rounding asymmetry).
    for kk in 0..=(k as i64) {
        let pos = out.coeff(kk).to_vec();
        let neg = out.coeff(-kk).to_vec();
        let avg: Vec<Complex64> = pos.iter().zip(&neg).map(|(p, q)| (p + q.conj()) * 0.5).collect();
        out.set_mode(kk, &avg);
    }
    Ok(out)
}

/// Evaluates the truncated series on the grid x_j = j/N.
pub fn synthesize(curve: &FourierCurve, n: usize) -> Result<SampledGrid> {
    if n < 2 * curve.max_freq + 2 {
        return Err(Error::Input(format!("N = {n} < 2K + 2 with K = {}", curve.max_freq)));
    }
    curve.check_reality()?;
    let mut eval = GridEval::new(curve, n);
    let mut out = SampledGrid::zeros(n, curve.dim);
    eval.eval_shift(0.0, &mut out.values)?;
    Ok(out)
}

/// Repeated evaluation of x_j ↦ f(x_j + δ) on a fixed grid by inverse FFT.
pub struct GridEval {
    n: usize,
    dim: usize,
    k: usize,
    coeffs: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl GridEval {
    pub fn new(curve: &FourierCurve, n: usize) -> Self {
        assert!(n >= 2 * curve.max_freq + 2);
        GridEval {
            n,
            dim: curve.dim,
            k: curve.max_freq,
            coeffs: curve.coeffs.clone(),
            fft: planner_fft(n, true),
            buf: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Writes f(x_j + δ) into `out[j * dim + c]`; imaginary residue is checked.
    pub fn eval_shift(&mut self, delta: f64, out: &mut [f64]) -> Result<()> {
        let (n, d, k) = (self.n, self.dim, self.k as i64);
        let phases: Vec<Complex64> =
            (-k..=k).map(|kk| Complex64::from_polar(1.0, 2.0 * PI * kk as f64 * delta)).collect();
        let mut resid: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for c in 0..d {
            self.buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for kk in -k..=k {
                let row = (kk + k) as usize;
                let idx = kk.rem_euclid(n as i64) as usize;
                self.buf[idx] = self.coeffs[row * d + c] * phases[row];
            }
            self.fft.process(&mut self.buf);
            for j in 0..n {
                out[j * d + c] = self.buf[j].re;
                resid = resid.max(self.buf[j].im.abs());
                scale = scale.max(self.buf[j].re.abs());
            }
        }
        if resid > REALITY_TOL * scale.max(1.0) * (2 * k + 1) as f64 {
            return Err(Error::Invariant(format!("imaginary residue {resid:e} on synthesis")));
        }
        Ok(())
    }
}

/// Coefficientwise multiplication by (2πik)^l.
pub fn derivative(curve: &FourierCurve, order: u32) -> FourierCurve {
    let mut out = curve.clone();
    if order == 0 {
        return out;
    }
    let k = curve.max_freq as i64;
    for kk in -k..=k {
        let m = Complex64::new(0.0, 2.0 * PI * kk as f64).powu(order);
        for c in out.coeff_mut(kk) {
            *c *= m;
        }
    }
    out
}

/// ( Σ_k (1+k²)^s |ĉ(k)|² )^{1/2}.
pub fn sobolev_norm(curve: &FourierCurve, order: SobolevOrder) -> f64 {
    let k = curve.max_freq as i64;
    let mut acc = 0.0;
    for kk in -k..=k {
        let w = (1.0 + (kk * kk) as f64).powf(order.s);
        acc += w * curve.coeff(kk).iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    acc.sqrt()
}

/// C₁ in ‖fg‖_{H¹} ≤ C₁‖f‖_{H¹}‖g‖_{H¹}: 2√2·C₀ with C₀ = (π coth π)^{1/2}.
pub fn banach_constant_h1() -> f64 {
    2.0 * 2f64.sqrt() * (PI / PI.tanh()).sqrt()
}

/// Grid-H¹ norm of sampled data: H¹ norm of its discrete analysis.
pub fn grid_h1_norm(g: &SampledGrid) -> Result<f64> {
    Ok(sobolev_norm(&analyze(g)?, SobolevOrder::integer(1)))
}

/// Relative speed spread below which a curve counts as constant speed.
pub const CONSTANT_SPEED_TOL: f64 = 1e-8;

/// Speeds |γ'(x_j)| on the grid.
pub fn speeds(curve: &FourierCurve, n: usize) -> Result<Vec<f64>> {
    let d1 = synthesize(&derivative(curve, 1), n)?;
    Ok((0..n).map(|j| norm(d1.at(j))).collect())
}

/// Total length ∫|γ'|, computed by the (spectrally accurate) trapezoid rule.
pub fn length(curve: &FourierCurve) -> Result<f64> {
    let n = oversampled(curve.max_freq, 256);
    let s = speeds(curve, n)?;
    Ok(s.iter().sum::<f64>() / n as f64)
}

/// Smallest power of two ≥ max(min_n, 8K + 8).
pub fn oversampled(k: usize, min_n: usize) -> usize {
    (8 * k + 8).max(min_n).next_power_of_two()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative speed spread (max − min)/mean on the grid.
pub fn speed_spread(curve: &FourierCurve, n: usize) -> Result<f64> {
    let s = speeds(curve, n)?;
    let mean = s.iter().sum::<f64>() / n as f64;
    let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    Ok((hi - lo) / mean)
}

/// Speed below this fraction of the mean speed counts as a singular point.
pub const REGULARITY_THRESHOLD: f64 = 1e-6;

/// Cumulative arc length s(x) = ∫₀ˣ |γ'| represented spectrally.
struct ArcLength {
    total: f64,
    /// Fourier coefficients of the speed, k = −M/2+1 … M/2−1.
    speed: FourierCurve,
}

impl ArcLength {
    fn new(curve: &FourierCurve, m: usize) -> Result<Self> {
        let s = speeds(curve, m)?;
        let mean = s.iter().sum::<f64>() / m as f64;
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > REGULARITY_THRESHOLD * mean) {
            return Err(Error::Degeneracy(format!(
                "speed {min:e} below {REGULARITY_THRESHOLD:e} times the mean"
            )));
        }
        let speed = analyze(&SampledGrid::new(m, 1, s)?)?;
        Ok(ArcLength { total: speed.coeff(0)[0].re, speed })
    }

    fn value_and_speed(&self, x: f64) -> (f64, f64) {
        let k = self.speed.max_freq() as i64;
        let mut s = self.total * x;
        let mut v = self.total;
        for kk in 1..=k {
            let c = self.speed.coeff(kk)[0];
            let w = 2.0 * PI * kk as f64;
            let e = Complex64::from_polar(1.0, w * x);
            // 2 Re[c (e − 1)/(i w)] and 2 Re[c e]
            s += 2.0 * (c * (e - 1.0) / Complex64::new(0.0, w)).re;
            v += 2.0 * (c * e).re;
        }
        (s, v)
    }
}

/// Cumulative arc length s(x_j) on the grid x_j = j/M together with the
/// speeds |γ'(x_j)| and the total length L (spectral integration of the speed).
pub fn arc_length_grid(curve: &FourierCurve, m: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let v = speeds(curve, m)?;
    let spec = analyze(&SampledGrid::new(m, 1, v.clone())?)?;
    let total = spec.coeff(0)[0].re;
    let k = spec.max_freq() as i64;
    let mut integ = FourierCurve::zeros(1, spec.max_freq());
    let mut offset = 0.0;
    for kk in 1..=k {
        let c = spec.coeff(kk)[0] / Complex64::new(0.0, 2.0 * PI * kk as f64);
        integ.set_mode(kk, &[c]);
        offset += 2.0 * c.re;
    }
    let g = synthesize(&integ, m)?;
    let s = (0..m).map(|j| total * j as f64 / m as f64 + g.values[j] - offset).collect();
    Ok((s, v, total))
}

/// Fritsch–Carlson monotone cubic interpolant through increasing data.
struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            d[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            let a = d[i] / delta[i];
            let b = d[i + 1] / delta[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                d[i] = t * a * delta[i];
                d[i + 1] = t * b * delta[i];
            }
        }
        MonotoneCubic { x, y, d }
    }

    fn cell(&self, y: f64) -> usize {
        match self.y.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
            Ok(i) => i.min(self.y.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.y.len() - 2),
        }
    }

    fn eval(&self, i: usize, x: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.d[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.d[i + 1]
    }

    /// Inverse by bisection on the cell containing y.
    fn invert(&self, y: f64) -> (f64, f64, f64) {
        let i = self.cell(y);
        let (mut a, mut b) = (self.x[i], self.x[i + 1]);
        for _ in 0..30 {
            let m = 0.5 * (a + b);
            if self.eval(i, m) < y {
                a = m;
            } else {
                b = m;
            }
        }
        (0.5 * (a + b), self.x[i], self.x[i + 1])
    }
}

/// Reparametrizes proportionally to arc length and rescales to length 1.
///
/// Nodes x*_j with s(x*_j) = j L / N are found by inverting a monotone cubic
/// interpolant of the cumulative length, then polished by bisection-safeguarded
/// Newton on the spectral s(x). The result is re-analyzed on N samples.
pub fn arclength_reparametrize(curve: &FourierCurve, n: usize, tol: f64) -> Result<FourierCurve> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::Input(format!("N = {n} must be a power of two >= 4")));
    }
    let m = oversampled(curve.max_freq, 2 * n);
    let arc = ArcLength::new(curve, m)?;
    let total = arc.total;
    let grid_x: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let grid_s: Vec<f64> = grid_x.iter().map(|&x| arc.value_and_speed(x).0).collect();
    let interp = MonotoneCubic::new(grid_x, grid_s);

    let mut values = vec![0.0; n * curve.dim];
    for j in 0..n {
        let target = j as f64 * total / n as f64;
        let (mut x, mut lo, mut hi) = interp.invert(target);
        // Newton is run to rounding level; `tol` is the acceptance threshold.
        let mut best = f64::INFINITY;
        for _ in 0..80 {
            let (s, v) = arc.value_and_speed(x);
            let f = s - target;
            best = best.min(f.abs());
            if f > 0.0 {
                hi = hi.min(x);
            } else {
                lo = lo.max(x);
            }
            let mut next = x - f / v;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
                break;
            }
        }
        let f_final = (arc.value_and_speed(x).0 - target).abs().min(best);
        if !(f_final <= tol * total) {
            return Err(Error::Numeric(format!("arc-length inversion failed at node {j}")));
        }
        let p = curve.eval(x);
        for c in 0..curve.dim {
            values[j * curve.dim + c] = p[c] / total;
        }
    }
    analyze(&SampledGrid::new(n, curve.dim, values)?)
}

/// JSON form of a curve file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFile {
    pub dimension: usize,
    pub max_freq: usize,
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub k: i64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CurveFile {
    pub fn from_curve(curve: &FourierCurve) -> Self {
        let k = curve.max_freq as i64;
        let coefficients = (-k..=k)
            .map(|kk| CoefficientEntry {
                k: kk,
                re: curve.coeff(kk).iter().map(|c| c.re).collect(),
                im: curve.coeff(kk).iter().map(|c| c.im).collect(),
            })
            .collect();
        CurveFile { dimension: curve.dim, max_freq: curve.max_freq, coefficients }
    }

    pub fn to_curve(&self) -> Result<FourierCurve> {
        let (d, k) = (self.dimension, self.max_freq);
        if d == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        let mut seen = vec![false; 2 * k + 1];
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (2 * k + 1) * d];
        for e in &self.coefficients {
            if e.k.unsigned_abs() as usize > k {
                return Err(Error::Input(format!("k = {} outside [-{k}, {k}]", e.k)));
            }
            if e.re.len() != d || e.im.len() != d {
                return Err(Error::Input(format!("entry k = {} has wrong length", e.k)));
            }
            let row = (e.k + k as i64) as usize;
            if seen[row] {
                return Err(Error::Input(format!("duplicate k = {}", e.k)));
            }
            seen[row] = true;
            for c in 0..d {
                coeffs[row * d + c] = Complex64::new(e.re[c], e.im[c]);
            }
        }
        if let Some(row) = seen.iter().position(|s| !s) {
            return Err(Error::Input(format!("missing k = {}", row as i64 - k as i64)));
        }
        FourierCurve::new(d, k, coeffs)
    }
}

pub fn curve_to_json(curve: &FourierCurve) -> String {
    serde_json::to_string_pretty(&CurveFile::from_curve(curve)).expect("curve serializes")
}

pub fn curve_from_json(text: &str) -> Result<FourierCurve> {
    let file: CurveFile =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("curve JSON: {e}")))?;
    file.to_curve()
}

impl Serialize for FourierCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CurveFile::from_curve(self).serialize(s)
    }
}
