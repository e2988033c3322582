//! Method of majorants: Taylor solver for analytic ODE IVPs, the majorant
//! sequence of the derivative recursion, dominance and analyticity fits.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::curve::{banach_constant_h1, derivative, sobolev_norm, FourierCurve, SobolevOrder};
use crate::error::{Error, Result};
use crate::faa::{enumerate, majorized_compose, FaaExpansion, MAX_K};

/// Multivariate power series Σ_α c_α y^α, known to total degree `degree`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiSeries {
    pub nvars: usize,
    pub degree: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl MultiSeries {
    pub fn zero(nvars: usize, degree: usize) -> Self {
        MultiSeries { nvars, degree, terms: BTreeMap::new() }
    }

    /// One variable, coefficients c₀, c₁, … of y⁰, y¹, ….
    pub fn univariate(coeffs: &[f64]) -> Self {
        let terms = coeffs.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(m, &c)| (vec![m as u32], c)).collect();
        MultiSeries { nvars: 1, degree: coeffs.len().saturating_sub(1), terms }
    }

    /// Same series declared to a higher degree (zero padding).
    pub fn padded(&self, degree: usize) -> Self {
        MultiSeries { degree: degree.max(self.degree), ..self.clone() }
    }
}

/// Solution data at 0: `derivs[i][k]` = c_i^{(k)}(0), k = 0…L.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorSeries {
    pub derivs: Vec<Vec<f64>>,
}

impl TaylorSeries {
    pub fn order(&self) -> usize {
        self.derivs.first().map_or(0, |d| d.len() - 1)
    }

    /// Normalized coefficients c^{(k)}(0)/k!.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.derivs
            .iter()
            .map(|d| {
                let mut f = 1.0;
                d.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        if k > 0 {
                            f *= k as f64;
                        }
                        v / f
                    })
                    .collect()
            })
            .collect()
    }
}

fn series_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    for (i, x) in a.iter().enumerate().take(m + 1) {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(m + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Taylor coefficients to order L of the solution of ċ = g(c), c(0) = 0.
pub fn ck_taylor_solve(g: &[MultiSeries], order: usize) -> Result<TaylorSeries> {
    let n = g.len();
    if order < 1 {
        return Err(Error::Input("order L must be ≥ 1".into()));
    }
    for (i, gi) in g.iter().enumerate() {
        if gi.nvars != n {
            return Err(Error::Input(format!("component {i} has {} variables, system has {n}", gi.nvars)));
        }
        if gi.degree < order {
            return Err(Error::Input(format!("component {i} known to degree {} < L = {order}", gi.degree)));
        }
        if gi.terms.values().any(|c| !c.is_finite()) {
            return Err(Error::Input(format!("component {i} has non-finite coefficients")));
        }
    }
    // b[i][m]: coefficient of t^m in c_i
    let mut b = vec![vec![0.0; order + 1]; n];
    for m in 0..order {
        // [t^m] g_i(c(t)) only involves b[.][..=m] since c(0) = 0
        let mut pows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
        for bi in &b {
            let mut p = vec![{
                let mut one = vec![0.0; m + 1];
                one[0] = 1.0;
                one
            }];
            for e in 1..=m {
                let next = series_mul(&p[e - 1], bi, m);
                p.push(next);
            }
            pows.push(p);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (alpha, c) in &g[i].terms {
                if alpha.iter().map(|&a| a as usize).sum::<usize>() > m {
                    continue;
                }
                let mut prod = pows[0][alpha[0] as usize].clone();
                for j in 1..n {
                    prod = series_mul(&prod, &pows[j][alpha[j] as usize], m);
                }
                acc += c * prod[m];
            }
            b[i][m + 1] = acc / (m + 1) as f64;
        }
    }
    let mut derivs = b;
    for d in &mut derivs {
        let mut f = 1.0;
        for (k, v) in d.iter_mut().enumerate() {
            if k > 0 {
                f *= k as f64;
            }
            *v *= f;
        }
    }
    if derivs.iter().flatten().any(|v| !v.is_finite()) {
        let reached = (0..=order).find(|&k| derivs.iter().any(|d| !d[k].is_finite())).unwrap_or(order);
        return Err(Error::Overflow { reached, msg: "Taylor coefficients overflow f64".into() });
    }
    Ok(TaylorSeries { derivs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MajorantParams {
    pub c: f64,
    pub r_gamma: f64,
    pub a0: f64,
    pub dims: usize,
}

impl MajorantParams {
    pub fn new(c: f64, r_gamma: f64, a0: f64, dims: usize) -> Result<Self> {
        if !(c > 0.0) || !(r_gamma > 0.0) || !(a0 >= 0.0) || !c.is_finite() || !r_gamma.is_finite() || !a0.is_finite() {
            return Err(Error::Input(format!("need C > 0, r_γ > 0, a₀ ≥ 0; got {c}, {r_gamma}, {a0}")));
        }
        if dims == 0 {
            return Err(Error::Input("dims must be ≥ 1".into()));
        }
        Ok(MajorantParams { c, r_gamma, a0, dims })
    }
}

/// Expansions p_1 … p_{L−1} in `dims` variables, as used by [`majorant_sequence`].
pub fn expansions_for(dims: usize, order: usize) -> Result<Vec<FaaExpansion>> {
    (1..order).map(|l| enumerate(l, dims)).collect()
}

fn binom(a: usize, b: usize) -> f64 {
    (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
}

/// ã₀ … ã_L from
/// ã_{l+1} = C(Σ_{k₁,k₂} C(l,k₁)C(k₁,k₂) ã_{l−k₁}ã_{k₁−k₂}ã_{k₂}
///            + p_l({(|α|+1)!/r_γ^{|α|+1}}, {ã_j})) + ã_l,  ã₀ = a₀.
/// `expansions[l − 1]` must be the expansion of order l in `dims` variables.
pub fn majorant_sequence(params: &MajorantParams, expansions: &[FaaExpansion], order: usize) -> Result<Vec<f64>> {
    if order > MAX_K {
        return Err(Error::Size(format!("L = {order} exceeds {MAX_K}")));
    }
    if expansions.len() + 1 < order {
        return Err(Error::Input(format!("need {} expansions, got {}", order.saturating_sub(1), expansions.len())));
    }
    for (i, e) in expansions.iter().take(order.saturating_sub(1)).enumerate() {
        if e.k != i + 1 || e.n != params.dims {
            return Err(Error::Input(format!(
                "expansion {i} has (k, n) = ({}, {}), expected ({}, {})",
                e.k,
                e.n,
                i + 1,
                params.dims
            )));
        }
    }
    let r = params.r_gamma;
    // (m+1)!/r^{m+1}, m = 0…L
    let mut g_bounds = Vec::with_capacity(order + 1);
    let mut v = 1.0 / r;
    for m in 0..=order {
        g_bounds.push(v);
        v *= (m + 2) as f64 / r;
    }
    let mut a = vec![params.a0];
    for l in 0..order {
        let mut cubic = 0.0;
        for k1 in 0..=l {
            for k2 in 0..=k1 {
                cubic += binom(l, k1) * binom(k1, k2) * a[l - k1] * a[k1 - k2] * a[k2];
            }
        }
        let p = if l == 0 { g_bounds[0] } else { majorized_compose(&expansions[l - 1], &g_bounds, &a[1..])? };
        let next = params.c * (cubic + p) + a[l];
        if !next.is_finite() {
            return Err(Error::Overflow { reached: l + 1, msg: "majorant sequence overflows f64".into() });
        }
        a.push(next);
    }
    Ok(a)
}

/// Taylor series in v of G(a₀ + v) on the diagonal y = (a₀ + v)(1,…,1):
/// C((a₀+v)³ + r_γ⁻¹(1 − dims·v/r_γ)⁻²) + a₀ + v.
pub fn majorant_ode_series(params: &MajorantParams, degree: usize) -> MultiSeries {
    let a0 = params.a0;
    let beta = params.dims as f64 / params.r_gamma;
    let cubic = [a0 * a0 * a0, 3.0 * a0 * a0, 3.0 * a0, 1.0];
    let coeffs: Vec<f64> = (0..=degree)
        .map(|m| {
            let cub = cubic.get(m).copied().unwrap_or(0.0);
            let frac = (m + 1) as f64 * beta.powi(m as i32) / params.r_gamma;
            let lin = match m {
                0 => a0,
                1 => 1.0,
                _ => 0.0,
            };
            params.c * (cub + frac) + lin
        })
        .collect();
    MultiSeries::univariate(&coeffs)
}

/// ã₀ … ã_L from the majorant ODE ċ = G(c), c(0) = a₀(1,…,1), solved by
/// [`ck_taylor_solve`] after the shift c = a₀ + v.
pub fn majorant_via_ode(params: &MajorantParams, order: usize) -> Result<Vec<f64>> {
    let sol = ck_taylor_solve(&[majorant_ode_series(params, order)], order)?;
    let mut a = sol.derivs[0].clone();
    a[0] += params.a0;
    Ok(a)
}

/// a_l = C₁‖∂ˡf‖_{H¹} for f = (γ̇, γ̈, γ̈, γ̈).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeLadder {
    pub a: Vec<f64>,
}

impl DerivativeLadder {
    pub fn from_curve(curve: &FourierCurve, order: usize) -> Self {
        let c1 = banach_constant_h1();
        let h1 = SobolevOrder::integer(1);
        let a = (0..=order)
            .map(|l| {
                let d1 = sobolev_norm(&derivative(curve, l as u32 + 1), h1);
                let d2 = sobolev_norm(&derivative(curve, l as u32 + 2), h1);
                c1 * (d1 * d1 + 3.0 * d2 * d2).sqrt()
            })
            .collect();
        DerivativeLadder { a }
    }

    pub fn scaled(&self, s: f64) -> Self {
        DerivativeLadder { a: self.a.iter().map(|v| v * s).collect() }
    }
}

/// Fits (C, r_γ) so that ã₀ = a₀ and ã₁ = a₁. With r_γ given it is kept and
/// only C is solved for; otherwise r_γ = 1.
pub fn fit_params(ladder: &DerivativeLadder, dims: usize, r_gamma: Option<f64>) -> Result<MajorantParams> {
    if ladder.a.len() < 2 {
        return Err(Error::Input("ladder needs at least two entries".into()));
    }
    let (a0, a1) = (ladder.a[0], ladder.a[1]);
    let r = r_gamma.unwrap_or(1.0);
    let c = (a1 - a0) / (a0 * a0 * a0 + 1.0 / r);
    if !(c > 0.0) {
        return Err(Error::Input(format!("a₁ = {a1} ≤ a₀ = {a0}: no positive C fits")));
    }
    MajorantParams::new(c, r, a0, dims)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub first_violation: Option<usize>,
    pub holds: bool,
    /// max_l a_l / ã_l
    pub max_ratio: f64,
}

pub fn dominance_check(ladder: &DerivativeLadder, majorants: &[f64]) -> Result<DominanceReport> {
    if ladder.a.len() != majorants.len() {
        return Err(Error::Input(format!("lengths differ: {} vs {}", ladder.a.len(), majorants.len())));
    }
    let first_violation = ladder.a.iter().zip(majorants).position(|(a, m)| a > m);
    let max_ratio = ladder
        .a
        .iter()
        .zip(majorants)
        .map(|(a, m)| if *m > 0.0 { a / m } else if *a > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(DominanceReport { first_violation, holds: first_violation.is_none(), max_ratio })
}

/// Fit of a_l ≤ C_K l!/r_K^l, plus a geometric fit a_l ≈ C_g / r_g^l that
/// identifies entire (super-analytic) growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticityFit {
    pub c_k: f64,
    pub r_k: f64,
    /// RMS residual of the factorial model in log space.
    pub quality: f64,
    pub c_geometric: f64,
    pub r_geometric: f64,
    pub quality_geometric: f64,
    /// geometric model fits at least as well as the factorial one
    pub entire: bool,
}

/// Upper limit on [`AnalyticityFit::quality`] accepted as a clean fit.
pub const QUALITY_THRESHOLD: f64 = 1.0;

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

fn check_positive(data: &[f64]) -> Result<()> {
    if data.len() < 4 {
        return Err(Error::Input(format!("need ≥ 4 data points, got {}", data.len())));
    }
    if let Some(i) = data.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Input(format!("data point {i} = {} is not positive", data[i])));
    }
    Ok(())
}

fn ln_factorial(l: usize) -> f64 {
    (2..=l).map(|i| (i as f64).ln()).sum()
}

/// Least-squares fit of log(a_l / l!) against l, l = 0, 1, ….
pub fn analyticity_fit(ladder: &[f64]) -> Result<AnalyticityFit> {
    check_positive(ladder)?;
    let xs: Vec<f64> = (0..ladder.len()).map(|l| l as f64).collect();
    let ys: Vec<f64> = ladder.iter().enumerate().map(|(l, a)| a.ln() - ln_factorial(l)).collect();
    let (slope, intercept, quality) = line_fit(&xs, &ys);
    let yg: Vec<f64> = ladder.iter().map(|a| a.ln()).collect();
    let (gs, gi, gq) = line_fit(&xs, &yg);
    Ok(AnalyticityFit {
        c_k: intercept.exp(),
        r_k: (-slope).exp(),
        quality,
        c_geometric: gi.exp(),
        r_geometric: (-gs).exp(),
        quality_geometric: gq,
        entire: gq <= quality,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub quality: f64,
}

/// Least-squares fit of log|ĉ(k)| against k.
pub fn decay_fit(ks: &[usize], magnitudes: &[f64]) -> Result<DecayFit> {
    if ks.len() != magnitudes.len() {
        return Err(Error::Input("ks and magnitudes differ in length".into()));
    }
    check_positive(magnitudes)?;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let (slope, intercept, quality) = line_fit(&xs, &ys);
    Ok(DecayFit { slope, intercept, quality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::unit_circle;
    use rand::Rng;

    #[test]
    fn taylor_solver_examples() {
        let z = ck_taylor_solve(&[MultiSeries::zero(1, 5)], 5).unwrap();
        assert!(z.derivs[0].iter().all(|v| *v == 0.0));

        let e = ck_taylor_solve(&[MultiSeries::univariate(&[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])], 6).unwrap();
        for k in 1..=6 {
            assert!((e.derivs[0][k] - 1.0).abs() < 1e-12);
        }

        let geo = MultiSeries::univariate(&[1.0; 6]);
        let s = ck_taylor_solve(&[geo], 5).unwrap();
        let want = [0.0, 1.0, 1.0, 3.0, 15.0, 105.0];
        for k in 0..=5 {
            assert!((s.derivs[0][k] - want[k]).abs() < 1e-9 * want[k].max(1.0), "{k}: {}", s.derivs[0][k]);
        }
    }

    #[test]
    fn taylor_solver_system_and_padding() {
        // ẋ = 1 + y, ẏ = x
        let mut gx = MultiSeries::zero(2, 6);
        gx.terms.insert(vec![0, 0], 1.0);
        gx.terms.insert(vec![0, 1], 1.0);
        let mut gy = MultiSeries::zero(2, 6);
        gy.terms.insert(vec![1, 0], 1.0);
        let s = ck_taylor_solve(&[gx.clone(), gy.clone()], 6).unwrap();
        // x = sinh t, y = cosh t − 1
        let want_x = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let want_y = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        for k in 0..=6 {
            assert!((s.derivs[0][k] - want_x[k]).abs() < 1e-12);
            assert!((s.derivs[1][k] - want_y[k]).abs() < 1e-12);
        }
        let p = ck_taylor_solve(&[gx.padded(10), gy.padded(10)], 6).unwrap();
        assert_eq!(p, s);
        assert!(matches!(ck_taylor_solve(&[gx], 6), Err(Error::Input(_))));
        let low = MultiSeries::univariate(&[1.0, 1.0]);
        assert!(matches!(ck_taylor_solve(&[low], 3), Err(Error::Input(_))));
    }

    #[test]
    fn taylor_positivity() {
        let mut rng = crate::corpus::rng(5);
        for _ in 0..20 {
            let c: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..2.0)).collect();
            let s = ck_taylor_solve(&[MultiSeries::univariate(&c)], 7).unwrap();
            assert!(s.derivs[0].iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn majorant_matches_its_ode() {
        for (c, r, a0, dims) in [(0.5, 2.0, 0.3, 8), (0.1, 0.7, 1.2, 4), (2.0, 3.0, 0.0, 2)] {
            let p = MajorantParams::new(c, r, a0, dims).unwrap();
            let ex = expansions_for(dims, 6).unwrap();
            let seq = majorant_sequence(&p, &ex, 6).unwrap();
            let ode = majorant_via_ode(&p, 6).unwrap();
            for l in 0..=6 {
                assert!((seq[l] - ode[l]).abs() <= 1e-12 * ode[l].abs().max(1.0), "l = {l}: {} vs {}", seq[l], ode[l]);
            }
            assert!(seq.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn majorant_monotone_in_entries() {
        let p = MajorantParams::new(0.5, 2.0, 0.3, 2).unwrap();
        let ex = expansions_for(2, 5).unwrap();
        let seq = majorant_sequence(&p, &ex, 5).unwrap();
        // shrinking one ã_j never increases the p_l term
        let g: Vec<f64> = (0..=5).map(|m| (1..=m + 1).product::<usize>() as f64 / 2f64.powi(m as i32 + 1)).collect();
        let full = majorized_compose(&ex[3], &g, &seq[1..]).unwrap();
        for j in 1..=4 {
            let mut s2 = seq.clone();
            s2[j] *= 0.5;
            assert!(majorized_compose(&ex[3], &g, &s2[1..]).unwrap() <= full);
        }
    }

    #[test]
    fn majorant_guards() {
        let p = MajorantParams::new(0.5, 2.0, 0.3, 2).unwrap();
        assert!(matches!(majorant_sequence(&p, &[], 13), Err(Error::Size(_))));
        assert!(matches!(majorant_sequence(&p, &expansions_for(3, 4).unwrap(), 4), Err(Error::Input(_))));
        let huge = MajorantParams::new(1e100, 1e-3, 1e50, 2).unwrap();
        let ex = expansions_for(2, 6).unwrap();
        assert!(matches!(majorant_sequence(&huge, &ex, 6), Err(Error::Overflow { .. })));
        assert!(MajorantParams::new(0.0, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn dominance_examples() {
        let circle = DerivativeLadder::from_curve(&unit_circle(2), 8);
        let same = dominance_check(&circle, &circle.a).unwrap();
        assert!(same.holds && (same.max_ratio - 1.0).abs() < 1e-15);

        let p = fit_params(&circle, 8, None).unwrap();
        let seq = majorant_sequence(&p, &expansions_for(8, 8).unwrap(), 8).unwrap();
        assert!((seq[1] - circle.a[1]).abs() < 1e-9 * circle.a[1]);
        let rep = dominance_check(&circle, &seq).unwrap();
        assert!(rep.holds, "{rep:?}");

        let big = circle.scaled(10.0);
        let rep = dominance_check(&big, &seq).unwrap();
        assert_eq!(rep.first_violation, Some(0));
        assert!(dominance_check(&circle, &seq[..3]).is_err());
    }

    #[test]
    fn circle_ladder_is_geometric() {
        let circle = DerivativeLadder::from_curve(&unit_circle(2), 10);
        let two_pi = 2.0 * std::f64::consts::PI;
        for w in circle.a.windows(2) {
            assert!((w[1] / w[0] - two_pi).abs() < 1e-12);
        }
        let fit = analyticity_fit(&circle.a).unwrap();
        assert!(fit.entire);
        assert!((fit.r_geometric - 1.0 / two_pi).abs() < 1e-12);
        assert!(fit.quality_geometric < 1e-12);
    }

    #[test]
    fn exact_factorial_data() {
        let data: Vec<f64> = (0..10).map(|l| 2.0 * (1..=l).product::<usize>() as f64 / 0.5f64.powi(l as i32)).collect();
        let fit = analyticity_fit(&data).unwrap();
        assert!((fit.c_k - 2.0).abs() < 1e-10 && (fit.r_k - 0.5).abs() < 1e-10 && fit.quality < 1e-10);
        assert!(!fit.entire);
    }

    #[test]
    fn noisy_factorial_data() {
        let mut rng = crate::corpus::rng(9);
        for _ in 0..20 {
            let data: Vec<f64> = (0..12)
                .map(|l| 3.0 * (1..=l).product::<usize>() as f64 / 0.25f64.powi(l as i32) * (1.0 + rng.gen_range(-0.05..0.05)))
                .collect();
            let fit = analyticity_fit(&data).unwrap();
            assert!((fit.c_k / 3.0 - 1.0).abs() < 0.1 && (fit.r_k / 0.25 - 1.0).abs() < 0.1, "{fit:?}");
        }
    }

    #[test]
    fn fit_rejects_bad_data() {
        assert!(analyticity_fit(&[1.0, 2.0, 3.0]).is_err());
        assert!(analyticity_fit(&[1.0, 2.0, 0.0, 4.0]).is_err());
        let d = decay_fit(&[1, 2, 3, 4], &[1.0, 0.5, 0.25, 0.125]).unwrap();
        assert!((d.slope + 2f64.ln()).abs() < 1e-14 && d.quality < 1e-14);
    }
}
