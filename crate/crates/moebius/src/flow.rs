//! Gradient flow γ ← γ − τHγ towards critical points, with the order-3 part
//! treated implicitly in Fourier space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{analyze_band, length, speed_spread, FourierCurve, SampledGrid};
use crate::energy::{moebius_energy, EnergyQuadrature};
use crate::error::{Error, Result};
use crate::gradient::{h_gamma, GradientMethod, GradientReport, Truncation};
use crate::majorant::{analyticity_fit, decay_fit, AnalyticityFit, DecayFit, DerivativeLadder};
use crate::multiplier::MultiplierTable;
use crate::corpus::unit_speed;

/// Relative speed spread above which a trial curve is reparametrized.
pub const RENORM_SPREAD: f64 = 1e-8;
/// Allowed energy increase on an accepted step.
pub const ENERGY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub tau: f64,
    pub max_steps: usize,
    pub residual_tol: f64,
    pub renorm_every: usize,
    pub scheme: Scheme,
    /// ε = eps_cells / n
    pub eps_cells: usize,
    pub n: usize,
    pub band: usize,
    pub energy_n: usize,
    pub max_halvings: usize,
    pub snapshot_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            tau: 1e-3,
            max_steps: 5000,
            residual_tol: 1e-3,
            renorm_every: 10,
            scheme: Scheme::SemiImplicit,
            eps_cells: 4,
            n: 128,
            band: 24,
            energy_n: 128,
            max_halvings: 20,
            snapshot_every: 100,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Input(format!("tau = {} must be finite and ≥ 0", self.tau)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Input(format!("residual_tol = {} must be positive", self.residual_tol)));
        }
        if self.renorm_every == 0 {
            return Err(Error::Input("renorm_every must be ≥ 1".into()));
        }
        if self.n < 4 * self.band + 4 {
            return Err(Error::Configuration(format!("n = {} < 4K + 4 for K = {}", self.n, self.band)));
        }
        Truncation::cells(self.eps_cells, self.n)?;
        EnergyQuadrature::new(self.energy_n, self.energy_n)?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<Truncation> {
        Truncation::cells(self.eps_cells, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub energy: f64,
    pub residual: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowState {
    pub step: usize,
    pub curve: FourierCurve,
    pub energy: f64,
    pub residual: f64,
    pub history: Vec<HistoryEntry>,
    #[serde(skip)]
    gradient: Option<GradientReport>,
}

/// Hγ of the curve rescaled to length 1, with the SpectralQ method.
pub fn gradient(curve: &FourierCurve, trunc: &Truncation) -> Result<GradientReport> {
    let l = length(curve)?;
    h_gamma(&curve.scale(1.0 / l), trunc, GradientMethod::SpectralQ)
}

/// ‖Hγ‖ in grid L² after normalizing the length to 1.
pub fn residual(curve: &FourierCurve, trunc: &Truncation) -> Result<f64> {
    Ok(gradient(curve, trunc)?.h.l2_norm())
}

/// Arc-length reparametrization on the flow grid, band limited to K.
pub fn normalize(curve: &FourierCurve, cfg: &FlowConfig) -> Result<FourierCurve> {
    unit_speed(curve, cfg.n, cfg.band)
}

impl FlowState {
    /// Normalizes the curve and evaluates energy and residual.
    pub fn new(curve: &FourierCurve, cfg: &FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let curve = normalize(curve, cfg)?;
        let energy = moebius_energy(&curve, &EnergyQuadrature::new(cfg.energy_n, cfg.energy_n)?)?;
        let g = gradient(&curve, &cfg.truncation()?)?;
        let residual = g.h.l2_norm();
        Ok(FlowState {
            step: 0,
            curve,
            energy,
            residual,
            history: vec![HistoryEntry { step: 0, energy, residual, tau: 0.0 }],
            gradient: Some(g),
        })
    }
}

fn coefficients(g: &SampledGrid, band: usize) -> Result<FourierCurve> {
    analyze_band(g, band)
}

fn trial_curve(
    curve: &FourierCurve,
    h: &FourierCurve,
    rest: &FourierCurve,
    tau: f64,
    scheme: Scheme,
    table: &MultiplierTable,
) -> FourierCurve {
    let k = curve.max_freq() as i64;
    let mut out = curve.clone();
    for kk in -k..=k {
        let c = curve.coeff(kk);
        let v: Vec<Complex64> = match scheme {
            Scheme::Explicit => c.iter().zip(h.coeff(kk)).map(|(a, b)| a - b * tau).collect(),
            Scheme::SemiImplicit => {
                let d = 1.0 + tau * table.symbol(kk);
                c.iter().zip(rest.coeff(kk)).map(|(a, b)| (a - b * tau) / d).collect()
            }
        };
        out.set_mode(kk, &v);
    }
    out
}

/// One accepted step with backtracking on energy increase or geometry errors.
pub fn flow_step(state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    cfg.validate()?;
    let mut next = state.clone();
    next.step += 1;
    if cfg.tau == 0.0 {
        next.history.push(HistoryEntry { step: next.step, energy: state.energy, residual: state.residual, tau: 0.0 });
        return Ok(next);
    }
    let trunc = cfg.truncation()?;
    let g = match &state.gradient {
        Some(g) => g.clone(),
        None => gradient(&state.curve, &trunc)?,
    };
    let table = MultiplierTable::new(cfg.band)?;
    let h = coefficients(&g.h, cfg.band)?;
    // H = Qγ + R with Qγ from the multiplier
    let rest = coefficients(&g.h.sub(&g.q), cfg.band)?;
    let quad = EnergyQuadrature::new(cfg.energy_n, cfg.energy_n)?;
    let mut tau = cfg.tau;
    let mut last_err = None;
    for _ in 0..=cfg.max_halvings {
        let raw = trial_curve(&state.curve, &h, &rest, tau, cfg.scheme, &table);
        let renorm = next.step % cfg.renorm_every == 0 || speed_spread(&raw, cfg.n)? > RENORM_SPREAD;
        let attempt = (|| -> Result<(FourierCurve, f64, Option<GradientReport>)> {
            let c = if renorm { normalize(&raw, cfg)? } else { raw.scale(1.0 / length(&raw)?) };
            let e = moebius_energy(&c, &quad)?;
            if e > state.energy + ENERGY_SLACK {
                return Ok((c, e, None));
            }
            let gn = gradient(&c, &trunc)?;
            Ok((c, e, Some(gn)))
        })();
        match attempt {
            Ok((c, e, Some(gn))) => {
                next.residual = gn.h.l2_norm();
                next.energy = e;
                next.curve = c;
                next.gradient = Some(gn);
                next.history.push(HistoryEntry { step: next.step, energy: e, residual: next.residual, tau });
                return Ok(next);
            }
            Ok((_, e, None)) => last_err = Some(format!("energy increased to {e}")),
            // self-intersection, or a step too large for the band to stay unit speed
            Err(Error::Geometry(m)) | Err(Error::Precondition(m)) => last_err = Some(m),
            Err(e) => return Err(e),
        }
        tau *= 0.5;
    }
    Err(Error::Numeric(format!(
        "step {}: tau underflow after {} halvings ({})",
        next.step,
        cfg.max_halvings,
        last_err.unwrap_or_default()
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    Failed(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowRun {
    pub status: FlowStatus,
    pub state: FlowState,
    pub snapshots: Vec<(usize, FourierCurve)>,
}

/// Iterates [`flow_step`] until the residual drops below the tolerance or
/// `max_steps` is reached. A failed step ends the run with partial results.
pub fn run_flow(initial: &FourierCurve, cfg: &FlowConfig) -> Result<FlowRun> {
    let mut state = FlowState::new(initial, cfg)?;
    let mut snapshots = vec![(0, state.curve.clone())];
    let mut status = FlowStatus::MaxSteps;
    while state.step < cfg.max_steps {
        if state.residual <= cfg.residual_tol {
            status = FlowStatus::Converged;
            break;
        }
        match flow_step(&state, cfg) {
            Ok(s) => state = s,
            Err(e) => {
                status = FlowStatus::Failed(e.to_string());
                break;
            }
        }
        if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
            snapshots.push((state.step, state.curve.clone()));
        }
    }
    if status == FlowStatus::MaxSteps && state.residual <= cfg.residual_tol {
        status = FlowStatus::Converged;
    }
    if snapshots.last().map(|s| s.0) != Some(state.step) {
        snapshots.push((state.step, state.curve.clone()));
    }
    Ok(FlowRun { status, state, snapshots })
}

/// Coefficient decay on k ∈ [4, K/2] and the analyticity fit of the
/// derivative ladder of a flow output.
#[derive(Debug, Clone, Serialize)]
pub struct FlowDiagnostics {
    pub k_range: (usize, usize),
    pub magnitudes: Vec<f64>,
    pub decay: DecayFit,
    pub ladder: Vec<f64>,
    pub fit: AnalyticityFit,
}

pub fn diagnostics(curve: &FourierCurve, ladder_order: usize) -> Result<FlowDiagnostics> {
    let kmax = curve.max_freq() / 2;
    if kmax < 7 {
        return Err(Error::Input(format!("band {} too small for a decay fit on [4, K/2]", curve.max_freq())));
    }
    let ks: Vec<usize> = (4..=kmax).collect();
    let magnitudes: Vec<f64> =
        ks.iter().map(|&k| curve.coeff(k as i64).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).collect();
    let decay = decay_fit(&ks, &magnitudes)?;
    let ladder = DerivativeLadder::from_curve(curve, ladder_order).a;
    let fit = analyticity_fit(&ladder)?;
    Ok(FlowDiagnostics { k_range: (4, kmax), magnitudes, decay, ladder, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{perturbed_circle, unit_circle};

    #[test]
    fn circle_is_a_fixed_point() {
        let cfg = FlowConfig { n: 128, band: 16, ..FlowConfig::default() };
        let mut s = FlowState::new(&unit_circle(2), &cfg).unwrap();
        for _ in 0..100 {
            s = flow_step(&s, &cfg).unwrap();
            assert!(s.residual <= 1e-4, "{}", s.residual);
        }
    }

    #[test]
    fn zero_step_changes_only_the_counter() {
        let cfg = FlowConfig { tau: 0.0, ..FlowConfig::default() };
        let s = FlowState::new(&perturbed_circle(0.05, 2, 2), &cfg).unwrap();
        let t = flow_step(&s, &cfg).unwrap();
        assert_eq!(t.step, 1);
        assert_eq!(t.curve, s.curve);
        assert_eq!(t.energy, s.energy);
    }

    #[test]
    fn residual_examples() {
        let cfg = FlowConfig::default();
        let tr = cfg.truncation().unwrap();
        let c = normalize(&perturbed_circle(0.05, 2, 2), &cfg).unwrap();
        let r = residual(&c, &tr).unwrap();
        assert!(r > 1e-2);
        let r2 = residual(&c.scale(2.0), &tr).unwrap();
        assert!((r2 - r).abs() <= 1e-6 * r);
    }

    #[test]
    fn energy_descends() {
        let cfg = FlowConfig { tau: 1e-4, ..FlowConfig::default() };
        let mut s = FlowState::new(&perturbed_circle(0.05, 2, 2), &cfg).unwrap();
        for _ in 0..10 {
            let t = flow_step(&s, &cfg).unwrap();
            assert!(t.energy <= s.energy + ENERGY_SLACK);
            assert!(speed_spread(&t.curve, 512).unwrap() <= 1e-8);
            s = t;
        }
    }

    #[test]
    fn trefoil_energy_decreases() {
        let cfg = FlowConfig { band: 48, n: 256, energy_n: 256, max_steps: 4, ..FlowConfig::default() };
        let run = run_flow(&crate::corpus::trefoil(), &cfg).unwrap();
        assert_eq!(run.status, FlowStatus::MaxSteps);
        for w in run.state.history.windows(2) {
            assert!(w[1].energy < w[0].energy);
        }
    }

    #[test]
    fn critical_input_returns_immediately() {
        let run = run_flow(&unit_circle(2), &FlowConfig::default()).unwrap();
        assert_eq!(run.status, FlowStatus::Converged);
        assert_eq!(run.state.step, 0);
    }

    #[test]
    fn config_guards() {
        assert!(FlowConfig { tau: -1.0, ..FlowConfig::default() }.validate().is_err());
        assert!(FlowConfig { residual_tol: 0.0, ..FlowConfig::default() }.validate().is_err());
        assert!(FlowConfig { n: 64, band: 24, ..FlowConfig::default() }.validate().is_err());
    }
}
