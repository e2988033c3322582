//! Quadrature rules shared by the singular-integral operators.

use crate::error::{Error, Result};

/// Gauss–Legendre rule with `n` nodes on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite rule on [0, 1]: `panels` equal panels with `n` Gauss nodes each.
#[derive(Debug, Clone)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(n: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let panels = panels.max(1);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(n * panels);
        let mut weights = Vec::with_capacity(n * panels);
        for p in 0..panels {
            for i in 0..n {
                nodes.push((p as f64 + x[i]) * h);
                weights.push(w[i] * h);
            }
        }
        Composite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss nodes per axis for unit-cube parameter integrals.
pub const GAUSS_NODES: usize = 8;

/// Panels needed so that a phase of `cycles` full turns is resolved by
/// 8-node Gauss panels (at most one turn per panel).
pub fn panels_for(cycles: f64) -> usize {
    (cycles.abs().ceil() as usize).max(1)
}

/// Gregory coefficients c_m of the end corrections −h c_m (∇^m f_n ± Δ^m f_0).
const GREGORY: [f64; 6] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
    275.0 / 24192.0,
];

/// Weights of Gregory's end-corrected trapezoid rule on `m` equispaced
/// points with spacing `h`: six difference corrections (eighth order) when
/// m ≥ 14, fewer on shorter grids, plain trapezoid below 4 points.
pub fn gregory_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m >= 2);
    let r = (m / 2).saturating_sub(1).min(GREGORY.len());
    let mut w = vec![h; m];
    w[0] = 0.5 * h;
    w[m - 1] = 0.5 * h;
    for (k, c) in GREGORY.iter().enumerate().take(r) {
        let order = k + 1;
        let mut binom = 1.0;
        for i in 0..=order {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let v = h * c * binom * sign;
            w[i] -= v;
            w[m - 1 - i] -= v;
            binom = binom * (order - i) as f64 / (i + 1) as f64;
        }
    }
    w
}

/// Quadrature over the truncated domain ε ≤ |w| ≤ 1/2 built on the grid
/// w = j/n. Each entry is (j, w, weight) with j the signed grid offset.
#[derive(Debug, Clone)]
pub struct TruncatedRule {
    pub n: usize,
    pub eps: f64,
    pub nodes: Vec<(i64, f64, f64)>,
}

impl TruncatedRule {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Input(format!("eps = {eps} outside (0, 1/2]")));
        }
        let j0f = eps * n as f64;
        let j0 = j0f.round();
        if (j0f - j0).abs() > 1e-9 * j0f.max(1.0) || j0 < 1.0 {
            return Err(Error::Configuration(format!(
                "eps = {eps} is not an integer multiple of 1/{n}"
            )));
        }
        let j0 = j0 as i64;
        let j1 = (n / 2) as i64;
        let h = 1.0 / n as f64;
        let m = (j1 - j0 + 1) as usize;
        let mut nodes = Vec::with_capacity(2 * m);
        if m == 1 {
            // ε = 1/2: the domain has measure zero.
            return Ok(TruncatedRule { n, eps, nodes });
        }
        let w = gregory_weights(m, h);
        for (i, j) in (j0..=j1).enumerate() {
            nodes.push((-j, -(j as f64) * h, w[i]));
            nodes.push((j, j as f64 * h, w[i]));
        }
        Ok(TruncatedRule { n, eps, nodes })
    }

    /// Whether `eps` is an integer multiple of 1/n.
    pub fn is_grid_locked(n: usize, eps: f64) -> bool {
        let j = eps * n as f64;
        (j - j.round()).abs() <= 1e-9 * j.max(1.0) && j.round() >= 1.0
    }
}
