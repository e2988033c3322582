#![allow(dead_code)]

use std::collections::HashMap;

use num_rational::Ratio;
use num_traits::{One, Zero};

pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

/// Univariate polynomial, ascending coefficients.
#[derive(Clone, Debug)]
pub struct Poly(pub Vec<Q>);

impl Poly {
    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += *a * *b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n).map(|i| *self.0.get(i).unwrap_or(&Q::zero()) + *o.0.get(i).unwrap_or(&Q::zero())).collect())
    }

    pub fn scale(&self, c: Q) -> Poly {
        Poly(self.0.iter().map(|a| *a * c).collect())
    }

    pub fn deriv(&self, times: usize) -> Poly {
        let mut p = self.0.clone();
        for _ in 0..times {
            if p.len() <= 1 {
                return Poly(vec![Q::zero()]);
            }
            p = p.iter().enumerate().skip(1).map(|(i, a)| *a * q(i as i128)).collect();
        }
        Poly(p)
    }

    pub fn eval(&self, x: Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, a| acc * x + *a)
    }
}

/// Multivariate polynomial as exponent vector → coefficient.
#[derive(Clone, Debug)]
pub struct MPoly(pub Vec<(Vec<u32>, Q)>);

impl MPoly {
    pub fn partial(&self, alpha: &[u32]) -> MPoly {
        let mut out = Vec::new();
        'terms: for (e, c) in &self.0 {
            let mut c = *c;
            let mut e2 = e.clone();
            for (j, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    if e2[j] == 0 {
                        continue 'terms;
                    }
                    c *= q(e2[j] as i128);
                    e2[j] -= 1;
                }
            }
            out.push((e2, c));
        }
        MPoly(out)
    }

    pub fn eval(&self, y: &[Q]) -> Q {
        self.0
            .iter()
            .map(|(e, c)| e.iter().zip(y).fold(*c, |acc, (&p, v)| (0..p).fold(acc, |a, _| a * *v)))
            .fold(Q::zero(), |a, b| a + b)
    }

    /// g ∘ f as a univariate polynomial.
    pub fn compose(&self, f: &[Poly]) -> Poly {
        let mut out = Poly(vec![Q::zero()]);
        for (e, c) in &self.0 {
            let mut t = Poly(vec![*c]);
            for (j, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    t = t.mul(&f[j]);
                }
            }
            out = out.add(&t);
        }
        out
    }
}

/// Small deterministic generator so the oracle does not share code with the
/// library's random families.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_int(&mut self, lo: i128, hi: i128) -> i128 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        lo + ((self.0 >> 33) as i128) % (hi - lo + 1)
    }
}

pub fn random_poly(rng: &mut Lcg, deg: usize) -> Poly {
    Poly((0..=deg).map(|_| Q::new(rng.next_int(-4, 4), rng.next_int(1, 3))).collect())
}

/// Random polynomial in n variables, total degree ≤ deg.
pub fn random_mpoly(rng: &mut Lcg, n: usize, deg: u32) -> MPoly {
    let mut out = Vec::new();
    let mut e = vec![0u32; n];
    loop {
        if e.iter().sum::<u32>() <= deg {
            let c = Q::new(rng.next_int(-3, 3), rng.next_int(1, 2));
            if !c.is_zero() {
                out.push((e.clone(), c));
            }
        }
        let mut j = 0;
        loop {
            if j == n {
                return MPoly(out);
            }
            e[j] += 1;
            if e[j] <= deg {
                break;
            }
            e[j] = 0;
            j += 1;
        }
    }
}

/// Inputs for compose_derivative from (g, f) at x, plus the exact value of
/// (g ∘ f)^{(k)}(x).
pub fn exact_case(
    g: &MPoly,
    f: &[Poly],
    x: Q,
    k: usize,
) -> (HashMap<Vec<u32>, Q>, HashMap<(usize, usize), Q>, Q) {
    let n = f.len();
    let y: Vec<Q> = f.iter().map(|p| p.eval(x)).collect();
    let mut gd = HashMap::new();
    let mut alpha = vec![0u32; n];
    loop {
        if alpha.iter().sum::<u32>() as usize <= k {
            gd.insert(alpha.clone(), g.partial(&alpha).eval(&y));
        }
        let mut j = 0;
        loop {
            if j == n {
                let fd = (1..=k)
                    .flat_map(|i| (1..=n).map(move |j| (i, j)))
                    .map(|(i, j)| ((i, j), f[j - 1].deriv(i).eval(x)))
                    .collect();
                let exact = g.compose(f).deriv(k).eval(x);
                return (gd, fd, exact);
            }
            alpha[j] += 1;
            if alpha[j] as usize <= k {
                break;
            }
            alpha[j] = 0;
            j += 1;
        }
    }
}

/// Central finite-difference weights for the m-th derivative on offsets
/// −p..=p (Fornberg's recursion).
pub fn fd_weights(m: usize, p: i64) -> Vec<f64> {
    let xs: Vec<f64> = (-p..=p).map(|v| v as f64).collect();
    let npts = xs.len();
    let mut c = vec![vec![0.0; m + 1]; npts];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    for i in 1..npts {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for kk in (1..=mn).rev() {
                    c[i][kk] = c1 * (kk as f64 * c[i - 1][kk - 1] - c5 * c[i - 1][kk]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for kk in (1..=mn).rev() {
                c[j][kk] = (c4 * c[j][kk] - kk as f64 * c[j][kk - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

pub fn to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

pub fn one() -> Q {
    Q::one()
}
