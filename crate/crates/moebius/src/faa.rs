//! Multivariate Faà di Bruno expansion of ∂ᵏ g(f(x)) for f: ℝ → ℝⁿ, g: ℝⁿ → ℝ.
//!
//! A term is indexed by r = (r₁,…,r_k) with Σ i·rᵢ = k and a matrix q (k × n)
//! with row sums rᵢ; its multi-index is αⱼ = Σᵢ qᵢⱼ and its coefficient is
//! k! / (Πᵢ i!^{rᵢ} Πᵢⱼ qᵢⱼ!). All coefficients are positive integers.

use std::collections::HashMap;
use std::ops::{Add, Mul};

use num_traits::{FromPrimitive, One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_K: usize = 12;
pub const MAX_N: usize = 8;

/// One admissible (r, q). Stored inline with q kept sparse, since the
/// expansion at the size guard has a few million terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaaTerm {
    k: u8,
    n: u8,
    r: [u8; MAX_K],
    // (i, j, q_ij) with q_ij > 0, sorted by (i, j); i and j are 1-based.
    q: [(u8, u8, u8); MAX_K],
    nq: u8,
    alpha: [u8; MAX_N],
    coeff: u64,
}

impl FaaTerm {
    fn from_rows(k: usize, n: usize, rows: &[[u8; MAX_N]]) -> Result<Self> {
        let mut t = FaaTerm {
            k: k as u8,
            n: n as u8,
            r: [0; MAX_K],
            q: [(0, 0, 0); MAX_K],
            nq: 0,
            alpha: [0; MAX_N],
            coeff: 0,
        };
        // k!/(Π i!^{r_i} Π q_ij!) built as a product of multinomials, so
        // every intermediate is an integer.
        let mut coeff: u128 = 1;
        let mut used = 0u128;
        for (i0, row) in rows.iter().enumerate().take(k) {
            let i = i0 + 1;
            for (j0, &qij) in row.iter().enumerate().take(n) {
                if qij == 0 {
                    continue;
                }
                t.r[i0] += qij;
                t.alpha[j0] += qij;
                t.q[t.nq as usize] = (i as u8, (j0 + 1) as u8, qij);
                t.nq += 1;
                for _ in 0..qij {
                    // choose i new slots out of the used + i so far
                    coeff *= binom(used + i as u128, i as u128);
                    used += i as u128;
                }
                coeff /= factorial(qij as u128);
            }
        }
        if used != k as u128 {
            return Err(Error::Invariant(format!("Σ i·r_i = {used} ≠ k = {k}")));
        }
        // The product above counts ordered blocks of equal size; the division by
        // q_ij! removes the ordering within each (i, j) class.
        t.coeff = u64::try_from(coeff).map_err(|_| Error::Size("coefficient exceeds u64".into()))?;
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// (r₁, …, r_k).
    pub fn r(&self) -> &[u8] {
        &self.r[..self.k as usize]
    }

    /// q_ij with 1-based i ≤ k, j ≤ n.
    pub fn q(&self, i: usize, j: usize) -> u8 {
        self.q_entries().iter().find(|e| e.0 as usize == i && e.1 as usize == j).map_or(0, |e| e.2)
    }

    /// Nonzero entries (i, j, q_ij).
    pub fn q_entries(&self) -> &[(u8, u8, u8)] {
        &self.q[..self.nq as usize]
    }

    pub fn q_matrix(&self) -> Vec<Vec<u32>> {
        let mut m = vec![vec![0u32; self.n()]; self.k()];
        for &(i, j, v) in self.q_entries() {
            m[i as usize - 1][j as usize - 1] = v as u32;
        }
        m
    }

    pub fn alpha(&self) -> &[u8] {
        &self.alpha[..self.n as usize]
    }

    pub fn alpha_order(&self) -> usize {
        self.alpha().iter().map(|&a| a as usize).sum()
    }

    pub fn coeff(&self) -> u64 {
        self.coeff
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FaaExpansion {
    pub k: usize,
    pub n: usize,
    #[serde(skip)]
    pub terms: Vec<FaaTerm>,
}

fn factorial(m: u128) -> u128 {
    (1..=m).product()
}

fn binom(a: u128, b: u128) -> u128 {
    let b = b.min(a - b);
    (0..b).fold(1u128, |acc, i| acc * (a - i) / (i + 1))
}

fn check_guard(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::Input(format!("need k ≥ 1 and n ≥ 1, got k = {k}, n = {n}")));
    }
    if k > MAX_K || n > MAX_N {
        return Err(Error::Size(format!("k = {k}, n = {n} exceeds guard k ≤ {MAX_K}, n ≤ {MAX_N}")));
    }
    Ok(())
}

/// Partitions of k as r-vectors, lexicographically increasing.
fn partitions(k: usize) -> Vec<Vec<u8>> {
    fn rec(i: usize, k: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i > k {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for ri in 0..=left / i {
            cur.push(ri as u8);
            rec(i + 1, k, left - i * ri, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, k, k, &mut Vec::new(), &mut out);
    out
}

/// Weak compositions of m into n parts, lexicographically increasing.
fn weak_compositions(m: usize, n: usize) -> Vec<[u8; MAX_N]> {
    fn rec(j: usize, n: usize, left: usize, cur: &mut [u8; MAX_N], out: &mut Vec<[u8; MAX_N]>) {
        if j + 1 == n {
            cur[j] = left as u8;
            out.push(*cur);
            cur[j] = 0;
            return;
        }
        for v in 0..=left {
            cur[j] = v as u8;
            rec(j + 1, n, left - v, cur, out);
        }
        cur[j] = 0;
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut [0; MAX_N], &mut out);
    out
}

/// Closed-form term count Σ_r Πᵢ C(rᵢ + n − 1, n − 1).
pub fn term_count(k: usize, n: usize) -> Result<u64> {
    check_guard(k, n)?;
    Ok(partitions(k)
        .iter()
        .map(|r| r.iter().map(|&ri| binom(ri as u128 + n as u128 - 1, n as u128 - 1) as u64).product::<u64>())
        .sum())
}

/// All admissible (r, q), ordered lexicographically in r and then in q.
pub fn enumerate(k: usize, n: usize) -> Result<FaaExpansion> {
    check_guard(k, n)?;
    let mut terms = Vec::with_capacity(term_count(k, n)? as usize);
    for r in partitions(k) {
        let choices: Vec<Vec<[u8; MAX_N]>> = r.iter().map(|&ri| weak_compositions(ri as usize, n)).collect();
        let mut idx = vec![0usize; k];
        let mut rows = vec![[0u8; MAX_N]; k];
        loop {
            for i in 0..k {
                rows[i] = choices[i][idx[i]];
            }
            terms.push(FaaTerm::from_rows(k, n, &rows)?);
            // odometer, last row fastest
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < choices[i].len() {
                    break;
                }
                idx[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    let expected = term_count(k, n)? as usize;
    if terms.len() != expected {
        return Err(Error::Invariant(format!("enumerated {} terms, recount gives {expected}", terms.len())));
    }
    Ok(FaaExpansion { k, n, terms })
}

/// Second enumeration: builds q row by row over all weak vectors whose
/// weighted total still fits, without listing partitions first.
pub fn enumerate_composition_first(k: usize, n: usize) -> Result<Vec<FaaTerm>> {
    check_guard(k, n)?;
    fn rec(
        i: usize,
        k: usize,
        n: usize,
        left: usize,
        rows: &mut Vec<[u8; MAX_N]>,
        out: &mut Vec<FaaTerm>,
    ) -> Result<()> {
        if i > k {
            if left == 0 {
                out.push(FaaTerm::from_rows(k, n, rows)?);
            }
            return Ok(());
        }
        for s in 0..=left / i {
            for row in weak_compositions(s, n) {
                rows.push(row);
                rec(i + 1, k, n, left - i * s, rows, out)?;
                rows.pop();
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(1, k, n, k, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// Bell numbers B₀ … B_k from B_{m+1} = Σⱼ C(m, j) Bⱼ.
pub fn bell_numbers(k: usize) -> Vec<u128> {
    let mut b = vec![1u128];
    for m in 0..k {
        let next = (0..=m).map(|j| binom(m as u128, j as u128) * b[j]).sum();
        b.push(next);
    }
    b
}

/// Σ coeff over all terms, i.e. the expansion evaluated at all-ones data.
pub fn coefficient_sum(exp: &FaaExpansion) -> u128 {
    exp.terms.iter().map(|t| t.coeff as u128).sum()
}

/// Σ coeff · ∂^α g · Πᵢⱼ (f_j^{(i)})^{q_ij}.
///
/// `g_derivs` maps α (length n) to ∂^α g(f(x)); `f_derivs` maps the 1-based
/// pair (i, j) to f_j^{(i)}(x).
pub fn compose_derivative<T>(
    exp: &FaaExpansion,
    g_derivs: &HashMap<Vec<u32>, T>,
    f_derivs: &HashMap<(usize, usize), T>,
) -> Result<T>
where
    T: Clone + Zero + One + FromPrimitive + Add<Output = T> + Mul<Output = T>,
{
    let mut total = T::zero();
    for t in &exp.terms {
        let alpha: Vec<u32> = t.alpha().iter().map(|&a| a as u32).collect();
        let g = g_derivs
            .get(&alpha)
            .ok_or_else(|| Error::Input(format!("missing g derivative for α = {alpha:?}")))?;
        let mut prod = T::from_u64(t.coeff).ok_or_else(|| Error::Numeric("coefficient conversion".into()))? * g.clone();
        for &(i, j, qij) in t.q_entries() {
            let f = f_derivs
                .get(&(i as usize, j as usize))
                .ok_or_else(|| Error::Input(format!("missing f derivative (i, j) = ({i}, {j})")))?;
            for _ in 0..qij {
                prod = prod * f.clone();
            }
        }
        total = total + prod;
    }
    Ok(total)
}

/// The expansion with ∂^α g replaced by g_bounds[|α|] and every f_j^{(i)}
/// by f_bounds[i − 1].
pub fn majorized_compose(exp: &FaaExpansion, g_bounds: &[f64], f_bounds: &[f64]) -> Result<f64> {
    if g_bounds.len() <= exp.k || f_bounds.len() < exp.k {
        return Err(Error::Input(format!(
            "need {} g bounds and {} f bounds, got {} and {}",
            exp.k + 1,
            exp.k,
            g_bounds.len(),
            f_bounds.len()
        )));
    }
    if g_bounds.iter().chain(f_bounds).any(|&b| !(b >= 0.0)) {
        return Err(Error::Input("bounds must be non-negative".into()));
    }
    let mut total = 0.0;
    for t in &exp.terms {
        let mut prod = t.coeff as f64 * g_bounds[t.alpha_order()];
        for &(i, _, qij) in t.q_entries() {
            prod *= f_bounds[i as usize - 1].powi(qij as i32);
        }
        total += prod;
    }
    Ok(total)
}
