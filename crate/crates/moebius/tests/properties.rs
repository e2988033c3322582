mod common;

use std::collections::HashMap;
use std::f64::consts::PI;

use moebius::bht::{bht, coefficient_l1, sobolev_l1_constant, young_check, BhtMethod, BhtQuery};
use moebius::corpus::unit_circle;
use moebius::curve::{
    analyze, banach_constant_h1, derivative, sobolev_norm, synthesize, FourierCurve, SampledGrid, SobolevOrder,
};
use moebius::faa::{compose_derivative, enumerate, enumerate_composition_first, term_count};
use moebius::gradient::project_normal;
use moebius::majorant::{
    analyticity_fit, ck_taylor_solve, expansions_for, majorant_sequence, MajorantParams, MultiSeries,
};
use moebius::multiplier::{apply_q_multiplier, MultiplierTable};
use num_complex::Complex64;
use proptest::prelude::*;

use common::{exact_case, random_mpoly, random_poly, Lcg, Q};

/// Curve from flat (re, im) pairs for modes 0..=K with 1/(1+k)² decay.
fn build(dim: usize, k: usize, raw: &[f64]) -> FourierCurve {
    let mut c = FourierCurve::zeros(dim, k);
    for m in 0..=k {
        let w = 1.0 / (1.0 + m as f64).powi(2);
        let row: Vec<Complex64> = (0..dim)
            .map(|a| {
                let i = 2 * (m * dim + a);
                Complex64::new(w * raw[i], if m == 0 { 0.0 } else { w * raw[i + 1] })
            })
            .collect();
        c.set_mode(m as i64, &row);
    }
    c
}

fn curve_strategy(dim: usize, max_k: usize) -> impl Strategy<Value = FourierCurve> {
    (1..=max_k).prop_flat_map(move |k| {
        prop::collection::vec(-1.0..1.0f64, 2 * (k + 1) * dim).prop_map(move |raw| build(dim, k, &raw))
    })
}

/// Coefficients of the pointwise product of two scalar curves.
fn product(f: &FourierCurve, g: &FourierCurve) -> FourierCurve {
    let (kf, kg) = (f.max_freq() as i64, g.max_freq() as i64);
    let mut out = FourierCurve::zeros(1, (kf + kg) as usize);
    for a in -kf..=kf {
        for b in -kg..=kg {
            out.coeff_mut(a + b)[0] += f.coeff(a)[0] * g.coeff(b)[0];
        }
    }
    out
}

fn h(s: f64) -> SobolevOrder {
    SobolevOrder::new(s).unwrap()
}

fn rel_diff(a: &FourierCurve, b: &FourierCurve) -> f64 {
    let d = a.lin_comb(1.0, b, -1.0);
    sobolev_norm(&d, h(0.0)) / sobolev_norm(a, h(0.0)).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(c in curve_strategy(3, 12)) {
        let grid = synthesize(&c, 64).unwrap();
        let spectral = sobolev_norm(&c, h(0.0));
        prop_assert!((grid.l2_norm() - spectral).abs() <= 1e-10 * spectral.max(1.0));
    }

    #[test]
    fn embedding_monotone(c in curve_strategy(2, 10), t in 0.0..3.0f64, ds in 0.0..2.0f64) {
        prop_assert!(sobolev_norm(&c, h(t)) <= sobolev_norm(&c, h(t + ds)));
    }

    #[test]
    fn banach_algebra_h1(f in curve_strategy(1, 8), g in curve_strategy(1, 8)) {
        let fg = product(&f, &g);
        let lhs = sobolev_norm(&fg, h(1.0));
        prop_assert!(lhs <= banach_constant_h1() * sobolev_norm(&f, h(1.0)) * sobolev_norm(&g, h(1.0)));
    }

    #[test]
    fn product_matches_grid(f in curve_strategy(1, 6), g in curve_strategy(1, 6)) {
        // the coefficient product above agrees with sampling
        let (a, b) = (synthesize(&f, 64).unwrap(), synthesize(&g, 64).unwrap());
        let vals: Vec<f64> = (0..64).map(|j| a.at(j)[0] * b.at(j)[0]).collect();
        let back = analyze(&SampledGrid::new(64, 1, vals).unwrap()).unwrap().with_band(12);
        prop_assert!(rel_diff(&product(&f, &g), &back) < 1e-12);
    }

    #[test]
    fn composition_with_sine(f in curve_strategy(2, 6), amp in 0.1..3.0f64) {
        let f = f.scale(amp);
        let n = 512;
        let grid = synthesize(&f, n).unwrap();
        let vals: Vec<f64> = (0..n).flat_map(|j| grid.at(j).iter().map(|v| v.sin()).collect::<Vec<_>>()).collect();
        let comp = analyze(&SampledGrid::new(n, 2, vals).unwrap()).unwrap();
        // sup |sin∘·| over ℝ² plus sup ‖D sin‖
        let g_c1 = 2f64.sqrt() + 1.0;
        let lhs = sobolev_norm(&comp, h(1.0));
        prop_assert!(lhs <= 2.0 * PI * g_c1 * (1.0 + sobolev_norm(&f, h(1.0))));
    }

    #[test]
    fn young_inequality(
        x in prop::collection::vec(-5.0..5.0f64, 1..20),
        y in prop::collection::vec(-5.0..5.0f64, 1..20),
    ) {
        let (lhs, rhs) = young_check(&x, &y);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn coefficient_l1_bound(f in curve_strategy(1, 16)) {
        prop_assert!(coefficient_l1(&f) <= sobolev_l1_constant(1.0) * sobolev_norm(&f, h(1.0)) * (1.0 + 1e-12));
    }

    #[test]
    fn multiplier_linear_and_commutes(
        a in curve_strategy(3, 8),
        b in curve_strategy(3, 8),
        s in -2.0..2.0f64,
        l in 1u32..4,
    ) {
        let table = MultiplierTable::new(8).unwrap();
        let k = a.max_freq().max(b.max_freq());
        let (a, b) = (a.with_band(k), b.with_band(k));
        let lhs = apply_q_multiplier(&a.lin_comb(1.0, &b, s), &table).unwrap();
        let rhs = apply_q_multiplier(&a, &table).unwrap().lin_comb(1.0, &apply_q_multiplier(&b, &table).unwrap(), s);
        prop_assert!(rel_diff(&rhs, &lhs) < 1e-13);
        let qd = apply_q_multiplier(&derivative(&a, l), &table).unwrap();
        let dq = derivative(&apply_q_multiplier(&a, &table).unwrap(), l);
        prop_assert!(rel_diff(&dq, &qd) < 1e-14);
    }

    #[test]
    fn normal_projection_idempotent(vals in prop::collection::vec(-10.0..10.0f64, 128)) {
        let circle = unit_circle(2);
        let g = SampledGrid::new(64, 2, vals).unwrap();
        let p = project_normal(&g, &circle).unwrap();
        let pp = project_normal(&p, &circle).unwrap();
        prop_assert!(pp.sub(&p).max_abs() <= 1e-12 * g.max_abs().max(1.0));
        for j in 0..64 {
            let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(n(p.at(j)) <= n(g.at(j)) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn faa_term_invariants(k in 1usize..=8, n in 1usize..=3) {
        let exp = enumerate(k, n).unwrap();
        prop_assert_eq!(exp.terms.len() as u64, term_count(k, n).unwrap());
        prop_assert_eq!(enumerate_composition_first(k, n).unwrap().len(), exp.terms.len());
        for t in &exp.terms {
            let r = t.r();
            prop_assert_eq!(r.iter().enumerate().map(|(i, ri)| (i + 1) * *ri as usize).sum::<usize>(), k);
            let q = t.q_matrix();
            for i in 0..k {
                prop_assert_eq!(q[i].iter().sum::<u32>(), r[i] as u32);
            }
            prop_assert!(t.coeff() > 0);
        }
    }

    #[test]
    fn faa_homogeneous(seed in any::<u64>(), k in 1usize..=5, n in 1usize..=3, c in -20i128..20, d in 1i128..7) {
        let mut rng = Lcg(seed);
        let exp = enumerate(k, n).unwrap();
        let g = random_mpoly(&mut rng, n, 3);
        let f: Vec<_> = (0..n).map(|_| random_poly(&mut rng, 3)).collect();
        let (gd, fd, exact) = exact_case(&g, &f, Q::new(1, 3), k);
        let c = Q::new(c, d);
        let scaled: HashMap<Vec<u32>, Q> = gd.iter().map(|(a, v)| (a.clone(), *v * c)).collect();
        prop_assert_eq!(compose_derivative(&exp, &scaled, &fd).unwrap(), exact * c);
    }

    #[test]
    fn taylor_padding_and_positivity(
        coeffs in prop::collection::vec(0.0..2.0f64, 7..10),
        extra in 1usize..5,
    ) {
        let order = coeffs.len() - 1;
        let g = MultiSeries::univariate(&coeffs);
        let base = ck_taylor_solve(std::slice::from_ref(&g), order).unwrap();
        let padded = ck_taylor_solve(&[g.padded(order + extra)], order).unwrap();
        prop_assert_eq!(&base, &padded);
        prop_assert!(base.derivs[0].iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn taylor_system_positivity(
        c in prop::collection::vec(0.0..1.0f64, 6),
    ) {
        // ẏ₀ = c₀ + c₁ y₀ y₁ + c₂ y₁², ẏ₁ = c₃ + c₄ y₀² + c₅ y₀ y₁
        let mk = |t: &[(Vec<u32>, f64)]| MultiSeries { nvars: 2, degree: 6, terms: t.iter().cloned().collect() };
        let g = [
            mk(&[(vec![0, 0], c[0]), (vec![1, 1], c[1]), (vec![0, 2], c[2])]),
            mk(&[(vec![0, 0], c[3]), (vec![2, 0], c[4]), (vec![1, 1], c[5])]),
        ];
        let s = ck_taylor_solve(&g, 6).unwrap();
        prop_assert!(s.derivs.iter().flatten().all(|v| *v >= 0.0));
    }

    #[test]
    fn majorant_monotone(
        c in 0.05..2.0f64,
        r in 0.5..3.0f64,
        a0 in 0.0..1.5f64,
        dims in 1usize..=3,
    ) {
        let order = 5;
        let ex = expansions_for(dims, order).unwrap();
        let small = majorant_sequence(&MajorantParams::new(c, r, a0, dims).unwrap(), &ex, order).unwrap();
        let big = majorant_sequence(&MajorantParams::new(c * 1.5, r, a0 * 1.5, dims).unwrap(), &ex, order).unwrap();
        prop_assert!(small.iter().all(|v| *v >= 0.0));
        for (s, b) in small.iter().zip(&big) {
            prop_assert!(s <= b);
        }
    }

    #[test]
    fn analyticity_fit_recovers_generator(c in 0.1..50.0f64, r in 0.05..2.0f64) {
        let data: Vec<f64> = (0..10).map(|l| c * (1..=l).product::<usize>() as f64 / r.powi(l as i32)).collect();
        let fit = analyticity_fit(&data).unwrap();
        prop_assert!((fit.c_k - c).abs() <= 1e-10 * c);
        prop_assert!((fit.r_k - r).abs() <= 1e-10 * r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bht_bilinear(
        f1 in curve_strategy(1, 6),
        f2 in curve_strategy(1, 6),
        g in curve_strategy(1, 6),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        s1 in 0.0..1.0f64,
        s2 in 0.0..1.0f64,
    ) {
        let k = f1.max_freq().max(f2.max_freq());
        let (f1, f2) = (f1.with_band(k), f2.with_band(k));
        for method in [BhtMethod::Spectral, BhtMethod::Direct] {
            let q = BhtQuery::new(s1, s2, 4.0 / 64.0, method, 64).unwrap();
            let lhs = bht(&f1.lin_comb(a, &f2, b), &g, &q).unwrap();
            let rhs = bht(&f1, &g, &q).unwrap().lin_comb(a, &bht(&f2, &g, &q).unwrap(), b);
            let scale = sobolev_norm(&lhs, h(0.0)).max(1.0);
            prop_assert!(sobolev_norm(&lhs.lin_comb(1.0, &rhs, -1.0), h(0.0)) <= 1e-12 * scale, "{method:?}");
        }
    }
}

#[test]
fn banach_constant_closed_form() {
    let c0 = sobolev_l1_constant(1.0);
    assert!((c0 - (PI / PI.tanh()).sqrt()).abs() < 1e-10);
    assert!((c0 - 1.77578).abs() < 5e-5);
    assert!((banach_constant_h1() - 2.0 * 2f64.sqrt() * c0).abs() < 1e-12);
}
