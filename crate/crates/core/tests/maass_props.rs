use jacobi_core::automorphy::{act_11, j_nh};
use jacobi_core::groups::{embed_sl2, iwasawa_matrix, JacobiElement};
use jacobi_core::maass_ops::*;
use jacobi_core::matrix_core::c64;
use jacobi_core::random::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

/// A smooth non-holomorphic sample on `H x C`.
fn sample(tau: Complex64, z: Complex64) -> Complex64 {
    let (tb, zb) = (tau.conj(), z.conj());
    (tau * c64(0.3, 0.2) + tb * c64(-0.1, 0.4) + z * c64(0.5, -0.3) + zb * c64(0.2, 0.1) + z * zb * 0.15 + z * z * c64(0.05, 0.1)).exp()
        + (tau * tb).sqrt() * (z - zb * c64(0.0, 0.5)).cos()
}

fn near_identity(r: &mut SuiteRng, scale: f64) -> JacobiElement {
    let g = iwasawa_matrix(c64(uniform(r, -scale, scale), uniform(r, -scale, scale).exp()), uniform(r, -scale, scale));
    JacobiElement::new(embed_sl2(&g, 1).unwrap(), random_heis(r, 1, 1, scale)).unwrap()
}

fn base_point(r: &mut SuiteRng) -> (Complex64, Complex64) {
    (c64(uniform(r, -0.5, 0.5), uniform(r, 0.8, 1.5)), c64(uniform(r, -0.5, 0.5), uniform(r, -0.5, 0.5)))
}

/// Relative defect of `C(F|g)(p) = (CF)|g (p)`, and the per-term defects.
fn invariance_error(form: CasimirForm, elt: &JacobiElement, k: i32, m: u32, tau: Complex64, z: Complex64, h: f64) -> (f64, Vec<(&'static str, Complex64)>) {
    let e = elt.clone();
    let slashed = SmoothFunction::new(
        move |t, w| {
            let (t2, w2) = act_11(&e, t, w);
            j_nh(k, m as f64, &e, t, w) * sample(t2, w2)
        },
        1.0,
    );
    let plain = SmoothFunction::new(sample, 1.0);
    let lhs = casimir_terms_with(form, &slashed, k, m, tau, z, h).unwrap();
    let (t2, z2) = act_11(elt, tau, z);
    let rhs = casimir_terms_with(form, &plain, k, m, t2, z2, h).unwrap();
    let j = j_nh(k, m as f64, elt, tau, z);
    let l: Complex64 = lhs.iter().map(|x| x.1).sum();
    let r: Complex64 = rhs.iter().map(|x| x.1).sum::<Complex64>() * j;
    let detail = lhs.iter().zip(&rhs).map(|(a, b)| (a.0, a.1 - b.1 * j)).collect();
    ((l - r).norm() / r.norm(), detail)
}

#[test]
fn casimir_invariance_near_identity() {
    let mut r = rng(2024);
    for _ in 0..20 {
        let elt = near_identity(&mut r, 0.1);
        let k = r.gen_range(0..5);
        let m = r.gen_range(1..3);
        for _ in 0..5 {
            let (tau, z) = base_point(&mut r);
            let (e, _) = invariance_error(CasimirForm::Invariant, &elt, k, m, tau, z, DEFAULT_STEP);
            assert!(e < 1e-4, "k={k} m={m} rel {e:e}");
        }
    }
}

#[test]
fn casimir_defect_is_second_order() {
    let mut r = rng(8);
    let elt = near_identity(&mut r, 0.2);
    let (tau, z) = base_point(&mut r);
    let e: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&h| invariance_error(CasimirForm::Invariant, &elt, 2, 2, tau, z, h).0).collect();
    for w in e.windows(2) {
        assert!((3.5..4.5).contains(&(w[0] / w[1])), "{e:?}");
    }
}

#[test]
fn printed_casimir_fails_in_one_term() {
    let mut r = rng(3);
    let elt = near_identity(&mut r, 0.2);
    let (tau, z) = base_point(&mut r);
    let (printed, terms) = invariance_error(CasimirForm::Printed, &elt, 2, 1, tau, z, DEFAULT_STEP);
    let (fixed, fixed_terms) = invariance_error(CasimirForm::Invariant, &elt, 2, 1, tau, z, DEFAULT_STEP);
    assert!(printed > 1e-3 && fixed < 1e-4, "{printed:e} {fixed:e}");
    // the printed defect minus the invariant defect is carried by F_{z zbar} alone
    for (a, b) in terms.iter().zip(&fixed_terms) {
        if a.0 == "F_z_zbar" {
            assert!((a.1 - b.1).norm() > 1e-3);
        } else {
            assert_eq!(a.1, b.1, "{}", a.0);
        }
    }
}

#[test]
fn casimir_of_constant() {
    let f = SmoothFunction::new(|_, _| c64(1.5, 0.5), 1.0);
    let v = casimir_km(&f, 3, 2, c64(0.2, 1.1), c64(-0.1, 0.3), DEFAULT_STEP).unwrap();
    assert!((v - c64(1.5, 0.5) * 0.625).norm() < 1e-6);
}

#[test]
fn laplace_examples() {
    let s = 1.7;
    let f = SmoothFunction::of_tau(move |t: Complex64| c64(t.im.powf(s), 0.0), 1.0);
    for y in [0.8, 1.0, 2.0] {
        let tau = c64(0.3, y);
        let v = laplace_beltrami_half(&f, 2, tau, DEFAULT_STEP).unwrap();
        let exact = s * (s - 1.0) * y.powf(s);
        assert!((v.re - exact).abs() < 1e-5 * exact.abs() && v.im.abs() < 1e-8);
    }
    // e^{2 pi i tau}: Delta f = 2 pi (k - 1/2) y f
    let g = SmoothFunction::of_tau(|t: Complex64| (c64(0.0, 2.0 * PI) * t).exp(), 1.0);
    for k in [0, 1, 3] {
        let tau = c64(0.0, 1.0);
        let exact = 2.0 * PI * (k as f64 - 0.5) * (-2.0 * PI).exp();
        // second-order stencils need h = 2.5e-4 to resolve the frequency 2 pi to 1e-5
        let v = laplace_beltrami_half(&g, k, tau, 2.5e-4).unwrap();
        assert!((v - exact).norm() < 1e-5 * exact.abs(), "k={k}: {v} vs {exact}");
    }
    let c = SmoothFunction::of_tau(|_| c64(4.0, 1.0), 1.0);
    assert!(laplace_beltrami_half(&c, 1, c64(0.0, 1.0), DEFAULT_STEP).unwrap().norm() < 1e-9);
}

#[test]
fn richardson_ratios() {
    let f = SmoothFunction::of_tau(|t: Complex64| (c64(0.3, 0.7) * t + c64(0.1, -0.2) * t.conj()).exp() * t.im.powf(0.8), 1.0);
    let tau = c64(0.2, 1.1);
    let q = richardson_ratio(|h| laplace_beltrami_half(&f, 2, tau, h), 0.04).unwrap();
    assert!((3.5..=4.5).contains(&q), "laplace ratio {q}");
    let g = SmoothFunction::new(sample, 1.0);
    let z = c64(0.1, 0.2);
    let q = richardson_ratio(|h| casimir_km(&g, 2, 1, tau, z, h), 0.04).unwrap();
    assert!((3.5..=4.5).contains(&q), "casimir ratio {q}");
}

/// Number of semistandard tableaux of the given shape with entries in `1..=m`.
fn ssyt(shape: &[u64], m: usize) -> u64 {
    fn fill(shape: &[usize], m: usize, rows: &mut Vec<Vec<usize>>, r: usize, c: usize) -> u64 {
        if r == shape.len() {
            return 1;
        }
        if c == shape[r] {
            return fill(shape, m, rows, r + 1, 0);
        }
        let left = if c > 0 { rows[r][c - 1] } else { 1 };
        let above = if r > 0 { rows[r - 1][c] + 1 } else { 1 };
        let mut total = 0;
        for v in left.max(above)..=m {
            rows[r].push(v);
            total += fill(shape, m, rows, r, c + 1);
            rows[r].pop();
        }
        total
    }
    let shape: Vec<usize> = shape.iter().map(|&x| x as usize).filter(|&x| x > 0).collect();
    if shape.len() > m {
        return 0;
    }
    fill(&shape, m, &mut vec![Vec::new(); shape.len()], 0, 0)
}

#[test]
fn multiplicity_matches_tableaux_count() {
    for m in 1..=4u32 {
        for n in 1..=4u32 {
            let s = m.min(n) as usize;
            let mut taus = vec![0u64; s];
            loop {
                if taus.windows(2).all(|w| w[0] >= w[1]) {
                    let w = HighestWeight::new(taus.clone(), m, n).unwrap();
                    assert_eq!(multiplicity(&w).unwrap(), ssyt(&taus, m as usize), "{taus:?} m={m}");
                }
                let mut i = 0;
                while i < s && taus[i] == 5 {
                    taus[i] = 0;
                    i += 1;
                }
                if i == s {
                    break;
                }
                taus[i] += 1;
            }
        }
    }
}

#[test]
fn multiplicity_examples() {
    assert_eq!(multiplicity(&HighestWeight::new(vec![2, 0], 2, 3).unwrap()).unwrap(), 3);
    assert_eq!(multiplicity(&HighestWeight::new(vec![5], 1, 1).unwrap()).unwrap(), 1);
    assert_eq!(multiplicity(&HighestWeight::new(vec![4, 4, 4], 3, 3).unwrap()).unwrap(), 1);
    let a = multiplicity(&HighestWeight::new(vec![3, 1], 4, 2).unwrap()).unwrap();
    let b = multiplicity(&HighestWeight::new(vec![3, 1, 0, 0], 4, 4).unwrap()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn casimir_is_linear(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = c64(uniform(&mut r, -2.0, 2.0), uniform(&mut r, -2.0, 2.0));
        let b = c64(uniform(&mut r, -2.0, 2.0), uniform(&mut r, -2.0, 2.0));
        let (tau, z) = base_point(&mut r);
        let other = |t: Complex64, w: Complex64| (t * w).sin() + t.conj() * w * w;
        let f = SmoothFunction::new(sample, 1.0);
        let g = SmoothFunction::new(other, 1.0);
        let fg = SmoothFunction::new(move |t, w| a * sample(t, w) + b * other(t, w), 1.0);
        let lhs = casimir_km(&fg, 2, 1, tau, z, DEFAULT_STEP).unwrap();
        let rhs = a * casimir_km(&f, 2, 1, tau, z, DEFAULT_STEP).unwrap() + b * casimir_km(&g, 2, 1, tau, z, DEFAULT_STEP).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-6 * rhs.norm().max(1.0));
    }
}
