use jacobi_core::automorphy::theta_multiplier;
use jacobi_core::groups::*;
use jacobi_core::matrix_core::{c64, CMat, ComplexSymMatrix, RMat};
use jacobi_core::random::*;
use jacobi_core::schrodinger_weil::*;
use jacobi_core::theta::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

const TOL: f64 = 1e-14;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn random_state(r: &mut SuiteRng, n: usize) -> GaussianState {
    let p = random_point(r, n, 1);
    let c = c64(uniform(r, 0.5, 1.5), uniform(r, -0.5, 0.5));
    GaussianState::new(c, p.omega, p.z).unwrap()
}

fn random_sample(r: &mut SuiteRng, n: usize) -> GnPoint {
    GnPoint {
        tau: c64(uniform(r, -1.0, 1.0), uniform(r, 0.6, 2.0)),
        theta: uniform(r, 0.0, 2.0 * PI),
        lambda: (0..n).map(|_| uniform(r, -1.0, 1.0)).collect(),
        mu: (0..n).map(|_| uniform(r, -1.0, 1.0)).collect(),
    }
}

fn int_sym(r: &mut SuiteRng, n: usize) -> RMat {
    let a = RMat::from_fn(n, n, |_, _| uniform(r, -3.0, 3.0).round());
    RMat::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn siegel_even_translation(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let omega = random_omega(&mut r, n);
        let b = int_sym(&mut r, n);
        let shifted = ComplexSymMatrix::new(omega.matrix() + jacobi_core::matrix_core::to_complex(&(b * 2.0))).unwrap();
        let a = siegel_theta(&omega, TOL).unwrap().value;
        let c = siegel_theta(&shifted, TOL).unwrap().value;
        prop_assert!(rel(c, a) < 1e-12);
    }

    #[test]
    fn theta_m_lattice_translation(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = IndexMatrix::new(RMat::from_fn(m, m, |i, j| if i == j { 2.0 } else { 1.0 })).unwrap();
        let p = random_point(&mut r, n, m);
        let mu = RMat::from_fn(m, n, |_, _| uniform(&mut r, -3.0, 3.0).round());
        let q = SiegelJacobiPoint::new(p.omega.clone(), &p.z + jacobi_core::matrix_core::to_complex(&mu)).unwrap();
        let neg = SiegelJacobiPoint::new(p.omega.clone(), -&p.z).unwrap();
        let a = theta_m(&mm, &p, TOL).unwrap().value;
        prop_assert!(rel(theta_m(&mm, &q, TOL).unwrap().value, a) < 1e-12);
        prop_assert!(rel(theta_m(&mm, &neg, TOL).unwrap().value, a) < 1e-12);
    }

    #[test]
    fn doubling_radius_within_tail(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = IndexMatrix::new(random_spd(&mut r, m, 0.5, 0.7)).unwrap();
        let p = random_point(&mut r, n, m);
        let v = theta_m(&mm, &p, 1e-6).unwrap();
        let big = theta_m_radius(&mm, &p, 2 * v.truncation.radius).unwrap();
        prop_assert!(v.truncation.tail_bound <= 1e-6);
        prop_assert!((big - v.value).norm() <= v.truncation.tail_bound);
    }

    #[test]
    fn covariant_map_lattice_sum(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = IndexMatrix::new(random_spd(&mut r, m, 0.5, 0.7)).unwrap();
        let p = random_point(&mut r, n, m);
        let v = theta_m(&mm, &p, 1e-13).unwrap();
        let f = covariant_map(&mm, &p).unwrap();
        let rad = v.truncation.radius as i64;
        let dim = m * n;
        let mut s = c64(0.0, 0.0);
        let mut idx = vec![-rad; dim];
        'outer: loop {
            s += f.eval(&mm, &RMat::from_fn(m, n, |i, j| idx[i * n + j] as f64));
            for k in (0..dim).rev() {
                if idx[k] < rad {
                    idx[k] += 1;
                    continue 'outer;
                }
                idx[k] = -rad;
            }
            break;
        }
        prop_assert!(rel(s, v.value) < 1e-10);
    }

    #[test]
    fn theta_quotient_is_multiplier(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_gamma0_4(&mut r, 50);
        let tau = c64(uniform(&mut r, -0.5, 0.5), uniform(&mut r, 0.8, 1.5));
        let m = nalgebra::Matrix2::new(g[0] as f64, g[1] as f64, g[2] as f64, g[3] as f64);
        let q = theta_weight_quarter(mobius(&m, tau), TOL).unwrap().value / theta_weight_quarter(tau, TOL).unwrap().value;
        let j = theta_multiplier(g, tau).unwrap();
        prop_assert!((q - j).norm() < 1e-10, "{:?}: {} vs {}", g, q, j);
    }

    #[test]
    fn gamma_n_invariance(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let f = random_state(&mut r, n);
        let g = random_state(&mut r, n);
        let p = random_sample(&mut r, n);
        let a: Vec<i64> = (0..n).map(|_| uniform(&mut r, -3.0, 3.0).round() as i64).collect();
        let b: Vec<i64> = (0..n).map(|_| uniform(&mut r, -3.0, 3.0).round() as i64).collect();
        let scale = theta_product(&f, &g, &p, 1e-13).unwrap().norm().max(1.0);
        let lat = check_gamma_invariance(&f, &g, &GammaNGenerator::Lattice(a, b), &p, 1e-13).unwrap();
        prop_assert!(lat / scale < 1e-9, "lattice {lat:e}");
        for gen in [GammaNGenerator::TShift, GammaNGenerator::Sigma] {
            let res = check_gamma_invariance(&f, &g, &gen, &p, 1e-13).unwrap();
            prop_assert!(res / scale < 1e-8, "{gen:?} {res:e}");
        }
    }

    #[test]
    fn rotation_additivity(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let mm = IndexMatrix::identity(1);
        let f = random_state(&mut r, n);
        let (a, b) = (uniform(&mut r, -7.0, 7.0), uniform(&mut r, -7.0, 7.0));
        let i = c64(0.0, 1.0);
        let two = r_tilde_apply(&mm, i, a, &r_tilde_apply(&mm, i, b, &f).unwrap()).unwrap();
        let one = r_tilde_apply(&mm, i, a + b, &f).unwrap();
        prop_assert!(state_residual(&mm, &two, &one, &grid17(1, n)) < 1e-8);
    }
}

#[test]
fn siegel_inversion() {
    for y in [2.0, 3.0, 5.0] {
        let a = siegel_theta(&ComplexSymMatrix::i_times(1, 1.0 / y), TOL).unwrap().value;
        let b = siegel_theta(&ComplexSymMatrix::i_times(1, y), TOL).unwrap().value * f64::sqrt(y);
        assert!((a - b).norm() < 1e-9, "y = {y}");
    }
}

#[test]
fn weight_quarter_translation() {
    let tau = c64(0.3, 0.7);
    let a = theta_weight_quarter(tau, TOL).unwrap().value;
    let b = theta_weight_quarter(tau + 1.0, TOL).unwrap().value;
    assert!((a - b).norm() < 1e-13);
    let g = [1, 0, 4, 1];
    let q = theta_weight_quarter(mobius(&nalgebra::Matrix2::new(1.0, 0.0, 4.0, 1.0), c64(0.0, 1.0)), TOL).unwrap().value
        / theta_weight_quarter(c64(0.0, 1.0), TOL).unwrap().value;
    assert!((q - theta_multiplier(g, c64(0.0, 1.0)).unwrap()).norm() < 1e-10);
}

#[test]
fn theta_sum_reduces_to_siegel_theta() {
    let f = GaussianState::standard(1, 1);
    let c = IwasawaCoords::new(c64(0.0, 1.0), 0.0).unwrap();
    let v = theta_sum_f(&f, &c, &[0.0], &[0.0], 0.0, TOL).unwrap().value;
    assert!((v - c64(1.0864348112133, 0.0)).norm() < 1e-12);
}

#[test]
fn asymptotic_main_term_decays() {
    let f = GaussianState::standard(1, 1);
    let res: Vec<f64> = [4.0, 16.0, 64.0]
        .iter()
        .map(|&y| {
            let p = GnPoint { tau: c64(0.0, y), theta: 0.0, lambda: vec![0.0], mu: vec![0.5] };
            asymptotic_main_term(&f, &f, &p, 1e-60).unwrap().residual
        })
        .collect();
    assert!(res[1] < 1e-6, "{res:?}");
    assert!(res[2] <= res[1] * (16.0f64 / 64.0).powi(3), "{res:?}");
    assert!(res[1] <= res[0] * (4.0f64 / 16.0).powi(3), "{res:?}");
}

#[test]
fn main_term_dominated_by_origin() {
    let f = GaussianState::standard(1, 1);
    let p = GnPoint { tau: c64(0.0, 25.0), theta: 0.0, lambda: vec![0.0], mu: vec![0.0] };
    let t = asymptotic_main_term(&f, &f, &p, 1e-14).unwrap();
    assert!((t.main - c64(5.0, 0.0)).norm() < 1e-12);
}

#[test]
fn jacobi_form_ratio_is_constant() {
    // M = [2]: Omega -> Omega + 1 and integral Heisenberg shifts; M = [1]: sigma and Omega -> Omega + 2.
    let h0 = HeisenbergElement::identity(1, 1);
    let one = RMat::from_element(1, 1, 1.0);
    let zero = RMat::zeros(1, 1);
    let heis = |l: &RMat, m: &RMat| WordElement { word: vec![SpGenerator::T(zero.clone())], other_sheet: false, h: HeisenbergElement::new(l.clone(), m.clone(), zero.clone()).unwrap() };
    let cases = [
        (2.0, WordElement { word: vec![SpGenerator::T(one.clone())], other_sheet: false, h: h0.clone() }),
        (2.0, heis(&one, &zero)),
        (2.0, heis(&zero, &one)),
        (1.0, WordElement { word: vec![SpGenerator::Sigma(1)], other_sheet: false, h: h0.clone() }),
        (1.0, WordElement { word: vec![SpGenerator::T(&one * 2.0)], other_sheet: false, h: h0.clone() }),
        (1.0, heis(&one, &zero)),
        (1.0, heis(&zero, &one)),
    ];
    let mut r = rng(11);
    for (index, elt) in &cases {
        let mm = IndexMatrix::scalar(*index).unwrap();
        let ratios: Vec<Complex64> = (0..50)
            .map(|_| {
                let p = random_point(&mut r, 1, 1);
                jacobi_form_ratio(&mm, elt, &p, TOL).unwrap()
            })
            .collect();
        let spread = ratios.iter().map(|z| (z - ratios[0]).norm()).fold(0.0, f64::max);
        assert!(spread < 1e-9, "M = {index}, {:?} {:?}: spread {spread:e}", elt.word, elt.h);
        assert!((ratios[0].norm() - 1.0).abs() < 1e-9, "{}", ratios[0]);
    }
}

#[test]
fn siegel_multiplier_is_eighth_root() {
    let mut r = rng(5);
    for n in 1..3 {
        let b = int_sym(&mut r, n) * 2.0;
        for word in [vec![SpGenerator::Sigma(n)], vec![SpGenerator::T(b.clone())], vec![SpGenerator::Sigma(n), SpGenerator::T(b.clone())]] {
            let zs: Vec<Complex64> = (0..10).map(|_| siegel_multiplier(&word, &random_omega(&mut r, n), TOL).unwrap()).collect();
            for z in &zs {
                assert!((z.powi(8) - 1.0).norm() < 1e-9, "{word:?}: {z}");
                assert!((z - zs[0]).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn fourier_coefficients_of_theta() {
    let mm = IndexMatrix::scalar(2.0).unwrap();
    let f = |p: &SiegelJacobiPoint| theta_m(&mm, p, 1e-15).unwrap().value;
    let y = RMat::from_element(1, 1, 0.2);
    let v = RMat::from_element(1, 1, 0.05);
    let coeff = |t: f64, rr: f64| {
        fourier_coefficient(f, &RMat::from_element(1, 1, t), &RMat::from_element(1, 1, rr), &y, &v, 32, 1e-9).unwrap().value
    };
    assert!((coeff(1.0, 2.0) - 1.0).norm() < 1e-9);
    assert!((coeff(1.0, -2.0) - 1.0).norm() < 1e-9);
    assert!((coeff(0.0, 0.0) - 1.0).norm() < 1e-9);
    assert!(coeff(1.0, 3.0).norm() < 1e-9);
    assert!((coeff(4.0, 4.0) - 1.0).norm() < 1e-9);
    assert!(coeff(4.0, 8.0).norm() < 1e-9);
    let one = |_: &SiegelJacobiPoint| c64(1.0, 0.0);
    let c00 = fourier_coefficient(one, &RMat::zeros(1, 1), &RMat::zeros(1, 1), &y, &v, 8, 1e-12).unwrap().value;
    let c11 = fourier_coefficient(one, &RMat::from_element(1, 1, 1.0), &RMat::zeros(1, 1), &y, &v, 8, 1e-12).unwrap().value;
    assert!((c00 - 1.0).norm() < 1e-12 && c11.norm() < 1e-12);
}

#[test]
fn fourier_non_convergence_is_reported() {
    let y = RMat::from_element(1, 1, 0.3);
    let v = RMat::zeros(1, 1);
    let f = |p: &SiegelJacobiPoint| (p.omega.matrix()[(0, 0)] * c64(0.0, 6.0 * PI)).exp();
    let out = fourier_coefficient(f, &RMat::from_element(1, 1, 1.0), &RMat::zeros(1, 1), &y, &v, 4, 1e-9);
    assert!(matches!(out, Err(ThetaError::NotConverged(_))));
    let ok = fourier_coefficient(f, &RMat::from_element(1, 1, 3.0), &RMat::zeros(1, 1), &y, &v, 16, 1e-12).unwrap();
    assert!((ok.value - 1.0).norm() < 1e-12);
}

#[test]
fn deterministic_across_thread_counts() {
    let mm = IndexMatrix::new(RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
    let p = random_point(&mut rng(9), 2, 2);
    let eval = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| theta_m(&mm, &p, 1e-13).unwrap().value)
    };
    let a = eval(1);
    for t in [2, 3, 8] {
        let b = eval(t);
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}

#[test]
fn errors() {
    assert!(matches!(siegel_theta(&ComplexSymMatrix::i_times(2, 1e-9), 1e-12), Err(ThetaError::Resource { .. })));
    assert!(theta_weight_quarter(c64(0.0, -1.0), 1e-9).is_err());
    let mm = IndexMatrix::identity(2);
    assert!(theta_m(&mm, &SiegelJacobiPoint::base(1, 1), 1e-9).is_err());
    assert!(theta_m(&mm, &SiegelJacobiPoint::base(1, 2), 0.0).is_err());
    let _ = CMat::zeros(1, 1);
}
