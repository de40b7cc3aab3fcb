use jacobi_core::groups::*;
use jacobi_core::maslov::cocycle_sl2;
use jacobi_core::matrix_core::{c64, to_complex, CMat, ComplexSymMatrix, RMat};
use jacobi_core::random::*;
use jacobi_core::schrodinger_weil::*;
use nalgebra::Matrix2;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn random_index(r: &mut SuiteRng, m: usize) -> IndexMatrix {
    IndexMatrix::new(random_spd(r, m, 0.5, 0.7)).unwrap()
}

fn random_state(r: &mut SuiteRng, n: usize, m: usize) -> GaussianState {
    let p = random_point(r, n, m);
    let c = c64(uniform(r, 0.5, 1.5), uniform(r, -0.5, 0.5));
    GaussianState::new(c, p.omega, p.z).unwrap()
}

fn sigma(mm: &IndexMatrix, x: &CMat) -> Complex64 {
    jacobi_core::matrix_core::ctrace(&(to_complex(mm.matrix()) * x))
}

/// Trapezoidal evaluation of `(1/i)^{1/2} int e^{-2 pi i y x} f(y) dy` for `n = m = 1`, `M = 1`.
fn fourier_quadrature(f: &GaussianState, x: f64) -> Complex64 {
    let mm = IndexMatrix::identity(1);
    let a = f.quad.matrix()[(0, 0)];
    let centre = -f.lin[(0, 0)].im / a.im;
    let half = 14.0 / a.im.sqrt();
    let h = 0.004;
    let k = (half / h).ceil() as i64;
    let mut s = c64(0.0, 0.0);
    for j in -k..=k {
        let y = centre + j as f64 * h;
        s += f.eval(&mm, &RMat::from_element(1, 1, y)) * (c64(0.0, -2.0 * PI * x * y)).exp();
    }
    s * h * Complex64::from_polar(1.0, -PI / 4.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn schrodinger_matches_pointwise(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let rep = WeilRep::new(mm.clone());
        let f = random_state(&mut r, n, m);
        let h = random_heis(&mut r, m, n, 1.0);
        let g = rep.schrodinger(&h, &f).unwrap();
        for x in grid17(m, n) {
            let xc = to_complex(&x);
            let e = to_complex(&h.kappa) + to_complex(&h.mu) * to_complex(&h.lambda).transpose() + xc * to_complex(&h.mu).transpose() * c64(2.0, 0.0);
            let direct = (c64(0.0, PI) * sigma(&mm, &e)).exp() * f.eval(&mm, &(&x + &h.lambda));
            prop_assert!((g.eval(&mm, &x) - direct).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn t_and_g_match_substitution(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let f = random_state(&mut r, n, m);
        let b = random_sym(&mut r, n, 1.0);
        let alpha = random_invertible(&mut r, n);
        let gt = weil_generator_apply(&mm, &SpGenerator::T(b.clone()), &f).unwrap();
        let gg = weil_generator_apply(&mm, &SpGenerator::G(alpha.clone()), &f).unwrap();
        let root = jacobi_core::matrix_core::principal_pow_half(c64(alpha.determinant(), 0.0), m as i32).unwrap();
        for x in grid17(m, n) {
            let xb = to_complex(&(&x * &b * x.transpose()));
            let t_direct = (c64(0.0, PI) * sigma(&mm, &xb)).exp() * f.eval(&mm, &x);
            prop_assert!((gt.eval(&mm, &x) - t_direct).norm() < 1e-12 * t_direct.norm().max(1.0));
            let g_direct = root * f.eval(&mm, &(&x * alpha.transpose()));
            prop_assert!((gg.eval(&mm, &x) - g_direct).norm() < 1e-11 * g_direct.norm().max(1.0));
        }
    }

    #[test]
    fn generators_are_unitary(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let f = random_state(&mut r, n, m);
        let n0 = f.norm_sq(&mm).unwrap();
        for norm in [Normalization::Metaplectic, Normalization::Canonical] {
            let rep = WeilRep::with(mm.clone(), WeilCalibration::COVARIANT, norm);
            let gen = random_generator(&mut r, n);
            let g = rep.generator(&gen, &f).unwrap().0;
            prop_assert!((g.norm_sq(&mm).unwrap() / n0 - 1.0).abs() < 1e-10);
        }
        let h = random_heis(&mut r, m, n, 1.0);
        let g = WeilRep::new(mm.clone()).schrodinger(&h, &f).unwrap();
        prop_assert!((g.norm_sq(&mm).unwrap() / n0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn parity_commutes_with_words(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let rep = WeilRep::new(mm.clone());
        let f = random_state(&mut r, n, m);
        let w = random_word(&mut r, n, 6);
        let a = rep.word(&w, &f.parity()).unwrap().0;
        let b = rep.word(&w, &f).unwrap().0.parity();
        prop_assert!(state_residual(&mm, &a, &b, &grid17(m, n)) < 1e-12);
    }

    #[test]
    fn stone_von_neumann_intertwining(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let rep = WeilRep::new(mm);
        let f = random_state(&mut r, n, m);
        let w = random_word(&mut r, n, 6);
        let h = random_heis(&mut r, m, n, 1.0);
        prop_assert!(intertwining_residual(&rep, &w, &h, &f).unwrap() < 1e-10);
    }

    #[test]
    fn covariance_holds(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let rep = WeilRep::new(mm);
        let elt = WordElement { word: random_word(&mut r, n, 6), other_sheet: uniform(&mut r, 0.0, 1.0) < 0.5, h: random_heis(&mut r, m, n, 1.0) };
        let p = random_point(&mut r, n, m);
        let res = check_covariance(&rep, &elt, &p, &grid17(m, n)).unwrap();
        prop_assert!(res < 1e-9, "residual {res:e}");
    }

    #[test]
    fn sigma_matches_quadrature(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_state(&mut r, 1, 1);
        let g = weil_generator_apply(&IndexMatrix::identity(1), &SpGenerator::Sigma(1), &f).unwrap();
        for x in [-1.3, -0.2, 0.0, 0.7, 1.9] {
            let q = fourier_quadrature(&f, x);
            let v = g.eval(&IndexMatrix::identity(1), &RMat::from_element(1, 1, x));
            prop_assert!((q - v).norm() < 1e-9 * v.norm().max(1.0), "{} vs {}", q, v);
        }
    }

    #[test]
    fn projective_multiplier_is_sl2_cocycle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m1, m2) = (random_sl2(&mut r), random_sl2(&mut r));
        let f = random_state(&mut r, 1, 1);
        let z = projective_multiplier(&IndexMatrix::identity(1), &m1, &m2, &f).unwrap();
        prop_assert!(z.phase_distance(&cocycle_sl2(&m1, &m2, 1)) < 1e-9);
    }

    #[test]
    fn projective_multiplier_general_n(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let (m1, m2) = (random_sl2(&mut r), random_sl2(&mut r));
        let mm = random_index(&mut r, m);
        let f = random_state(&mut r, n, m);
        let z = projective_multiplier(&mm, &m1, &m2, &f).unwrap();
        prop_assert!(z.phase_distance(&cocycle_sl2(&m1, &m2, n * m)) < 1e-9);
    }

    #[test]
    fn r_tilde_additive(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let (t1, t2) = (uniform(&mut r, 0.0, 2.0 * PI), uniform(&mut r, 0.0, 2.0 * PI));
        let mm = IndexMatrix::identity(1);
        let f = random_state(&mut r, n, 1);
        let i = c64(0.0, 1.0);
        let lhs = r_tilde_apply(&mm, i, t1, &r_tilde_apply(&mm, i, t2, &f).unwrap()).unwrap();
        let rhs = r_tilde_apply(&mm, i, t1 + t2, &f).unwrap();
        prop_assert!(state_residual(&mm, &lhs, &rhs, &grid17(1, n)) < 1e-8);
    }

    #[test]
    fn standard_gaussian_is_rotation_eigenvector(theta in 0.0f64..(4.0 * PI), n in 1usize..3) {
        let mm = IndexMatrix::identity(1);
        let f = GaussianState::standard(n, 1);
        let g = r_tilde_apply(&mm, c64(0.0, 1.0), theta, &f).unwrap();
        let expected = f.scaled(Complex64::from_polar(1.0, -(n as f64) * theta / 2.0));
        prop_assert!(state_residual(&mm, &g, &expected, &grid17(1, n)) < 1e-8);
    }

    #[test]
    fn fock_is_a_representation(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let mut r = rng(seed);
        let mm = random_index(&mut r, m);
        let omega = random_omega(&mut r, n);
        let mut exps = vec![0u32; m * n];
        for e in exps.iter_mut() {
            *e = (uniform(&mut r, 0.0, 3.0)) as u32;
        }
        let f = FockState::from_polynomial(FockPolynomial::monomial(m, n, exps, c64(1.0, 0.0)).unwrap());
        let (h1, h2) = (random_heis(&mut r, m, n, 1.0), random_heis(&mut r, m, n, 1.0));
        let lhs = fock_apply(&mm, &omega, &h1, &fock_apply(&mm, &omega, &h2, &f).unwrap()).unwrap();
        let rhs = fock_apply(&mm, &omega, &heis_mul(&h1, &h2).unwrap(), &f).unwrap();
        for _ in 0..5 {
            let z = CMat::from_fn(m, n, |_, _| c64(uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0)));
            let (a, b) = (lhs.eval(&z), rhs.eval(&z));
            prop_assert!((a - b).norm() < 1e-10 * b.norm().max(1.0), "{} vs {}", a, b);
        }
    }
}

#[test]
fn calibration_is_unique_among_candidates() {
    let mut r = rng(2024);
    let mm = IndexMatrix::identity(1);
    let p = random_point(&mut r, 1, 1);
    let grid = grid17(1, 1);
    let elements = [
        WordElement { word: vec![], other_sheet: false, h: random_heis(&mut r, 1, 1, 1.0) },
        WordElement { word: vec![SpGenerator::T(RMat::from_element(1, 1, 0.8))], other_sheet: false, h: HeisenbergElement::identity(1, 1) },
        WordElement { word: vec![SpGenerator::Sigma(1)], other_sheet: false, h: HeisenbergElement::identity(1, 1) },
    ];
    let values = [0.5, 1.0, 2.0];
    for &c_h in &values {
        for &c_t in &values {
            for &c_sigma in &values {
                let calib = WeilCalibration { c_h, c_t, c_sigma };
                let rep = WeilRep::with(mm.clone(), calib, Normalization::Metaplectic);
                let worst = elements.iter().map(|e| check_covariance(&rep, e, &p, &grid).unwrap()).fold(0.0, f64::max);
                if calib == WeilCalibration::COVARIANT {
                    assert!(worst < 1e-12, "covariant calibration residual {worst:e}");
                } else {
                    assert!(worst > 1e-3, "{calib:?} unexpectedly covariant");
                }
            }
        }
    }
}

#[test]
fn sigma_squared_against_minus_identity() {
    let mm = IndexMatrix::identity(1);
    let f = GaussianState::new(c64(0.8, 0.3), ComplexSymMatrix::new(CMat::from_element(1, 1, c64(-0.4, 1.2))).unwrap(), CMat::from_element(1, 1, c64(0.5, 0.2))).unwrap();
    let minus = SpGenerator::G(RMat::from_element(1, 1, -1.0));
    let canonical = WeilRep::with(mm.clone(), WeilCalibration::COVARIANT, Normalization::Canonical);
    let a = canonical.word(&[SpGenerator::Sigma(1), SpGenerator::Sigma(1)], &f).unwrap().0;
    let b = canonical.generator(&minus, &f).unwrap().0;
    let z = phase_ratio(&mm, &a, &b).unwrap();
    let s = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    assert!((z - cocycle_sl2(&s, &s, 1).value()).norm() < 1e-12);
    let meta = WeilRep::new(mm.clone());
    let a = meta.word(&[SpGenerator::Sigma(1), SpGenerator::Sigma(1)], &f).unwrap().0;
    let b = meta.generator(&minus, &f).unwrap().0;
    assert!((phase_ratio(&mm, &a, &b).unwrap() + 1.0).norm() < 1e-12);
}

#[test]
fn word_log_and_trivial_cases() {
    let mm = IndexMatrix::identity(2);
    let mut r = rng(3);
    let f = random_state(&mut r, 2, 2);
    let (g, log) = weil_apply_word(&mm, &[SpGenerator::T(RMat::zeros(2, 2))], &f).unwrap();
    assert_eq!(g, f);
    assert_eq!(log, vec![jacobi_core::maslov::UnitComplex::one()]);
    let g = weil_generator_apply(&mm, &SpGenerator::G(RMat::identity(2, 2)), &f).unwrap();
    assert!(state_residual(&mm, &g, &f, &grid17(2, 2)) < 1e-15);
    let g = schrodinger_apply(&mm, &HeisenbergElement::identity(2, 2), &f).unwrap();
    assert_eq!(g, f);
    assert!(weil_apply_word(&mm, &[], &f).is_err());
    let res = check_covariance(&WeilRep::new(mm.clone()), &WordElement { word: vec![], other_sheet: false, h: HeisenbergElement::identity(2, 2) }, &random_point(&mut r, 2, 2), &grid17(2, 2)).unwrap();
    assert_eq!(res, 0.0);
}

#[test]
fn covariant_map_at_base_point() {
    let mm = IndexMatrix::scalar(1.7).unwrap();
    let f = covariant_map(&mm, &SiegelJacobiPoint::base(1, 1)).unwrap();
    for x in grid17(1, 1) {
        let v = x[(0, 0)];
        assert!((f.eval(&mm, &x) - c64((-PI * 1.7 * v * v).exp(), 0.0)).norm() < 1e-15);
    }
}

#[test]
fn sigma_on_base_gaussian_quadrature() {
    let mm = IndexMatrix::identity(1);
    let rep = WeilRep::new(mm.clone());
    let f = covariant_map(&mm, &SiegelJacobiPoint::base(1, 1)).unwrap();
    let elt = WordElement { word: vec![SpGenerator::Sigma(1)], other_sheet: false, h: HeisenbergElement::identity(1, 1) };
    assert!(check_covariance(&rep, &elt, &SiegelJacobiPoint::base(1, 1), &grid17(1, 1)).unwrap() < 1e-9);
    let g = rep.generator(&SpGenerator::Sigma(1), &f).unwrap().0;
    for x in grid17(1, 1) {
        assert!((fourier_quadrature(&f, x[(0, 0)]) - g.eval(&mm, &x)).norm() < 1e-9);
    }
}

#[test]
fn gaussian_json_round_trip() {
    let mut r = rng(9);
    let f = random_state(&mut r, 2, 1);
    let back = GaussianState::from_json(&f.to_json(), "state").unwrap();
    assert_eq!(back, f);
    assert!(GaussianState::from_json(&serde_json::json!({"c": [1, 0]}), "state").is_err());
}
