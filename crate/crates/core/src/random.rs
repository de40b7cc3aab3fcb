//! Seeded random samplers for group elements, points and Lagrangians.
//! Used by the property tests, the verification suites and the CLI; every
//! sampler is a pure function of the RNG state, so a seed fixes the output.

use crate::groups::{
    embed_sl2, iwasawa_matrix, word_product, HeisenbergElement, JacobiElement, SiegelJacobiPoint, SpGenerator,
    SymplecticElement,
};
use crate::matrix_core::{c64, CMat, ComplexSymMatrix, RMat};
use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut SuiteRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn random_matrix(rng: &mut SuiteRng, r: usize, c: usize, scale: f64) -> RMat {
    RMat::from_fn(r, c, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_sym(rng: &mut SuiteRng, n: usize, scale: f64) -> RMat {
    let a = random_matrix(rng, n, n, scale);
    (&a + a.transpose()) * 0.5
}

/// Symmetric positive definite with eigenvalues roughly in `[lo, lo + scale^2 n]`.
pub fn random_spd(rng: &mut SuiteRng, n: usize, lo: f64, scale: f64) -> RMat {
    let p = random_matrix(rng, n, n, scale);
    p.transpose() * &p + RMat::identity(n, n) * lo
}

/// Well-conditioned invertible matrix, occasionally with negative determinant.
pub fn random_invertible(rng: &mut SuiteRng, n: usize) -> RMat {
    let mut a = RMat::identity(n, n) + random_matrix(rng, n, n, 0.4);
    if rng.gen_bool(0.3) {
        let row = a.row(0).clone_owned();
        a.set_row(0, &(-row));
    }
    a
}

pub fn random_generator(rng: &mut SuiteRng, n: usize) -> SpGenerator {
    match rng.gen_range(0..3) {
        0 => SpGenerator::T(random_sym(rng, n, 1.0)),
        1 => SpGenerator::G(random_invertible(rng, n)),
        _ => SpGenerator::Sigma(n),
    }
}

pub fn random_word(rng: &mut SuiteRng, n: usize, max_len: usize) -> Vec<SpGenerator> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| random_generator(rng, n)).collect()
}

pub fn random_symplectic(rng: &mut SuiteRng, n: usize, max_len: usize) -> SymplecticElement {
    let w = random_word(rng, n, max_len);
    word_product(&w, n).expect("generator words are symplectic")
}

/// `(lambda, mu; kappa)` with `kappa = S - mu lambda^t`, `S` symmetric.
pub fn random_heis(rng: &mut SuiteRng, m: usize, n: usize, scale: f64) -> HeisenbergElement {
    let lambda = random_matrix(rng, m, n, scale);
    let mu = random_matrix(rng, m, n, scale);
    let s = random_sym(rng, m, scale);
    let kappa = &s - &mu * lambda.transpose();
    HeisenbergElement { lambda, mu, kappa }
}

pub fn random_jacobi(rng: &mut SuiteRng, n: usize, m: usize, max_len: usize) -> JacobiElement {
    let g = random_symplectic(rng, n, max_len);
    let h = random_heis(rng, m, n, 1.0);
    JacobiElement { g, h }
}

pub fn random_omega(rng: &mut SuiteRng, n: usize) -> ComplexSymMatrix {
    let x = random_sym(rng, n, 1.0);
    let y = random_spd(rng, n, 0.5, 0.7);
    ComplexSymMatrix::from_parts(&x, &y).expect("symmetric by construction")
}

pub fn random_point(rng: &mut SuiteRng, n: usize, m: usize) -> SiegelJacobiPoint {
    let omega = random_omega(rng, n);
    let z = CMat::from_fn(m, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    SiegelJacobiPoint::new(omega, z).expect("valid by construction")
}

pub fn random_sl2(rng: &mut SuiteRng) -> Matrix2<f64> {
    let tau = c64(rng.gen_range(-2.0..2.0), rng.gen_range(0.3..3.0));
    let theta = rng.gen_range(0.0..2.0 * PI);
    iwasawa_matrix(tau, theta)
}

pub fn random_sl2_embedded(rng: &mut SuiteRng, n: usize) -> SymplecticElement {
    embed_sl2(&random_sl2(rng), n).expect("det 1")
}

/// Random Lagrangian in `R^{2N}`: a random symplectic word applied to the
/// vertical Lagrangian `{(0, mu)}`.
pub fn random_lagrangian_basis(rng: &mut SuiteRng, big_n: usize) -> RMat {
    let g = random_symplectic(rng, big_n, 6);
    g.matrix() * vertical_basis(big_n)
}

pub fn vertical_basis(big_n: usize) -> RMat {
    let mut b = RMat::zeros(2 * big_n, big_n);
    b.view_mut((big_n, 0), (big_n, big_n)).copy_from(&RMat::identity(big_n, big_n));
    b
}

/// Random element of `Gamma_0(4)` with entries bounded by `bound`.
pub fn random_gamma0_4(rng: &mut SuiteRng, bound: i64) -> [i64; 4] {
    loop {
        let c = 4 * rng.gen_range(-(bound / 4)..=(bound / 4));
        let d = rng.gen_range(-bound..=bound);
        if d % 2 == 0 || gcd(c, d) != 1 {
            continue;
        }
        // solve a d - b c = 1
        let (g, x, y) = ext_gcd(d, c);
        debug_assert_eq!(g.abs(), 1);
        let (mut a, mut b) = (x * g, -y * g);
        // shift (a, b) -> (a + k c, b + k d) to bring entries into range
        if c != 0 {
            let k = (-(a as f64) / c as f64).round() as i64;
            a += k * c;
            b += k * d;
        } else {
            let k = (-(b as f64) / d as f64).round() as i64;
            b += k * d;
            a += k * c;
        }
        if a.abs() <= bound && b.abs() <= bound && a * d - b * c == 1 {
            return [a, b, c, d];
        }
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Returns `(g, x, y)` with `a x + b y = g`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a, 1, 0);
    }
    let (g, x, y) = ext_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}
