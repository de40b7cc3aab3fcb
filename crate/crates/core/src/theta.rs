//! Truncated lattice sums with certified tails: `Theta_M(Omega, Z)`, the
//! Siegel theta series, the weight-1/4 `theta(tau)`, Jacobi theta sums
//! `Theta_f`, and Fourier coefficients by trapezoidal quadrature.
//!
//! Tails: with `lambda = lambda_min(M) lambda_min(Y)` and `c = V Y^{-1}`,
//! every omitted term is bounded by `e^{pi sigma(M V Y^{-1} V^t)} e^{-pi lambda |xi + c|^2}`.
//! A union bound over the `mn` coordinates gives, for `r0 = R + 1 - max|c|`,
//! `tail <= e^{pi sigma(M V Y^{-1} V^t)} mn (1 + lambda^{-1/2})^{mn-1} 2 e^{-pi lambda r0^2} / (1 - e^{-2 pi lambda r0})`.
//!
//! Sums are split into slabs along the first coordinate; each slab is summed
//! in a fixed order and the slab totals are added sequentially, so values do
//! not depend on the number of threads.

use crate::automorphy::{j_half, j_star_m, MetaplecticElement};
use crate::groups::{iwasawa_matrix, iwasawa_sl2, jacobi_act, GroupError, HeisenbergElement, IwasawaCoords, SiegelJacobiPoint};
use crate::matrix_core::{c64, conj, rinverse, to_complex, CMat, ComplexSymMatrix, MatrixError, RMat, RealSymMatrix};
use crate::schrodinger_weil::{r_tilde_apply, GaussianState, IndexMatrix, WeilError, WeilRep, WordElement};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest admissible truncation radius.
pub const RADIUS_CAP: u32 = 10_000;
/// Largest number of lattice points summed in one evaluation.
pub const POINT_CAP: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("tolerance {tol:e} needs radius {radius} (cap {cap})")]
    Resource { tol: f64, radius: u64, cap: u64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: refinements differ by {0:e}")]
    NotConverged(f64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Weil(#[from] WeilError),
    #[error(transparent)]
    Automorphy(#[from] crate::automorphy::AutomorphyError),
}

pub type Result<T> = std::result::Result<T, ThetaError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub radius: u32,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: Complex64,
    pub truncation: Truncation,
}

impl ThetaValue {
    pub fn to_json(&self) -> Value {
        json!({
            "value": crate::encoding::complex_to_json(self.value),
            "radius": self.truncation.radius,
            "tail_bound": self.truncation.tail_bound,
        })
    }
}

/// Quadratic exponent data of `xi -> e^{pi i (vec(xi)^t Q vec(xi) + 2 vec(xi)^t L)}`
/// with `vec` row-major over `m x n`.
struct LatticeForm {
    q: CMat,
    l: Vec<Complex64>,
    dim: usize,
}

impl LatticeForm {
    fn theta(mm: &IndexMatrix, omega: &ComplexSymMatrix, z: &CMat) -> Self {
        let (m, n) = (mm.m(), omega.dim());
        let dim = m * n;
        let mc = mm.matrix();
        let o = omega.matrix();
        // sigma(M xi Omega xi^t) = sum xi_ij xi_kl M_ik Omega_jl
        let q = CMat::from_fn(dim, dim, |a, b| {
            let (i, j, k, l) = (a / n, a % n, b / n, b % n);
            o[(j, l)] * mc[(i, k)]
        });
        // sigma(M xi Z^t) = sum xi_ij (M Z)_ij
        let mz = to_complex(mc) * z;
        let l = (0..dim).map(|a| mz[(a / n, a % n)]).collect();
        Self { q, l, dim }
    }

    fn term(&self, xi: &[i64]) -> Complex64 {
        let mut e = c64(0.0, 0.0);
        for a in 0..self.dim {
            if xi[a] == 0 {
                continue;
            }
            let xa = xi[a] as f64;
            let mut row = c64(0.0, 0.0);
            for b in 0..self.dim {
                if xi[b] != 0 {
                    row += self.q[(a, b)] * xi[b] as f64;
                }
            }
            e += (row + self.l[a] * 2.0) * xa;
        }
        (c64(0.0, PI) * e).exp()
    }
}

/// Sum of `term` over the box `[-r, r]^dim`.
fn box_sum<F>(dim: usize, r: u32, term: F) -> Complex64
where
    F: Fn(&[i64]) -> Complex64 + Sync,
{
    let r = r as i64;
    let slabs: Vec<Complex64> = (-r..=r)
        .into_par_iter()
        .map(|first| {
            let mut xi = vec![-r; dim];
            xi[0] = first;
            if dim == 1 {
                return term(&xi);
            }
            let mut s = c64(0.0, 0.0);
            loop {
                s += term(&xi);
                let mut k = dim - 1;
                loop {
                    if xi[k] < r {
                        xi[k] += 1;
                        break;
                    }
                    xi[k] = -r;
                    k -= 1;
                    if k == 0 {
                        return s;
                    }
                }
            }
        })
        .collect();
    slabs.into_iter().fold(c64(0.0, 0.0), |a, b| a + b)
}

/// Tail bound for the box of radius `r` (see the module documentation).
fn tail_bound(lambda: f64, shift_max: f64, log_scale: f64, dim: usize, r: u32) -> f64 {
    let r0 = r as f64 + 1.0 - shift_max;
    if r0 <= 0.0 {
        return f64::INFINITY;
    }
    let one = (1.0 + 1.0 / lambda.sqrt()).powi(dim as i32 - 1);
    let edge = 2.0 * (-PI * lambda * r0 * r0).exp() / (1.0 - (-2.0 * PI * lambda * r0).exp());
    (log_scale).exp() * dim as f64 * one * edge
}

fn choose_radius(lambda: f64, shift_max: f64, log_scale: f64, dim: usize, tol: f64) -> Result<Truncation> {
    if !(tol > 0.0) {
        return Err(ThetaError::Domain("tolerance must be positive".into()));
    }
    let mut r = shift_max.ceil() as u32;
    loop {
        let t = tail_bound(lambda, shift_max, log_scale, dim, r);
        if t <= tol {
            let points = (2 * r as u64 + 1).saturating_pow(dim as u32);
            if points > POINT_CAP {
                return Err(ThetaError::Resource { tol, radius: r as u64, cap: RADIUS_CAP as u64 });
            }
            return Ok(Truncation { radius: r, tail_bound: t });
        }
        if r >= RADIUS_CAP {
            return Err(ThetaError::Resource { tol, radius: r as u64, cap: RADIUS_CAP as u64 });
        }
        r += 1;
    }
}

/// `lambda`, `max |c|` and `log` of the prefactor for a theta sum at `(Omega, Z)`.
fn tail_data(mm: &IndexMatrix, omega: &ComplexSymMatrix, z: &CMat) -> Result<(f64, f64, f64)> {
    let y = omega.im();
    let ly = RealSymMatrix::new(y.clone())?.min_eigenvalue()?;
    let lm = RealSymMatrix::new(mm.matrix().clone())?.min_eigenvalue()?;
    if ly <= 0.0 {
        return Err(ThetaError::Domain("Im(Omega) must be positive definite".into()));
    }
    let v = crate::matrix_core::im_part(z);
    let yinv = rinverse(&y)?;
    let c = &v * &yinv;
    let shift = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let log_scale = PI * (mm.matrix() * &v * &yinv * v.transpose()).trace();
    Ok((lm * ly, shift, log_scale))
}

fn theta_raw(mm: &IndexMatrix, omega: &ComplexSymMatrix, z: &CMat, tol: f64) -> Result<ThetaValue> {
    if z.nrows() != mm.m() || z.ncols() != omega.dim() {
        return Err(ThetaError::Domain("Z must be m x n".into()));
    }
    let (lambda, shift, log_scale) = tail_data(mm, omega, z)?;
    let dim = mm.m() * omega.dim();
    let truncation = choose_radius(lambda, shift, log_scale, dim, tol)?;
    let form = LatticeForm::theta(mm, omega, z);
    let value = box_sum(dim, truncation.radius, |xi| form.term(xi));
    Ok(ThetaValue { value, truncation })
}

/// `Theta_M(Omega, Z) = sum_{xi in Z^(m,n)} e^{pi i sigma(M(xi Omega xi^t + 2 xi Z^t))}`.
pub fn theta_m(mm: &IndexMatrix, p: &SiegelJacobiPoint, tol: f64) -> Result<ThetaValue> {
    theta_raw(mm, &p.omega, &p.z, tol)
}

/// The box sum of `Theta_M` at a fixed radius, without a tail certificate.
pub fn theta_m_radius(mm: &IndexMatrix, p: &SiegelJacobiPoint, radius: u32) -> Result<Complex64> {
    if p.m() != mm.m() {
        return Err(ThetaError::Domain("point and index differ in m".into()));
    }
    let form = LatticeForm::theta(mm, &p.omega, &p.z);
    Ok(box_sum(mm.m() * p.n(), radius, |xi| form.term(xi)))
}

/// `Theta(Omega) = sum_{A in Z^n} e^{pi i A Omega A^t}`.
pub fn siegel_theta(omega: &ComplexSymMatrix, tol: f64) -> Result<ThetaValue> {
    theta_raw(&IndexMatrix::identity(1), omega, &CMat::zeros(1, omega.dim()), tol)
}

/// `theta(tau) = y^{1/4} sum_n e^{2 pi i n^2 tau}`.
pub fn theta_weight_quarter(tau: Complex64, tol: f64) -> Result<ThetaValue> {
    if !(tau.im > 0.0) {
        return Err(GroupError::NotInUpperHalfSpace.into());
    }
    let q = tau.im.powf(0.25);
    let omega = ComplexSymMatrix::new(CMat::from_element(1, 1, tau * 2.0))?;
    let t = theta_raw(&IndexMatrix::identity(1), &omega, &CMat::zeros(1, 1), tol / q)?;
    Ok(ThetaValue {
        value: t.value * q,
        truncation: Truncation { radius: t.truncation.radius, tail_bound: t.truncation.tail_bound * q },
    })
}

/// Heisenberg part of `omega^1_SW((xi; t))`: `(lambda, mu; t)` acts as `(-mu, lambda; 2t)`.
pub fn heisenberg_of(lambda: &[f64], mu: &[f64], t: f64) -> Result<HeisenbergElement> {
    let n = lambda.len();
    if mu.len() != n {
        return Err(ThetaError::Domain("lambda and mu must have the same length".into()));
    }
    let l = RMat::from_row_slice(1, n, &mu.iter().map(|v| -v).collect::<Vec<_>>());
    let m = RMat::from_row_slice(1, n, lambda);
    Ok(HeisenbergElement::new(l, m, RMat::from_element(1, 1, 2.0 * t))?)
}

/// `omega^1_SW((xi; t)(tau, theta)) f = W((xi; t)) R~(tau, theta) f` as a Gaussian state.
pub fn sw_state(f: &GaussianState, tau: Complex64, theta: f64, lambda: &[f64], mu: &[f64], t: f64) -> Result<GaussianState> {
    let mm = IndexMatrix::identity(1);
    if f.m() != 1 {
        return Err(ThetaError::Domain("theta sums use m = 1".into()));
    }
    let g = r_tilde_apply(&mm, tau, theta, f)?;
    Ok(WeilRep::new(mm).schrodinger(&heisenberg_of(lambda, mu, t)?, &g)?)
}

/// `Theta_f(tau, theta; xi, t) = sum_{alpha in Z^n} [omega^1_SW((xi; t)(tau, theta)) f](alpha)`.
pub fn theta_sum_f(f: &GaussianState, c: &IwasawaCoords, lambda: &[f64], mu: &[f64], t: f64, tol: f64) -> Result<ThetaValue> {
    theta_sum_at(f, c.tau, c.theta, lambda, mu, t, tol)
}

fn theta_sum_at(f: &GaussianState, tau: Complex64, theta: f64, lambda: &[f64], mu: &[f64], t: f64, tol: f64) -> Result<ThetaValue> {
    let g = sw_state(f, tau, theta, lambda, mu, t)?;
    let amp = g.amplitude.norm().max(1e-300);
    let s = theta_raw(&IndexMatrix::identity(1), &g.quad, &g.lin, tol / amp)?;
    Ok(ThetaValue {
        value: s.value * g.amplitude,
        truncation: Truncation { radius: s.truncation.radius, tail_bound: s.truncation.tail_bound * amp },
    })
}

/// A point `((tau, theta), xi)` of `G[n] = SL(2,R) x R^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnPoint {
    pub tau: Complex64,
    pub theta: f64,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Generators of `Gamma[n]`.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaNGenerator {
    /// `(sigma, 0)`.
    Sigma,
    /// `(T, (s, 0))` with `s = (1/2, ..., 1/2)`.
    TShift,
    /// `(I, alpha)`, `alpha = (alpha_lambda, alpha_mu)` integral.
    Lattice(Vec<i64>, Vec<i64>),
}

/// Left action `(M, xi)(M', xi') = (M M', xi + M xi')` on a point.
pub fn gamma_n_act(g: &GammaNGenerator, p: &GnPoint) -> Result<GnPoint> {
    let n = p.lambda.len();
    let (m, shift_l, shift_m): (Matrix2<f64>, Vec<f64>, Vec<f64>) = match g {
        GammaNGenerator::Sigma => (Matrix2::new(0.0, -1.0, 1.0, 0.0), vec![0.0; n], vec![0.0; n]),
        GammaNGenerator::TShift => (Matrix2::new(1.0, 1.0, 0.0, 1.0), vec![0.5; n], vec![0.0; n]),
        GammaNGenerator::Lattice(a, b) => {
            if a.len() != n || b.len() != n {
                return Err(ThetaError::Domain("lattice vector has the wrong length".into()));
            }
            (Matrix2::identity(), a.iter().map(|&v| v as f64).collect(), b.iter().map(|&v| v as f64).collect())
        }
    };
    let point = iwasawa_matrix(p.tau, p.theta);
    let moved = iwasawa_sl2(&(m * point))?;
    // theta' = theta + arg(c tau + d), arg in (-pi, pi]
    let mut step = (moved.theta - p.theta).rem_euclid(2.0 * PI);
    if step > PI {
        step -= 2.0 * PI;
    }
    let theta = p.theta + step;
    let lambda = (0..n).map(|i| shift_l[i] + m[(0, 0)] * p.lambda[i] + m[(0, 1)] * p.mu[i]).collect();
    let mu = (0..n).map(|i| shift_m[i] + m[(1, 0)] * p.lambda[i] + m[(1, 1)] * p.mu[i]).collect();
    Ok(GnPoint { tau: moved.tau, theta, lambda, mu })
}

/// `Theta_f conj(Theta_g)` at a point with `t = 0`.
pub fn theta_product(f: &GaussianState, g: &GaussianState, p: &GnPoint, tol: f64) -> Result<Complex64> {
    let a = theta_sum_at(f, p.tau, p.theta, &p.lambda, &p.mu, 0.0, tol)?;
    let b = theta_sum_at(g, p.tau, p.theta, &p.lambda, &p.mu, 0.0, tol)?;
    Ok(a.value * b.value.conj())
}

/// `|Theta_f conj(Theta_g)(gamma . p) - Theta_f conj(Theta_g)(p)|`.
pub fn check_gamma_invariance(f: &GaussianState, g: &GaussianState, gen: &GammaNGenerator, p: &GnPoint, tol: f64) -> Result<f64> {
    let before = theta_product(f, g, p, tol)?;
    let after = theta_product(f, g, &gamma_n_act(gen, p)?, tol)?;
    Ok((after - before).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainTerm {
    pub main: Complex64,
    pub actual: Complex64,
    pub residual: f64,
}

/// `y^{n/2} sum_alpha f_theta((alpha - mu) y^{1/2}) conj(g_theta((alpha - mu) y^{1/2}))`
/// against `Theta_f conj(Theta_g)` at `(tau, theta; xi)`.
pub fn asymptotic_main_term(f: &GaussianState, g: &GaussianState, p: &GnPoint, tol: f64) -> Result<MainTerm> {
    let mm = IndexMatrix::identity(1);
    let n = f.n();
    let i = c64(0.0, 1.0);
    let ft = r_tilde_apply(&mm, i, p.theta, f)?;
    let gt = r_tilde_apply(&mm, i, p.theta, g)?;
    let y = p.tau.im;
    // f_theta(x) conj(g_theta(x)) is a Gaussian with quad A_f - conj(A_g), lin B_f - conj(B_g)
    let quad = ft.quad.matrix() - conj(gt.quad.matrix());
    let lin = &ft.lin - conj(&gt.lin);
    let mu = CMat::from_fn(1, n, |_, j| c64(p.mu[j], 0.0));
    // x = (alpha - mu) y^{1/2}
    let omega = ComplexSymMatrix::new(&quad * c64(y, 0.0))?;
    let z = &lin * c64(y.sqrt(), 0.0) - &mu * &quad * c64(y, 0.0);
    let constant = (&mu * &quad * mu.transpose())[(0, 0)] * y - (&mu * lin.transpose())[(0, 0)] * (2.0 * y.sqrt());
    let prefactor = ft.amplitude * gt.amplitude.conj() * (c64(0.0, PI) * constant).exp() * y.powf(n as f64 / 2.0);
    let s = theta_raw(&mm, &omega, &z, tol / prefactor.norm().max(1e-300))?;
    let main = prefactor * s.value;
    let actual = theta_product(f, g, p, tol)?;
    Ok(MainTerm { main, actual, residual: (actual - main).norm() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierCoefficient {
    pub value: Complex64,
    /// `|value(N) - value(N/2)|`.
    pub refinement_delta: f64,
}

/// Coefficient `c(T, R)` of `F(Omega, Z) = sum c(T, R) e^{2 pi i sigma(T Omega)} e^{2 pi i sigma(R Z)}`
/// by the `N`-point trapezoidal rule in every real coordinate of `(Re Omega, Re Z)` over `[0, 1]`,
/// at fixed `Im Omega = y`, `Im Z = v`. `T` is `n x n` half-integral, `R` is `n x m`.
pub fn fourier_coefficient<F>(f: F, t: &RMat, r: &RMat, y: &RMat, v: &RMat, quad_points: usize, tol: f64) -> Result<FourierCoefficient>
where
    F: Fn(&SiegelJacobiPoint) -> Complex64 + Sync,
{
    if quad_points < 4 || !quad_points.is_multiple_of(2) {
        return Err(ThetaError::Domain("quad_points must be even and at least 4".into()));
    }
    let fine = trapezoid(&f, t, r, y, v, quad_points)?;
    let coarse = trapezoid(&f, t, r, y, v, quad_points / 2)?;
    let delta = (fine - coarse).norm();
    if delta > tol {
        return Err(ThetaError::NotConverged(delta));
    }
    Ok(FourierCoefficient { value: fine, refinement_delta: delta })
}

fn trapezoid<F>(f: &F, t: &RMat, r: &RMat, y: &RMat, v: &RMat, k: usize) -> Result<Complex64>
where
    F: Fn(&SiegelJacobiPoint) -> Complex64 + Sync,
{
    let n = y.nrows();
    let m = v.nrows();
    if t.shape() != (n, n) || r.shape() != (n, m) || v.ncols() != n {
        return Err(ThetaError::Domain("T must be n x n, R n x m, V m x n".into()));
    }
    let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let dim = upper.len() + m * n;
    let total = (k as u64).saturating_pow(dim as u32);
    if total > POINT_CAP {
        return Err(ThetaError::Resource { tol: 0.0, radius: k as u64, cap: POINT_CAP });
    }
    let h = 1.0 / k as f64;
    let tc = to_complex(t);
    let rc = to_complex(r);
    let sums: Vec<Complex64> = (0..k)
        .into_par_iter()
        .map(|first| -> Result<Complex64> {
            let mut idx = vec![0usize; dim];
            idx[0] = first;
            let mut s = c64(0.0, 0.0);
            loop {
                let mut x = RMat::zeros(n, n);
                for (c, &(i, j)) in upper.iter().enumerate() {
                    x[(i, j)] = idx[c] as f64 * h;
                    x[(j, i)] = x[(i, j)];
                }
                let u = RMat::from_fn(m, n, |i, j| idx[upper.len() + i * n + j] as f64 * h);
                let omega = ComplexSymMatrix::from_parts(&x, y)?;
                let z = CMat::from_fn(m, n, |i, j| c64(u[(i, j)], v[(i, j)]));
                let e = crate::matrix_core::ctrace(&(&tc * omega.matrix())) + crate::matrix_core::ctrace(&(&rc * &z));
                s += f(&SiegelJacobiPoint::new(omega, z)?) * (c64(0.0, -2.0 * PI) * e).exp();
                let mut c = dim - 1;
                loop {
                    if c == 0 {
                        return Ok(s);
                    }
                    if idx[c] + 1 < k {
                        idx[c] += 1;
                        break;
                    }
                    idx[c] = 0;
                    c -= 1;
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sums.into_iter().fold(c64(0.0, 0.0), |a, b| a + b) * h.powi(dim as i32))
}

/// `Theta_M(g~ p) / (J*_M(g~, p) Theta_M(p))`; constant in `p` for elements
/// of the arithmetic group under which `Theta_M` is a Jacobi form.
pub fn jacobi_form_ratio(mm: &IndexMatrix, elt: &WordElement, p: &SiegelJacobiPoint, tol: f64) -> Result<Complex64> {
    let q = jacobi_act(&elt.jacobi()?, p)?;
    let j = j_star_m(mm, &elt.metaplectic()?, p)?;
    Ok(theta_m(mm, &q, tol)?.value / (j * theta_m(mm, p, tol)?.value))
}

/// `Theta(g Omega) / (J_{1/2}(g~, Omega) Theta(Omega))` for a lifted generator word.
pub fn siegel_multiplier(word: &[crate::groups::SpGenerator], omega: &ComplexSymMatrix, tol: f64) -> Result<Complex64> {
    let g = MetaplecticElement::lift_word(word, omega.dim())?;
    let moved = g.g.act(omega)?;
    Ok(siegel_theta(&moved, tol)?.value / (j_half(&g, omega)? * siegel_theta(omega, tol)?.value))
}
