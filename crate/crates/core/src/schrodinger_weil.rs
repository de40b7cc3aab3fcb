//! Schrödinger and Weil operators on the Gaussian family
//! `f(x) = c exp(pi i sigma(M(x A x^t + 2 x B^t)))`, `x` real `m x n`.
//!
//! Every operator maps the family to itself, so the module works on the
//! parameters `(c, A, B)` in closed form; [`GaussianState::eval`] gives the
//! pointwise values used by the tests.
//!
//! The literal kernels `e^{2 pi i sigma(M x b x^t)}` for `t(b)` and
//! `e^{-4 pi i sigma(M y x^t)}` for `sigma_n` are not compatible with the
//! `e^{pi i ...}` normalization of the covariant map. [`WeilCalibration`]
//! scales the three exponents (Schrödinger, `t(b)`, `sigma_n`); the value
//! [`WeilCalibration::COVARIANT`] = (1/2, 1/2, 1/2) is the only one among
//! the tested candidates for which the covariance identity holds.

use crate::automorphy::{j_star_m, MetaplecticElement, MetaplecticJacobi};
use crate::encoding::{self, DecodeError};
use crate::groups::{conjugate_heis, jacobi_act, word_product, GroupError, HeisenbergElement, JacobiElement, SiegelJacobiPoint, SpGenerator};
use crate::maslov::UnitComplex;
use crate::matrix_core::{
    c64, cinverse, ctrace, holo_sqrt_det, im_part, principal_pow_half, rinverse, to_complex, CMat, ComplexSymMatrix,
    MatrixError, RMat, RealSymMatrix,
};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Default total-degree cap for [`FockPolynomial`].
pub const FOCK_DEGREE_CAP: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeilError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("polynomial degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Automorphy(#[from] crate::automorphy::AutomorphyError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

pub type Result<T> = std::result::Result<T, WeilError>;

/// Positive definite symmetric index `M` (`m x m`).
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMatrix(RealSymMatrix);

impl IndexMatrix {
    pub fn new(m: RMat) -> Result<Self> {
        let s = RealSymMatrix::new(m)?;
        if !crate::matrix_core::is_positive_definite(&s) {
            return Err(WeilError::Domain("index matrix must be positive definite".into()));
        }
        Ok(Self(s))
    }

    pub fn identity(m: usize) -> Self {
        Self(RealSymMatrix::identity(m))
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Self::new(RMat::from_element(1, 1, v))
    }

    pub fn m(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &RMat {
        self.0.matrix()
    }

    /// Central character `e^{2 pi i sigma(M kappa)}`.
    pub fn central_character(&self, kappa: &RMat) -> Complex64 {
        (c64(0.0, 2.0 * PI) * (self.matrix() * kappa).trace()).exp()
    }

    pub fn to_json(&self) -> Value {
        encoding::rmat_to_json(self.matrix())
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        Self::new(encoding::json_to_rmat(v, path)?)
    }
}

/// Exponent scales: Schrödinger `e^{2 pi i c_h sigma(...)}`, `t(b)`
/// `e^{2 pi i c_t sigma(M x b x^t)}`, `sigma_n` kernel `e^{-4 pi i c_sigma sigma(M y x^t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeilCalibration {
    pub c_h: f64,
    pub c_t: f64,
    pub c_sigma: f64,
}

impl WeilCalibration {
    /// The calibration under which the covariance identity holds.
    pub const COVARIANT: Self = Self { c_h: 0.5, c_t: 0.5, c_sigma: 0.5 };
    /// Kernels taken verbatim.
    pub const LITERAL: Self = Self { c_h: 1.0, c_t: 1.0, c_sigma: 1.0 };
}

/// Phase convention for the generator operators. `Metaplectic` carries
/// `e^{-i pi mn/4}` on `sigma_n` and the principal `(det alpha)^{m/2}` on
/// `g(alpha)`, realizing the cover `G_*`; `Canonical` drops both phases and
/// agrees with [`sl2_apply`] on embedded `SL(2,R)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Metaplectic,
    Canonical,
}

/// `c exp(pi i sigma(M(x A x^t + 2 x B^t)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub amplitude: Complex64,
    pub quad: ComplexSymMatrix,
    pub lin: CMat,
}

impl GaussianState {
    pub fn new(amplitude: Complex64, quad: ComplexSymMatrix, lin: CMat) -> Result<Self> {
        if lin.ncols() != quad.dim() {
            return Err(WeilError::Dimension(format!("B is {}x{}, A is {}x{}", lin.nrows(), lin.ncols(), quad.dim(), quad.dim())));
        }
        let y = RealSymMatrix::new(quad.im())?;
        if !crate::matrix_core::is_positive_definite(&y) {
            return Err(WeilError::Domain("Im(A) must be positive definite".into()));
        }
        Ok(Self { amplitude, quad, lin })
    }

    /// `e^{-pi sigma(M x x^t)}`.
    pub fn standard(n: usize, m: usize) -> Self {
        Self { amplitude: c64(1.0, 0.0), quad: ComplexSymMatrix::i_times(n, 1.0), lin: CMat::zeros(m, n) }
    }

    pub fn n(&self) -> usize {
        self.quad.dim()
    }

    pub fn m(&self) -> usize {
        self.lin.nrows()
    }

    pub fn eval(&self, mm: &IndexMatrix, x: &RMat) -> Complex64 {
        let xc = to_complex(x);
        let e = &xc * self.quad.matrix() * xc.transpose() + (&xc * self.lin.transpose()) * c64(2.0, 0.0);
        self.amplitude * (c64(0.0, PI) * ctrace(&(to_complex(mm.matrix()) * e))).exp()
    }

    /// `||f||^2 = |c|^2 2^{-mn/2} det(M)^{-n/2} det(Y)^{-m/2} e^{2 pi sigma(M V Y^{-1} V^t)}`.
    pub fn norm_sq(&self, mm: &IndexMatrix) -> Result<f64> {
        let (n, m) = (self.n() as f64, self.m() as f64);
        let y = self.quad.im();
        let v = im_part(&self.lin);
        let s = (mm.matrix() * &v * rinverse(&y)? * v.transpose()).trace();
        Ok(self.amplitude.norm_sqr()
            * 2f64.powf(-m * n / 2.0)
            * mm.matrix().determinant().powf(-n / 2.0)
            * y.determinant().powf(-m / 2.0)
            * (2.0 * PI * s).exp())
    }

    /// `x -> f(-x)`.
    pub fn parity(&self) -> Self {
        Self { lin: -&self.lin, ..self.clone() }
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        Self { amplitude: self.amplitude * z, ..self.clone() }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "c": encoding::complex_to_json(self.amplitude),
            "A": encoding::cmat_to_json(self.quad.matrix()),
            "B": encoding::cmat_to_json(&self.lin),
        })
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| DecodeError::new(&format!("{path}.{k}"), "missing field"));
        let c = encoding::json_to_complex(field("c")?, &format!("{path}.c"))?;
        let a = encoding::json_to_cmat(field("A")?, &format!("{path}.A"))?;
        let b = encoding::json_to_cmat(field("B")?, &format!("{path}.B"))?;
        Self::new(c, ComplexSymMatrix::new(a)?, b)
    }
}

fn sigma_m(mm: &IndexMatrix, x: &CMat) -> Complex64 {
    ctrace(&(to_complex(mm.matrix()) * x))
}

fn symmetrize(a: CMat) -> Result<ComplexSymMatrix> {
    let s = (&a + a.transpose()) * c64(0.5, 0.0);
    Ok(ComplexSymMatrix::new(s)?)
}

/// Schrödinger, Weil and Schrödinger-Weil operators for one index and calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct WeilRep {
    pub index: IndexMatrix,
    pub calib: WeilCalibration,
    pub norm: Normalization,
}

impl WeilRep {
    /// Covariant calibration, metaplectic normalization.
    pub fn new(index: IndexMatrix) -> Self {
        Self { index, calib: WeilCalibration::COVARIANT, norm: Normalization::Metaplectic }
    }

    pub fn with(index: IndexMatrix, calib: WeilCalibration, norm: Normalization) -> Self {
        Self { index, calib, norm }
    }

    fn check(&self, f: &GaussianState, n: usize) -> Result<()> {
        if f.m() != self.index.m() || f.n() != n {
            return Err(WeilError::Dimension(format!(
                "state on R^({},{}) with index of size {} and operator for n = {n}",
                f.m(),
                f.n(),
                self.index.m()
            )));
        }
        Ok(())
    }

    /// `W(h) f(x) = e^{2 pi i c_h sigma(M(kappa + mu lambda^t + 2 x mu^t))} f(x + lambda)`.
    pub fn schrodinger(&self, h: &HeisenbergElement, f: &GaussianState) -> Result<GaussianState> {
        self.check(f, h.n())?;
        if h.m() != f.m() {
            return Err(WeilError::Dimension("Heisenberg element and state differ in m".into()));
        }
        let ch = self.calib.c_h;
        let (l, mu) = (to_complex(&h.lambda), to_complex(&h.mu));
        let a = f.quad.matrix();
        let lin = &f.lin + &l * a + &mu * c64(2.0 * ch, 0.0);
        let shift = &l * a * l.transpose() + (&l * f.lin.transpose()) * c64(2.0, 0.0);
        let central = to_complex(&h.kappa) + &mu * l.transpose();
        let phase = c64(0.0, PI) * sigma_m(&self.index, &shift) + c64(0.0, 2.0 * PI * ch) * sigma_m(&self.index, &central);
        Ok(GaussianState { amplitude: f.amplitude * phase.exp(), quad: f.quad.clone(), lin })
    }

    /// One generator; returns the image and the phase of the constant prefactor.
    pub fn generator(&self, gen: &SpGenerator, f: &GaussianState) -> Result<(GaussianState, UnitComplex)> {
        self.check(f, gen.n())?;
        let m = f.m() as i32;
        let (n_f, m_f) = (f.n() as f64, f.m() as f64);
        match gen {
            SpGenerator::T(b) => {
                let quad = symmetrize(f.quad.matrix() + to_complex(b) * c64(2.0 * self.calib.c_t, 0.0))?;
                Ok((GaussianState { quad, ..f.clone() }, UnitComplex::one()))
            }
            SpGenerator::G(alpha) => {
                crate::groups::sp_generator(gen)?;
                let ac = to_complex(alpha);
                let quad = symmetrize(ac.transpose() * f.quad.matrix() * &ac)?;
                let lin = &f.lin * &ac;
                let det = alpha.determinant();
                let factor = match self.norm {
                    Normalization::Metaplectic => principal_pow_half(c64(det, 0.0), m)?,
                    Normalization::Canonical => c64(det.abs().powf(m_f / 2.0), 0.0),
                };
                Ok((GaussianState { amplitude: f.amplitude * factor, quad, lin }, unit_phase(factor)))
            }
            SpGenerator::Sigma(_) => {
                let s = self.calib.c_sigma;
                let a = f.quad.matrix();
                let ainv = cinverse(a)?;
                let quad = symmetrize(&ainv * c64(-4.0 * s * s, 0.0))?;
                let lin = &f.lin * &ainv * c64(2.0 * s, 0.0);
                let root = holo_sqrt_det(&ComplexSymMatrix::new(a * c64(0.0, -1.0))?)?;
                let expo = c64(0.0, -PI) * sigma_m(&self.index, &(&f.lin * &ainv * f.lin.transpose()));
                let phase = match self.norm {
                    Normalization::Metaplectic => Complex64::from_polar(1.0, -PI * m_f * n_f / 4.0),
                    Normalization::Canonical => c64(1.0, 0.0),
                };
                let factor = phase * (2.0 * s).powf(m_f * n_f / 2.0) * root.powi(-m) * expo.exp();
                Ok((GaussianState { amplitude: f.amplitude * factor, quad, lin }, unit_phase(factor)))
            }
        }
    }

    /// Applies the word left to right: the last generator acts first, so
    /// the result is `R(w_1) ... R(w_k) f`. The log lists the prefactor
    /// phases in application order.
    pub fn word(&self, word: &[SpGenerator], f: &GaussianState) -> Result<(GaussianState, Vec<UnitComplex>)> {
        if word.is_empty() {
            return Err(WeilError::Domain("empty generator word".into()));
        }
        let mut state = f.clone();
        let mut log = Vec::with_capacity(word.len());
        for gen in word.iter().rev() {
            let (next, ph) = self.generator(gen, &state)?;
            state = next;
            log.push(ph);
        }
        Ok((state, log))
    }

    /// `omega((g, h)) f = R(word) W(h) f`. On the other sheet of the cover the
/// operator changes by `(-1)^m`.
    pub fn schrodinger_weil(&self, elt: &WordElement, f: &GaussianState) -> Result<GaussianState> {
        let wf = self.schrodinger(&elt.h, f)?;
        let out = if elt.word.is_empty() { wf } else { self.word(&elt.word, &wf)?.0 };
        let flip = if elt.other_sheet && self.index.m() % 2 == 1 { -1.0 } else { 1.0 };
        Ok(out.scaled(c64(flip, 0.0)))
    }
}

fn unit_phase(z: Complex64) -> UnitComplex {
    UnitComplex::from_phase(z.arg())
}

pub fn schrodinger_apply(mm: &IndexMatrix, h: &HeisenbergElement, f: &GaussianState) -> Result<GaussianState> {
    WeilRep::new(mm.clone()).schrodinger(h, f)
}

pub fn weil_generator_apply(mm: &IndexMatrix, gen: &SpGenerator, f: &GaussianState) -> Result<GaussianState> {
    Ok(WeilRep::new(mm.clone()).generator(gen, f)?.0)
}

pub fn weil_apply_word(mm: &IndexMatrix, word: &[SpGenerator], f: &GaussianState) -> Result<(GaussianState, Vec<UnitComplex>)> {
    WeilRep::new(mm.clone()).word(word, f)
}

/// Canonical `R(M)` for `M` in `SL(2,R)` embedded in `Sp(n,R)`, covariant calibration:
/// `A -> (aA + b)(cA + d)^{-1}`, `B -> B (cA + d)^{-1}`, amplitude times
/// `e^{-pi i c sigma(M B (cA+d)^{-1} B^t)}` and `det^{1/2}(-i sgn(c)(cA + d))^{-m}`
/// (`|d|^{-mn/2}` when `c = 0`).
pub fn sl2_apply(mm: &IndexMatrix, g: &Matrix2<f64>, f: &GaussianState) -> Result<GaussianState> {
    if (g.determinant() - 1.0).abs() > 1e-10 {
        return Err(GroupError::BadDeterminant { det: g.determinant() }.into());
    }
    if f.m() != mm.m() {
        return Err(WeilError::Dimension("state and index differ in m".into()));
    }
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let n = f.n();
    let id = CMat::identity(n, n);
    let am = f.quad.matrix();
    let j = am * c64(c, 0.0) + &id * c64(d, 0.0);
    let jinv = cinverse(&j)?;
    let quad = symmetrize((am * c64(a, 0.0) + &id * c64(b, 0.0)) * &jinv)?;
    let lin = &f.lin * &jinv;
    let expo = c64(0.0, -PI * c) * sigma_m(mm, &(&f.lin * &jinv * f.lin.transpose()));
    let m = f.m() as i32;
    let amp = if c == 0.0 {
        c64(d.abs().powf(-(m as f64) * n as f64 / 2.0), 0.0)
    } else {
        let s = if c > 0.0 { c64(0.0, -1.0) } else { c64(0.0, 1.0) };
        holo_sqrt_det(&symmetrize(j * s)?)?.powi(-m)
    };
    Ok(GaussianState { amplitude: f.amplitude * amp * expo.exp(), quad, lin })
}

/// Bruhat word for `M`: `[t(ab), g(a)]` when `c = 0`, otherwise
/// `[t(a/c), sigma, t(cd), g(c)]`, all scalar multiples of `I_n`.
pub fn sl2_word(g: &Matrix2<f64>, n: usize) -> Vec<SpGenerator> {
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let i = RMat::identity(n, n);
    if c == 0.0 {
        vec![SpGenerator::T(&i * (a * b)), SpGenerator::G(&i * a)]
    } else {
        vec![SpGenerator::T(&i * (a / c)), SpGenerator::Sigma(n), SpGenerator::T(&i * (c * d)), SpGenerator::G(&i * c)]
    }
}

/// `sigma_theta`: `2 nu` at `theta = nu pi`, `2 nu + 1` strictly between.
pub fn sigma_theta(theta: f64) -> i64 {
    let q = theta / PI;
    let nu = q.floor();
    if q == nu {
        2 * nu as i64
    } else {
        2 * nu as i64 + 1
    }
}

/// `R~(tau, theta) = e^{-i pi n sigma_theta / 4} R(n(x) a(y) k(theta))`, `theta` not reduced.
pub fn r_tilde_apply(mm: &IndexMatrix, tau: Complex64, theta: f64, f: &GaussianState) -> Result<GaussianState> {
    let g = crate::groups::iwasawa_matrix(tau, theta);
    let phase = Complex64::from_polar(1.0, -PI * f.n() as f64 * sigma_theta(theta) as f64 / 4.0);
    Ok(sl2_apply(mm, &g, f)?.scaled(phase))
}

/// The multiplier `c` with `R(M1 M2) f = c R(M1) R(M2) f`.
pub fn projective_multiplier(mm: &IndexMatrix, m1: &Matrix2<f64>, m2: &Matrix2<f64>, f: &GaussianState) -> Result<UnitComplex> {
    let lhs = sl2_apply(mm, m1, &sl2_apply(mm, m2, f)?)?;
    let rhs = sl2_apply(mm, &(m1 * m2), f)?;
    Ok(UnitComplex::from_phase(phase_ratio(mm, &rhs, &lhs)?.arg()))
}

/// The 17 sample points in `R^(m,n)`: entry `d = i n + j` of point `k` is
/// `3 frac((k + 1/2) sqrt(p_d)) - 3/2` with `p_d` the `d`-th prime.
pub fn grid17(m: usize, n: usize) -> Vec<RMat> {
    const PRIMES: [f64; 16] = [2., 3., 5., 7., 11., 13., 17., 19., 23., 29., 31., 37., 41., 43., 47., 53.];
    (0..17)
        .map(|k| {
            RMat::from_fn(m, n, |i, j| {
                let t = (k as f64 + 0.5) * PRIMES[(i * n + j) % PRIMES.len()].sqrt();
                3.0 * t.fract() - 1.5
            })
        })
        .collect()
}

/// `max_x |f(x) - g(x)| / max(1, max_x |g(x)|)` over the grid.
pub fn state_residual(mm: &IndexMatrix, f: &GaussianState, g: &GaussianState, grid: &[RMat]) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for x in grid {
        let (a, b) = (f.eval(mm, x), g.eval(mm, x));
        diff = diff.max((a - b).norm());
        scale = scale.max(b.norm());
    }
    diff / scale
}

/// `<f, g> / <g, g>`-style ratio estimated on the standard grid: the unit
/// phase `z` with `f ~ z g`, or an error when the states are not proportional.
pub fn phase_ratio(mm: &IndexMatrix, f: &GaussianState, g: &GaussianState) -> Result<Complex64> {
    let grid = grid17(f.m(), f.n());
    let (mut num, mut den) = (c64(0.0, 0.0), 0.0);
    for x in &grid {
        let (a, b) = (f.eval(mm, x), g.eval(mm, x));
        num += a * b.conj();
        den += b.norm_sqr();
    }
    let z = num / den;
    if state_residual(mm, f, &g.scaled(z), &grid) > 1e-7 {
        return Err(WeilError::Domain("states are not proportional".into()));
    }
    Ok(z)
}

/// `F_{Omega, Z}(x) = e^{pi i sigma(M(x Omega x^t + 2 x Z^t))}`.
pub fn covariant_map(mm: &IndexMatrix, p: &SiegelJacobiPoint) -> Result<GaussianState> {
    if p.m() != mm.m() {
        return Err(WeilError::Dimension("point and index differ in m".into()));
    }
    GaussianState::new(c64(1.0, 0.0), p.omega.clone(), p.z.clone())
}

/// Element of `G^J_*` given by a generator word for the symplectic part,
/// the sheet of the cover and a Heisenberg part; `omega = R(word) W(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordElement {
    pub word: Vec<SpGenerator>,
    pub other_sheet: bool,
    pub h: HeisenbergElement,
}

impl WordElement {
    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn metaplectic(&self) -> Result<MetaplecticJacobi> {
        let mut g = MetaplecticElement::lift_word(&self.word, self.n())?;
        if self.other_sheet {
            g.eps = UnitComplex::from_phase(g.eps.arg() + PI);
        }
        Ok(MetaplecticJacobi { g, h: self.h.clone() })
    }

    pub fn jacobi(&self) -> Result<JacobiElement> {
        Ok(JacobiElement::new(word_product(&self.word, self.n())?, self.h.clone())?)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "word": self.word.iter().map(SpGenerator::to_json).collect::<Vec<_>>(),
            "other_sheet": self.other_sheet,
            "h": self.h.to_json(),
        })
    }
}

/// Residual of `omega(g~) F_p = J*_M(g~, p)^{-1} F_{g~ p}` on the grid.
pub fn check_covariance(rep: &WeilRep, elt: &WordElement, p: &SiegelJacobiPoint, grid: &[RMat]) -> Result<f64> {
    let f = covariant_map(&rep.index, p)?;
    let lhs = rep.schrodinger_weil(elt, &f)?;
    let q = jacobi_act(&elt.jacobi()?, p)?;
    let j = j_star_m(&rep.index, &elt.metaplectic()?, p)?;
    let rhs = covariant_map(&rep.index, &q)?.scaled(j.inv());
    Ok(state_residual(&rep.index, &lhs, &rhs, grid))
}

/// Residual of `R(word) W(h) = W(h g^{-1}) R(word)` applied to `f`.
pub fn intertwining_residual(rep: &WeilRep, word: &[SpGenerator], h: &HeisenbergElement, f: &GaussianState) -> Result<f64> {
    let g = word_product(word, h.n())?;
    let lhs = rep.word(word, &rep.schrodinger(h, f)?)?.0;
    let rhs = rep.schrodinger(&conjugate_heis(&g, h), &rep.word(word, f)?.0)?;
    Ok(state_residual(&rep.index, &lhs, &rhs, &grid17(f.m(), f.n())))
}

/// Polynomial in the entries of `Z` in `C^(m,n)`; exponent vectors are
/// indexed row-major (`i n + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct FockPolynomial {
    m: usize,
    n: usize,
    cap: u32,
    coeffs: BTreeMap<Vec<u32>, Complex64>,
}

impl FockPolynomial {
    pub fn one(m: usize, n: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0; m * n], c64(1.0, 0.0));
        Self { m, n, cap: FOCK_DEGREE_CAP, coeffs }
    }

    pub fn monomial(m: usize, n: usize, exps: Vec<u32>, coeff: Complex64) -> Result<Self> {
        if exps.len() != m * n {
            return Err(WeilError::Dimension(format!("exponent vector of length {} for C^({m},{n})", exps.len())));
        }
        let degree: u32 = exps.iter().sum();
        if degree > FOCK_DEGREE_CAP {
            return Err(WeilError::DegreeCap { degree, cap: FOCK_DEGREE_CAP });
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(exps, coeff);
        Ok(Self { m, n, cap: FOCK_DEGREE_CAP, coeffs })
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.m, self.n) != (other.m, other.n) {
            return Err(WeilError::Dimension("polynomials in different variables".into()));
        }
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            *out.coeffs.entry(e.clone()).or_insert(c64(0.0, 0.0)) += c;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if (self.m, self.n) != (other.m, other.n) {
            return Err(WeilError::Dimension("polynomials in different variables".into()));
        }
        let degree = self.degree() + other.degree();
        if degree > self.cap {
            return Err(WeilError::DegreeCap { degree, cap: self.cap });
        }
        let mut coeffs = BTreeMap::new();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *coeffs.entry(e).or_insert(c64(0.0, 0.0)) += c1 * c2;
            }
        }
        Ok(Self { coeffs, ..self.clone() })
    }

    pub fn eval(&self, z: &CMat) -> Complex64 {
        let vars: Vec<Complex64> = (0..self.m * self.n).map(|k| z[(k / self.n, k % self.n)]).collect();
        self.coeffs
            .iter()
            .map(|(e, c)| c * e.iter().zip(&vars).map(|(&k, v)| v.powu(k)).product::<Complex64>())
            .sum()
    }

    /// `P(Z - s)` by binomial expansion.
    pub fn shift(&self, s: &CMat) -> Self {
        let vars: Vec<Complex64> = (0..self.m * self.n).map(|k| s[(k / self.n, k % self.n)]).collect();
        let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (e, c) in &self.coeffs {
            let mut terms: Vec<(Vec<u32>, Complex64)> = vec![(Vec::new(), *c)];
            for (k, &ek) in e.iter().enumerate() {
                let mut next = Vec::new();
                for (pre, pc) in &terms {
                    for j in 0..=ek {
                        let coef = binomial(ek, j) * (-vars[k]).powu(ek - j);
                        let mut ex = pre.clone();
                        ex.push(j);
                        next.push((ex, pc * coef));
                    }
                }
                terms = next;
            }
            for (ex, v) in terms {
                *out.entry(ex).or_insert(c64(0.0, 0.0)) += v;
            }
        }
        Self { coeffs: out, ..self.clone() }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `amp e^{2 pi i sum_ij L_ij Z_ij} P(Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub amp: Complex64,
    pub lin: CMat,
    pub poly: FockPolynomial,
}

impl FockState {
    pub fn from_polynomial(poly: FockPolynomial) -> Self {
        Self { amp: c64(1.0, 0.0), lin: CMat::zeros(poly.m, poly.n), poly }
    }

    pub fn eval(&self, z: &CMat) -> Complex64 {
        let e = self.lin.component_mul(z).sum();
        self.amp * (c64(0.0, 2.0 * PI) * e).exp() * self.poly.eval(z)
    }
}

/// `(U(h) f)(Z) = J_M(h^{-1}, (Omega, Z))^{-1} f(Z - lambda Omega - mu)`, i.e.
/// `e^{2 pi i sigma(M(lambda Omega lambda^t - 2 lambda Z^t - kappa + lambda mu^t))} f(Z - lambda Omega - mu)`.
pub fn fock_apply(mm: &IndexMatrix, omega: &ComplexSymMatrix, h: &HeisenbergElement, f: &FockState) -> Result<FockState> {
    if h.m() != mm.m() || h.n() != omega.dim() || f.lin.shape() != (h.m(), h.n()) {
        return Err(WeilError::Dimension("index, Omega, element and state dimensions differ".into()));
    }
    let (l, mu) = (to_complex(&h.lambda), to_complex(&h.mu));
    let mc = to_complex(mm.matrix());
    let s = &l * omega.matrix() + &mu;
    let lin = &f.lin - &mc * &l * c64(2.0, 0.0);
    let constant = &l * omega.matrix() * l.transpose() - to_complex(&h.kappa) + &l * mu.transpose();
    let expo = c64(0.0, 2.0 * PI) * (sigma_m(mm, &constant) - f.lin.component_mul(&s).sum());
    Ok(FockState { amp: f.amp * expo.exp(), lin, poly: f.poly.shift(&s) })
}
