//! The symplectic group `Sp(n,R)`, the Heisenberg group `H_R^(n,m)`, the
//! Jacobi group `G^J = Sp(n,R) x H_R^(n,m)`, their actions on the Siegel
//! upper half space `H_n` and on `H_{n,m} = H_n x C^(m,n)`, and the SL(2)
//! Iwasawa coordinates.
//!
//! Conventions:
//! * `J_n = [[0, I], [-I, 0]]`, `g = [[A, B], [C, D]]`, `g.Omega = (A Omega + B)(C Omega + D)^{-1}`.
//! * Heisenberg law `(l,m;k)(l',m';k') = (l+l', m+m'; k+k'+l m'^t - m l'^t)`.
//! * Jacobi law `(g,h)(g',h') = (gg', (l~+l', m~+m'; k+k'+l~ m'^t - m~ l'^t))` with
//!   `(l~, m~) = (l, m) g'`.
//! * `(g,h).(Omega,Z) = (g.Omega, (Z + l Omega + m)(C Omega + D)^{-1})`.

use crate::encoding::{self, DecodeError};
use crate::matrix_core::{
    block2, c64, cinverse, im_part, is_positive_definite, rinverse, to_complex, CMat, ComplexSymMatrix,
    MatrixError, RMat, RealSymMatrix,
};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::f64::consts::PI;
use thiserror::Error;

pub const SYMPLECTIC_TOL: f64 = 1e-10;
pub const DET_TOL: f64 = 1e-8;
pub const HEIS_SYM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("not symplectic: residual {residual:e}")]
    NotSymplectic { residual: f64 },
    #[error("determinant {det} is not 1")]
    BadDeterminant { det: f64 },
    #[error("kappa + mu lambda^t is not symmetric (defect {defect:e})")]
    HeisenbergAsymmetric { defect: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Im(Omega) is not positive definite")]
    NotInUpperHalfSpace,
    #[error("invalid generator parameter: {0}")]
    BadGenerator(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

pub type Result<T> = std::result::Result<T, GroupError>;

/// `J_n = [[0, I_n], [-I_n, 0]]`.
pub fn j_matrix(n: usize) -> RMat {
    let z = RMat::zeros(n, n);
    let i = RMat::identity(n, n);
    block2(&z, &i, &(-&i), &z)
}

/// Tolerances scale with the squared entry size so long generator words
/// with moderately large entries do not trip on round-off.
fn scale2(g: &RMat) -> f64 {
    let m = g.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    m * m
}

/// Element of `Sp(n,R)`; blocks are views, not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticElement {
    g: RMat,
}

impl SymplecticElement {
    pub fn new(g: RMat) -> Result<Self> {
        let (r, c) = g.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(GroupError::Dimension(format!("symplectic matrix must be 2n x 2n, got {r}x{c}")));
        }
        let n = r / 2;
        let j = j_matrix(n);
        let residual = crate::matrix_core::rmax_abs_diff(&(g.transpose() * &j * &g), &j);
        let s = scale2(&g);
        if residual > SYMPLECTIC_TOL * s {
            return Err(GroupError::NotSymplectic { residual });
        }
        let det = g.determinant();
        if (det - 1.0).abs() > DET_TOL * s.powi(n as i32) {
            return Err(GroupError::BadDeterminant { det });
        }
        Ok(Self { g })
    }

    pub fn identity(n: usize) -> Self {
        Self { g: RMat::identity(2 * n, 2 * n) }
    }

    pub fn n(&self) -> usize {
        self.g.nrows() / 2
    }

    pub fn matrix(&self) -> &RMat {
        &self.g
    }

    pub fn a(&self) -> RMat {
        let n = self.n();
        self.g.view((0, 0), (n, n)).into_owned()
    }

    pub fn b(&self) -> RMat {
        let n = self.n();
        self.g.view((0, n), (n, n)).into_owned()
    }

    pub fn c(&self) -> RMat {
        let n = self.n();
        self.g.view((n, 0), (n, n)).into_owned()
    }

    pub fn d(&self) -> RMat {
        let n = self.n();
        self.g.view((n, n), (n, n)).into_owned()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n(), other.n(), "symplectic dimension mismatch");
        Self { g: &self.g * &other.g }
    }

    /// `g^{-1} = [[D^t, -B^t], [-C^t, A^t]]`.
    pub fn inverse(&self) -> Self {
        let (a, b, c, d) = (self.a(), self.b(), self.c(), self.d());
        Self { g: block2(&d.transpose(), &(-b.transpose()), &(-c.transpose()), &a.transpose()) }
    }

    /// `J(g, Omega) = C Omega + D`.
    pub fn jfac(&self, omega: &ComplexSymMatrix) -> CMat {
        to_complex(&self.c()) * omega.matrix() + to_complex(&self.d())
    }

    /// `g . Omega`.
    pub fn act(&self, omega: &ComplexSymMatrix) -> Result<ComplexSymMatrix> {
        let num = to_complex(&self.a()) * omega.matrix() + to_complex(&self.b());
        let den = cinverse(&self.jfac(omega))?;
        // the product is symmetric in exact arithmetic; symmetrize away round-off
        let m = num * den;
        let sym = (&m + m.transpose()).map(|z| z * 0.5);
        Ok(ComplexSymMatrix::new(sym)?)
    }

    pub fn to_json(&self) -> Value {
        encoding::rmat_to_json(&self.g)
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        Self::new(encoding::json_to_rmat(v, path)?)
    }
}

/// Heisenberg element `(lambda, mu; kappa)` with `lambda, mu` real `m x n`
/// and `kappa` real `m x m` such that `kappa + mu lambda^t` is symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergElement {
    pub lambda: RMat,
    pub mu: RMat,
    pub kappa: RMat,
}

impl HeisenbergElement {
    pub fn new(lambda: RMat, mu: RMat, kappa: RMat) -> Result<Self> {
        let (m, n) = lambda.shape();
        if mu.shape() != (m, n) || kappa.shape() != (m, m) {
            return Err(GroupError::Dimension(format!(
                "lambda {:?}, mu {:?}, kappa {:?}",
                lambda.shape(),
                mu.shape(),
                kappa.shape()
            )));
        }
        let s = &kappa + &mu * lambda.transpose();
        let defect = crate::matrix_core::rmax_abs_diff(&s, &s.transpose());
        let scale = scale2(&lambda).max(scale2(&mu)).max(scale2(&kappa));
        if defect > HEIS_SYM_TOL * scale {
            return Err(GroupError::HeisenbergAsymmetric { defect });
        }
        Ok(Self { lambda, mu, kappa })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        Self { lambda: RMat::zeros(m, n), mu: RMat::zeros(m, n), kappa: RMat::zeros(m, m) }
    }

    /// Central element `(0, 0; kappa)` with `kappa` symmetric.
    pub fn central(n: usize, kappa: RealSymMatrix) -> Self {
        let m = kappa.dim();
        Self { lambda: RMat::zeros(m, n), mu: RMat::zeros(m, n), kappa: kappa.into_matrix() }
    }

    pub fn m(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn n(&self) -> usize {
        self.lambda.ncols()
    }

    /// The row block `(lambda, mu)` of size `m x 2n`.
    pub fn row(&self) -> RMat {
        let (m, n) = self.lambda.shape();
        let mut r = RMat::zeros(m, 2 * n);
        r.view_mut((0, 0), (m, n)).copy_from(&self.lambda);
        r.view_mut((0, n), (m, n)).copy_from(&self.mu);
        r
    }

    pub fn from_row(row: &RMat, kappa: RMat) -> Self {
        let (m, n2) = row.shape();
        let n = n2 / 2;
        Self {
            lambda: row.view((0, 0), (m, n)).into_owned(),
            mu: row.view((0, n), (m, n)).into_owned(),
            kappa,
        }
    }

    /// `(-lambda, -mu; -kappa + lambda mu^t - mu lambda^t)`.
    pub fn inverse(&self) -> Self {
        let k = -&self.kappa + &self.lambda * self.mu.transpose() - &self.mu * self.lambda.transpose();
        Self { lambda: -&self.lambda, mu: -&self.mu, kappa: k }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lambda": encoding::rmat_to_json(&self.lambda),
            "mu": encoding::rmat_to_json(&self.mu),
            "kappa": encoding::rmat_to_json(&self.kappa),
        })
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        let get = |k: &str| {
            v.get(k)
                .ok_or_else(|| DecodeError::new(&format!("{path}.{k}"), "missing field"))
                .and_then(|x| encoding::json_to_rmat(x, &format!("{path}.{k}")))
        };
        Self::new(get("lambda")?, get("mu")?, get("kappa")?)
    }
}

fn check_heis_dims(a: &HeisenbergElement, b: &HeisenbergElement) -> Result<()> {
    if a.lambda.shape() != b.lambda.shape() {
        return Err(GroupError::Dimension(format!(
            "Heisenberg elements of shapes {:?} and {:?}",
            a.lambda.shape(),
            b.lambda.shape()
        )));
    }
    Ok(())
}

pub fn heis_mul(h1: &HeisenbergElement, h2: &HeisenbergElement) -> Result<HeisenbergElement> {
    check_heis_dims(h1, h2)?;
    let kappa = &h1.kappa + &h2.kappa + &h1.lambda * h2.mu.transpose() - &h1.mu * h2.lambda.transpose();
    Ok(HeisenbergElement { lambda: &h1.lambda + &h2.lambda, mu: &h1.mu + &h2.mu, kappa })
}

/// Jacobi group element `(g, h)`; acts by first translating with `h`, then `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiElement {
    pub g: SymplecticElement,
    pub h: HeisenbergElement,
}

impl JacobiElement {
    pub fn new(g: SymplecticElement, h: HeisenbergElement) -> Result<Self> {
        if g.n() != h.n() {
            return Err(GroupError::Dimension(format!("Sp({}) with H^({},{})", g.n(), h.n(), h.m())));
        }
        Ok(Self { g, h })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self { g: SymplecticElement::identity(n), h: HeisenbergElement::identity(m, n) }
    }

    pub fn from_symplectic(g: SymplecticElement, m: usize) -> Self {
        let n = g.n();
        Self { g, h: HeisenbergElement::identity(m, n) }
    }

    pub fn from_heisenberg(h: HeisenbergElement) -> Self {
        Self { g: SymplecticElement::identity(h.n()), h }
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn m(&self) -> usize {
        self.h.m()
    }

    pub fn inverse(&self) -> Self {
        // (g,h)^{-1} = (g^{-1}, h') with (l',m') = -(l,m) g^{-1}; kappa' from the law
        let gi = self.g.inverse();
        let row = -(self.h.row() * gi.matrix());
        let probe = HeisenbergElement::from_row(&row, RMat::zeros(self.m(), self.m()));
        // (g,h)(g^{-1},h') has kappa + kappa' + l~ m'^t - m~ l'^t with (l~,m~) = (l,m)g^{-1} = -(l',m')
        let kappa = -&self.h.kappa + &probe.lambda * probe.mu.transpose() - &probe.mu * probe.lambda.transpose();
        Self { g: gi, h: HeisenbergElement { kappa, ..probe } }
    }

    pub fn to_json(&self) -> Value {
        json!({ "g": self.g.to_json(), "h": self.h.to_json() })
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        let g = v.get("g").ok_or_else(|| DecodeError::new(&format!("{path}.g"), "missing field"))?;
        let h = v.get("h").ok_or_else(|| DecodeError::new(&format!("{path}.h"), "missing field"))?;
        Self::new(SymplecticElement::from_json(g, &format!("{path}.g"))?, HeisenbergElement::from_json(h, &format!("{path}.h"))?)
    }
}

pub fn jacobi_mul(a: &JacobiElement, b: &JacobiElement) -> Result<JacobiElement> {
    if a.n() != b.n() || a.m() != b.m() {
        return Err(GroupError::Dimension(format!(
            "G^J({},{}) with G^J({},{})",
            a.n(),
            a.m(),
            b.n(),
            b.m()
        )));
    }
    let tilde = HeisenbergElement::from_row(&(a.h.row() * b.g.matrix()), RMat::zeros(a.m(), a.m()));
    let kappa = &a.h.kappa + &b.h.kappa + &tilde.lambda * b.h.mu.transpose() - &tilde.mu * b.h.lambda.transpose();
    Ok(JacobiElement {
        g: a.g.mul(&b.g),
        h: HeisenbergElement { lambda: &tilde.lambda + &b.h.lambda, mu: &tilde.mu + &b.h.mu, kappa },
    })
}

/// `g h g^{-1}` inside `G^J`: `(lambda, mu) -> (lambda, mu) g^{-1}`, kappa unchanged.
pub fn conjugate_heis(g: &SymplecticElement, h: &HeisenbergElement) -> HeisenbergElement {
    let row = h.row() * g.inverse().matrix();
    HeisenbergElement::from_row(&row, h.kappa.clone())
}

/// Point `(Omega, Z)` of the Siegel-Jacobi space.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelJacobiPoint {
    pub omega: ComplexSymMatrix,
    pub z: CMat,
}

impl SiegelJacobiPoint {
    pub fn new(omega: ComplexSymMatrix, z: CMat) -> Result<Self> {
        if z.ncols() != omega.dim() {
            return Err(GroupError::Dimension(format!("Z is {:?} but Omega is {}x{}", z.shape(), omega.dim(), omega.dim())));
        }
        if !is_positive_definite(&RealSymMatrix::new(omega.im())?) {
            return Err(GroupError::NotInUpperHalfSpace);
        }
        Ok(Self { omega, z })
    }

    /// `(i I_n, 0)`.
    pub fn base(n: usize, m: usize) -> Self {
        Self { omega: ComplexSymMatrix::i_times(n, 1.0), z: CMat::zeros(m, n) }
    }

    pub fn n(&self) -> usize {
        self.omega.dim()
    }

    pub fn m(&self) -> usize {
        self.z.nrows()
    }

    pub fn y(&self) -> RMat {
        self.omega.im()
    }

    pub fn v(&self) -> RMat {
        im_part(&self.z)
    }

    pub fn to_json(&self) -> Value {
        json!({ "omega": encoding::cmat_to_json(self.omega.matrix()), "z": encoding::cmat_to_json(&self.z) })
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        let o = v.get("omega").ok_or_else(|| DecodeError::new(&format!("{path}.omega"), "missing field"))?;
        let z = v.get("z").ok_or_else(|| DecodeError::new(&format!("{path}.z"), "missing field"))?;
        let omega = ComplexSymMatrix::new(encoding::json_to_cmat(o, &format!("{path}.omega"))?)?;
        Self::new(omega, encoding::json_to_cmat(z, &format!("{path}.z"))?)
    }
}

/// `(g,h).(Omega,Z) = (g.Omega, (Z + lambda Omega + mu)(C Omega + D)^{-1})`.
pub fn jacobi_act(a: &JacobiElement, p: &SiegelJacobiPoint) -> Result<SiegelJacobiPoint> {
    if a.n() != p.n() || a.m() != p.m() {
        return Err(GroupError::Dimension("element and point dimensions differ".into()));
    }
    let zt = &p.z + to_complex(&a.h.lambda) * p.omega.matrix() + to_complex(&a.h.mu);
    let jinv = cinverse(&a.g.jfac(&p.omega))?;
    Ok(SiegelJacobiPoint { omega: a.g.act(&p.omega)?, z: zt * jinv })
}

/// Generators of `Sp(n,R)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpGenerator {
    /// `t(b) = [[I, b], [0, I]]`, `b` symmetric.
    T(RMat),
    /// `g(alpha) = [[alpha^t, 0], [0, alpha^{-1}]]`, `alpha` invertible.
    G(RMat),
    /// `sigma_n = [[0, -I], [I, 0]]`.
    Sigma(usize),
}

impl SpGenerator {
    pub fn n(&self) -> usize {
        match self {
            SpGenerator::T(b) => b.nrows(),
            SpGenerator::G(a) => a.nrows(),
            SpGenerator::Sigma(n) => *n,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            SpGenerator::T(b) => json!({ "t": encoding::rmat_to_json(b) }),
            SpGenerator::G(a) => json!({ "g": encoding::rmat_to_json(a) }),
            SpGenerator::Sigma(n) => json!({ "sigma": n }),
        }
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        if let Some(b) = v.get("t") {
            return Ok(SpGenerator::T(encoding::json_to_rmat(b, &format!("{path}.t"))?));
        }
        if let Some(a) = v.get("g") {
            return Ok(SpGenerator::G(encoding::json_to_rmat(a, &format!("{path}.g"))?));
        }
        if let Some(n) = v.get("sigma") {
            let n = n.as_u64().ok_or_else(|| DecodeError::new(&format!("{path}.sigma"), "expected a positive integer"))?;
            return Ok(SpGenerator::Sigma(n as usize));
        }
        Err(DecodeError::new(path, "expected one of t, g, sigma").into())
    }
}

pub fn sp_generator(gen: &SpGenerator) -> Result<SymplecticElement> {
    match gen {
        SpGenerator::T(b) => {
            let n = b.nrows();
            if b.ncols() != n {
                return Err(GroupError::BadGenerator("b must be square".into()));
            }
            if crate::matrix_core::rmax_abs_diff(b, &b.transpose()) > 1e-12 * scale2(b) {
                return Err(GroupError::BadGenerator("b must be symmetric".into()));
            }
            let i = RMat::identity(n, n);
            Ok(SymplecticElement { g: block2(&i, b, &RMat::zeros(n, n), &i) })
        }
        SpGenerator::G(alpha) => {
            let n = alpha.nrows();
            if alpha.ncols() != n {
                return Err(GroupError::BadGenerator("alpha must be square".into()));
            }
            let inv = rinverse(alpha).map_err(|_| GroupError::BadGenerator("alpha is singular".into()))?;
            let z = RMat::zeros(n, n);
            Ok(SymplecticElement { g: block2(&alpha.transpose(), &z, &z, &inv) })
        }
        SpGenerator::Sigma(n) => {
            if *n == 0 {
                return Err(GroupError::BadGenerator("n must be positive".into()));
            }
            let i = RMat::identity(*n, *n);
            let z = RMat::zeros(*n, *n);
            Ok(SymplecticElement { g: block2(&z, &(-&i), &i, &z) })
        }
    }
}

/// Product of a generator word, left to right.
pub fn word_product(word: &[SpGenerator], n: usize) -> Result<SymplecticElement> {
    let mut acc = SymplecticElement::identity(n);
    for gen in word {
        if gen.n() != n {
            return Err(GroupError::Dimension(format!("generator of size {} in a word for Sp({n})", gen.n())));
        }
        acc = acc.mul(&sp_generator(gen)?);
    }
    Ok(acc)
}

/// Iwasawa coordinates `(tau, theta)` of an element of `SL(2,R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwasawaCoords {
    pub tau: Complex64,
    pub theta: f64,
}

impl IwasawaCoords {
    pub fn new(tau: Complex64, theta: f64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(GroupError::NotInUpperHalfSpace);
        }
        Ok(Self { tau, theta: reduce_angle(theta) })
    }

    /// `n(x) a(y) k(theta)`.
    pub fn to_matrix(&self) -> nalgebra::Matrix2<f64> {
        iwasawa_matrix(self.tau, self.theta)
    }
}

/// `[[1, x], [0, 1]] diag(y^{1/2}, y^{-1/2}) [[cos, -sin], [sin, cos]]`, any real theta.
pub fn iwasawa_matrix(tau: Complex64, theta: f64) -> nalgebra::Matrix2<f64> {
    let (x, y) = (tau.re, tau.im);
    let n = nalgebra::Matrix2::new(1.0, x, 0.0, 1.0);
    let a = nalgebra::Matrix2::new(y.sqrt(), 0.0, 0.0, 1.0 / y.sqrt());
    let (s, c) = theta.sin_cos();
    let k = nalgebra::Matrix2::new(c, -s, s, c);
    n * a * k
}

/// Reduce to `[0, 2 pi)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

fn check_sl2(m: &nalgebra::Matrix2<f64>) -> Result<()> {
    let det = m.determinant();
    if (det - 1.0).abs() > 1e-10 {
        return Err(GroupError::BadDeterminant { det });
    }
    Ok(())
}

pub fn mobius(m: &nalgebra::Matrix2<f64>, tau: Complex64) -> Complex64 {
    (tau * m[(0, 0)] + m[(0, 1)]) / (tau * m[(1, 0)] + m[(1, 1)])
}

pub fn iwasawa_sl2(m: &nalgebra::Matrix2<f64>) -> Result<IwasawaCoords> {
    check_sl2(m)?;
    let (c, d) = (m[(1, 0)], m[(1, 1)]);
    let tau = mobius(m, c64(0.0, 1.0));
    let theta = reduce_angle(c.atan2(d));
    Ok(IwasawaCoords { tau, theta })
}

/// `M.(tau, theta) = (M.tau, theta + arg(c tau + d) mod 2 pi)`.
pub fn sl2_act_circle(m: &nalgebra::Matrix2<f64>, p: &IwasawaCoords) -> Result<IwasawaCoords> {
    check_sl2(m)?;
    let j = p.tau * m[(1, 0)] + m[(1, 1)];
    Ok(IwasawaCoords { tau: mobius(m, p.tau), theta: reduce_angle(p.theta + j.arg()) })
}

/// `[[a I_n, b I_n], [c I_n, d I_n]]`.
pub fn embed_sl2(m: &nalgebra::Matrix2<f64>, n: usize) -> Result<SymplecticElement> {
    check_sl2(m)?;
    let i = RMat::identity(n, n);
    Ok(SymplecticElement {
        g: block2(&(&i * m[(0, 0)]), &(&i * m[(0, 1)]), &(&i * m[(1, 0)]), &(&i * m[(1, 1)])),
    })
}
