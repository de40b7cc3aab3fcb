//! Scalar automorphy factors and cocycles on `H_n` and `H_{n,m}`:
//! `J(g,Omega)`, `J_M`, the `gamma` pairing and the cocycles `epsilon`,
//! `alpha`, `beta` built from it, the metaplectic cover `G_*` with its factor
//! `J_{1/2}`, the half-integral Jacobi factors, the classical theta
//! multiplier, the nonholomorphic slash operator and the invariant densities.

use crate::groups::{jacobi_act, GroupError, HeisenbergElement, JacobiElement, SiegelJacobiPoint, SpGenerator, SymplecticElement};
use crate::matrix_core::{
    c64, cinverse, conj, ctrace, holo_sqrt_det, principal_sqrt, to_complex, CMat, ComplexSymMatrix, MatrixError, RMat,
};
use crate::maslov::UnitComplex;
use crate::schrodinger_weil::IndexMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Modulus tolerance for values that are unit complex in exact arithmetic.
pub const UNIT_MODULUS_TOL: f64 = 1e-8;
/// Tolerance for the cover constraint `eps^2 alpha_{iI}(g) = 1`.
pub const COVER_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomorphyError {
    #[error("value {0} should have modulus 1")]
    NotUnit(f64),
    #[error("(g, eps) violates eps^2 alpha(g) = 1 (residual {0:e})")]
    CoverConstraint(f64),
    #[error("matrix {0:?} is not in Gamma_0(4)")]
    NotInGamma04([i64; 4]),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

pub type Result<T> = std::result::Result<T, AutomorphyError>;

fn unit(z: Complex64) -> Result<UnitComplex> {
    let r = z.norm();
    if (r - 1.0).abs() > UNIT_MODULUS_TOL {
        return Err(AutomorphyError::NotUnit(r));
    }
    Ok(UnitComplex::new(z / r).expect("normalized"))
}

/// `J(g, Omega) = C Omega + D`.
pub fn jfac(g: &SymplecticElement, omega: &ComplexSymMatrix) -> CMat {
    g.jfac(omega)
}

fn sigma(m: &CMat) -> Complex64 {
    ctrace(m)
}

/// `N = Z + lambda Omega + mu`.
fn shifted_z(h: &HeisenbergElement, p: &SiegelJacobiPoint) -> CMat {
    &p.z + to_complex(&h.lambda) * p.omega.matrix() + to_complex(&h.mu)
}

/// The two exponents shared by `J_M`, `J_{k,M}` and `J*_M`:
/// `(sigma(M N J^{-1} C N^t), sigma(M(lambda Omega lambda^t + 2 lambda Z^t + kappa + mu lambda^t)))`.
fn jacobi_exponents(
    mm: &IndexMatrix,
    g: &SymplecticElement,
    h: &HeisenbergElement,
    p: &SiegelJacobiPoint,
) -> Result<(Complex64, Complex64)> {
    if g.n() != p.n() || h.m() != p.m() || mm.m() != p.m() {
        return Err(AutomorphyError::Dimension("index, element and point dimensions differ".into()));
    }
    let m = to_complex(mm.matrix());
    let n = shifted_z(h, p);
    let jinv = cinverse(&g.jfac(&p.omega))?;
    let first = sigma(&(&m * &n * jinv * to_complex(&g.c()) * n.transpose()));
    let (l, mu) = (to_complex(&h.lambda), to_complex(&h.mu));
    let inner = &l * p.omega.matrix() * l.transpose()
        + (&l * p.z.transpose()) * c64(2.0, 0.0)
        + to_complex(&h.kappa)
        + &mu * l.transpose();
    Ok((first, sigma(&(&m * inner))))
}

/// `J_M(g~, (Omega, Z)) = e^{2 pi i sigma(M[N] J^{-1} C)} e^{-2 pi i sigma(M(lambda Omega lambda^t + 2 lambda Z^t + kappa + mu lambda^t))}`.
pub fn j_m(mm: &IndexMatrix, elt: &JacobiElement, p: &SiegelJacobiPoint) -> Result<Complex64> {
    let (a, b) = jacobi_exponents(mm, &elt.g, &elt.h, p)?;
    Ok((c64(0.0, 2.0 * PI) * (a - b)).exp())
}

/// `gamma(O1, O2) = det^{-1/2}((O1 - conj O2)/2i) (det Im O1)^{1/4} (det Im O2)^{1/4}`.
pub fn gamma_pair(o1: &ComplexSymMatrix, o2: &ComplexSymMatrix) -> Result<Complex64> {
    let s = (o1.matrix() - conj(o2.matrix())) / c64(0.0, 2.0);
    let root = holo_sqrt_det(&ComplexSymMatrix::new(s)?)?;
    let q = (o1.im().determinant() * o2.im().determinant()).powf(0.25);
    Ok(q / root)
}

/// `epsilon(g; O1, O2) = gamma(g O1, g O2) / gamma(O1, O2)`.
pub fn epsilon_g(g: &SymplecticElement, o1: &ComplexSymMatrix, o2: &ComplexSymMatrix) -> Result<UnitComplex> {
    let num = gamma_pair(&g.act(o1)?, &g.act(o2)?)?;
    unit(num / gamma_pair(o1, o2)?)
}

/// Expanded form of `epsilon(g; O', O)` through `det^{1/2}` and `|det J|`.
/// Used only as a cross-check of [`epsilon_g`].
pub fn epsilon_expanded(g: &SymplecticElement, o1: &ComplexSymMatrix, o: &ComplexSymMatrix) -> Result<Complex64> {
    let half = |a: &ComplexSymMatrix, b: &ComplexSymMatrix| -> Result<Complex64> {
        let s = (a.matrix() - conj(b.matrix())) / c64(0.0, 2.0);
        Ok(holo_sqrt_det(&ComplexSymMatrix::new(s)?)?)
    };
    let (g1, g0) = (g.act(o1)?, g.act(o)?);
    let d1 = g.jfac(o1).determinant().norm();
    let d0 = g.jfac(o).determinant().norm();
    Ok(half(o1, o)? / half(&g1, &g0)? / (d1 * d0).sqrt())
}

/// `alpha_Omega(g) = det J(g, Omega) / |det J(g, Omega)|`.
pub fn alpha_factor(g: &SymplecticElement, omega: &ComplexSymMatrix) -> Result<UnitComplex> {
    let d = g.jfac(omega).determinant();
    unit(d / d.norm())
}

/// `beta_Omega(g1, g2) = epsilon(g1; Omega, g2 Omega)`.
pub fn beta_cocycle(omega: &ComplexSymMatrix, g1: &SymplecticElement, g2: &SymplecticElement) -> Result<UnitComplex> {
    epsilon_g(g1, omega, &g2.act(omega)?)
}

/// Fock-model multiplier `c^_{M,Omega}(g1, g2) = (gamma(g2^{-1} g1^{-1} Omega, g2^{-1} Omega) / gamma(g1^{-1} Omega, Omega))^m`.
pub fn c_hat(m: i32, omega: &ComplexSymMatrix, g1: &SymplecticElement, g2: &SymplecticElement) -> Result<UnitComplex> {
    let (i1, i2) = (g1.inverse(), g2.inverse());
    let a = gamma_pair(&i2.act(&i1.act(omega)?)?, &i2.act(omega)?)?;
    let b = gamma_pair(&i1.act(omega)?, omega)?;
    unit((a / b).powi(m))
}

fn base_point(n: usize) -> ComplexSymMatrix {
    ComplexSymMatrix::i_times(n, 1.0)
}

/// Element `(g, eps)` of the two-fold cover `G_* = G_{iI}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaplecticElement {
    pub g: SymplecticElement,
    pub eps: UnitComplex,
}

impl MetaplecticElement {
    pub fn new(g: SymplecticElement, eps: UnitComplex) -> Result<Self> {
        let a = alpha_factor(&g, &base_point(g.n()))?;
        let residual = (eps.value() * eps.value() * a.value() - c64(1.0, 0.0)).norm();
        if residual > COVER_TOL {
            return Err(AutomorphyError::CoverConstraint(residual));
        }
        Ok(Self { g, eps })
    }

    pub fn identity(n: usize) -> Self {
        Self { g: SymplecticElement::identity(n), eps: UnitComplex::one() }
    }

    /// `(g1, e1)(g2, e2) = (g1 g2, e1 e2 beta_{iI}(g1, g2))`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let b = beta_cocycle(&base_point(self.g.n()), &self.g, &other.g)?;
        let eps = self.eps.value() * other.eps.value() * b.value();
        Ok(Self { g: self.g.mul(&other.g), eps: unit(eps)? })
    }

    /// Lift of a generator matching the metaplectic Weil operators:
    /// `t(b) -> 1`, `g(alpha) -> 1` or `i` by the sign of `det alpha`,
    /// `sigma_n -> e^{-i pi n / 4}`.
    pub fn lift_generator(gen: &SpGenerator) -> Result<Self> {
        let g = crate::groups::sp_generator(gen)?;
        let eps = match gen {
            SpGenerator::T(_) => UnitComplex::one(),
            SpGenerator::G(a) => {
                if a.determinant() > 0.0 {
                    UnitComplex::one()
                } else {
                    UnitComplex::new(c64(0.0, 1.0)).expect("unit")
                }
            }
            SpGenerator::Sigma(n) => UnitComplex::from_phase(-PI * *n as f64 / 4.0),
        };
        Self::new(g, eps)
    }

    /// Product of the lifted generators, left to right.
    pub fn lift_word(word: &[SpGenerator], n: usize) -> Result<Self> {
        let mut acc = Self::identity(n);
        for gen in word {
            acc = acc.mul(&Self::lift_generator(gen)?)?;
        }
        Ok(acc)
    }
}

/// `J_{1/2}((g, eps), Omega) = eps^{-1} epsilon(g; Omega, iI) |det J(g, Omega)|^{1/2}`.
pub fn j_half(elt: &MetaplecticElement, omega: &ComplexSymMatrix) -> Result<Complex64> {
    let e = epsilon_g(&elt.g, omega, &base_point(omega.dim()))?;
    let d = elt.g.jfac(omega).determinant().norm();
    Ok(e.value() / elt.eps.value() * d.sqrt())
}

/// The alternative reading with `epsilon(g; iI, Omega)`; kept so tests can
/// show it fails the square law.
pub fn j_half_swapped(elt: &MetaplecticElement, omega: &ComplexSymMatrix) -> Result<Complex64> {
    let e = epsilon_g(&elt.g, &base_point(omega.dim()), omega)?;
    let d = elt.g.jfac(omega).determinant().norm();
    Ok(e.value() / elt.eps.value() * d.sqrt())
}

/// Element of `G^J_* = G_* x H`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaplecticJacobi {
    pub g: MetaplecticElement,
    pub h: HeisenbergElement,
}

impl MetaplecticJacobi {
    pub fn jacobi(&self) -> JacobiElement {
        JacobiElement { g: self.g.g.clone(), h: self.h.clone() }
    }

    /// Product in `G^J_*`: the cover law on the first factor, the Jacobi law on the second.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let j = crate::groups::jacobi_mul(&self.jacobi(), &other.jacobi())?;
        Ok(Self { g: self.g.mul(&other.g)?, h: j.h })
    }
}

/// Weight `k/2` with index `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfWeight {
    pub k: u32,
    pub m_index: IndexMatrix,
}

impl HalfWeight {
    pub fn new(k: u32, m_index: IndexMatrix) -> Result<Self> {
        if k == 0 {
            return Err(AutomorphyError::Dimension("weight numerator k must be >= 1".into()));
        }
        Ok(Self { k, m_index })
    }
}

/// `J_{k,M}`: the index-`M` exponentials of `J_M` times `J_{1/2}^k`.
pub fn j_km_half(weight: &HalfWeight, elt: &MetaplecticJacobi, p: &SiegelJacobiPoint) -> Result<Complex64> {
    let (a, b) = jacobi_exponents(&weight.m_index, &elt.g.g, &elt.h, p)?;
    let jh = j_half(&elt.g, &p.omega)?;
    Ok((c64(0.0, 2.0 * PI) * (a - b)).exp() * jh.powi(weight.k as i32))
}

/// `J*_M`: the `pi i` exponentials times `J_{1/2}^m`.
pub fn j_star_m(mm: &IndexMatrix, elt: &MetaplecticJacobi, p: &SiegelJacobiPoint) -> Result<Complex64> {
    let (a, b) = jacobi_exponents(mm, &elt.g.g, &elt.h, p)?;
    let jh = j_half(&elt.g, &p.omega)?;
    Ok((c64(0.0, PI) * (a - b)).exp() * jh.powi(mm.m() as i32))
}

/// Jacobi symbol `(a/n)` for odd `n > 0`.
fn jacobi_symbol(a: i64, n: i64) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut s = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                s = -s;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            s = -s;
        }
        a %= n;
    }
    if n == 1 {
        s
    } else {
        0
    }
}

/// Kronecker symbol `(c/d)` for odd `d` in Shimura's extension:
/// `(c/d) = (c/|d|)`, negated when both `c < 0` and `d < 0`; `(0/+-1) = 1`.
pub fn kronecker_symbol(c: i64, d: i64) -> i32 {
    assert!(d % 2 != 0, "d must be odd");
    let s = jacobi_symbol(c, d.abs());
    if c < 0 && d < 0 {
        -s
    } else {
        s
    }
}

/// `eps_d = 1` for `d = 1 mod 4`, `i` for `d = 3 mod 4`.
pub fn eps_d(d: i64) -> Complex64 {
    assert!(d % 2 != 0, "d must be odd");
    if d.rem_euclid(4) == 1 {
        c64(1.0, 0.0)
    } else {
        c64(0.0, 1.0)
    }
}

/// `j(gamma, tau) = (c/d) eps_d^{-1} ((c tau + d)/|c tau + d|)^{1/2}` on `Gamma_0(4)`.
pub fn theta_multiplier(gamma: [i64; 4], tau: Complex64) -> Result<Complex64> {
    let [a, b, c, d] = gamma;
    if c % 4 != 0 || a * d - b * c != 1 || d % 2 == 0 {
        return Err(AutomorphyError::NotInGamma04(gamma));
    }
    let j = tau * c as f64 + d as f64;
    let root = principal_sqrt(j / j.norm());
    Ok(root * kronecker_symbol(c, d) as f64 / eps_d(d))
}

/// `j^nh_{k,m}(g~, (tau, z))` for `n = m = 1`.
pub fn j_nh(k: i32, m: f64, elt: &JacobiElement, tau: Complex64, z: Complex64) -> Complex64 {
    let g = elt.g.matrix();
    let (c, d) = (g[(1, 0)], g[(1, 1)]);
    let (l, mu, kappa) = (elt.h.lambda[(0, 0)], elt.h.mu[(0, 0)], elt.h.kappa[(0, 0)]);
    let j = tau * c + d;
    let w = z + tau * l + mu;
    let e = c64(kappa, 0.0) - w * w * c / j + tau * l * l + z * 2.0 * l + l * mu;
    (c64(0.0, 2.0 * PI * m) * e).exp() * (j / j.norm()).powi(-k)
}

/// `(F|_{k,m} g~)(tau, z) = j^nh_{k,m}(g~, (tau, z)) F(g~.(tau, z))`.
pub fn slash_km_nh<F>(f: F, k: i32, m: f64, elt: JacobiElement) -> impl Fn(Complex64, Complex64) -> Complex64
where
    F: Fn(Complex64, Complex64) -> Complex64,
{
    move |tau, z| {
        let (t2, z2) = act_11(&elt, tau, z);
        j_nh(k, m, &elt, tau, z) * f(t2, z2)
    }
}

/// `g~.(tau, z)` for `n = m = 1` without constructing a point.
pub fn act_11(elt: &JacobiElement, tau: Complex64, z: Complex64) -> (Complex64, Complex64) {
    let g = elt.g.matrix();
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let j = tau * c + d;
    let w = z + tau * elt.h.lambda[(0, 0)] + elt.h.mu[(0, 0)];
    ((tau * a + b) / j, w / j)
}

/// `kappa_M(Omega, Z) = e^{-4 pi sigma(V^t M V Y^{-1})}`.
pub fn kappa_density(mm: &IndexMatrix, p: &SiegelJacobiPoint) -> Result<f64> {
    let v = p.v();
    let yinv = crate::matrix_core::rinverse(&p.y())?;
    let s = (v.transpose() * mm.matrix() * &v * yinv).trace();
    Ok((-4.0 * PI * s).exp())
}

/// `(det Y)^{-(n+m+1)}`.
pub fn invariant_volume_density(p: &SiegelJacobiPoint) -> f64 {
    p.y().determinant().powi(-((p.n() + p.m() + 1) as i32))
}

/// Real coordinates `(x_{ij}, y_{ij})_{i<=j}` followed by `(u_{kl}, v_{kl})`.
fn real_coords(p: &SiegelJacobiPoint) -> Vec<f64> {
    let n = p.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let w = p.omega.matrix()[(i, j)];
            out.push(w.re);
            out.push(w.im);
        }
    }
    for z in p.z.iter() {
        out.push(z.re);
        out.push(z.im);
    }
    out
}

fn from_real_coords(c: &[f64], n: usize, m: usize) -> Result<SiegelJacobiPoint> {
    let mut omega = CMat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            omega[(i, j)] = c64(c[k], c[k + 1]);
            omega[(j, i)] = omega[(i, j)];
            k += 2;
        }
    }
    let mut z = CMat::zeros(m, n);
    // column-major, matching the iteration order in `real_coords`
    for col in 0..n {
        for row in 0..m {
            z[(row, col)] = c64(c[k], c[k + 1]);
            k += 2;
        }
    }
    Ok(SiegelJacobiPoint::new(ComplexSymMatrix::new(omega)?, z)?)
}

/// Relative defect `|density(g~ p) |det D(g~)(p)| / density(p) - 1|` with
/// the Jacobian of the action taken by central differences of step `h`.
pub fn volume_invariance_residual(elt: &JacobiElement, p: &SiegelJacobiPoint, h: f64) -> Result<f64> {
    let (n, m) = (p.n(), p.m());
    let x0 = real_coords(p);
    let dim = x0.len();
    let image = |x: &[f64]| -> Result<Vec<f64>> { Ok(real_coords(&jacobi_act(elt, &from_real_coords(x, n, m)?)?)) };
    let mut jac = RMat::zeros(dim, dim);
    for k in 0..dim {
        let (mut xp, mut xm) = (x0.clone(), x0.clone());
        xp[k] += h;
        xm[k] -= h;
        let (fp, fm) = (image(&xp)?, image(&xm)?);
        for r in 0..dim {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    let q = jacobi_act(elt, p)?;
    let lhs = invariant_volume_density(&q) * jac.determinant().abs();
    Ok((lhs / invariant_volume_density(p) - 1.0).abs())
}
