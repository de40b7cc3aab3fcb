//! Lagrangian subspaces of `(R^{2N}, B)` with `B(x, y) = x^t J y`, the Maslov
//! triple index and its chain extension, and the cocycles built from them.
//!
//! Vectors are rows `(lambda, mu)` on which `Sp(N,R)` acts from the left by
//! `v -> v g^{-1}` (the same action as Heisenberg conjugation). Bases are
//! stored as columns, so `g` acts on a basis by `g^{-t}`.

use crate::groups::SymplecticElement;
use crate::matrix_core::{signature, MatrixError, RMat, RealSymMatrix};
use nalgebra::Matrix2;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

pub const ISOTROPY_TOL: f64 = 1e-10;
pub const RANK_REL_TOL: f64 = 1e-9;
pub const UNIT_TOL: f64 = 1e-12;
/// Bases are orthonormal, so `Q` has entries of size at most 1/2 and an
/// absolute zero threshold is meaningful. A purely relative one is not:
/// `tau(l, l, l)` would turn round-off into a signature.
pub const Q_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaslovError {
    #[error("basis must be 2N x N, got {0}x{1}")]
    Shape(usize, usize),
    #[error("basis has rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("subspace is not isotropic (residual {residual:e})")]
    NotIsotropic { residual: f64 },
    #[error("ambient dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("a chain needs at least 3 Lagrangians, got {0}")]
    ChainTooShort(usize),
    #[error("|z| = {0} is not 1")]
    NotUnit(f64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub type Result<T> = std::result::Result<T, MaslovError>;

/// Unit-modulus complex number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitComplex(Complex64);

impl UnitComplex {
    pub fn new(z: Complex64) -> Result<Self> {
        if (z.norm() - 1.0).abs() > UNIT_TOL {
            return Err(MaslovError::NotUnit(z.norm()));
        }
        Ok(Self(z))
    }

    /// `e^{i phase}`.
    pub fn from_phase(phase: f64) -> Self {
        Self(Complex64::from_polar(1.0, phase))
    }

    pub fn one() -> Self {
        Self(Complex64::new(1.0, 0.0))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn arg(&self) -> f64 {
        self.0.arg()
    }

    /// Distance between phases on the unit circle, in radians.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        (self.0 / other.0).arg().abs()
    }
}

/// `N`-dimensional isotropic subspace of `R^{2N}`, stored as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    basis: RMat,
}

impl Lagrangian {
    pub fn new(basis: RMat) -> Result<Self> {
        let (r, c) = basis.shape();
        if r != 2 * c || c == 0 {
            return Err(MaslovError::Shape(r, c));
        }
        let rank = numerical_rank(&basis);
        if rank < c {
            return Err(MaslovError::RankDeficient { rank, expected: c });
        }
        let q = basis.clone().qr().q();
        let j = crate::groups::j_matrix(c);
        let residual = (q.transpose() * &j * &q).abs().max();
        if residual > ISOTROPY_TOL {
            return Err(MaslovError::NotIsotropic { residual });
        }
        Ok(Self { basis: q })
    }

    /// `{(0, mu)}`.
    pub fn vertical(big_n: usize) -> Self {
        Self::new(crate::random::vertical_basis(big_n)).expect("vertical Lagrangian")
    }

    /// `{(lambda, 0)}`.
    pub fn horizontal(big_n: usize) -> Self {
        let mut b = RMat::zeros(2 * big_n, big_n);
        b.view_mut((0, 0), (big_n, big_n)).copy_from(&RMat::identity(big_n, big_n));
        Self::new(b).expect("horizontal Lagrangian")
    }

    pub fn ambient_half_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &RMat {
        &self.basis
    }

    /// `g l = { v g^{-1} : v in l }`.
    pub fn transform(&self, g: &SymplecticElement) -> Result<Self> {
        if g.n() != self.ambient_half_dim() {
            return Err(MaslovError::DimensionMismatch(2 * g.n(), 2 * self.ambient_half_dim()));
        }
        Self::new(g.inverse().matrix().transpose() * &self.basis)
    }

    /// `dim(l1 cap l2)` from the rank of the concatenated bases.
    pub fn intersection_dim(&self, other: &Self) -> Result<usize> {
        check_same(self, other)?;
        let n = self.ambient_half_dim();
        let mut cat = RMat::zeros(2 * n, 2 * n);
        cat.view_mut((0, 0), (2 * n, n)).copy_from(&self.basis);
        cat.view_mut((0, n), (2 * n, n)).copy_from(&other.basis);
        Ok(2 * n - numerical_rank(&cat))
    }
}

fn numerical_rank(m: &RMat) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_TOL * max).count()
}

fn check_same(a: &Lagrangian, b: &Lagrangian) -> Result<()> {
    if a.ambient_half_dim() != b.ambient_half_dim() {
        return Err(MaslovError::DimensionMismatch(2 * a.ambient_half_dim(), 2 * b.ambient_half_dim()));
    }
    Ok(())
}

/// Signature of `Q(x1 + x2 + x3) = B(x1,x2) + B(x2,x3) + B(x3,x1)` on `l1 + l2 + l3`
/// (external direct sum, dimension `3N`).
pub fn maslov3(l1: &Lagrangian, l2: &Lagrangian, l3: &Lagrangian) -> Result<i64> {
    check_same(l1, l2)?;
    check_same(l1, l3)?;
    let n = l1.ambient_half_dim();
    let j = crate::groups::j_matrix(n);
    let pair = |a: &Lagrangian, b: &Lagrangian| a.basis.transpose() * &j * &b.basis;
    let (p12, p23, p31) = (pair(l1, l2), pair(l2, l3), pair(l3, l1));
    let mut s = RMat::zeros(3 * n, 3 * n);
    let mut put = |i: usize, k: usize, blk: &RMat| {
        s.view_mut((i * n, k * n), (n, n)).add_assign(&(blk * 0.5));
        s.view_mut((k * n, i * n), (n, n)).add_assign(&(blk.transpose() * 0.5));
    };
    put(0, 1, &p12);
    put(1, 2, &p23);
    put(2, 0, &p31);
    let q = RealSymMatrix::new(s)?;
    Ok(signature(&q, Q_ZERO_TOL)?.net())
}

trait AddAssignView {
    fn add_assign(&mut self, rhs: &RMat);
}

impl AddAssignView for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, rhs: &RMat) {
        for j in 0..rhs.ncols() {
            for i in 0..rhs.nrows() {
                self[(i, j)] += rhs[(i, j)];
            }
        }
    }
}

/// `tau(l1, ..., lk) = sum_{i=2}^{k-1} tau(l1, l_i, l_{i+1})`.
pub fn maslov_chain(ls: &[Lagrangian]) -> Result<i64> {
    if ls.len() < 3 {
        return Err(MaslovError::ChainTooShort(ls.len()));
    }
    let mut total = 0;
    for w in ls[1..].windows(2) {
        total += maslov3(&ls[0], &w[0], &w[1])?;
    }
    Ok(total)
}

/// `tau_l(g1, g2) = tau(l, g1 l, g1 g2 l)`.
pub fn maslov_tau_l(l: &Lagrangian, g1: &SymplecticElement, g2: &SymplecticElement) -> Result<i64> {
    let l1 = l.transform(g1)?;
    let l2 = l.transform(&g1.mul(g2))?;
    maslov3(l, &l1, &l2)
}

/// `c_{l,m}(g1, g2) = exp(-i pi m tau(l, g1 l, g1 g2 l) / 4)`.
pub fn cocycle_clm(m: f64, l: &Lagrangian, g1: &SymplecticElement, g2: &SymplecticElement) -> Result<UnitComplex> {
    let t = maslov_tau_l(l, g1, g2)?;
    Ok(UnitComplex::from_phase(-PI * m * t as f64 / 4.0))
}

/// Sign with `sign(0) = 0`.
pub fn sign0(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `c(M1, M2) = exp(-i pi n sign(c1 c2 c3) / 4)` with `c3` from `M1 M2`.
pub fn cocycle_sl2(m1: &Matrix2<f64>, m2: &Matrix2<f64>, n: usize) -> UnitComplex {
    let c3 = (m1 * m2)[(1, 0)];
    let s = sign0(m1[(1, 0)]) * sign0(m2[(1, 0)]) * sign0(c3);
    UnitComplex::from_phase(-PI * n as f64 * s as f64 / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{sp_generator, SpGenerator};

    fn line(x: f64, y: f64) -> Lagrangian {
        Lagrangian::new(RMat::from_row_slice(2, 1, &[x, y])).unwrap()
    }

    #[test]
    fn triple_examples() {
        let (e1, e2, e12) = (line(1.0, 0.0), line(0.0, 1.0), line(1.0, 1.0));
        assert_eq!(maslov3(&e1, &e1, &e1).unwrap(), 0);
        assert_eq!(maslov3(&e1, &e2, &e12).unwrap(), -1);
        assert_eq!(maslov3(&e2, &e1, &e12).unwrap(), 1);
        assert_eq!(maslov_chain(&[e1.clone(), e2.clone(), e12.clone()]).unwrap(), -1);
        assert_eq!(maslov_chain(&[e1.clone(), e1.clone(), e1.clone(), e1.clone()]).unwrap(), 0);
        assert!(maslov_chain(&[e1.clone(), e2]).is_err());
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(Lagrangian::new(RMat::zeros(2, 1)), Err(MaslovError::RankDeficient { .. })));
        // span(e1, e3) in R^4 pairs nontrivially? e1=(1,0,0,0) is lambda_1, e3 = mu_1: B = 1
        let b = RMat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(Lagrangian::new(b), Err(MaslovError::NotIsotropic { .. })));
        assert_eq!(Lagrangian::vertical(2).intersection_dim(&Lagrangian::horizontal(2)).unwrap(), 0);
        assert_eq!(Lagrangian::vertical(2).intersection_dim(&Lagrangian::vertical(2)).unwrap(), 2);
    }

    #[test]
    fn sl2_cocycle_examples() {
        let s = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        let l = Matrix2::new(1.0, 0.0, 1.0, 1.0);
        assert!((cocycle_sl2(&s, &s, 1).value() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let v = cocycle_sl2(&s, &l, 1).value();
        assert!((v - Complex64::from_polar(1.0, -PI / 4.0)).norm() < 1e-15);
        let u = Matrix2::new(2.0, 3.0, 0.0, 0.5);
        assert!((cocycle_sl2(&u, &s, 1).value() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn clm_examples() {
        let l = Lagrangian::vertical(1);
        let s = sp_generator(&SpGenerator::Sigma(1)).unwrap();
        let low = SymplecticElement::new(RMat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])).unwrap();
        let e = SymplecticElement::identity(1);
        assert!((cocycle_clm(1.0, &l, &e, &s).unwrap().value() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((cocycle_clm(1.0, &l, &s, &s.inverse()).unwrap().value() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let v = cocycle_clm(1.0, &l, &s, &low).unwrap();
        assert!(v.phase_distance(&UnitComplex::from_phase(-PI / 4.0)) < 1e-15);
    }
}
