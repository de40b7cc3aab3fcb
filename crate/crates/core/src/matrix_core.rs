//! Dense real/complex matrix helpers with the predicates and branch
//! conventions used throughout the crate.
//!
//! Square roots follow the convention `-pi/2 < arg(z^{1/2}) <= pi/2`, and
//! `det^{1/2}` on complex symmetric matrices with positive-definite real part
//! is the holomorphic branch that is positive on real matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Asymmetry above this is treated as a caller bug.
pub const SYMMETRY_DEFECT_MAX: f64 = 1e-8;
/// Eigenvalue threshold for positive definiteness.
pub const PD_THRESHOLD: f64 = 1e-12;
/// Default relative zero tolerance for [`signature_default`].
pub const SIGNATURE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("symmetry defect {defect:e} exceeds {SYMMETRY_DEFECT_MAX:e}")]
    Asymmetric { defect: f64 },
    #[error("symmetric eigensolver did not converge on {matrix}")]
    EigenFailure { matrix: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, MatrixError>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c64(x, 0.0))
}

pub fn re_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn im_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn cinverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| MatrixError::Singular(format!("{}x{} complex", m.nrows(), m.ncols())))
}

pub fn rinverse(m: &RMat) -> Result<RMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| MatrixError::Singular(format!("{}x{} real", m.nrows(), m.ncols())))
}

/// Trace of a complex matrix (sigma).
pub fn ctrace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn rmax_abs_diff(a: &RMat, b: &RMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(MatrixError::NotSquare { rows, cols });
    }
    Ok(())
}

/// Real symmetric matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymMatrix {
    entries: RMat,
    defect: f64,
}

impl RealSymMatrix {
    pub fn new(m: RMat) -> Result<Self> {
        check_square(m.nrows(), m.ncols())?;
        let defect = rmax_abs_diff(&m, &m.transpose());
        if defect > SYMMETRY_DEFECT_MAX {
            return Err(MatrixError::Asymmetric { defect });
        }
        let entries = (&m + m.transpose()) * 0.5;
        Ok(Self { entries, defect })
    }

    pub fn identity(k: usize) -> Self {
        Self { entries: RMat::identity(k, k), defect: 0.0 }
    }

    pub fn from_row_slice(k: usize, data: &[f64]) -> Result<Self> {
        Self::new(RMat::from_row_slice(k, k, data))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Asymmetry removed at construction.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn matrix(&self) -> &RMat {
        &self.entries
    }

    pub fn into_matrix(self) -> RMat {
        self.entries
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::try_new(self.entries.clone(), 1e-15, 10_000).ok_or_else(|| {
            MatrixError::EigenFailure { matrix: format!("{}", self.entries) }
        })?;
        Ok(eig.eigenvalues.iter().copied().collect())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// Complex symmetric matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSymMatrix {
    entries: CMat,
    defect: f64,
}

impl ComplexSymMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        check_square(m.nrows(), m.ncols())?;
        let defect = max_abs_diff(&m, &m.transpose());
        if defect > SYMMETRY_DEFECT_MAX {
            return Err(MatrixError::Asymmetric { defect });
        }
        let entries = (&m + m.transpose()).map(|z| z * 0.5);
        Ok(Self { entries, defect })
    }

    pub fn from_parts(re: &RMat, im: &RMat) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(MatrixError::Dimension("real and imaginary parts differ".into()));
        }
        Self::new(re.zip_map(im, c64))
    }

    /// `i * y * I_n`.
    pub fn i_times(n: usize, y: f64) -> Self {
        Self { entries: CMat::from_diagonal_element(n, n, c64(0.0, y)), defect: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }

    pub fn re(&self) -> RMat {
        re_part(&self.entries)
    }

    pub fn im(&self) -> RMat {
        im_part(&self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Signature {
    pub positives: usize,
    pub negatives: usize,
    pub zeros: usize,
}

impl Signature {
    /// positives - negatives
    pub fn net(&self) -> i64 {
        self.positives as i64 - self.negatives as i64
    }

    pub fn dim(&self) -> usize {
        self.positives + self.negatives + self.zeros
    }
}

/// Eigenvalue counts above `zero_tol`, below `-zero_tol`, and in between.
pub fn signature(q: &RealSymMatrix, zero_tol: f64) -> Result<Signature> {
    if !(zero_tol > 0.0) {
        return Err(MatrixError::Domain(format!("zero_tol must be positive, got {zero_tol}")));
    }
    let eig = q.eigenvalues()?;
    Ok(count_signs(&eig, zero_tol))
}

/// [`signature`] with tolerance `1e-9 * max |eigenvalue|`.
pub fn signature_default(q: &RealSymMatrix) -> Result<Signature> {
    let eig = q.eigenvalues()?;
    let scale = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = if scale > 0.0 { SIGNATURE_REL_TOL * scale } else { f64::MIN_POSITIVE };
    Ok(count_signs(&eig, tol))
}

fn count_signs(eig: &[f64], tol: f64) -> Signature {
    let mut s = Signature { positives: 0, negatives: 0, zeros: 0 };
    for &l in eig {
        if l > tol {
            s.positives += 1;
        } else if l < -tol {
            s.negatives += 1;
        } else {
            s.zeros += 1;
        }
    }
    s
}

/// `(z^{1/2})^kappa` with the principal branch `arg(z^{1/2})` in `(-pi/2, pi/2]`.
pub fn principal_pow_half(z: Complex64, kappa: i32) -> Result<Complex64> {
    if z == c64(0.0, 0.0) {
        if kappa < 0 {
            return Err(MatrixError::Domain("zero raised to a negative half power".into()));
        }
        return Ok(if kappa == 0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    }
    Ok(principal_sqrt(z).powi(kappa))
}

/// Principal square root; `arg` in `(-pi/2, pi/2]`, so `sqrt(-1) = i`.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    // atan2 gives arg in (-pi, pi]; a negative-zero imaginary part would
    // otherwise land on -pi.
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    let arg = im.atan2(z.re);
    Complex64::from_polar(z.norm().sqrt(), arg / 2.0)
}

/// Eigenvalues of a general complex square matrix via complex Schur form.
pub fn complex_eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    check_square(m.nrows(), m.ncols())?;
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-15, 100_000)
        .ok_or_else(|| MatrixError::EigenFailure { matrix: format!("{m}") })?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Holomorphic `det^{1/2}` on symmetric matrices with positive-definite
/// real part: the product of principal square roots of the eigenvalues.
pub fn holo_sqrt_det(s: &ComplexSymMatrix) -> Result<Complex64> {
    let re = RealSymMatrix::new(s.re())?;
    if !is_positive_definite(&re) {
        return Err(MatrixError::Domain("Re(S) is not positive definite".into()));
    }
    let eig = complex_eigenvalues(s.matrix())?;
    Ok(eig.into_iter().map(principal_sqrt).product())
}

/// `true` iff every eigenvalue exceeds `1e-12`.
pub fn is_positive_definite(y: &RealSymMatrix) -> bool {
    match y.eigenvalues() {
        Ok(e) => e.into_iter().all(|l| l > PD_THRESHOLD),
        Err(_) => false,
    }
}

/// Block `[[a, b], [c, d]]` from four equally sized blocks.
pub fn block2(a: &RMat, b: &RMat, c: &RMat, d: &RMat) -> RMat {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut out = RMat::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}
