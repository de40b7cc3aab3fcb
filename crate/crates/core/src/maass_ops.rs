//! Invariant differential operators on `H` and `H x C` evaluated by finite
//! differences, and the multiplicity formula for highest weights.
//!
//! Derivatives are tensor products of second-order central stencils in the
//! real coordinates `tau = x + iy`, `z = u + iv`; Wirtinger derivatives are
//! expanded into real partials with `d_tau = (d_x - i d_y)/2`, `d_z = (d_u - i d_v)/2`.

use num_complex::Complex64;
use num_rational::Ratio;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use thiserror::Error;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaassError {
    #[error("step {h} too large for Im tau = {y}")]
    StepTooLarge { h: f64, y: f64 },
    #[error("stencil extent {extent} exceeds smoothness radius {radius}")]
    OutOfDomain { extent: f64, radius: f64 },
    #[error("non-finite function value at ({0}, {1})")]
    NonFinite(Complex64, Complex64),
    #[error("invalid highest weight: {0}")]
    InvalidWeight(String),
    #[error("multiplicity {0} is not an integer")]
    NotInteger(String),
}

pub type Result<T> = std::result::Result<T, MaassError>;

/// A smooth function of `(tau, z)` with the radius on which it may be sampled.
pub struct SmoothFunction<'a> {
    f: Box<dyn Fn(Complex64, Complex64) -> Complex64 + Send + Sync + 'a>,
    pub radius: f64,
}

impl<'a> SmoothFunction<'a> {
    pub fn new(f: impl Fn(Complex64, Complex64) -> Complex64 + Send + Sync + 'a, radius: f64) -> Self {
        Self { f: Box::new(f), radius }
    }

    /// A function of `tau` alone.
    pub fn of_tau(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'a, radius: f64) -> Self {
        Self::new(move |tau, _| f(tau), radius)
    }

    pub fn eval(&self, tau: Complex64, z: Complex64) -> Complex64 {
        (self.f)(tau, z)
    }
}

/// Wirtinger derivative directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wirtinger {
    Tau,
    TauBar,
    Z,
    ZBar,
}

impl Wirtinger {
    /// Coefficients on `(d_x, d_y, d_u, d_v)`.
    fn real_parts(self) -> [Complex64; 4] {
        let (h, ih, o) = (Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5), Complex64::new(0.0, 0.0));
        match self {
            Wirtinger::Tau => [h, -ih, o, o],
            Wirtinger::TauBar => [h, ih, o, o],
            Wirtinger::Z => [o, o, h, -ih],
            Wirtinger::ZBar => [o, o, h, ih],
        }
    }
}

/// Expansion of a product of Wirtinger derivatives into real partials.
fn expand(ops: &[Wirtinger]) -> BTreeMap<[u8; 4], Complex64> {
    let mut acc = BTreeMap::new();
    acc.insert([0u8; 4], Complex64::new(1.0, 0.0));
    for op in ops {
        let parts = op.real_parts();
        let mut next = BTreeMap::new();
        for (ord, c) in &acc {
            for (var, p) in parts.iter().enumerate() {
                if p.norm() == 0.0 {
                    continue;
                }
                let mut o = *ord;
                o[var] += 1;
                *next.entry(o).or_insert(Complex64::new(0.0, 0.0)) += c * p;
            }
        }
        acc = next;
    }
    acc.retain(|_, c| c.norm() != 0.0);
    acc
}

/// One-dimensional central weights for derivative order `o <= 3`, offsets in units of `h`.
fn weights(o: u8) -> &'static [(i8, f64)] {
    match o {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => unreachable!("derivative order above 3"),
    }
}

struct Stencil<'f, 'a> {
    f: &'f SmoothFunction<'a>,
    base: [f64; 4],
    h: f64,
    cache: HashMap<[i8; 4], Complex64>,
}

impl<'f, 'a> Stencil<'f, 'a> {
    fn new(f: &'f SmoothFunction<'a>, tau: Complex64, z: Complex64, h: f64) -> Result<Self> {
        if tau.im <= 4.0 * h {
            return Err(MaassError::StepTooLarge { h, y: tau.im });
        }
        let extent = 2.0 * h * 2f64.sqrt();
        if extent > f.radius {
            return Err(MaassError::OutOfDomain { extent, radius: f.radius });
        }
        Ok(Self { f, base: [tau.re, tau.im, z.re, z.im], h, cache: HashMap::new() })
    }

    fn value(&mut self, off: [i8; 4]) -> Result<Complex64> {
        if let Some(v) = self.cache.get(&off) {
            return Ok(*v);
        }
        let p: Vec<f64> = (0..4).map(|i| self.base[i] + off[i] as f64 * self.h).collect();
        let (tau, z) = (Complex64::new(p[0], p[1]), Complex64::new(p[2], p[3]));
        let v = self.f.eval(tau, z);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(MaassError::NonFinite(tau, z));
        }
        self.cache.insert(off, v);
        Ok(v)
    }

    fn partial(&mut self, ord: [u8; 4]) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for &(a, wa) in weights(ord[0]) {
            for &(b, wb) in weights(ord[1]) {
                for &(c, wc) in weights(ord[2]) {
                    for &(d, wd) in weights(ord[3]) {
                        s += self.value([a, b, c, d])? * (wa * wb * wc * wd);
                    }
                }
            }
        }
        let total: i32 = ord.iter().map(|&o| o as i32).sum();
        Ok(s / self.h.powi(total))
    }

    fn wirtinger(&mut self, ops: &[Wirtinger]) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for (ord, c) in expand(ops) {
            s += c * self.partial(ord)?;
        }
        Ok(s)
    }
}

/// `Delta_{k-1/2} f = y^2 (f_xx + f_yy) - i (k - 1/2) y f_x` at `tau`.
pub fn laplace_beltrami_half(f: &SmoothFunction, k: i32, tau: Complex64, h: f64) -> Result<Complex64> {
    let mut s = Stencil::new(f, tau, Complex64::new(0.0, 0.0), h)?;
    let y = tau.im;
    let fxx = s.partial([2, 0, 0, 0])?;
    let fyy = s.partial([0, 2, 0, 0])?;
    let fx = s.partial([1, 0, 0, 0])?;
    Ok((fxx + fyy) * (y * y) - Complex64::new(0.0, k as f64 - 0.5) * y * fx)
}

/// Transcription of the Casimir operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasimirForm {
    /// The `F_{z zbar}` term carries `(k - 1)(tau - taubar)/(4 pi i m)`; invariant under `|_{k,m}`.
    Invariant,
    /// The `F_{z zbar}` term carries `k (tau - taubar)/(4 pi i m)` as printed; not invariant.
    Printed,
}

/// The individual terms of `C^{k,m} F`, labelled by the derivative they carry.
pub fn casimir_terms(f: &SmoothFunction, k: i32, m: u32, tau: Complex64, z: Complex64, h: f64) -> Result<Vec<(&'static str, Complex64)>> {
    casimir_terms_with(CasimirForm::Invariant, f, k, m, tau, z, h)
}

pub fn casimir_terms_with(form: CasimirForm, f: &SmoothFunction, k: i32, m: u32, tau: Complex64, z: Complex64, h: f64) -> Result<Vec<(&'static str, Complex64)>> {
    use Wirtinger::*;
    if m == 0 {
        return Err(MaassError::InvalidWeight("index m must be positive".into()));
    }
    let mut s = Stencil::new(f, tau, z, h)?;
    let kf = k as f64;
    let t = Complex64::new(0.0, 2.0 * tau.im);
    let w = Complex64::new(0.0, 2.0 * z.im);
    let c = Complex64::new(0.0, 4.0 * PI * m as f64);
    let f0 = s.value([0; 4])?;
    let kz = match form {
        CasimirForm::Invariant => kf - 1.0,
        CasimirForm::Printed => kf,
    };
    Ok(vec![
        ("F", f0 * 0.625),
        ("F_tau_taubar", -t * t * 2.0 * s.wirtinger(&[Tau, TauBar])?),
        ("F_taubar", -t * (kf - 1.0) * s.wirtinger(&[TauBar])?),
        ("F_tau", -t * kf * s.wirtinger(&[Tau])?),
        ("F_zz", t * kf / (c * 2.0) * s.wirtinger(&[Z, Z])?),
        ("F_taubar_zz", t * t / c * s.wirtinger(&[TauBar, Z, Z])?),
        ("F_z_zbar", t * kz / c * s.wirtinger(&[Z, ZBar])?),
        ("F_zz_zbar", t * w / c * s.wirtinger(&[Z, Z, ZBar])?),
        ("F_tau_zbar", -t * w * 2.0 * s.wirtinger(&[Tau, ZBar])?),
        ("F_tau_zbar_zbar", t * t / c * s.wirtinger(&[Tau, ZBar, ZBar])?),
        ("F_zbar_zbar (w^2/2)", w * w * 0.5 * s.wirtinger(&[ZBar, ZBar])?),
        ("F_zbar_zbar (k t)", t * kf / (c * 2.0) * s.wirtinger(&[ZBar, ZBar])?),
        ("F_z_zbar_zbar", t * w / c * s.wirtinger(&[Z, ZBar, ZBar])?),
    ])
}

/// `C^{k,m} F` at `(tau, z)`.
pub fn casimir_km(f: &SmoothFunction, k: i32, m: u32, tau: Complex64, z: Complex64, h: f64) -> Result<Complex64> {
    Ok(casimir_terms(f, k, m, tau, z, h)?.into_iter().map(|(_, v)| v).sum())
}

/// `(D(h) - D(h/2)) / (D(h/2) - D(h/4))` for a finite-difference evaluator `D`.
pub fn richardson_ratio(eval: impl Fn(f64) -> Result<Complex64>, h: f64) -> Result<f64> {
    let (a, b, c) = (eval(h)?, eval(h / 2.0)?, eval(h / 4.0)?);
    Ok((a - b).norm() / (b - c).norm())
}

/// Highest weight `tau_1 >= ... >= tau_s >= 0`, `s = min(m, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighestWeight {
    taus: Vec<u64>,
    m: u32,
    n: u32,
}

impl HighestWeight {
    pub fn new(taus: Vec<u64>, m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(MaassError::InvalidWeight("m and n must be positive".into()));
        }
        let s = m.min(n) as usize;
        if taus.len() != s {
            return Err(MaassError::InvalidWeight(format!("expected {s} entries, got {}", taus.len())));
        }
        if taus.windows(2).any(|w| w[0] < w[1]) {
            return Err(MaassError::InvalidWeight("entries must be non-increasing".into()));
        }
        Ok(Self { taus, m, n })
    }

    pub fn taus(&self) -> &[u64] {
        &self.taus
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// `m_lambda = prod_{1 <= i < j <= m} (1 + (tau_i - tau_j)/(j - i))`, `tau_j = 0` for `j > s`.
pub fn multiplicity(lambda: &HighestWeight) -> Result<u64> {
    let m = lambda.m as usize;
    let tau = |j: usize| lambda.taus.get(j).copied().unwrap_or(0) as i128;
    let mut p = Ratio::from_integer(1i128);
    for i in 0..m {
        for j in i + 1..m {
            p *= Ratio::from_integer(1) + Ratio::new(tau(i) - tau(j), (j - i) as i128);
        }
    }
    if !p.is_integer() || *p.numer() <= 0 {
        return Err(MaassError::NotInteger(p.to_string()));
    }
    u64::try_from(*p.numer()).map_err(|_| MaassError::NotInteger(p.to_string()))
}
