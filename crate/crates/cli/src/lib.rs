//! Batch job runner: decodes a JSON job, dispatches to `jacobi-core` and
//! returns a versioned JSON result with residuals and certification data.

mod params;
pub mod suites;

use jacobi_core::automorphy::{act_11, j_nh, AutomorphyError};
use jacobi_core::encoding::{complex_to_json, DecodeError};
use jacobi_core::groups::{embed_sl2, GroupError, IwasawaCoords, JacobiElement, SiegelJacobiPoint, SymplecticElement};
use jacobi_core::maass_ops::{casimir_terms, multiplicity, HighestWeight, MaassError, SmoothFunction, DEFAULT_STEP};
use jacobi_core::maslov::{cocycle_clm, cocycle_sl2, maslov3, maslov_chain, maslov_tau_l, Lagrangian, MaslovError};
use jacobi_core::matrix_core::{c64, CMat, ComplexSymMatrix, MatrixError};
use jacobi_core::random::{random_heis, random_point, random_spd, random_word, rng, uniform};
use jacobi_core::schrodinger_weil::{check_covariance, grid17, GaussianState, IndexMatrix, WeilError, WeilRep, WordElement};
use jacobi_core::theta::{siegel_theta, theta_m, theta_sum_f, theta_weight_quarter, ThetaError, ThetaValue};
use nalgebra::Matrix2;
use num_complex::Complex64;
use params::Params;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

pub use suites::{verify_suite, Suite};

pub const SCHEMA: &str = "1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RESIDUAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JobError {
    #[error("usage error at {path}: {msg}")]
    Usage { path: String, msg: String },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl JobError {
    pub fn usage(path: &str, msg: impl Into<String>) -> Self {
        JobError::Usage { path: path.to_string(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Usage { .. } => EXIT_USAGE,
            JobError::Resource(_) => EXIT_RESOURCE,
            JobError::Numeric(_) => EXIT_RESIDUAL,
        }
    }

    pub fn to_json(&self) -> Value {
        let (kind, path, msg) = match self {
            JobError::Usage { path, msg } => ("usage", Some(path.clone()), msg.clone()),
            JobError::Resource(m) => ("resource", None, m.clone()),
            JobError::Numeric(m) => ("numeric", None, m.clone()),
        };
        json!({
            "schema": SCHEMA,
            "version": VERSION,
            "error": { "kind": kind, "path": path, "message": msg },
            "exit_code": self.exit_code(),
        })
    }
}

impl From<DecodeError> for JobError {
    fn from(e: DecodeError) -> Self {
        JobError::Usage { path: e.path, msg: e.msg }
    }
}

impl From<MatrixError> for JobError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::EigenFailure { .. } | MatrixError::Singular(_) => JobError::Numeric(e.to_string()),
            _ => JobError::usage("params", e.to_string()),
        }
    }
}

impl From<GroupError> for JobError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::Decode(d) => d.into(),
            GroupError::Matrix(m) => m.into(),
            _ => JobError::usage("params", e.to_string()),
        }
    }
}

impl From<AutomorphyError> for JobError {
    fn from(e: AutomorphyError) -> Self {
        match e {
            AutomorphyError::Group(g) => g.into(),
            AutomorphyError::Matrix(m) => m.into(),
            _ => JobError::usage("params", e.to_string()),
        }
    }
}

impl From<WeilError> for JobError {
    fn from(e: WeilError) -> Self {
        match e {
            WeilError::DegreeCap { .. } => JobError::Resource(e.to_string()),
            WeilError::Decode(d) => d.into(),
            WeilError::Group(g) => g.into(),
            WeilError::Matrix(m) => m.into(),
            WeilError::Automorphy(a) => a.into(),
            _ => JobError::usage("params", e.to_string()),
        }
    }
}

impl From<ThetaError> for JobError {
    fn from(e: ThetaError) -> Self {
        match e {
            ThetaError::Resource { .. } => JobError::Resource(e.to_string()),
            ThetaError::NotConverged(_) => JobError::Numeric(e.to_string()),
            ThetaError::Matrix(m) => m.into(),
            ThetaError::Group(g) => g.into(),
            ThetaError::Weil(w) => w.into(),
            ThetaError::Automorphy(a) => a.into(),
            ThetaError::Domain(_) => JobError::usage("params", e.to_string()),
        }
    }
}

impl From<MaslovError> for JobError {
    fn from(e: MaslovError) -> Self {
        match e {
            MaslovError::Matrix(m) => m.into(),
            _ => JobError::usage("params", e.to_string()),
        }
    }
}

impl From<MaassError> for JobError {
    fn from(e: MaassError) -> Self {
        match e {
            MaassError::NonFinite(..) => JobError::Numeric(e.to_string()),
            _ => JobError::usage("params", e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Theta,
    ThetaSum,
    Maslov,
    Cocycle,
    Covariance,
    VerifySuite,
    Casimir,
    Multiplicity,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Theta,
        Command::ThetaSum,
        Command::Maslov,
        Command::Cocycle,
        Command::Covariance,
        Command::VerifySuite,
        Command::Casimir,
        Command::Multiplicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Theta => "theta",
            Command::ThetaSum => "theta-sum",
            Command::Maslov => "maslov",
            Command::Cocycle => "cocycle",
            Command::Covariance => "covariance",
            Command::VerifySuite => "verify-suite",
            Command::Casimir => "casimir",
            Command::Multiplicity => "multiplicity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    fn default_tol(self) -> f64 {
        match self {
            Command::Theta | Command::ThetaSum => 1e-12,
            _ => 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub command: Command,
    pub params: Value,
    /// Absent means the command default (suites use their own thresholds).
    pub tol: Option<f64>,
    pub seed: u64,
}

impl JobSpec {
    pub fn new(command: Command, params: Value) -> Self {
        Self { command, params, tol: None, seed: 0 }
    }

    pub fn from_json(v: &Value) -> Result<Self, JobError> {
        let obj = v.as_object().ok_or_else(|| JobError::usage("$", "expected a JSON object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "command" | "params" | "tol" | "seed") {
                return Err(JobError::usage(key, "unknown field"));
            }
        }
        let name = obj.get("command").ok_or_else(|| JobError::usage("command", "missing field"))?;
        let name = name.as_str().ok_or_else(|| JobError::usage("command", "expected a string"))?;
        let command = Command::parse(name).ok_or_else(|| JobError::usage("command", format!("unknown command {name:?}")))?;
        let params = obj.get("params").cloned().unwrap_or_else(|| json!({}));
        if !params.is_object() {
            return Err(JobError::usage("params", "expected an object"));
        }
        let tol = match obj.get("tol") {
            None => None,
            Some(t) => match t.as_f64() {
                Some(x) if x > 0.0 && x.is_finite() => Some(x),
                _ => return Err(JobError::usage("tol", "expected a positive number")),
            },
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(s) => s.as_u64().ok_or_else(|| JobError::usage("seed", "expected a non-negative integer"))?,
        };
        Ok(Self { command, params, tol, seed })
    }

    pub fn to_json(&self) -> Value {
        json!({ "command": self.command.name(), "params": self.params, "tol": self.tol, "seed": self.seed })
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(self.command.default_tol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub command: String,
    pub inputs: Value,
    pub outputs: Value,
    pub certification: Value,
    /// Residuals compared against `tol`; empty for pure evaluations.
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
    pub pass: bool,
    pub wall_time: f64,
}

impl JobResult {
    pub fn max_residual(&self) -> Option<f64> {
        self.residuals.values().copied().reduce(f64::max)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_RESIDUAL
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.to_json_without_wall_time();
        v["wall_time"] = json!(self.wall_time);
        v
    }

    /// Everything except the timing, for replay comparisons.
    pub fn to_json_without_wall_time(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "version": VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "certification": self.certification,
            "residuals": self.residuals,
            "max_residual": self.max_residual(),
            "tol": self.tol,
            "pass": self.pass,
            "exit_code": self.exit_code(),
        })
    }
}

struct Output {
    outputs: Value,
    certification: Value,
    residuals: BTreeMap<String, f64>,
}

impl Output {
    fn value(outputs: Value, certification: Value) -> Self {
        Self { outputs, certification, residuals: BTreeMap::new() }
    }
}

pub fn run_job(spec: &JobSpec) -> Result<JobResult, JobError> {
    if spec.command == Command::VerifySuite {
        let p = Params::new(&spec.params)?;
        let name = p.req("name")?.as_str().ok_or_else(|| JobError::usage("params.name", "expected a string"))?;
        let suite = Suite::parse(name).ok_or_else(|| JobError::usage("params.name", format!("unknown suite {name:?}")))?;
        let count = p.usize_or("count", Some(100))?;
        return verify_suite(suite, spec.seed, count, spec.tol);
    }
    let start = Instant::now();
    let tol = spec.tol();
    let p = Params::new(&spec.params)?;
    let out = match spec.command {
        Command::Theta => theta_job(&p, tol)?,
        Command::ThetaSum => theta_sum_job(&p, tol)?,
        Command::Maslov => maslov_job(&p)?,
        Command::Cocycle => cocycle_job(&p)?,
        Command::Covariance => covariance_job(&p, spec.seed)?,
        Command::Casimir => casimir_job(&p)?,
        Command::Multiplicity => multiplicity_job(&p)?,
        Command::VerifySuite => unreachable!("handled above"),
    };
    let pass = out.residuals.values().all(|&r| r <= tol);
    Ok(JobResult {
        command: spec.command.name().to_string(),
        inputs: spec.to_json(),
        outputs: out.outputs,
        certification: out.certification,
        residuals: out.residuals,
        tol,
        pass,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn complex_json(z: Complex64) -> Value {
    complex_to_json(z)
}

fn theta_value_output(v: &ThetaValue, tol: f64) -> Output {
    Output::value(
        json!({ "value": complex_json(v.value) }),
        json!({ "tol": tol, "radius": v.truncation.radius, "tail_bound": v.truncation.tail_bound }),
    )
}

fn index_matrix(p: &Params, m: usize) -> Result<IndexMatrix, JobError> {
    match p.raw("M") {
        None => Ok(IndexMatrix::identity(m)),
        Some(_) => Ok(IndexMatrix::new(p.rmat("M", m, m)?)?),
    }
}

fn theta_job(p: &Params, tol: f64) -> Result<Output, JobError> {
    let v = match p.str_or("kind", "theta_m")? {
        "theta_m" => {
            let (n, m) = (p.usize_or("n", Some(1))?, p.usize_or("m", Some(1))?);
            let mm = index_matrix(p, m)?;
            let omega = ComplexSymMatrix::new(p.cmat("omega", n, n)?)?;
            let z = if p.raw("z").is_some() { p.cmat("z", m, n)? } else { CMat::zeros(m, n) };
            theta_m(&mm, &SiegelJacobiPoint::new(omega, z)?, tol)?
        }
        "siegel" => {
            let n = p.usize_or("n", Some(1))?;
            siegel_theta(&ComplexSymMatrix::new(p.cmat("omega", n, n)?)?, tol)?
        }
        "quarter" => theta_weight_quarter(p.complex("tau")?, tol)?,
        other => return Err(JobError::usage("params.kind", format!("unknown theta kind {other:?}"))),
    };
    Ok(theta_value_output(&v, tol))
}

fn theta_sum_job(p: &Params, tol: f64) -> Result<Output, JobError> {
    let n = p.usize_or("n", Some(1))?;
    let f = match p.raw("f") {
        None => GaussianState::standard(n, 1),
        Some(v) => GaussianState::from_json(v, "params.f")?,
    };
    if f.n() != n || f.m() != 1 {
        return Err(JobError::usage("params.f", format!("expected a state on R^(1,{n})")));
    }
    let c = IwasawaCoords::new(p.complex("tau")?, p.f64_or("theta", 0.0)?)?;
    let (lambda, mu) = (p.reals("lambda", n)?, p.reals("mu", n)?);
    let v = theta_sum_f(&f, &c, &lambda, &mu, p.f64_or("t", 0.0)?, tol)?;
    Ok(theta_value_output(&v, tol))
}

fn lagrangian(v: &Value, path: &str) -> Result<Lagrangian, JobError> {
    Ok(Lagrangian::new(jacobi_core::encoding::json_to_rmat(v, path)?)?)
}

fn maslov_job(p: &Params) -> Result<Output, JobError> {
    let list = p.req("lagrangians")?.as_array().ok_or_else(|| JobError::usage("params.lagrangians", "expected an array of bases"))?;
    let ls = list.iter().enumerate().map(|(i, b)| lagrangian(b, &format!("params.lagrangians[{i}]"))).collect::<Result<Vec<_>, _>>()?;
    let tau = match ls.len() {
        3 => maslov3(&ls[0], &ls[1], &ls[2])?,
        _ => maslov_chain(&ls)?,
    };
    Ok(Output::value(json!({ "tau": tau }), json!({ "exact": true })))
}

fn sl2(p: &Params, key: &str) -> Result<Matrix2<f64>, JobError> {
    let m = p.rmat(key, 2, 2)?;
    let g = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    if (g.determinant() - 1.0).abs() > jacobi_core::groups::DET_TOL {
        return Err(JobError::usage(&format!("params.{key}"), "determinant is not 1"));
    }
    Ok(g)
}

fn symplectic(p: &Params, key: &str) -> Result<SymplecticElement, JobError> {
    Ok(SymplecticElement::from_json(p.req(key)?, &format!("params.{key}"))?)
}

fn cocycle_job(p: &Params) -> Result<Output, JobError> {
    match p.str_or("kind", "sl2")? {
        "sl2" => {
            let (m1, m2) = (sl2(p, "M1")?, sl2(p, "M2")?);
            let n = p.usize_or("n", Some(1))?;
            let closed = cocycle_sl2(&m1, &m2, n);
            let l = Lagrangian::vertical(n);
            let clm = cocycle_clm(1.0, &l, &embed_sl2(&m1, n)?, &embed_sl2(&m2, n)?)?;
            let mut out = Output::value(
                json!({ "value": complex_json(closed.value()), "clm_value": complex_json(clm.value()) }),
                json!({ "m": 1.0, "lagrangian": "vertical" }),
            );
            out.residuals.insert("clm_vs_sl2".into(), closed.phase_distance(&clm));
            Ok(out)
        }
        "clm" => {
            let (g1, g2) = (symplectic(p, "g1")?, symplectic(p, "g2")?);
            let m = p.f64_or("m", 1.0)?;
            let l = match p.raw("lagrangian") {
                None => Lagrangian::vertical(g1.n()),
                Some(v) => lagrangian(v, "params.lagrangian")?,
            };
            let c = cocycle_clm(m, &l, &g1, &g2)?;
            Ok(Output::value(json!({ "value": complex_json(c.value()), "tau_l": maslov_tau_l(&l, &g1, &g2)? }), json!({ "m": m })))
        }
        other => Err(JobError::usage("params.kind", format!("unknown cocycle kind {other:?}"))),
    }
}

fn covariance_job(p: &Params, seed: u64) -> Result<Output, JobError> {
    let (n, m) = (p.usize_or("n", Some(1))?, p.usize_or("m", Some(1))?);
    let mut r = rng(seed);
    let mm = match p.raw("M") {
        None => IndexMatrix::new(random_spd(&mut r, m, 0.5, 0.7))?,
        Some(_) => index_matrix(p, m)?,
    };
    let word = match p.raw("word") {
        None => random_word(&mut r, n, 6),
        Some(v) => {
            let a = v.as_array().ok_or_else(|| JobError::usage("params.word", "expected an array of generators"))?;
            a.iter()
                .enumerate()
                .map(|(i, g)| jacobi_core::groups::SpGenerator::from_json(g, &format!("params.word[{i}]")))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let other_sheet = match p.raw("other_sheet") {
        None => uniform(&mut r, 0.0, 1.0) < 0.5,
        Some(_) => p.bool_or("other_sheet", false)?,
    };
    let h = match p.raw("h") {
        None => random_heis(&mut r, m, n, 1.0),
        Some(v) => jacobi_core::groups::HeisenbergElement::from_json(v, "params.h")?,
    };
    let point = match p.raw("point") {
        None => random_point(&mut r, n, m),
        Some(v) => SiegelJacobiPoint::from_json(v, "params.point")?,
    };
    if word.iter().any(|g| g.n() != n) || h.n() != n || h.m() != m || point.n() != n || point.m() != m {
        return Err(JobError::usage("params", format!("inputs must all live on n = {n}, m = {m}")));
    }
    let elt = WordElement { word, other_sheet, h };
    let grid = grid17(m, n);
    let res = check_covariance(&WeilRep::new(mm.clone()), &elt, &point, &grid)?;
    let mut out = Output::value(
        json!({ "M": mm.to_json(), "element": elt.to_json(), "point": point.to_json() }),
        json!({ "grid_points": grid.len() }),
    );
    out.residuals.insert("covariance".into(), res);
    Ok(out)
}

/// `exp(a tau + b taubar + c z + d zbar + e z^2 + f z zbar + g zbar^2)`.
fn exp_quadratic(coeffs: [Complex64; 7]) -> impl Fn(Complex64, Complex64) -> Complex64 + Send + Sync + Clone {
    move |tau, z| {
        let (tb, zb) = (tau.conj(), z.conj());
        let [a, b, c, d, e, f, g] = coeffs;
        (a * tau + b * tb + c * z + d * zb + e * z * z + f * z * zb + g * zb * zb).exp()
    }
}

fn casimir_job(p: &Params) -> Result<Output, JobError> {
    let k = p.int("k")?;
    let k = i32::try_from(k).map_err(|_| JobError::usage("params.k", "weight out of range"))?;
    let m = u32::try_from(p.usize_or("m", Some(1))?).map_err(|_| JobError::usage("params.m", "index out of range"))?;
    let tau = p.complex("tau")?;
    let z = p.complex_or("z", c64(0.0, 0.0))?;
    let h = p.f64_or("h", DEFAULT_STEP)?;
    let mut coeffs = [c64(0.0, 0.0); 7];
    if let Some(v) = p.raw("sample") {
        let s = Params::new(v).map_err(|_| JobError::usage("params.sample", "expected an object"))?;
        for (i, key) in ["a", "b", "c", "d", "e", "f", "g"].iter().enumerate() {
            coeffs[i] = s.complex_or(key, c64(0.0, 0.0)).map_err(|e| match e {
                JobError::Usage { msg, .. } => JobError::usage(&format!("params.sample.{key}"), msg),
                other => other,
            })?;
        }
    }
    let sample = exp_quadratic(coeffs);
    let f = SmoothFunction::new(sample.clone(), 1.0);
    let terms = casimir_terms(&f, k, m, tau, z, h)?;
    let value: Complex64 = terms.iter().map(|t| t.1).sum();
    let term_map: Map<String, Value> = terms.iter().map(|(name, v)| (name.to_string(), complex_json(*v))).collect();
    let mut out = Output::value(json!({ "value": complex_json(value), "terms": term_map }), json!({ "h": h, "stencil": "central, second order" }));
    if let Some(v) = p.raw("element") {
        let elt = JacobiElement::from_json(v, "params.element")?;
        if elt.n() != 1 || elt.m() != 1 {
            return Err(JobError::usage("params.element", "expected an element of the n = m = 1 Jacobi group"));
        }
        let e = elt.clone();
        let slashed = SmoothFunction::new(
            move |t, w| {
                let (t2, w2) = act_11(&e, t, w);
                j_nh(k, m as f64, &e, t, w) * sample(t2, w2)
            },
            1.0,
        );
        let lhs = jacobi_core::maass_ops::casimir_km(&slashed, k, m, tau, z, h)?;
        let (t2, z2) = act_11(&elt, tau, z);
        let rhs = jacobi_core::maass_ops::casimir_km(&f, k, m, t2, z2, h)? * j_nh(k, m as f64, &elt, tau, z);
        out.residuals.insert("invariance".into(), (lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE));
    }
    Ok(out)
}

fn multiplicity_job(p: &Params) -> Result<Output, JobError> {
    let m = u32::try_from(p.usize_or("m", None)?).map_err(|_| JobError::usage("params.m", "out of range"))?;
    let n = u32::try_from(p.usize_or("n", None)?).map_err(|_| JobError::usage("params.n", "out of range"))?;
    let taus = p.req("taus")?.as_array().ok_or_else(|| JobError::usage("params.taus", "expected an array of integers"))?;
    let taus = taus
        .iter()
        .enumerate()
        .map(|(i, t)| t.as_u64().ok_or_else(|| JobError::usage(&format!("params.taus[{i}]"), "expected a non-negative integer")))
        .collect::<Result<Vec<_>, _>>()?;
    let w = HighestWeight::new(taus, m, n)?;
    Ok(Output::value(json!({ "value": multiplicity(&w)? }), json!({ "exact": true })))
}
