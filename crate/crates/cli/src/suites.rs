//! Seeded property suites. Each case draws its inputs from one sequential
//! RNG stream, so the report depends only on `(suite, seed, count)`.

use crate::{JobError, JobResult};
use jacobi_core::automorphy::{act_11, j_nh, theta_multiplier};
use jacobi_core::encoding::{cmat_to_json, complex_to_json, rmat_to_json};
use jacobi_core::groups::{embed_sl2, iwasawa_matrix, mobius, JacobiElement, SiegelJacobiPoint, SymplecticElement};
use jacobi_core::maass_ops::{casimir_km, SmoothFunction, DEFAULT_STEP};
use jacobi_core::maslov::{cocycle_clm, cocycle_sl2, maslov3, maslov_chain, maslov_tau_l, Lagrangian};
use jacobi_core::matrix_core::{c64, to_complex, ComplexSymMatrix, RMat};
use jacobi_core::random::*;
use jacobi_core::schrodinger_weil::{check_covariance, grid17, r_tilde_apply, state_residual, GaussianState, IndexMatrix, WeilRep, WordElement};
use jacobi_core::theta::{check_gamma_invariance, siegel_theta, theta_m, theta_product, theta_weight_quarter, GammaNGenerator, GnPoint};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

/// Failure exemplars kept per report.
pub const MAX_EXEMPLARS: usize = 5;

/// Truncation tolerance for theta evaluations inside the suites.
const THETA_TOL: f64 = 1e-14;
const GAMMA_N_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    MaslovAxioms,
    Cocycles,
    Covariance,
    ThetaLaws,
    CasimirInvariance,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::MaslovAxioms, Suite::Cocycles, Suite::Covariance, Suite::ThetaLaws, Suite::CasimirInvariance];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MaslovAxioms => "maslov-axioms",
            Suite::Cocycles => "cocycles",
            Suite::Covariance => "covariance",
            Suite::ThetaLaws => "theta-laws",
            Suite::CasimirInvariance => "casimir-invariance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Pass threshold on the maximum residual when no `tol` is given.
    pub fn default_threshold(self) -> f64 {
        match self {
            Suite::MaslovAxioms => 0.0,
            Suite::Cocycles => 1e-12,
            Suite::Covariance => 1e-9,
            Suite::ThetaLaws => 1e-8,
            Suite::CasimirInvariance => 1e-4,
        }
    }
}

#[derive(Default)]
struct Check {
    max: f64,
    cases: usize,
    failures: usize,
}

struct Recorder {
    threshold: f64,
    checks: BTreeMap<&'static str, Check>,
    exemplars: Vec<Value>,
    errors: usize,
}

impl Recorder {
    fn new(threshold: f64) -> Self {
        Self { threshold, checks: BTreeMap::new(), exemplars: Vec::new(), errors: 0 }
    }

    fn keep(&mut self, v: impl FnOnce() -> Value) {
        if self.exemplars.len() < MAX_EXEMPLARS {
            self.exemplars.push(v());
        }
    }

    fn record(&mut self, check: &'static str, case: usize, residual: f64, inputs: impl FnOnce() -> Value) {
        let c = self.checks.entry(check).or_default();
        c.cases += 1;
        if residual.is_nan() || residual > self.threshold {
            c.failures += 1;
            c.max = if residual.is_nan() { f64::INFINITY } else { c.max.max(residual) };
            self.keep(|| json!({ "check": check, "case": case, "residual": residual, "inputs": inputs() }));
        } else {
            c.max = c.max.max(residual);
        }
    }

    fn outcome<E: std::fmt::Display>(&mut self, check: &'static str, case: usize, r: Result<f64, E>, inputs: impl FnOnce() -> Value) {
        match r {
            Ok(x) => self.record(check, case, x, inputs),
            Err(e) => {
                self.errors += 1;
                self.checks.entry(check).or_default().cases += 1;
                self.keep(|| json!({ "check": check, "case": case, "error": e.to_string(), "inputs": inputs() }));
            }
        }
    }

    fn finish(self, suite: Suite, seed: u64, count: usize, explicit_tol: Option<f64>, start: Instant) -> JobResult {
        let failures: usize = self.checks.values().map(|c| c.failures).sum();
        let max = self.checks.values().map(|c| c.max).fold(0.0, f64::max);
        let checks: BTreeMap<&str, Value> = self
            .checks
            .iter()
            .map(|(k, c)| (*k, json!({ "max_residual": finite(c.max), "cases": c.cases, "failures": c.failures })))
            .collect();
        let mut residuals = BTreeMap::new();
        residuals.insert("max".to_string(), max);
        JobResult {
            command: "verify-suite".into(),
            inputs: json!({ "command": "verify-suite", "params": { "name": suite.name(), "count": count }, "tol": explicit_tol, "seed": seed }),
            outputs: json!({
                "suite": suite.name(),
                "checks": checks,
                "failures": failures,
                "errors": self.errors,
                "exemplars": self.exemplars,
            }),
            certification: json!({ "threshold": self.threshold, "exemplar_limit": MAX_EXEMPLARS }),
            residuals,
            tol: self.threshold,
            pass: failures == 0 && self.errors == 0,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn verify_suite(suite: Suite, seed: u64, count: usize, tol: Option<f64>) -> Result<JobResult, JobError> {
    if count == 0 {
        return Err(JobError::usage("params.count", "expected a positive integer"));
    }
    let start = Instant::now();
    let mut rec = Recorder::new(tol.unwrap_or(suite.default_threshold()));
    let mut r = rng(seed);
    match suite {
        Suite::MaslovAxioms => maslov_axioms(&mut rec, &mut r, count),
        Suite::Cocycles => cocycles(&mut rec, &mut r, count),
        Suite::Covariance => covariance(&mut rec, &mut r, count),
        Suite::ThetaLaws => theta_laws(&mut rec, &mut r, count),
        Suite::CasimirInvariance => casimir_invariance(&mut rec, &mut r, count),
    }
    Ok(rec.finish(suite, seed, count, tol, start))
}

fn bases(ls: &[Lagrangian]) -> Value {
    Value::Array(ls.iter().map(|l| rmat_to_json(l.basis())).collect())
}

fn sp_json(gs: &[SymplecticElement]) -> Value {
    Value::Array(gs.iter().map(|g| g.to_json()).collect())
}

fn int_residual(a: i64, b: i64) -> f64 {
    (a - b).abs() as f64
}

/// Circular permutation and symplectic invariance of the 4-chain,
/// antisymmetry, the four-term relation, the auxiliary decomposition for
/// `d` in `3..=6`, the paired swap of the 4-chain and the `tau_l` relation.
fn maslov_axioms(rec: &mut Recorder, r: &mut SuiteRng, count: usize) {
    for case in 0..count {
        let big_n = case % 3 + 1;
        let d = 3 + case % 4;
        let ls: Vec<Lagrangian> = (0..6).map(|_| Lagrangian::new(random_lagrangian_basis(r, big_n)).expect("random Lagrangian")).collect();
        let aux = Lagrangian::new(random_lagrangian_basis(r, big_n)).expect("random Lagrangian");
        let g = random_symplectic(r, big_n, 6);
        let gs: Vec<SymplecticElement> = (0..3).map(|_| random_symplectic(r, big_n, 5)).collect();
        let inputs = || json!({ "N": big_n, "lagrangians": bases(&ls), "auxiliary": rmat_to_json(aux.basis()), "g": g.to_json(), "g123": sp_json(&gs) });
        let t = |a: usize, b: usize, c: usize| maslov3(&ls[a], &ls[b], &ls[c]);
        let four = &ls[..4];

        let res = (|| {
            let moved = four.iter().map(|l| l.transform(&g)).collect::<Result<Vec<_>, _>>()?;
            Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(maslov_chain(four)?, maslov_chain(&moved)?))
        })();
        rec.outcome("a_invariance", case, res, inputs);
        let res = (|| {
            let mut rot = four.to_vec();
            rot.rotate_left(1);
            Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(maslov_chain(four)?, maslov_chain(&rot)?))
        })();
        rec.outcome("a_cyclic", case, res, inputs);
        let res = (|| {
            let v = t(0, 1, 2)?;
            Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(t(1, 0, 2)?, -v).max(int_residual(t(0, 2, 1)?, -v)))
        })();
        rec.outcome("b_antisymmetry", case, res, inputs);
        let res = (|| Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(t(0, 1, 2)?, t(0, 1, 3)? + t(1, 2, 3)? + t(2, 0, 3)?)))();
        rec.outcome("c_four_term", case, res, inputs);
        let res = (|| {
            let mut s = 0;
            for i in 0..d {
                s += maslov3(&ls[i], &ls[(i + 1) % d], &aux)?;
            }
            Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(maslov_chain(&ls[..d])?, s))
        })();
        rec.outcome("d_auxiliary", case, res, inputs);
        let res = (|| {
            let swapped = [ls[1].clone(), ls[0].clone(), ls[3].clone(), ls[2].clone()];
            Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(maslov_chain(four)?, -maslov_chain(&swapped)?))
        })();
        rec.outcome("e_swap", case, res, inputs);
        let res = (|| {
            let tl = |a: &SymplecticElement, b: &SymplecticElement| maslov_tau_l(&ls[0], a, b);
            let lhs = tl(&gs[0].mul(&gs[1]), &gs[2])? + tl(&gs[0], &gs[1])?;
            let rhs = tl(&gs[0], &gs[1].mul(&gs[2]))? + tl(&gs[1], &gs[2])?;
            Ok::<_, jacobi_core::maslov::MaslovError>(int_residual(lhs, rhs))
        })();
        rec.outcome("g_tau_l", case, res, inputs);
    }
}

fn sl2_json(m: &Matrix2<f64>) -> Value {
    json!([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]])
}

/// `count` SL(2) pairs against the closed form, then `count / 5` (at least
/// one) triples in `Sp(2)` for the cocycle condition.
fn cocycles(rec: &mut Recorder, r: &mut SuiteRng, count: usize) {
    let l1 = Lagrangian::vertical(1);
    for case in 0..count {
        let (m1, m2) = (random_sl2(r), random_sl2(r));
        let res = (|| {
            let c = cocycle_clm(1.0, &l1, &embed_sl2(&m1, 1)?, &embed_sl2(&m2, 1)?)?;
            Ok::<_, Box<dyn std::error::Error>>(c.phase_distance(&cocycle_sl2(&m1, &m2, 1)))
        })();
        rec.outcome("clm_vs_sl2", case, res, || json!({ "M1": sl2_json(&m1), "M2": sl2_json(&m2) }));
    }
    let l2 = Lagrangian::vertical(2);
    for case in 0..(count / 5).max(1) {
        let g: Vec<SymplecticElement> = (0..3).map(|_| random_symplectic(r, 2, 5)).collect();
        let res = (|| {
            let c = |a: &SymplecticElement, b: &SymplecticElement| cocycle_clm(1.0, &l2, a, b).map(|u| u.value());
            let lhs = c(&g[0].mul(&g[1]), &g[2])? * c(&g[0], &g[1])?;
            let rhs = c(&g[0], &g[1].mul(&g[2]))? * c(&g[1], &g[2])?;
            Ok::<_, jacobi_core::maslov::MaslovError>((lhs / rhs).arg().abs())
        })();
        rec.outcome("cocycle_condition", case, res, || json!({ "g": sp_json(&g) }));
    }
}

/// `count` random elements for each of `n = 1, 2` (`m = 1`), five points each.
fn covariance(rec: &mut Recorder, r: &mut SuiteRng, count: usize) {
    for case in 0..count {
        for (n, check) in [(1, "covariance_n1"), (2, "covariance_n2")] {
            let mm = IndexMatrix::new(random_spd(r, 1, 0.5, 0.7)).expect("positive by construction");
            let elt = WordElement { word: random_word(r, n, 6), other_sheet: uniform(r, 0.0, 1.0) < 0.5, h: random_heis(r, 1, n, 1.0) };
            let rep = WeilRep::new(mm.clone());
            let grid = grid17(1, n);
            for _ in 0..5 {
                let p = random_point(r, n, 1);
                let res = check_covariance(&rep, &elt, &p, &grid);
                rec.outcome(check, case, res, || json!({ "M": mm.to_json(), "element": elt.to_json(), "point": p.to_json() }));
            }
        }
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn int_sym(r: &mut SuiteRng, n: usize) -> RMat {
    let a = RMat::from_fn(n, n, |_, _| uniform(r, -3.0, 3.0).round());
    RMat::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] })
}

fn random_state(r: &mut SuiteRng, n: usize) -> GaussianState {
    let p = random_point(r, n, 1);
    let c = c64(uniform(r, 0.5, 1.5), uniform(r, -0.5, 0.5));
    GaussianState::new(c, p.omega, p.z).expect("valid by construction")
}

fn gn_json(p: &GnPoint) -> Value {
    json!({ "tau": complex_to_json(p.tau), "theta": p.theta, "lambda": p.lambda, "mu": p.mu })
}

/// Siegel and `theta_M` translation laws, the `Gamma_0(4)` multiplier,
/// `Gamma[n]` invariance of the theta product for `n = 1, 2`, rotation
/// additivity, and once per run the `n = 1` inversion law.
fn theta_laws(rec: &mut Recorder, r: &mut SuiteRng, count: usize) {
    for (i, y) in [2.0f64, 3.0, 5.0].into_iter().enumerate() {
        let res = (|| {
            let a = siegel_theta(&ComplexSymMatrix::i_times(1, 1.0 / y), THETA_TOL)?.value;
            let b = siegel_theta(&ComplexSymMatrix::i_times(1, y), THETA_TOL)?.value * y.sqrt();
            Ok::<_, jacobi_core::theta::ThetaError>((a - b).norm())
        })();
        rec.outcome("siegel_inversion", i, res, || json!({ "y": y }));
    }
    for case in 0..count {
        let n = case % 2 + 1;
        let omega = random_omega(r, n);
        let b = int_sym(r, n);
        let res = (|| {
            let shifted = ComplexSymMatrix::new(omega.matrix() + to_complex(&(&b * 2.0)))?;
            Ok::<_, jacobi_core::theta::ThetaError>(rel(siegel_theta(&shifted, THETA_TOL)?.value, siegel_theta(&omega, THETA_TOL)?.value))
        })();
        rec.outcome("siegel_translation", case, res, || json!({ "omega": cmat_to_json(omega.matrix()), "b": rmat_to_json(&b) }));

        let m = (case / 2) % 2 + 1;
        let mm = IndexMatrix::new(RMat::from_fn(m, m, |i, j| if i == j { 2.0 } else { 1.0 })).expect("positive definite");
        let p = random_point(r, n, m);
        let mu = RMat::from_fn(m, n, |_, _| uniform(r, -3.0, 3.0).round());
        let res = (|| {
            let a = theta_m(&mm, &p, THETA_TOL)?.value;
            let q = SiegelJacobiPoint::new(p.omega.clone(), &p.z + to_complex(&mu))?;
            let neg = SiegelJacobiPoint::new(p.omega.clone(), -&p.z)?;
            let t = rel(theta_m(&mm, &q, THETA_TOL)?.value, a);
            Ok::<_, jacobi_core::theta::ThetaError>((t, rel(theta_m(&mm, &neg, THETA_TOL)?.value, a)))
        })();
        let inputs = || json!({ "M": mm.to_json(), "point": p.to_json(), "mu": rmat_to_json(&mu) });
        let res = res.map_err(|e| e.to_string());
        rec.outcome("theta_m_translation", case, res.clone().map(|x| x.0), inputs);
        rec.outcome("theta_m_parity", case, res.map(|x| x.1), inputs);

        let g = random_gamma0_4(r, 50);
        let tau = c64(uniform(r, -0.5, 0.5), uniform(r, 0.8, 1.5));
        let res = (|| {
            let gm = Matrix2::new(g[0] as f64, g[1] as f64, g[2] as f64, g[3] as f64);
            let q = theta_weight_quarter(mobius(&gm, tau), THETA_TOL)?.value / theta_weight_quarter(tau, THETA_TOL)?.value;
            Ok::<_, jacobi_core::theta::ThetaError>((q - theta_multiplier(g, tau)?).norm())
        })();
        rec.outcome("multiplier", case, res, || json!({ "gamma": g, "tau": complex_to_json(tau) }));

        for nn in 1..=2usize {
            let f = random_state(r, nn);
            let g = random_state(r, nn);
            let p = GnPoint {
                tau: c64(uniform(r, -1.0, 1.0), uniform(r, 0.6, 2.0)),
                theta: uniform(r, 0.0, 2.0 * PI),
                lambda: (0..nn).map(|_| uniform(r, -1.0, 1.0)).collect(),
                mu: (0..nn).map(|_| uniform(r, -1.0, 1.0)).collect(),
            };
            let a: Vec<i64> = (0..nn).map(|_| uniform(r, -3.0, 3.0).round() as i64).collect();
            let b: Vec<i64> = (0..nn).map(|_| uniform(r, -3.0, 3.0).round() as i64).collect();
            let inputs = || json!({ "f": f.to_json(), "g": g.to_json(), "point": gn_json(&p), "a": a, "b": b });
            let scale = theta_product(&f, &g, &p, GAMMA_N_TOL).map(|v| v.norm().max(1.0)).map_err(|e| e.to_string());
            for (check, gen) in [
                ("gamma_n_lattice", GammaNGenerator::Lattice(a.clone(), b.clone())),
                ("gamma_n_t", GammaNGenerator::TShift),
                ("gamma_n_sigma", GammaNGenerator::Sigma),
            ] {
                let res = scale.clone().and_then(|s| Ok(check_gamma_invariance(&f, &g, &gen, &p, GAMMA_N_TOL).map_err(|e| e.to_string())? / s));
                rec.outcome(check, case, res, inputs);
            }
        }

        let f = random_state(r, n);
        let (a, b) = (uniform(r, -7.0, 7.0), uniform(r, -7.0, 7.0));
        let res = (|| {
            let one = IndexMatrix::identity(1);
            let i = c64(0.0, 1.0);
            let two = r_tilde_apply(&one, i, a, &r_tilde_apply(&one, i, b, &f)?)?;
            let sum = r_tilde_apply(&one, i, a + b, &f)?;
            Ok::<_, jacobi_core::schrodinger_weil::WeilError>(state_residual(&one, &two, &sum, &grid17(1, n)))
        })();
        rec.outcome("rotation_additivity", case, res, || json!({ "f": f.to_json(), "theta1": a, "theta2": b }));
    }
}

/// Smooth non-holomorphic test function on `H x C`.
pub fn casimir_sample(tau: Complex64, z: Complex64) -> Complex64 {
    let (tb, zb) = (tau.conj(), z.conj());
    (tau * c64(0.3, 0.2) + tb * c64(-0.1, 0.4) + z * c64(0.5, -0.3) + zb * c64(0.2, 0.1) + z * zb * 0.15 + z * z * c64(0.05, 0.1)).exp()
        + (tau * tb).sqrt() * (z - zb * c64(0.0, 0.5)).cos()
}

/// Element of the `n = m = 1` Jacobi group within `scale` of the identity.
pub fn near_identity(r: &mut SuiteRng, scale: f64) -> JacobiElement {
    let g = iwasawa_matrix(c64(uniform(r, -scale, scale), uniform(r, -scale, scale).exp()), uniform(r, -scale, scale));
    JacobiElement::new(embed_sl2(&g, 1).expect("det 1"), random_heis(r, 1, 1, scale)).expect("valid by construction")
}

/// Relative defect of `C(F|g) = (CF)|g` at `(tau, z)`.
pub fn casimir_defect(elt: &JacobiElement, k: i32, m: u32, tau: Complex64, z: Complex64, h: f64) -> Result<f64, jacobi_core::maass_ops::MaassError> {
    let e = elt.clone();
    let slashed = SmoothFunction::new(
        move |t, w| {
            let (t2, w2) = act_11(&e, t, w);
            j_nh(k, m as f64, &e, t, w) * casimir_sample(t2, w2)
        },
        1.0,
    );
    let lhs = casimir_km(&slashed, k, m, tau, z, h)?;
    let (t2, z2) = act_11(elt, tau, z);
    let rhs = casimir_km(&SmoothFunction::new(casimir_sample, 1.0), k, m, t2, z2, h)? * j_nh(k, m as f64, elt, tau, z);
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// `count` near-identity elements (scale 0.1), weight `k` in `0..5`, index
/// `m` in `1..3`, five base points each, at the default step.
fn casimir_invariance(rec: &mut Recorder, r: &mut SuiteRng, count: usize) {
    for case in 0..count {
        let elt = near_identity(r, 0.1);
        let k = (uniform(r, 0.0, 5.0).floor() as i32).min(4);
        let m = if uniform(r, 0.0, 1.0) < 0.5 { 1 } else { 2 };
        for _ in 0..5 {
            let tau = c64(uniform(r, -0.5, 0.5), uniform(r, 0.8, 1.5));
            let z = c64(uniform(r, -0.5, 0.5), uniform(r, -0.5, 0.5));
            let res = casimir_defect(&elt, k, m, tau, z, DEFAULT_STEP);
            rec.outcome("invariance", case, res, || {
                json!({ "element": elt.to_json(), "k": k, "m": m, "tau": complex_to_json(tau), "z": complex_to_json(z), "h": DEFAULT_STEP })
            });
        }
    }
}
