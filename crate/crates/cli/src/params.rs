//! Field-path aware decoding of job parameters.

use crate::JobError;
use jacobi_core::encoding::{json_to_cmat, json_to_complex, json_to_rmat};
use jacobi_core::matrix_core::{c64, CMat, RMat};
use num_complex::Complex64;
use serde_json::{Map, Value};

pub struct Params<'a> {
    map: &'a Map<String, Value>,
}

fn path(key: &str) -> String {
    format!("params.{key}")
}

impl<'a> Params<'a> {
    pub fn new(v: &'a Value) -> Result<Self, JobError> {
        v.as_object().map(|map| Self { map }).ok_or_else(|| JobError::usage("params", "expected an object"))
    }

    pub fn raw(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    pub fn req(&self, key: &str) -> Result<&'a Value, JobError> {
        self.raw(key).ok_or_else(|| JobError::usage(&path(key), "missing field"))
    }

    pub fn usize_or(&self, key: &str, default: Option<usize>) -> Result<usize, JobError> {
        match (self.raw(key), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(JobError::usage(&path(key), "missing field")),
            (Some(v), _) => match v.as_u64() {
                Some(x) if x > 0 => Ok(x as usize),
                _ => Err(JobError::usage(&path(key), "expected a positive integer")),
            },
        }
    }

    pub fn int(&self, key: &str) -> Result<i64, JobError> {
        self.req(key)?.as_i64().ok_or_else(|| JobError::usage(&path(key), "expected an integer"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, JobError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| JobError::usage(&path(key), "expected a number")),
        }
    }

    pub fn str_or(&self, key: &str, default: &'a str) -> Result<&'a str, JobError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| JobError::usage(&path(key), "expected a string")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, JobError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| JobError::usage(&path(key), "expected a boolean")),
        }
    }

    pub fn complex(&self, key: &str) -> Result<Complex64, JobError> {
        Ok(json_to_complex(self.req(key)?, &path(key))?)
    }

    pub fn complex_or(&self, key: &str, default: Complex64) -> Result<Complex64, JobError> {
        match self.raw(key) {
            None => Ok(default),
            Some(_) => self.complex(key),
        }
    }

    pub fn reals(&self, key: &str, len: usize) -> Result<Vec<f64>, JobError> {
        let Some(v) = self.raw(key) else { return Ok(vec![0.0; len]) };
        let a = v.as_array().ok_or_else(|| JobError::usage(&path(key), "expected an array of numbers"))?;
        if a.len() != len {
            return Err(JobError::usage(&path(key), format!("expected {len} entries, got {}", a.len())));
        }
        a.iter()
            .enumerate()
            .map(|(i, x)| x.as_f64().ok_or_else(|| JobError::usage(&format!("{}[{i}]", path(key)), "expected a number")))
            .collect()
    }

    pub fn rmat(&self, key: &str, rows: usize, cols: usize) -> Result<RMat, JobError> {
        let m = json_to_rmat(self.req(key)?, &path(key))?;
        if m.shape() != (rows, cols) {
            return Err(JobError::usage(&path(key), format!("expected {rows}x{cols}, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(m)
    }

    /// Complex matrix, either with `[re, im]` entries or with rows of
    /// interleaved `re, im` numbers (`[[0, 1]]` is the 1x1 matrix `i`).
    pub fn cmat(&self, key: &str, rows: usize, cols: usize) -> Result<CMat, JobError> {
        let m = json_to_cmat(self.req(key)?, &path(key))?;
        if m.shape() == (rows, cols) {
            return Ok(m);
        }
        if m.shape() == (rows, 2 * cols) && m.iter().all(|z| z.im == 0.0) {
            return Ok(CMat::from_fn(rows, cols, |i, j| c64(m[(i, 2 * j)].re, m[(i, 2 * j + 1)].re)));
        }
        Err(JobError::usage(&path(key), format!("expected a complex {rows}x{cols} matrix, got {}x{}", m.nrows(), m.ncols())))
    }
}
