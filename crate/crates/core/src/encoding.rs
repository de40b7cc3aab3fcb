//! JSON encodings shared by the library types and the CLI: matrices are
//! row-major nested arrays, complex numbers are `[re, im]` pairs.

use crate::matrix_core::{c64, CMat, RMat};
use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("bad JSON at {path}: {msg}")]
pub struct DecodeError {
    pub path: String,
    pub msg: String,
}

impl DecodeError {
    pub fn new(path: &str, msg: impl Into<String>) -> Self {
        Self { path: path.to_string(), msg: msg.into() }
    }
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn rmat_to_json(m: &RMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!(m.row(i).iter().copied().collect::<Vec<f64>>())).collect())
}

pub fn cmat_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array(m.row(i).iter().map(|z| complex_to_json(*z)).collect()))
            .collect(),
    )
}

pub fn json_to_f64(v: &Value, path: &str) -> Result<f64, DecodeError> {
    v.as_f64().ok_or_else(|| DecodeError::new(path, "expected a number"))
}

/// Accepts `[re, im]` or a bare real number.
pub fn json_to_complex(v: &Value, path: &str) -> Result<Complex64, DecodeError> {
    if let Some(x) = v.as_f64() {
        return Ok(c64(x, 0.0));
    }
    match v.as_array() {
        Some(a) if a.len() == 2 => Ok(c64(
            json_to_f64(&a[0], &format!("{path}[0]"))?,
            json_to_f64(&a[1], &format!("{path}[1]"))?,
        )),
        _ => Err(DecodeError::new(path, "expected [re, im]")),
    }
}

fn rows<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, DecodeError> {
    let rows = v.as_array().ok_or_else(|| DecodeError::new(path, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(DecodeError::new(path, "empty matrix"));
    }
    Ok(rows)
}

pub fn json_to_rmat(v: &Value, path: &str) -> Result<RMat, DecodeError> {
    let rows = rows(v, path)?;
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, r) in rows.iter().enumerate() {
        let p = format!("{path}[{i}]");
        let r = r.as_array().ok_or_else(|| DecodeError::new(&p, "expected a row array"))?;
        if *ncols.get_or_insert(r.len()) != r.len() {
            return Err(DecodeError::new(&p, "ragged row"));
        }
        for (j, x) in r.iter().enumerate() {
            data.push(json_to_f64(x, &format!("{p}[{j}]"))?);
        }
    }
    Ok(RMat::from_row_slice(rows.len(), ncols.unwrap_or(0), &data))
}

pub fn json_to_cmat(v: &Value, path: &str) -> Result<CMat, DecodeError> {
    let rows = rows(v, path)?;
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, r) in rows.iter().enumerate() {
        let p = format!("{path}[{i}]");
        let r = r.as_array().ok_or_else(|| DecodeError::new(&p, "expected a row array"))?;
        if *ncols.get_or_insert(r.len()) != r.len() {
            return Err(DecodeError::new(&p, "ragged row"));
        }
        for (j, x) in r.iter().enumerate() {
            data.push(json_to_complex(x, &format!("{p}[{j}]"))?);
        }
    }
    Ok(CMat::from_row_slice(rows.len(), ncols.unwrap_or(0), &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let r = RMat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(json_to_rmat(&rmat_to_json(&r), "$").unwrap(), r);
        let c = CMat::from_row_slice(1, 2, &[c64(1.0, -1.0), c64(0.5, 2.0)]);
        assert_eq!(json_to_cmat(&cmat_to_json(&c), "$").unwrap(), c);
        assert_eq!(rmat_to_json(&r), json!([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]));
    }

    #[test]
    fn errors_carry_paths() {
        let e = json_to_rmat(&json!([[1.0], [1.0, 2.0]]), "$.g").unwrap_err();
        assert_eq!(e.path, "$.g[1]");
        let e = json_to_cmat(&json!([[[1.0, "x"]]]), "$.z").unwrap_err();
        assert_eq!(e.path, "$.z[0][0][1]");
    }
}
