//! Matrix and state-vector JSON files.
//!
//! Schema:
//! `{"kind":"hermitian"|"state", "dim":N, "format":"dense"|"coo",
//!   "entries":[[row,col,re,im],...]}` or `"amplitudes":[[re,im],...]`.
//!
//! COO stores the upper triangle plus diagonal; the loader mirrors the
//! conjugates below the diagonal. Reals are written with 17 significant
//! digits, so a write/read cycle reproduces every `f64` bit-exactly and
//! identical inputs produce byte-identical files.

use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::dense::CMatrix;
use crate::matrix::{HermitianMatrix, MatrixError, StateVector, Storage};
use crate::Complex;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a Hermitian matrix; `coo` keeps only the upper triangle.
pub fn matrix_to_json(h: &HermitianMatrix) -> String {
    let dim = h.dim();
    let mut out = String::new();
    match h.storage() {
        Storage::Dense(m) => {
            out.push_str(&format!(
                "{{\"kind\":\"hermitian\",\"dim\":{dim},\"format\":\"dense\",\"entries\":["
            ));
            let mut first = true;
            for r in 0..dim {
                for c in 0..dim {
                    let z = m[(r, c)];
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    out.push_str(&format!(
                        "[{r},{c},{},{}]",
                        fmt_real(z.re),
                        fmt_real(z.im)
                    ));
                }
            }
            out.push_str("]}");
        }
        Storage::Sparse(rows) => {
            out.push_str(&format!(
                "{{\"kind\":\"hermitian\",\"dim\":{dim},\"format\":\"coo\",\"entries\":["
            ));
            let mut first = true;
            for (r, row) in rows.iter().enumerate() {
                for &(c, z) in row {
                    if c < r {
                        continue; // lower triangle is implied
                    }
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    out.push_str(&format!(
                        "[{r},{c},{},{}]",
                        fmt_real(z.re),
                        fmt_real(z.im)
                    ));
                }
            }
            out.push_str("]}");
        }
    }
    out
}

pub fn state_to_json(psi: &StateVector) -> String {
    let mut out = format!(
        "{{\"kind\":\"state\",\"dim\":{},\"format\":\"dense\",\"amplitudes\":[",
        psi.dim()
    );
    let mut first = true;
    for a in psi.amplitudes() {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&format!("[{},{}]", fmt_real(a.re), fmt_real(a.im)));
    }
    out.push_str("]}");
    out
}

fn get_u64(v: &Value, key: &str) -> Result<u64, IoError> {
    v.get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Schema(format!("missing or invalid \"{key}\"")))
}

fn get_str<'a>(v: &'a Value, key: &str) -> Result<&'a str, IoError> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| IoError::Schema(format!("missing or invalid \"{key}\"")))
}

fn entry_f64(e: &Value, idx: usize) -> Result<f64, IoError> {
    e.get(idx)
        .and_then(Value::as_f64)
        .ok_or_else(|| IoError::Schema("entry component is not a number".into()))
}

pub fn matrix_from_json(text: &str) -> Result<HermitianMatrix, IoError> {
    let v: Value = serde_json::from_str(text)?;
    if get_str(&v, "kind")? != "hermitian" {
        return Err(IoError::Schema("expected kind \"hermitian\"".into()));
    }
    let dim = get_u64(&v, "dim")? as usize;
    let format = get_str(&v, "format")?;
    let entries = v
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Schema("missing \"entries\" array".into()))?;
    match format {
        "dense" => {
            let mut m = CMatrix::zeros(dim, dim);
            for e in entries {
                let r = entry_f64(e, 0)? as usize;
                let c = entry_f64(e, 1)? as usize;
                if r >= dim || c >= dim {
                    return Err(IoError::Schema(format!("entry ({r},{c}) out of range")));
                }
                m[(r, c)] = Complex::new(entry_f64(e, 2)?, entry_f64(e, 3)?);
            }
            Ok(HermitianMatrix::from_dense(m)?)
        }
        "coo" => {
            let mut rows: Vec<Vec<(usize, Complex)>> = vec![Vec::new(); dim];
            for e in entries {
                let r = entry_f64(e, 0)? as usize;
                let c = entry_f64(e, 1)? as usize;
                if r >= dim || c >= dim {
                    return Err(IoError::Schema(format!("entry ({r},{c}) out of range")));
                }
                if r > c {
                    return Err(IoError::Schema(format!(
                        "coo entry ({r},{c}) below the diagonal"
                    )));
                }
                let z = Complex::new(entry_f64(e, 2)?, entry_f64(e, 3)?);
                if z == Complex::ZERO {
                    continue;
                }
                rows[r].push((c, z));
                if r != c {
                    rows[c].push((r, z.conj()));
                }
            }
            for row in &mut rows {
                row.sort_by_key(|&(c, _)| c);
            }
            Ok(HermitianMatrix::from_sparse_rows(dim, rows)?)
        }
        other => Err(IoError::Schema(format!("unknown format \"{other}\""))),
    }
}

pub fn state_from_json(text: &str) -> Result<StateVector, IoError> {
    let v: Value = serde_json::from_str(text)?;
    if get_str(&v, "kind")? != "state" {
        return Err(IoError::Schema("expected kind \"state\"".into()));
    }
    let dim = get_u64(&v, "dim")? as usize;
    let amps = v
        .get("amplitudes")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Schema("missing \"amplitudes\" array".into()))?;
    if amps.len() != dim {
        return Err(IoError::Schema(format!(
            "amplitude count {} does not match dim {dim}",
            amps.len()
        )));
    }
    let mut out = Vec::with_capacity(dim);
    for a in amps {
        out.push(Complex::new(entry_f64(a, 0)?, entry_f64(a, 1)?));
    }
    Ok(StateVector::new(out))
}

pub fn write_matrix(path: &Path, h: &HermitianMatrix) -> Result<(), IoError> {
    std::fs::write(path, matrix_to_json(h))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<HermitianMatrix, IoError> {
    matrix_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_state(path: &Path, psi: &StateVector) -> Result<(), IoError> {
    std::fs::write(path, state_to_json(psi))?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<StateVector, IoError> {
    state_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::sampling::SeededRng;

    #[test]
    fn dense_round_trip_is_exact() {
        let mut rng = SeededRng::new(1, 0);
        let h = generate::hermitian_dense(6, &mut rng);
        let text = matrix_to_json(&h);
        let back = matrix_from_json(&text).unwrap();
        assert_eq!(h, back);
        // And byte-identical on re-serialization.
        assert_eq!(text, matrix_to_json(&back));
    }

    #[test]
    fn coo_round_trip_mirrors_lower_triangle() {
        let mut rng = SeededRng::new(2, 0);
        let h = generate::sparse_hermitian(16, 3, &mut rng);
        let text = matrix_to_json(&h);
        assert!(text.contains("\"coo\""));
        let back = matrix_from_json(&text).unwrap();
        assert_eq!(h, back);
        for r in 0..16 {
            for c in 0..16 {
                assert_eq!(back.get(r, c), back.get(c, r).conj());
            }
        }
    }

    #[test]
    fn state_round_trip() {
        let mut rng = SeededRng::new(3, 0);
        let psi = generate::state_sparse(8, 3, &mut rng);
        let text = state_to_json(&psi);
        let back = state_from_json(&text).unwrap();
        assert_eq!(psi, back);
        assert_eq!(back.nnz(), 3);
    }

    #[test]
    fn rejects_lower_triangle_coo() {
        let text = r#"{"kind":"hermitian","dim":2,"format":"coo","entries":[[1,0,1.0,0.0]]}"#;
        assert!(matches!(matrix_from_json(text), Err(IoError::Schema(_))));
    }

    #[test]
    fn rejects_non_hermitian_dense_file() {
        let text = r#"{"kind":"hermitian","dim":2,"format":"dense","entries":[[0,0,1.0,0.0],[0,1,1.0,0.0],[1,0,0.5,0.0],[1,1,1.0,0.0]]}"#;
        assert!(matches!(matrix_from_json(text), Err(IoError::Matrix(_))));
    }

    #[test]
    fn seventeen_digit_reals() {
        let psi = StateVector::new(vec![Complex::new(std::f64::consts::PI, -1.0 / 3.0)]);
        let text = state_to_json(&psi);
        assert!(text.contains("3.1415926535897931e0"));
        let back = state_from_json(&text).unwrap();
        assert_eq!(back.amplitudes()[0].re, std::f64::consts::PI);
        assert_eq!(back.amplitudes()[0].im, -1.0 / 3.0);
    }
}
