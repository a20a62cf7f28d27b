//! Sample readers and the JSON form of a fitted estimate.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::estimator::EstimateResult;

/// Reads one real number per line. Blank lines and lines starting with `#`
/// are skipped.
pub fn read_text_sample<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("{t:?}: {e}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Reads a packed little-endian f64 array.
pub fn read_binary_sample<R: Read>(mut reader: R) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("binary sample length {} is not a multiple of 8", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn write_binary_sample<W: Write>(mut writer: W, values: &[f64]) -> Result<()> {
    for v in values {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// `{J, M, A, B, n, coeffs}` with coefficients row-major by cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EstimateJson {
    pub J: usize,
    pub M: usize,
    pub A: f64,
    pub B: f64,
    pub n: usize,
    pub n_outside: usize,
    pub coeffs: Vec<f64>,
}

impl From<&EstimateResult> for EstimateJson {
    fn from(r: &EstimateResult) -> Self {
        Self {
            J: r.spec.degree,
            M: r.spec.cells,
            A: r.spec.lo,
            B: r.spec.hi,
            n: r.n,
            n_outside: r.n_outside,
            coeffs: r.coeffs.clone(),
        }
    }
}

impl TryFrom<EstimateJson> for EstimateResult {
    type Error = Error;

    fn try_from(j: EstimateJson) -> Result<Self> {
        let spec = BasisSpec::new(j.J, j.A, j.B, j.M)?;
        if j.coeffs.len() != j.M * (j.J + 1) {
            return Err(Error::param("coeffs", format!("expected {} values, got {}", j.M * (j.J + 1), j.coeffs.len())));
        }
        Ok(EstimateResult {
            spec,
            coeffs: j.coeffs,
            n: j.n,
            n_outside: j.n_outside,
        })
    }
}

pub fn estimate_to_json(r: &EstimateResult) -> String {
    serde_json::to_string_pretty(&EstimateJson::from(r)).expect("plain data serialises")
}

pub fn estimate_from_json(text: &str) -> Result<EstimateResult> {
    let j: EstimateJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    j.try_into()
}
