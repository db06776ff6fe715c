//! Operator dumps, JSON matrices and fingerprinted CSV output.
//!
//! Binary dump layout (all little-endian): `u64 N`, `u64 D`, `u64 flags`, then
//! D·D entries in row-major order, each as `f64 re, f64 im`. Flag bit 0 marks
//! a Hermitian operator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, CMat};

pub const FLAG_HERMITIAN: u64 = 1;

pub fn write_operator_dump<W: Write>(mut w: W, m: &CMat) -> Result<()> {
    let d = m.nrows();
    if d == 0 || !d.is_power_of_two() || m.ncols() != d {
        return Err(Error::InvalidParameter(format!("{}x{} is not a qubit operator", d, m.ncols())));
    }
    let n = d.trailing_zeros() as u64;
    let flags = if linalg::hermiticity_defect(m) <= 1e-12 { FLAG_HERMITIAN } else { 0 };
    for h in [n, d as u64, flags] {
        w.write_all(&h.to_le_bytes())?;
    }
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a dump, returning the matrix and its flags.
pub fn read_operator_dump<R: Read>(mut r: R) -> Result<(CMat, u64)> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut r)?);
    let d = u64::from_le_bytes(next(&mut r)?) as usize;
    let flags = u64::from_le_bytes(next(&mut r)?);
    if n >= 32 || d != 1usize << n {
        return Err(Error::InvalidParameter(format!("corrupt dump header N={n} D={d}")));
    }
    let mut data = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let re = f64::from_le_bytes(next(&mut r)?);
        let im = f64::from_le_bytes(next(&mut r)?);
        data.push(C64::new(re, im));
    }
    Ok((Mat::from_fn(d, d, |i, j| data[i * d + j]), flags))
}

/// Small-matrix JSON form: row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for JsonMatrix {
    fn from(m: &CMat) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl JsonMatrix {
    pub fn to_mat(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: self.data.len(),
            });
        }
        Ok(Mat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            C64::new(re, im)
        }))
    }
}

/// Run identity written at the top of every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub version: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Fingerprint {
    pub fn new(seed: u64, tolerances: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tolerances: tolerances.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn header_line(&self) -> String {
        let mut s = format!("# lrcluster {} seed={}", self.version, self.seed);
        for (k, v) in &self.tolerances {
            let _ = write!(s, " {k}={v:e}");
        }
        s
    }
}

/// CSV text with a `#` fingerprint line, a header row and formatted rows.
pub fn csv_text(fp: Option<&Fingerprint>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    if let Some(fp) = fp {
        out.push_str(&fp.header_line());
        out.push('\n');
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Shortest round-trip representation, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn curve_csv(fp: Option<&Fingerprint>, curve: &crate::dynamics::Curve) -> String {
    let rows = curve.times.iter().zip(&curve.values).zip(&curve.steps).map(|((t, v), s)| {
        vec![fmt_f64(*t), fmt_f64(*v), s.to_string(), fmt_f64(curve.max_local_error)]
    });
    csv_text(fp, &["t", "value", "integrator_steps", "max_local_error"], rows)
}

pub fn spectrum_csv(fp: Option<&Fingerprint>, rows: &[(f64, f64, f64)]) -> String {
    csv_text(
        fp,
        &["re", "im", "residual"],
        rows.iter().map(|&(a, b, c)| vec![fmt_f64(a), fmt_f64(b), fmt_f64(c)]),
    )
}

/// JSON with a leading `#` fingerprint line.
pub fn json_text<T: Serialize>(fp: Option<&Fingerprint>, value: &T) -> Result<String> {
    let mut out = String::new();
    if let Some(fp) = fp {
        out.push_str(&fp.header_line());
        out.push('\n');
    }
    out.push_str(&serde_json::to_string_pretty(value)?);
    out.push('\n');
    Ok(out)
}

/// Drops leading `#` lines so fingerprinted JSON can be parsed back.
pub fn strip_fingerprint(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map(|(_, r)| r).unwrap_or("");
    }
    rest
}
