//! Measurement file formats.
//!
//! CSV: header `x_re,x_im,y_re,y_im`, one pair per row.
//! Binary: magic `FECM0001` followed by little-endian `f64` quadruples in
//! the same column order.
//! Metadata lives in an optional sidecar `<file>.meta.json`.

use super::MeasurementMeta;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const BINARY_MAGIC: &[u8; 8] = b"FECM0001";
pub const CSV_HEADER: [&str; 4] = ["x_re", "x_im", "y_re", "y_im"];

pub type RawPairs = (Vec<Complex64>, Vec<Complex64>);

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn parse_error(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads raw `(x, y)` pairs, detecting the format from the magic bytes.
pub fn read_pairs(path: &Path) -> Result<RawPairs> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(path, &bytes[BINARY_MAGIC.len()..])
    } else {
        read_csv(path, &bytes)
    }
}

fn read_binary(path: &Path, body: &[u8]) -> Result<RawPairs> {
    if body.len() % 32 != 0 {
        return Err(parse_error(
            path,
            (body.len() / 32 + 1) as u64,
            format!("truncated record: {} trailing bytes", body.len() % 32),
        ));
    }
    let mut x = Vec::with_capacity(body.len() / 32);
    let mut y = Vec::with_capacity(body.len() / 32);
    for (i, rec) in body.chunks_exact(32).enumerate() {
        let v: Vec<f64> = rec
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        if v.iter().any(|f| !f.is_finite()) {
            return Err(parse_error(path, i as u64 + 1, "non-finite value"));
        }
        x.push(Complex64::new(v[0], v[1]));
        y.push(Complex64::new(v[2], v[3]));
    }
    Ok((x, y))
}

fn read_csv(path: &Path, bytes: &[u8]) -> Result<RawPairs> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = rdr.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(parse_error(
            path,
            1,
            format!("expected header {}, found {}", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(parse_error(path, line, format!("expected 4 columns, found {}", rec.len())));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .ok_or_else(|| parse_error(path, line, format!("invalid number '{field}'")))?;
        }
        x.push(Complex64::new(v[0], v[1]));
        y.push(Complex64::new(v[2], v[3]));
    }
    Ok((x, y))
}

pub fn write_csv(path: &Path, x: &[Complex64], y: &[Complex64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for (a, b) in x.iter().zip(y) {
        writeln!(w, "{},{},{},{}", a.re, a.im, b.re, b.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary(path: &Path, x: &[Complex64], y: &[Complex64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    for (a, b) in x.iter().zip(y) {
        for v in [a.re, a.im, b.re, b.im] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<Option<MeasurementMeta>> {
    let p = meta_path(path);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_slice(&fs::read(p)?)?))
}

pub fn write_meta(path: &Path, meta: &MeasurementMeta) -> Result<()> {
    let mut s = serde_json::to_string_pretty(meta)?;
    s.push('\n');
    fs::write(meta_path(path), s)?;
    Ok(())
}
