//! Regular quasi-cyclic LDPC codes.
//!
//! A code is described by a base matrix of circulant shifts (`-1` marks an
//! all-zero block) and the lifting size `Z`. Block `(r, j)` with shift `s`
//! connects check `r*Z + t` to variable `j*Z + (t + s) mod Z`.

mod decoder;
mod encoder;

pub use decoder::{decode_layered_minsum, DecodeResult, DecoderParams, LayeredMinSum};

use crate::error::{Error, Result};
use crate::modem::BitFrame;
use crate::rng;
use encoder::Encoder;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

/// Supported regular profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    /// (dv, dc) = (3, 15).
    R080,
    /// (dv, dc) = (3, 20).
    R085,
    /// (dv, dc) = (3, 30).
    R090,
}

impl CodeRate {
    pub const ALL: [CodeRate; 3] = [CodeRate::R080, CodeRate::R085, CodeRate::R090];

    pub fn from_f64(rate: f64) -> Result<CodeRate> {
        CodeRate::ALL
            .into_iter()
            .find(|r| (r.value() - rate).abs() < 1e-9)
            .ok_or_else(|| Error::InvalidArgument(format!("unsupported code rate {rate} (use 0.8, 0.85 or 0.9)")))
    }

    pub fn value(&self) -> f64 {
        1.0 - self.dv() as f64 / self.dc() as f64
    }

    pub fn dv(&self) -> usize {
        3
    }

    pub fn dc(&self) -> usize {
        match self {
            CodeRate::R080 => 15,
            CodeRate::R085 => 20,
            CodeRate::R090 => 30,
        }
    }

    /// Lifting size giving a 38400-bit code.
    pub fn default_lifting(&self) -> usize {
        38_400 / self.dc()
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A quasi-cyclic LDPC code with its systematic encoder.
#[derive(Clone, Debug)]
pub struct QcLdpcCode {
    base: Vec<Vec<i32>>,
    z: usize,
    n: usize,
    k: usize,
    /// CSR adjacency of checks: variables of check `r` are
    /// `check_vars[check_ptr[r]..check_ptr[r + 1]]`.
    check_ptr: Vec<usize>,
    check_vars: Vec<usize>,
    encoder: Encoder,
}

impl QcLdpcCode {
    /// Builds a code from an explicit base matrix. Fails if the lifted graph
    /// contains 4-cycles.
    pub fn from_base_matrix(base: Vec<Vec<i32>>, z: usize) -> Result<QcLdpcCode> {
        let rows = base.len();
        if rows == 0 || z == 0 {
            return Err(Error::Construction("empty base matrix or zero lifting".into()));
        }
        let cols = base[0].len();
        if cols <= rows || base.iter().any(|r| r.len() != cols) {
            return Err(Error::Construction("base matrix must be rectangular with more columns than rows".into()));
        }
        if base.iter().flatten().any(|&s| s < -1 || s >= z as i32) {
            return Err(Error::Construction(format!("shift outside [-1, {z})")));
        }
        if let Some((i, j, a, b)) = find_four_cycle(&base, z) {
            return Err(Error::Construction(format!(
                "4-cycle through base rows {i},{j} and columns {a},{b}"
            )));
        }
        let n = cols * z;
        let m = rows * z;
        let mut check_ptr = Vec::with_capacity(m + 1);
        let mut check_vars = Vec::new();
        check_ptr.push(0);
        for row in &base {
            for t in 0..z {
                for (j, &s) in row.iter().enumerate() {
                    if s >= 0 {
                        check_vars.push(j * z + (t + s as usize) % z);
                    }
                }
                check_ptr.push(check_vars.len());
            }
        }
        if (0..m).any(|r| check_ptr[r + 1] == check_ptr[r]) {
            return Err(Error::Construction("base matrix has an all-zero row".into()));
        }
        let k = n - m;
        let encoder = Encoder::new(n, m, z, cols, k, &check_ptr, &check_vars)?;
        Ok(QcLdpcCode {
            base,
            z,
            n,
            k,
            check_ptr,
            check_vars,
            encoder,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of parity checks (rows of H).
    pub fn checks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn lifting(&self) -> usize {
        self.z
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn base_matrix(&self) -> &[Vec<i32>] {
        &self.base
    }

    /// Number of layers (base-matrix rows) used by the layered decoder.
    pub fn layers(&self) -> usize {
        self.base.len()
    }

    pub fn check(&self, r: usize) -> &[usize] {
        &self.check_vars[self.check_ptr[r]..self.check_ptr[r + 1]]
    }

    pub(crate) fn check_ptr(&self) -> &[usize] {
        &self.check_ptr
    }

    pub(crate) fn check_vars(&self) -> &[usize] {
        &self.check_vars
    }

    /// Maximum column weight and row weight of H.
    pub fn degrees(&self) -> (usize, usize) {
        let mut col = vec![0usize; self.n];
        for &v in &self.check_vars {
            col[v] += 1;
        }
        let dv = col.into_iter().max().unwrap_or(0);
        let dc = (0..self.checks()).map(|r| self.check(r).len()).max().unwrap_or(0);
        (dv, dc)
    }

    /// Positions of the information bits within a codeword.
    pub fn info_positions(&self) -> &[usize] {
        self.encoder.info_positions()
    }

    /// Short identifier, e.g. `qc-r0.8-z128`.
    pub fn id(&self) -> String {
        format!("qc-r{}-z{}", (self.rate() * 1000.0).round() / 1000.0, self.z)
    }

    /// SHA-256 over the lifting size and base matrix.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("z={}\n", self.z));
        for row in &self.base {
            let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            h.update(line.join(" "));
            h.update("\n");
        }
        hex::encode(h.finalize())
    }

    /// Systematic encoding: the information bits appear verbatim at
    /// [`QcLdpcCode::info_positions`].
    pub fn encode(&self, info: &BitFrame) -> Result<BitFrame> {
        if info.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: info.len(),
            });
        }
        BitFrame::new(self.encoder.encode(info.as_slice(), &self.check_ptr, &self.check_vars))
    }

    /// Number of unsatisfied parity checks.
    pub fn syndrome_weight(&self, bits: &BitFrame) -> Result<usize> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: bits.len(),
            });
        }
        Ok(self.syndrome_weight_raw(bits.as_slice()))
    }

    pub(crate) fn syndrome_weight_raw(&self, bits: &[u8]) -> usize {
        (0..self.checks())
            .filter(|&r| self.check(r).iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 1)
            .count()
    }
}

/// Builds the regular code of the given rate with lifting size `z`.
///
/// Circulant shifts are chosen column by column. The first row is all zeros
/// (a normalization that does not change the cycle structure); for each new
/// column, candidates are drawn from a stream seeded by `(dc, z)`, those
/// closing a 4-cycle are rejected, and among the first accepted candidates
/// the one closing the fewest 6-cycles is kept.
pub fn build_qc_code(rate: CodeRate, z: usize) -> Result<QcLdpcCode> {
    let (dv, dc) = (rate.dv(), rate.dc());
    if z < dc {
        return Err(Error::Construction(format!(
            "lifting size {z} too small for a 4-cycle-free ({dv},{dc}) code (need >= {dc})"
        )));
    }
    let mut rng = rng::stream(0x5143_4c44_5043, dc as u64, z as u64);
    let mut cols: Vec<[usize; 3]> = vec![[0, 0, 0]];
    const ACCEPTED: usize = 24;
    let max_draws = 64 * z * z;
    for _ in 1..dc {
        let mut best: Option<([usize; 3], usize)> = None;
        let mut accepted = 0;
        for _ in 0..max_draws {
            let cand = [0, rng.random_range(0..z), rng.random_range(0..z)];
            if cols.iter().any(|prev| closes_four_cycle(&cand, prev, z)) {
                continue;
            }
            let six = six_cycles_with(&cand, &cols, z);
            if best.is_none_or(|(_, b)| six < b) {
                best = Some((cand, six));
            }
            accepted += 1;
            if accepted == ACCEPTED || six == 0 {
                break;
            }
        }
        match best {
            Some((cand, _)) => cols.push(cand),
            None => {
                return Err(Error::Construction(format!(
                    "no 4-cycle-free shift found for column {} with Z = {z}",
                    cols.len()
                )))
            }
        }
    }
    let base = (0..dv)
        .map(|r| cols.iter().map(|c| c[r] as i32).collect())
        .collect();
    QcLdpcCode::from_base_matrix(base, z)
}

fn closes_four_cycle(a: &[usize; 3], b: &[usize; 3], z: usize) -> bool {
    for i in 0..3 {
        for j in i + 1..3 {
            if (a[i] + z - a[j]) % z == (b[i] + z - b[j]) % z {
                return true;
            }
        }
    }
    false
}

/// 6-cycles through the new column `a` and two distinct earlier columns,
/// over all orderings of the three rows.
fn six_cycles_with(a: &[usize; 3], cols: &[[usize; 3]], z: usize) -> usize {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut count = 0;
    for (bi, b) in cols.iter().enumerate() {
        for (ci, c) in cols.iter().enumerate() {
            if bi == ci {
                continue;
            }
            for [r0, r1, r2] in PERMS {
                let v = a[r0] + z - a[r1] + b[r1] + z - b[r2] + c[r2] + z - c[r0];
                if v % z == 0 {
                    count += 1;
                }
            }
        }
    }
    count
}

fn find_four_cycle(base: &[Vec<i32>], z: usize) -> Option<(usize, usize, usize, usize)> {
    let z = z as i64;
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            for a in 0..base[0].len() {
                for b in a + 1..base[0].len() {
                    let s = [base[i][a], base[i][b], base[j][a], base[j][b]];
                    if s.iter().any(|&v| v < 0) {
                        continue;
                    }
                    let d = s[0] as i64 - s[1] as i64 + s[3] as i64 - s[2] as i64;
                    if d.rem_euclid(z) == 0 {
                        return Some((i, j, a, b));
                    }
                }
            }
        }
    }
    None
}
