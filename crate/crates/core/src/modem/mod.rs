//! Constellations, binary labeling and bit-metric demapping.
//!
//! LLR sign convention used throughout the crate:
//! `L = ln p(y | b = 0) - ln p(y | b = 1)`, so a positive LLR favours bit 0.

mod catalog;
mod demap;

pub use catalog::{build_constellation, ConstellationSpec, BUILTIN_NAMES};
pub use demap::{demap_llr, demap_symbol, DemapMode};
pub(crate) use demap::demap_into;

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;

/// Saturation bound applied to every LLR (natural-log units).
pub const LLR_MAX: f64 = 50.0;

/// A non-empty sequence of bits stored as `0`/`1` bytes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitFrame(Vec<u8>);

impl BitFrame {
    pub fn new(bits: Vec<u8>) -> Result<BitFrame> {
        if bits.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("bit value {b} is not 0 or 1")));
        }
        Ok(BitFrame(bits))
    }

    pub fn zeros(len: usize) -> BitFrame {
        assert!(len > 0, "empty bit frame");
        BitFrame(vec![0; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitFrame {
        assert!(len > 0, "empty bit frame");
        BitFrame((0..len).map(|_| rng.random::<bool>() as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming_distance(&self, other: &BitFrame) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }
}

/// A non-empty sequence of finite LLRs, saturated to `[-LLR_MAX, LLR_MAX]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    /// Clips the values to `±LLR_MAX`; rejects NaN.
    pub fn new(mut llrs: Vec<f64>) -> Result<LlrFrame> {
        if llrs.is_empty() {
            return Err(Error::Empty);
        }
        for l in llrs.iter_mut() {
            if l.is_nan() {
                return Err(Error::InvalidArgument("NaN LLR".into()));
            }
            *l = l.clamp(-LLR_MAX, LLR_MAX);
        }
        Ok(LlrFrame(llrs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Bit-wise hard decision (`L > 0` or `L = 0` gives bit 0).
    pub fn hard_decision(&self) -> BitFrame {
        BitFrame(self.0.iter().map(|&l| (l < 0.0) as u8).collect())
    }
}

/// A unit-energy 2D constellation with a binary labeling.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    index_of_label: Vec<usize>,
    m: usize,
}

impl Constellation {
    /// Builds a constellation from points and their labels.
    ///
    /// The points are scaled to unit mean energy. The number of points must be
    /// a power of two, the labels a permutation of `0..2^m`, and the points
    /// pairwise distinct.
    pub fn from_points(name: &str, points: Vec<Complex64>, labels: Vec<u32>) -> Result<Constellation> {
        let size = points.len();
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidConstellation(format!(
                "{size} points is not a power of two >= 2"
            )));
        }
        if labels.len() != size {
            return Err(Error::InvalidConstellation(format!(
                "{} labels for {size} points",
                labels.len()
            )));
        }
        let m = size.trailing_zeros() as usize;
        let mut index_of_label = vec![usize::MAX; size];
        for (i, &l) in labels.iter().enumerate() {
            let slot = index_of_label
                .get_mut(l as usize)
                .ok_or_else(|| Error::InvalidConstellation(format!("label {l} needs more than {m} bits")))?;
            if *slot != usize::MAX {
                return Err(Error::InvalidConstellation(format!("duplicate label {l:0m$b}")));
            }
            *slot = i;
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / size as f64;
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::InvalidConstellation("zero or non-finite energy".into()));
        }
        let scale = energy.sqrt().recip();
        let points: Vec<Complex64> = points.into_iter().map(|p| p * scale).collect();
        for i in 0..size {
            for j in i + 1..size {
                if (points[i] - points[j]).norm() < 1e-9 {
                    return Err(Error::InvalidConstellation(format!(
                        "points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Constellation {
            name: name.to_string(),
            points,
            labels,
            index_of_label,
            m,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Bits per 2D symbol.
    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Point index carrying `label`.
    pub fn index_of_label(&self, label: u32) -> usize {
        self.index_of_label[label as usize]
    }

    /// Bit `level` (0 = most significant) of the label of point `index`.
    #[inline]
    pub fn bit(&self, index: usize, level: usize) -> u8 {
        ((self.labels[index] >> (self.m - 1 - level)) & 1) as u8
    }

    /// Groups `bits` into `m`-tuples (MSB first) and returns the labeled points.
    pub fn map_bits(&self, bits: &BitFrame) -> Result<Vec<Complex64>> {
        Ok(self
            .map_indices(bits)?
            .into_iter()
            .map(|i| self.points[i])
            .collect())
    }

    /// Like [`Constellation::map_bits`], but returns point indices.
    pub fn map_indices(&self, bits: &BitFrame) -> Result<Vec<usize>> {
        if bits.len() % self.m != 0 {
            return Err(Error::NotMultiple {
                len: bits.len(),
                m: self.m,
            });
        }
        Ok(bits
            .as_slice()
            .chunks_exact(self.m)
            .map(|chunk| {
                let label = chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                self.index_of_label[label as usize]
            })
            .collect())
    }

    /// Nearest-neighbour decision for a single sample; ties go to the lowest index.
    pub fn nearest(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Nearest-neighbour decisions.
    pub fn hard_decide(&self, y: &[Complex64]) -> Result<Vec<usize>> {
        if y.is_empty() {
            return Err(Error::Empty);
        }
        Ok(y.iter().map(|&s| self.nearest(s)).collect())
    }

    /// Concatenates the `m`-bit labels of the given point indices.
    pub fn inverse_label(&self, indices: &[usize]) -> Result<BitFrame> {
        if indices.is_empty() {
            return Err(Error::Empty);
        }
        let mut bits = Vec::with_capacity(indices.len() * self.m);
        for &i in indices {
            if i >= self.size() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: self.size(),
                });
            }
            bits.extend((0..self.m).map(|level| self.bit(i, level)));
        }
        Ok(BitFrame(bits))
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.size() as f64
    }

    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.size() {
            for j in i + 1..self.size() {
                d = d.min((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }
}
