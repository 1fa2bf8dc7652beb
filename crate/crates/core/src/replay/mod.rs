//! Evaluating codes on a recorded measurement through equivalent LLRs.
//!
//! A measurement is a list of aligned transmit/receive pairs `(x, y)`. The
//! bits `b` carried by `x` and the LLRs `l` demapped from `y` are fixed by
//! the measurement; a codeword `c` is "sent" by flipping the sign of `l`
//! wherever `b` and `c` differ. This relies on the channel being symmetric
//! per bit level, so that the flipped LLRs are distributed as if `c` had
//! been transmitted.

mod io;

pub use io::{meta_path, BINARY_MAGIC, CSV_HEADER};

use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use crate::ldpc::{DecodeResult, DecoderParams, LayeredMinSum, QcLdpcCode};
use crate::metrics::{estimate_gmi, estimate_gmi_scaled, metric_report, MetricReport};
use crate::modem::{BitFrame, Constellation, DemapMode, LlrFrame};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Transmit symbols must lie within this distance of a constellation point
/// after scale alignment.
pub const SNAP_TOLERANCE: f64 = 1e-6;

/// Below this many pairs the channel fit is reported as unreliable.
pub const MIN_FIT_SAMPLES: usize = 100;

/// Smallest per-dimension noise variance (after gain removal) used for
/// demapping; keeps LLRs finite for noiseless data.
const MIN_DEMAP_VARIANCE: f64 = 1e-12;

const DOMAIN_REPLAY: u64 = 0x5245_504c;

/// Sidecar metadata of a measurement file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_in_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_rate_baud: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, String>,
}

/// Validated measurement: transmit symbols snapped to constellation points.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    indices: Vec<usize>,
    scale: f64,
    pub meta: MeasurementMeta,
}

impl MeasurementSet {
    /// Aligns the raw transmit symbols to `c` with a least-squares global
    /// scale (applied to `x` and `y` alike) and snaps them to the points.
    pub fn from_pairs(
        c: &Constellation,
        x: Vec<Complex64>,
        y: Vec<Complex64>,
        meta: MeasurementMeta,
    ) -> Result<MeasurementSet> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Empty);
        }
        let energy = x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        if energy <= 0.0 {
            return Err(Error::Degenerate("all transmit symbols are zero".into()));
        }
        // Start from unit mean energy, then refine against the nearest points.
        let mut scale = (x.len() as f64 / energy).sqrt();
        for _ in 0..8 {
            let num: f64 = x
                .iter()
                .map(|&v| (v * (c.points()[c.nearest(v * scale)]).conj()).re)
                .sum();
            let next = num / energy;
            if (next - scale).abs() <= 1e-15 * scale {
                break;
            }
            scale = next;
        }
        let mut indices = Vec::with_capacity(x.len());
        for (row, &v) in x.iter().enumerate() {
            let i = c.nearest(v * scale);
            let dist = (v * scale - c.points()[i]).norm();
            if dist > SNAP_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "pair {}: transmit symbol {v} is {dist:.3e} from the nearest {} point after scaling by {scale}",
                    row + 1,
                    c.name()
                )));
            }
            indices.push(i);
        }
        let x = indices.iter().map(|&i| c.points()[i]).collect();
        let y = y.iter().map(|&v| v * scale).collect();
        Ok(MeasurementSet {
            x,
            y,
            indices,
            scale,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Snapped transmit symbols.
    pub fn tx(&self) -> &[Complex64] {
        &self.x
    }

    /// Received samples, scaled like the transmit symbols.
    pub fn rx(&self) -> &[Complex64] {
        &self.y
    }

    /// Constellation indices of the transmit symbols.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Global scale applied to the raw file values.
    pub fn alignment_scale(&self) -> f64 {
        self.scale
    }

    /// Bits carried by the transmit symbols (inverse labeling).
    pub fn bits(&self, c: &Constellation) -> Result<BitFrame> {
        c.inverse_label(&self.indices)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_csv(path, &self.x, &self.y)?;
        io::write_meta(path, &self.meta)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        io::write_binary(path, &self.x, &self.y)?;
        io::write_meta(path, &self.meta)
    }
}

/// Loads a CSV or binary measurement file (and its sidecar metadata, if
/// present) and validates it against `c`.
pub fn load_measurements(path: &Path, c: &Constellation) -> Result<MeasurementSet> {
    let (x, y) = io::read_pairs(path)?;
    if x.is_empty() {
        return Err(Error::Empty);
    }
    let meta = io::read_meta(path)?.unwrap_or_default();
    if let Some(name) = &meta.constellation {
        if !name.eq_ignore_ascii_case(c.name()) {
            log::warn!("{}: metadata declares constellation {name}, using {}", path.display(), c.name());
        }
    }
    MeasurementSet::from_pairs(c, x, y, meta)
}

/// Circular-Gaussian fit `y = h x + n` with per-dimension noise variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FittedChannel {
    pub h: Complex64,
    pub sigma2: f64,
    /// Skewness of the pooled real and imaginary residuals (0 for Gaussian).
    pub skewness: f64,
    /// Excess kurtosis of the pooled residuals (0 for Gaussian, 3 for Laplace).
    pub excess_kurtosis: f64,
    pub samples: usize,
}

impl FittedChannel {
    /// AWGN law of the gain-compensated samples `y / h`.
    pub fn demap_channel(&self) -> Result<ChannelSpec> {
        let v = (self.sigma2 / self.h.norm_sqr()).max(MIN_DEMAP_VARIANCE);
        ChannelSpec::awgn(0.5 / v)
    }
}

/// Least-squares gain and residual variance of `ms`.
pub fn fit_channel(ms: &MeasurementSet) -> Result<FittedChannel> {
    let n = ms.len();
    if ms.indices.iter().all(|&i| i == ms.indices[0]) {
        return Err(Error::Degenerate("all transmit symbols are identical".into()));
    }
    if n < MIN_FIT_SAMPLES {
        log::warn!("channel fit on only {n} pairs; at least {MIN_FIT_SAMPLES} are recommended");
    }
    let num: Complex64 = ms.x.iter().zip(&ms.y).map(|(x, y)| y * x.conj()).sum();
    let den: f64 = ms.x.iter().map(|x| x.norm_sqr()).sum();
    let h = num / den;
    let residuals: Vec<f64> = ms
        .x
        .iter()
        .zip(&ms.y)
        .flat_map(|(x, y)| {
            let r = y - h * x;
            [r.re, r.im]
        })
        .collect();
    let sigma2 = residuals.iter().map(|r| r * r).sum::<f64>() / (2 * n) as f64;
    let (skewness, excess_kurtosis) = if sigma2 > 0.0 {
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let m = |k: i32| residuals.iter().map(|r| (r - mean).powi(k)).sum::<f64>() / residuals.len() as f64;
        let var = m(2);
        if var > 0.0 {
            (m(3) / var.powf(1.5), m(4) / (var * var) - 3.0)
        } else {
            (0.0, 0.0)
        }
    } else {
        (0.0, 0.0)
    };
    Ok(FittedChannel {
        h,
        sigma2,
        skewness,
        excess_kurtosis,
        samples: n,
    })
}

/// Bits and LLRs of the whole measurement under the fitted channel.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredLlrs {
    /// `m * N_M` bits carried by the transmit symbols.
    pub bits: BitFrame,
    /// LLRs demapped from `y / h`, same length and order as `bits`.
    pub llrs: LlrFrame,
}

impl MeasuredLlrs {
    pub fn new(ms: &MeasurementSet, c: &Constellation, fc: &FittedChannel) -> Result<MeasuredLlrs> {
        let ch = fc.demap_channel()?;
        let eq: Vec<Complex64> = ms.y.iter().map(|y| y / fc.h).collect();
        Ok(MeasuredLlrs {
            bits: ms.bits(c)?,
            llrs: c.demap_llr(&eq, &ch, DemapMode::Exact)?,
        })
    }

    /// Equivalent LLRs of `codeword` over the positions starting at symbol
    /// `offset`: `l' = l (1 - 2 (b XOR c))`.
    pub fn equivalent(&self, codeword: &BitFrame, offset: usize, m: usize) -> Result<LlrFrame> {
        let n = codeword.len();
        let start = offset * m;
        let available = self.bits.len() / m;
        if start + n > self.bits.len() {
            return Err(Error::InsufficientData {
                needed: offset + n.div_ceil(m),
                available,
            });
        }
        let b = &self.bits.as_slice()[start..start + n];
        let l = &self.llrs.as_slice()[start..start + n];
        let out = l
            .iter()
            .zip(b)
            .zip(codeword.as_slice())
            .map(|((&l, &b), &c)| if b == c { l } else { -l })
            .collect();
        LlrFrame::new(out)
    }
}

/// Equivalent LLRs for transmitting `codeword` through the measurement,
/// consuming symbols from `offset` on.
pub fn equivalent_llrs(
    ms: &MeasurementSet,
    c: &Constellation,
    fc: &FittedChannel,
    codeword: &BitFrame,
    offset: usize,
) -> Result<LlrFrame> {
    let needed = offset + codeword.len().div_ceil(c.bits_per_symbol());
    if needed > ms.len() {
        return Err(Error::InsufficientData {
            needed,
            available: ms.len(),
        });
    }
    let slice = MeasurementSet {
        x: ms.x[offset..needed].to_vec(),
        y: ms.y[offset..needed].to_vec(),
        indices: ms.indices[offset..needed].to_vec(),
        scale: ms.scale,
        meta: MeasurementMeta::default(),
    };
    MeasuredLlrs::new(&slice, c, fc)?.equivalent(codeword, 0, c.bits_per_symbol())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub codewords: usize,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Code bits decoded over all draws.
    pub total_bits: u64,
    pub ber: f64,
    /// Disjoint codeword slots available in the measurement.
    pub slots: usize,
    /// More draws than slots: noise realizations were reused.
    pub wrapped: bool,
    pub fit: FittedChannel,
    /// Sample GMI of the measured LLRs against the measured bits.
    pub measured_gmi: f64,
    pub measured_gmi_norm: f64,
    /// Scale-optimized GMI of the measured LLRs.
    pub measured_gmi_scaled: f64,
    #[serde(skip)]
    pub results: Vec<DecodeResult>,
}

/// Decodes `n_codewords` random codewords of `code` through the
/// measurement. Draw `d` occupies symbol slot `d mod slots`; its codeword
/// comes from stream `d` of `seed`.
pub fn replay_decode(
    ms: &MeasurementSet,
    c: &Constellation,
    code: &QcLdpcCode,
    params: DecoderParams,
    n_codewords: usize,
    seed: u64,
) -> Result<ReplayOutcome> {
    params.validate()?;
    if n_codewords == 0 {
        return Err(Error::InvalidArgument("need at least one codeword".into()));
    }
    let m = c.bits_per_symbol();
    let per_codeword = code.n().div_ceil(m);
    let slots = ms.len() / per_codeword;
    if slots == 0 {
        return Err(Error::InsufficientData {
            needed: per_codeword,
            available: ms.len(),
        });
    }
    let wrapped = n_codewords > slots;
    if wrapped {
        log::warn!("{n_codewords} codewords over {slots} disjoint slots: noise realizations are reused");
    }
    let fit = fit_channel(ms)?;
    let measured = MeasuredLlrs::new(ms, c, &fit)?;
    let gmi = estimate_gmi(&measured.bits, &measured.llrs, m)?;
    let (scaled, _) = estimate_gmi_scaled(&measured.bits, &measured.llrs, m)?;
    let results: Vec<Result<DecodeResult>> = (0..n_codewords)
        .into_par_iter()
        .map_init(
            || LayeredMinSum::new(code, params),
            |decoder, d| {
                let decoder = decoder.as_mut().map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let mut r = rng::stream(seed, DOMAIN_REPLAY, d as u64);
                let info = BitFrame::new((0..code.k()).map(|_| r.random_range(0..2u8)).collect())?;
                let cw = code.encode(&info)?;
                let llrs = measured.equivalent(&cw, (d % slots) * per_codeword, m)?;
                let mut res = decoder.decode(&llrs)?;
                res.compare(&cw)?;
                Ok(res)
            },
        )
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let bit_errors: u64 = results.iter().map(|r| r.bit_errors.unwrap_or(0) as u64).sum();
    let frame_errors = results.iter().filter(|r| r.bit_errors.unwrap_or(0) > 0).count() as u64;
    let total_bits = (n_codewords * code.n()) as u64;
    Ok(ReplayOutcome {
        codewords: n_codewords,
        bit_errors,
        frame_errors,
        total_bits,
        ber: bit_errors as f64 / total_bits as f64,
        slots,
        wrapped,
        fit,
        measured_gmi: gmi.gmi,
        measured_gmi_norm: gmi.gmi / m as f64,
        measured_gmi_scaled: scaled.gmi,
        results,
    })
}

/// Synthetic measurement: uniform random symbols of `c` through `ch`.
pub fn gen_synthetic(c: &Constellation, ch: &ChannelSpec, n_symbols: usize, seed: u64) -> Result<MeasurementSet> {
    if n_symbols == 0 {
        return Err(Error::Empty);
    }
    let mut r = rng::stream(seed, DOMAIN_REPLAY + 1, 0);
    let indices: Vec<usize> = (0..n_symbols).map(|_| r.random_range(0..c.size())).collect();
    let x: Vec<Complex64> = indices.iter().map(|&i| c.points()[i]).collect();
    let y = ch.transmit(&x, &mut r);
    let mut tags = BTreeMap::new();
    tags.insert("generator".to_string(), "synthetic".to_string());
    tags.insert("channel".to_string(), ch.to_string());
    tags.insert("seed".to_string(), seed.to_string());
    Ok(MeasurementSet {
        x,
        y,
        indices,
        scale: 1.0,
        meta: MeasurementMeta {
            constellation: Some(c.name().to_string()),
            tags,
            ..MeasurementMeta::default()
        },
    })
}

/// All metrics of a measurement, demapped under its fitted Gaussian law.
/// The MI is therefore a mismatched estimate.
pub fn measurement_report(ms: &MeasurementSet, c: &Constellation) -> Result<(MetricReport, FittedChannel)> {
    let fit = fit_channel(ms)?;
    let eq: Vec<Complex64> = ms.y.iter().map(|y| y / fit.h).collect();
    let report = metric_report(c, &ms.indices, &eq, &fit.demap_channel()?, true)?;
    Ok((report, fit))
}
