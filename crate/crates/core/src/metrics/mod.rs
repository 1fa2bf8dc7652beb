//! Pre-FEC and information-theoretic performance metrics.
//!
//! All rates are in bits per 2D symbol unless stated otherwise.

mod calibrate;
pub mod quadrature;

pub use calibrate::{calibration_gmi, match_gmi, DEFAULT_GMI_TOL};
pub use quadrature::{exact_gmi, exact_mi, gauss_hermite};

use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use crate::modem::{BitFrame, Constellation, LlrFrame};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::LN_2;

/// Fraction of symbol decisions that differ from the transmitted symbols.
pub fn pre_fec_ser(tx: &[usize], rx: &[usize]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    if tx.is_empty() {
        return Err(Error::Empty);
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx.len() as f64)
}

/// Fraction of differing bits.
pub fn pre_fec_ber(tx: &BitFrame, rx: &BitFrame) -> Result<f64> {
    Ok(tx.hamming_distance(rx)? as f64 / tx.len() as f64)
}

/// `log2(1 + exp(-z))`, evaluated without overflow.
#[inline]
pub fn log2_one_plus_exp_neg(z: f64) -> f64 {
    let v = if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    };
    v / LN_2
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    h(p) + h(1.0 - p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmiEstimate {
    /// GMI in bits per symbol, clamped to `[0, m]`.
    pub gmi: f64,
    /// Contribution of each bit level (bits per bit level).
    pub per_level: Vec<f64>,
}

fn check_gmi_args(tx: &BitFrame, llrs: &LlrFrame, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if tx.len() != llrs.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: llrs.len(),
        });
    }
    if tx.len() % m != 0 {
        return Err(Error::NotMultiple { len: tx.len(), m });
    }
    Ok(())
}

fn gmi_scaled(tx: &[u8], llrs: &[f64], m: usize, scale: f64) -> GmiEstimate {
    let symbols = tx.len() / m;
    let mut penalty = vec![0.0; m];
    for (i, (&b, &l)) in tx.iter().zip(llrs).enumerate() {
        let z = if b == 0 { scale * l } else { -scale * l };
        penalty[i % m] += log2_one_plus_exp_neg(z);
    }
    let per_level: Vec<f64> = penalty.iter().map(|p| 1.0 - p / symbols as f64).collect();
    let gmi = per_level.iter().sum::<f64>().clamp(0.0, m as f64);
    GmiEstimate { gmi, per_level }
}

/// Sample-mean BICM estimator
/// `GMI = m - (1/N_sym) Σ log2(1 + exp(-(1 - 2b) l))`.
pub fn estimate_gmi(tx: &BitFrame, llrs: &LlrFrame, m: usize) -> Result<GmiEstimate> {
    check_gmi_args(tx, llrs, m)?;
    Ok(gmi_scaled(tx.as_slice(), llrs.as_slice(), m, 1.0))
}

/// GMI maximized over a common LLR scaling `l -> s l`, `s ∈ [0.1, 10]`
/// (golden-section search; the objective is concave in `s`).
///
/// Intended for LLRs from a mismatched demapper, e.g. measured data.
pub fn estimate_gmi_scaled(tx: &BitFrame, llrs: &LlrFrame, m: usize) -> Result<(GmiEstimate, f64)> {
    check_gmi_args(tx, llrs, m)?;
    let (tx, llrs) = (tx.as_slice(), llrs.as_slice());
    let f = |s: f64| gmi_scaled(tx, llrs, m, s).per_level.iter().sum::<f64>();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.1f64, 10.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if b - a < 1e-6 {
            break;
        }
    }
    let s = 0.5 * (a + b);
    Ok((gmi_scaled(tx, llrs, m, s), s))
}

/// Monte Carlo symbol-wise mutual information with uniform inputs:
/// `MI = mean log2[p(y|x) / (2^-m Σ_x' p(y|x'))]`.
pub fn estimate_mi(c: &Constellation, ch: &ChannelSpec, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Empty);
    }
    let mut rng = rng::stream(seed, 0x4d49, 0);
    let idx: Vec<usize> = (0..n_samples).map(|_| rng.random_range(0..c.size())).collect();
    let x: Vec<Complex64> = idx.iter().map(|&i| c.points()[i]).collect();
    let y = ch.transmit(&x, &mut rng);
    Ok(mi_from_samples(c, ch, &idx, &y))
}

/// Symbol-wise MI of `(idx, y)` pairs evaluated under the law of `ch`.
///
/// With `ch` fitted rather than true this is a mismatched MI estimate.
pub fn mi_from_samples(c: &Constellation, ch: &ChannelSpec, idx: &[usize], y: &[Complex64]) -> f64 {
    let mut metric = vec![0.0; c.size()];
    let ln_size = (c.size() as f64).ln();
    let mut total = 0.0;
    for (&i, &y) in idx.iter().zip(y) {
        for (mt, &p) in metric.iter_mut().zip(c.points()) {
            *mt = ch.ln_pdf(y, p);
        }
        let max = metric.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + metric.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += metric[i] - (lse - ln_size);
    }
    total / idx.len() as f64 / LN_2
}

/// Normalized GMI `1 - (H - GMI) / m`.
pub fn ngmi(gmi: f64, source_entropy: f64, m: usize) -> Result<f64> {
    let eps = 1e-12;
    let mf = m as f64;
    if !(gmi >= -eps && gmi <= source_entropy + eps && source_entropy <= mf + eps) || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= GMI ({gmi}) <= H ({source_entropy}) <= m ({m})"
        )));
    }
    Ok(1.0 - (source_entropy - gmi) / mf)
}

/// Symbol-wise hard-decision achievable rate under an M-ary symmetric
/// channel with symbol error rate `ser`:
/// `log2 M - h2(ser) - ser log2(M - 1)`.
pub fn r_hdd_sw(ser: f64, constellation_size: usize) -> Result<f64> {
    let m = constellation_size as f64;
    if constellation_size < 2 {
        return Err(Error::InvalidArgument("constellation size must be >= 2".into()));
    }
    let max_ser = 1.0 - 1.0 / m;
    if !(0.0..=max_ser + 1e-12).contains(&ser) {
        return Err(Error::InvalidArgument(format!(
            "SER {ser} outside the symmetric-channel range [0, {max_ser}]"
        )));
    }
    let ser = ser.min(max_ser);
    let rate = m.log2() - binary_entropy(ser) - ser * (m - 1.0).log2();
    Ok(rate.max(0.0))
}

/// Summary of all metrics for one measurement or simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub constellation: String,
    pub bits_per_symbol: usize,
    pub sample_count: usize,
    pub pre_fec_ser: f64,
    pub pre_fec_ber: f64,
    pub gmi: f64,
    pub gmi_normalized: f64,
    pub gmi_per_level: Vec<f64>,
    /// GMI after optimizing a common LLR scale, and that scale.
    pub gmi_scaled: f64,
    pub llr_scale: f64,
    pub mi: Option<f64>,
    /// True when `mi` was computed under a fitted rather than the true channel law.
    pub mi_mismatched: bool,
    pub ngmi: f64,
    pub r_hdd_sw: f64,
    /// Channel model behind `r_hdd_sw`.
    pub r_hdd_sw_model: &'static str,
}

/// Builds a [`MetricReport`] for transmitted indices `idx` and received
/// samples `y`, demapped under the law of `ch`. Set `mismatched` when `ch`
/// is fitted rather than the true channel.
pub fn metric_report(
    c: &Constellation,
    idx: &[usize],
    y: &[Complex64],
    ch: &ChannelSpec,
    mismatched: bool,
) -> Result<MetricReport> {
    if idx.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: idx.len(),
            actual: y.len(),
        });
    }
    if idx.is_empty() {
        return Err(Error::Empty);
    }
    let m = c.bits_per_symbol();
    let tx_bits = c.inverse_label(idx)?;
    let rx_idx = c.hard_decide(y)?;
    let rx_bits = c.inverse_label(&rx_idx)?;
    let llrs = crate::modem::demap_llr(c, y, ch, crate::modem::DemapMode::Exact)?;
    let gmi = estimate_gmi(&tx_bits, &llrs, m)?;
    let (scaled, scale) = estimate_gmi_scaled(&tx_bits, &llrs, m)?;
    let ser = pre_fec_ser(idx, &rx_idx)?;
    let max_ser = 1.0 - 1.0 / c.size() as f64;
    let mi = mi_from_samples(c, ch, idx, y);
    Ok(MetricReport {
        constellation: c.name().to_string(),
        bits_per_symbol: m,
        sample_count: idx.len(),
        pre_fec_ser: ser,
        pre_fec_ber: pre_fec_ber(&tx_bits, &rx_bits)?,
        gmi: gmi.gmi,
        gmi_normalized: gmi.gmi / m as f64,
        gmi_per_level: gmi.per_level,
        gmi_scaled: scaled.gmi,
        llr_scale: scale,
        mi: Some(mi),
        mi_mismatched: mismatched,
        ngmi: ngmi(gmi.gmi, m as f64, m)?,
        // Beyond the symmetric-channel range the rate is zero.
        r_hdd_sw: r_hdd_sw(ser.min(max_ser), c.size())?,
        r_hdd_sw_model: "M-ary symmetric channel",
    })
}
