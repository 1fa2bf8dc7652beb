//! Deterministic numerical integration of GMI and MI over a channel law.
//!
//! The expectation over `y` factorizes per real dimension into a 1D rule
//! whose nodes depend on the transmitted coordinate:
//! - AWGN: Gauss-Hermite of order 64.
//! - Laplace: composite Gauss-Legendre of order 8 on `[-36b, 36b]`, split at
//!   every point where the exact LLR has a kink (constellation coordinates)
//!   and into pieces no longer than `b`.
//! - Quantized output: exact sum over the quantizer cells.

use crate::channels::{ChannelSpec, NoiseFamily};
use crate::error::{Error, Result};
use crate::modem::{demap_symbol, Constellation, DemapMode};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use super::log2_one_plus_exp_neg;

const HERMITE_ORDER: usize = 64;
const LEGENDRE_ORDER: usize = 8;
const LAPLACE_SPAN: f64 = 36.0;
/// 2D nodes with a product weight below this are dropped.
const WEIGHT_FLOOR: f64 = 1e-18;
/// Larger quantizers make the cell sum too expensive; callers fall back to
/// Monte Carlo.
pub const MAX_QUANTIZED_LEVELS: u32 = 512;

/// Gauss-Hermite nodes and weights for `∫ exp(-t²) f(t) dt`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_ORDER))
}

fn legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LEGENDRE_ORDER))
}

/// `(y, weight)` pairs with `Σ weight f(y) ≈ E[f(Y) | X = x]` in one dimension.
/// `coords` are the constellation coordinates in that dimension.
fn rule_1d(ch: &ChannelSpec, x: f64, coords: &[f64]) -> Vec<(f64, f64)> {
    if let Some(q) = ch.quantizer() {
        return (0..q.levels())
            .map(|cell| {
                let y = q.reconstruct(cell);
                (y, ch.ln_pdf_1d(y, x).exp())
            })
            .filter(|&(_, w)| w > WEIGHT_FLOOR)
            .collect();
    }
    match ch.family() {
        NoiseFamily::Awgn => {
            let (t, w) = hermite_rule();
            let s = (2.0 * ch.noise_variance()).sqrt();
            t.iter().zip(w).map(|(t, w)| (x + s * t, w / PI.sqrt())).collect()
        }
        NoiseFamily::Laplace => {
            let b = ch.laplace_scale();
            let span = LAPLACE_SPAN * b;
            let mut breaks: Vec<f64> = vec![-span, 0.0, span];
            breaks.extend(coords.iter().map(|p| p - x).filter(|d| d.abs() < span));
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span);
            let (gx, gw) = legendre_rule();
            let mut out = Vec::new();
            for pair in breaks.windows(2) {
                let pieces = ((pair[1] - pair[0]) / b).ceil().max(1.0) as usize;
                let len = (pair[1] - pair[0]) / pieces as f64;
                for p in 0..pieces {
                    let mid = pair[0] + (p as f64 + 0.5) * len;
                    for (t, w) in gx.iter().zip(gw) {
                        let d = mid + 0.5 * len * t;
                        let density = (-d.abs() / b).exp() / (2.0 * b);
                        out.push((x + d, 0.5 * len * w * density));
                    }
                }
            }
            out
        }
    }
}

fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

/// `(1/M) Σ_x E[f(x, Y) | X = x]`, with `f` given the transmitted index.
fn expectation<F>(c: &Constellation, ch: &ChannelSpec, f: F) -> Result<f64>
where
    F: Fn(usize, Complex64, &mut [f64], &mut [f64]) -> f64 + Sync,
{
    if let Some(q) = ch.quantizer() {
        if q.levels() > MAX_QUANTIZED_LEVELS {
            return Err(Error::PdfUnavailable(format!(
                "quadrature supports at most {MAX_QUANTIZED_LEVELS} quantizer levels, got {}",
                q.levels()
            )));
        }
    }
    let re = distinct(c.points().iter().map(|p| p.re).collect());
    let im = distinct(c.points().iter().map(|p| p.im).collect());
    let per_point: Vec<f64> = (0..c.size())
        .into_par_iter()
        .map(|i| {
            let x = c.points()[i];
            let rx = rule_1d(ch, x.re, &re);
            let ry = rule_1d(ch, x.im, &im);
            let mut metric = vec![0.0; c.size()];
            let mut llr = vec![0.0; c.bits_per_symbol()];
            let mut acc = 0.0;
            let mut weight = 0.0;
            for &(yr, wr) in &rx {
                for &(yi, wi) in &ry {
                    let w = wr * wi;
                    if w < WEIGHT_FLOOR {
                        continue;
                    }
                    acc += w * f(i, Complex64::new(yr, yi), &mut metric, &mut llr);
                    weight += w;
                }
            }
            acc / weight
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / c.size() as f64)
}

/// GMI of exact bit-metric demapping on `ch`, by quadrature.
pub fn exact_gmi(c: &Constellation, ch: &ChannelSpec) -> Result<f64> {
    let m = c.bits_per_symbol();
    let penalty = expectation(c, ch, |i, y, metric, llr| {
        demap_symbol(c, y, ch, DemapMode::Exact, metric, llr);
        (0..m)
            .map(|level| {
                let l = llr[level];
                log2_one_plus_exp_neg(if c.bit(i, level) == 0 { l } else { -l })
            })
            .sum()
    })?;
    Ok((m as f64 - penalty).clamp(0.0, m as f64))
}

/// Symbol-wise MI with uniform inputs on `ch`, by quadrature.
pub fn exact_mi(c: &Constellation, ch: &ChannelSpec) -> Result<f64> {
    let ln_size = (c.size() as f64).ln();
    let mi = expectation(c, ch, |i, y, metric, _| {
        for (mt, &p) in metric.iter_mut().zip(c.points()) {
            *mt = ch.ln_pdf(y, p);
        }
        let max = metric.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + metric.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        (metric[i] - lse + ln_size) / LN_2
    })?;
    Ok(mi.clamp(0.0, c.bits_per_symbol() as f64))
}
