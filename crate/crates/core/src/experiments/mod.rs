//! Experiment drivers: reference curves, thresholds, post-FEC prediction and
//! the universality sweep.

mod sim;

pub use sim::{simulate_link, ErrorTally, Link, SimSettings, StopRule, BATCH_FRAMES};

use crate::channels::{ChannelSpec, NoiseFamily};
use crate::error::{Error, Result};
use crate::ldpc::QcLdpcCode;
use crate::metrics::{calibration_gmi, match_gmi};
use crate::modem::Constellation;
use serde::Serialize;

/// Points with fewer post-FEC bit errors are flagged low-confidence.
pub const MIN_CONFIDENT_ERRORS: u64 = 100;

/// Default post-FEC BER defining the threshold `T_R`.
pub const TARGET_BER: f64 = 1e-4;

/// Default mixing fractions of the universality sweep.
pub const DEFAULT_GAMMAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub esn0: f64,
    /// Exact GMI of the channel divided by `m`.
    pub gmi_norm: f64,
    pub ber: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub low_confidence: bool,
    /// Mean per-frame sample GMI / m and its standard error, for cross-checks.
    pub sample_gmi_norm: f64,
    pub sample_gmi_norm_se: f64,
}

impl CurvePoint {
    pub fn esn0_db(&self) -> f64 {
        crate::linear_to_db(self.esn0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceCurve {
    /// Sorted by Es/N0.
    pub points: Vec<CurvePoint>,
    pub code_id: String,
    pub constellation_id: String,
    pub channel_family: NoiseFamily,
}

fn point_from_tally(esn0: f64, gmi: f64, m: usize, t: &ErrorTally) -> CurvePoint {
    let mf = m as f64;
    CurvePoint {
        esn0,
        gmi_norm: gmi / mf,
        ber: t.ber(),
        frames: t.frames,
        bit_errors: t.bit_errors,
        frame_errors: t.frame_errors,
        low_confidence: t.bit_errors < MIN_CONFIDENT_ERRORS,
        sample_gmi_norm: t.sample_gmi.mean() / mf,
        sample_gmi_norm_se: t.sample_gmi.std_error() / mf,
    }
}

/// Simulates `code` on `channel` (family and quantizer; its Es/N0 is
/// replaced) at every Es/N0 of the ascending `esn0_grid`.
///
/// Point `j` uses stream `j` of the master seed. The GMI axis is the exact
/// GMI of the channel, not the noisy per-frame estimate.
pub fn run_reference_curve(
    code: &QcLdpcCode,
    c: &Constellation,
    channel: &ChannelSpec,
    esn0_grid: &[f64],
    settings: &SimSettings,
) -> Result<ReferenceCurve> {
    if esn0_grid.is_empty() {
        return Err(Error::Empty);
    }
    if !esn0_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("Es/N0 grid must be strictly ascending".into()));
    }
    let mut points = Vec::with_capacity(esn0_grid.len());
    for (j, &esn0) in esn0_grid.iter().enumerate() {
        let ch = channel.with_esn0(esn0)?;
        let gmi = calibration_gmi(c, &ch)?;
        let t = simulate_link(code, c, &Link::Single(ch.clone()), settings, j as u64)?;
        let p = point_from_tally(esn0, gmi, c.bits_per_symbol(), &t);
        log::info!(
            "{}: {} GMI/m {:.4} BER {:.3e} ({} errors, {} frames)",
            code.id(),
            ch,
            p.gmi_norm,
            p.ber,
            p.bit_errors,
            p.frames
        );
        points.push(p);
    }
    Ok(ReferenceCurve {
        points,
        code_id: code.id(),
        constellation_id: c.name().to_string(),
        channel_family: channel.family(),
    })
}

/// Interpolation knots: points with a non-zero BER, sorted by GMI.
fn knots(curve: &ReferenceCurve) -> Vec<(f64, f64)> {
    let mut k: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.ber > 0.0)
        .map(|p| (p.gmi_norm, p.ber.log10()))
        .collect();
    k.sort_by(|a, b| a.0.total_cmp(&b.0));
    k
}

fn lerp_x(x0: f64, y0: f64, x1: f64, y1: f64, y: f64) -> f64 {
    if y1 == y0 {
        return x0;
    }
    x0 + (y - y0) * (x1 - x0) / (y1 - y0)
}

/// Normalized GMI at which the curve crosses `target_ber`, by linear
/// interpolation of `log10 BER` against normalized GMI between the two
/// knots bracketing the first crossing. Zero-BER points are not knots.
pub fn extract_threshold(curve: &ReferenceCurve, target_ber: f64) -> Result<f64> {
    if !(target_ber > 0.0 && target_ber < 1.0) {
        return Err(Error::InvalidArgument(format!("target BER {target_ber} outside (0, 1)")));
    }
    let k = knots(curve);
    let t = target_ber.log10();
    let j = k.iter().position(|&(_, l)| l <= t).ok_or_else(|| {
        Error::NoBracket(format!("no curve point at or below BER {target_ber:e}"))
    })?;
    if k[j].1 == t {
        return Ok(k[j].0);
    }
    if j == 0 {
        return Err(Error::NoBracket(format!("no curve point above BER {target_ber:e}")));
    }
    let (x0, y0) = k[j - 1];
    let (x1, y1) = k[j];
    Ok(lerp_x(x0, y0, x1, y1, t))
}

/// Where a prediction falls relative to the curve's GMI span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Span {
    Inside,
    /// GMI above the span: the true BER is below the returned minimum observed BER.
    Above,
    /// GMI below the span: the true BER is at least the returned maximum observed BER.
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub ber: f64,
    pub span: Span,
}

/// Post-FEC BER predicted for a system with normalized GMI `gmi_norm` by
/// interpolating `log10 BER` linearly in normalized GMI along `curve`.
pub fn predict_post_fec(curve: &ReferenceCurve, gmi_norm: f64) -> Result<Prediction> {
    let k = knots(curve);
    let (first, last) = match (k.first(), k.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::InsufficientData { needed: 1, available: 0 }),
    };
    if gmi_norm < first.0 {
        let max = k.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        return Ok(Prediction {
            ber: 10f64.powf(max),
            span: Span::Below,
        });
    }
    if gmi_norm > last.0 {
        let min = k.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        return Ok(Prediction {
            ber: 10f64.powf(min),
            span: Span::Above,
        });
    }
    if let Some(&(_, l)) = k.iter().find(|p| p.0 == gmi_norm) {
        return Ok(Prediction {
            ber: 10f64.powf(l),
            span: Span::Inside,
        });
    }
    let j = k.iter().position(|p| p.0 > gmi_norm).unwrap_or(k.len() - 1);
    let (x0, y0) = k[j - 1];
    let (x1, y1) = k[j];
    let l = y0 + (gmi_norm - x0) * (y1 - y0) / (x1 - x0);
    Ok(Prediction {
        ber: 10f64.powf(l),
        span: Span::Inside,
    })
}

/// Threshold decision rule: transmission succeeds when the measured
/// normalized GMI exceeds `T_R`.
pub fn predicts_success(gmi_norm: f64, threshold: f64) -> bool {
    gmi_norm > threshold
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniversalityRow {
    pub gamma: f64,
    pub ber: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Mean per-frame sample GMI of the mixed frames and its standard error.
    pub sample_gmi: f64,
    pub sample_gmi_se: f64,
    #[serde(skip)]
    pub tally: ErrorTally,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniversalityTable {
    pub rows: Vec<UniversalityRow>,
    pub code_id: String,
    pub constellation_id: String,
    pub ch1: ChannelSpec,
    pub ch2: ChannelSpec,
    /// GMI of `ch1`, bits per symbol.
    pub gmi_common: f64,
}

fn validate_gammas(gammas: &[f64]) -> Result<Vec<f64>> {
    if gammas.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::InvalidArgument(format!("gamma {g} outside [0, 1]")));
    }
    let mut g = gammas.to_vec();
    g.sort_by(f64::total_cmp);
    if g.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("gamma values must be distinct".into()));
    }
    Ok(g)
}

/// Universality sweep with `ch2` calibrated to the GMI of `ch1` within `tol`.
pub fn universality_sweep(
    code: &QcLdpcCode,
    c: &Constellation,
    ch1: &ChannelSpec,
    ch2_family: NoiseFamily,
    gammas: &[f64],
    settings: &SimSettings,
    tol: f64,
) -> Result<UniversalityTable> {
    let ch2 = match_gmi(c, ch1, ch2_family, tol)?;
    universality_sweep_with(code, c, ch1, &ch2, gammas, settings)
}

/// For each sorted `gamma`, sends codewords with a fraction `gamma` of their
/// symbols over `ch1` and the rest over `ch2`, demaps each part with its own
/// channel law and decodes. Row `i` uses stream `i` of the master seed.
pub fn universality_sweep_with(
    code: &QcLdpcCode,
    c: &Constellation,
    ch1: &ChannelSpec,
    ch2: &ChannelSpec,
    gammas: &[f64],
    settings: &SimSettings,
) -> Result<UniversalityTable> {
    let gammas = validate_gammas(gammas)?;
    let gmi_common = calibration_gmi(c, ch1)?;
    let mut rows = Vec::with_capacity(gammas.len());
    for (i, &gamma) in gammas.iter().enumerate() {
        let link = Link::Mixed {
            ch1: ch1.clone(),
            ch2: ch2.clone(),
            gamma,
        };
        let t = simulate_link(code, c, &link, settings, i as u64)?;
        log::info!("gamma {gamma}: BER {:.3e} ({} errors, {} frames)", t.ber(), t.bit_errors, t.frames);
        rows.push(UniversalityRow {
            gamma,
            ber: t.ber(),
            frames: t.frames,
            bit_errors: t.bit_errors,
            frame_errors: t.frame_errors,
            sample_gmi: t.sample_gmi.mean(),
            sample_gmi_se: t.sample_gmi.std_error(),
            tally: t,
        });
    }
    Ok(UniversalityTable {
        rows,
        code_id: code.id(),
        constellation_id: c.name().to_string(),
        ch1: ch1.clone(),
        ch2: ch2.clone(),
        gmi_common,
    })
}
