//! Equal-GMI calibration between channel families.

use super::quadrature::exact_gmi;
use super::{estimate_gmi, GmiEstimate};
use crate::channels::{ChannelSpec, NoiseFamily};
use crate::error::{Error, Result};
use crate::modem::{demap_llr, BitFrame, Constellation, DemapMode};
use crate::rng;

/// Default GMI tolerance of [`match_gmi`], bits per symbol.
pub const DEFAULT_GMI_TOL: f64 = 0.002;

const MC_SYMBOLS: usize = 200_000;
const MC_SEED: u64 = 0x6361_6c69_6272;
const MAX_BISECTIONS: usize = 200;

/// GMI used for calibration: quadrature when available, otherwise a Monte
/// Carlo estimate on a fixed stream. The fixed stream gives common random
/// numbers across Es/N0 values of one family, so the estimate is a
/// deterministic, near-monotone function of Es/N0.
pub fn calibration_gmi(c: &Constellation, ch: &ChannelSpec) -> Result<f64> {
    match exact_gmi(c, ch) {
        Err(Error::PdfUnavailable(_)) => mc_gmi(c, ch, MC_SEED).map(|g| g.gmi),
        other => other,
    }
}

fn mc_gmi(c: &Constellation, ch: &ChannelSpec, seed: u64) -> Result<GmiEstimate> {
    let mut r = rng::stream(seed, 0x4341_4c, 0);
    let bits = BitFrame::random(MC_SYMBOLS * c.bits_per_symbol(), &mut r);
    let y = ch.transmit(&c.map_bits(&bits)?, &mut r);
    let llrs = demap_llr(c, &y, ch, DemapMode::Exact)?;
    estimate_gmi(&bits, &llrs, c.bits_per_symbol())
}

/// Finds the Es/N0 at which `target_family` has the GMI of `ch_ref`.
///
/// Bisection in `ln Es/N0` over `[esn0_ref / 100, esn0_ref * 100]` until the
/// GMI difference is at most `tol`. The result keeps the quantizer of
/// `ch_ref`.
pub fn match_gmi(c: &Constellation, ch_ref: &ChannelSpec, target_family: NoiseFamily, tol: f64) -> Result<ChannelSpec> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let target = calibration_gmi(c, ch_ref)?;
    let mut template = ChannelSpec::new(target_family, ch_ref.esn0())?;
    if let Some(q) = ch_ref.quantizer() {
        template = template.quantized(q.levels(), q.range())?;
    }
    let gmi_at = |ln_esn0: f64| -> Result<(ChannelSpec, f64)> {
        let ch = template.with_esn0(ln_esn0.exp())?;
        let g = calibration_gmi(c, &ch)?;
        Ok((ch, g))
    };
    let mut lo = (ch_ref.esn0() / 100.0).ln();
    let mut hi = (ch_ref.esn0() * 100.0).ln();
    let (_, g_lo) = gmi_at(lo)?;
    let (_, g_hi) = gmi_at(hi)?;
    if !(g_lo - tol <= target && target <= g_hi + tol) {
        return Err(Error::NoBracket(format!(
            "reference GMI {target:.4} outside [{g_lo:.4}, {g_hi:.4}] for {target_family} over Es/N0 x[1/100, 100]"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (ch, g) = gmi_at(mid)?;
        if (g - target).abs() <= tol {
            log::debug!("calibrated {ch} to GMI {g:.5} (reference {target:.5})");
            return Ok(ch);
        }
        if g < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection did not reach tolerance {tol} for reference GMI {target:.4}"
    )))
}
