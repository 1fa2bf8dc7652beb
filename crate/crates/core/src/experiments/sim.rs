//! Frame-level Monte Carlo engine shared by all experiment drivers.

use crate::channels::{mixed_transmit_with, ChannelSpec};
use crate::error::{Error, Result};
use crate::ldpc::{DecoderParams, LayeredMinSum, QcLdpcCode};
use crate::metrics::estimate_gmi;
use crate::modem::{demap_into, BitFrame, Constellation, DemapMode, LlrFrame};
use crate::rng::{self, SimRng};
use crate::stats::MeanAccumulator;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Frames simulated between two checks of the stopping rule. Fixed so that
/// the number of simulated frames does not depend on the worker count.
pub const BATCH_FRAMES: u64 = 64;

const DOMAIN_FRAME: u64 = 0x4652_414d_4500;

/// Stop a point once `min_errors` post-FEC bit errors or `max_frames`
/// frames are reached, checked after each batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_errors: 200,
            max_frames: 100_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_errors == 0 || self.max_frames == 0 {
            return Err(Error::InvalidArgument("stop rule needs min_errors >= 1 and max_frames >= 1".into()));
        }
        Ok(())
    }
}

/// Decoder, demapper, stopping rule and master seed of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub decoder: DecoderParams,
    pub demap: DemapMode,
    pub stop: StopRule,
    pub seed: u64,
}

impl SimSettings {
    pub fn new(seed: u64) -> SimSettings {
        SimSettings {
            decoder: DecoderParams::default(),
            demap: DemapMode::Exact,
            stop: StopRule::default(),
            seed,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> SimSettings {
        self.stop = stop;
        self
    }
}

/// The channel a codeword passes through.
#[derive(Clone, Debug, PartialEq)]
pub enum Link {
    Single(ChannelSpec),
    /// The first `round(gamma * N_sym)` symbols over `ch1`, the rest over `ch2`.
    Mixed {
        ch1: ChannelSpec,
        ch2: ChannelSpec,
        gamma: f64,
    },
}

/// Aggregated outcome of a simulated point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorTally {
    pub frames: u64,
    /// Code bits per frame; BER counts errors over all of them.
    pub bits_per_frame: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Post-FEC bit errors per frame.
    #[serde(skip)]
    pub per_frame_errors: MeanAccumulator,
    /// Per-frame sample GMI of the channel LLRs, bits per symbol.
    #[serde(skip)]
    pub sample_gmi: MeanAccumulator,
}

impl ErrorTally {
    pub fn ber(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.bit_errors as f64 / (self.frames * self.bits_per_frame) as f64
    }

    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.frame_errors as f64 / self.frames as f64
    }

    pub fn total_bits(&self) -> u64 {
        self.frames * self.bits_per_frame
    }
}

struct FrameOutcome {
    bit_errors: u64,
    gmi: f64,
}

/// Runs one frame: random information → encode → pad to whole symbols with
/// random bits → map → channel → exact per-branch demapping → decode.
fn run_frame(
    code: &QcLdpcCode,
    c: &Constellation,
    link: &Link,
    demap: DemapMode,
    decoder: &mut LayeredMinSum<'_>,
    rng: &mut SimRng,
) -> Result<FrameOutcome> {
    let m = c.bits_per_symbol();
    let n = code.n();
    let info = BitFrame::random(code.k(), rng);
    let cw = code.encode(&info)?;
    let mut bits = cw.as_slice().to_vec();
    while bits.len() % m != 0 {
        bits.push(rng.random_range(0..2u8));
    }
    let bits = BitFrame::new(bits)?;
    let x = c.map_bits(&bits)?;
    let mut llrs = vec![0.0; bits.len()];
    match link {
        Link::Single(ch) => {
            let y = ch.transmit(&x, rng);
            demap_into(c, &y, ch, demap, &mut llrs);
        }
        Link::Mixed { ch1, ch2, gamma } => {
            let (y, tags) = mixed_transmit_with(&x, ch1, ch2, *gamma, rng)?;
            let split = tags.iter().take_while(|&&t| t == 0).count();
            demap_into(c, &y[..split], ch1, demap, &mut llrs[..split * m]);
            demap_into(c, &y[split..], ch2, demap, &mut llrs[split * m..]);
        }
    }
    let llrs = LlrFrame::new(llrs)?;
    let gmi = estimate_gmi(&bits, &llrs, m)?.gmi;
    let coded = LlrFrame::new(llrs.as_slice()[..n].to_vec())?;
    let mut res = decoder.decode(&coded)?;
    let bit_errors = res.compare(&cw)? as u64;
    Ok(FrameOutcome { bit_errors, gmi })
}

/// Simulates frames of `code` over `link` until the stopping rule fires.
///
/// Frame `i` draws all its randomness from stream `i` of the generator keyed
/// by `(settings.seed, stream_id)`; batches are evaluated in parallel and
/// folded in frame order, so the result is independent of the thread count.
pub fn simulate_link(
    code: &QcLdpcCode,
    c: &Constellation,
    link: &Link,
    settings: &SimSettings,
    stream_id: u64,
) -> Result<ErrorTally> {
    settings.stop.validate()?;
    settings.decoder.validate()?;
    if let Link::Mixed { gamma, .. } = link {
        if !(0.0..=1.0).contains(gamma) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
        }
    }
    let mut tally = ErrorTally {
        bits_per_frame: code.n() as u64,
        ..ErrorTally::default()
    };
    let domain = DOMAIN_FRAME.wrapping_add(stream_id);
    while tally.bit_errors < settings.stop.min_errors && tally.frames < settings.stop.max_frames {
        let start = tally.frames;
        let end = (start + BATCH_FRAMES).min(settings.stop.max_frames);
        let outcomes: Vec<Result<FrameOutcome>> = (start..end)
            .into_par_iter()
            .map_init(
                || LayeredMinSum::new(code, settings.decoder),
                |decoder, i| {
                    let decoder = decoder.as_mut().map_err(|e| Error::InvalidArgument(e.to_string()))?;
                    let mut rng = rng::stream(settings.seed, domain, i);
                    run_frame(code, c, link, settings.demap, decoder, &mut rng)
                },
            )
            .collect();
        for o in outcomes {
            let o = o?;
            tally.frames += 1;
            tally.bit_errors += o.bit_errors;
            tally.frame_errors += (o.bit_errors > 0) as u64;
            tally.per_frame_errors.push(o.bit_errors as f64);
            tally.sample_gmi.push(o.gmi);
        }
    }
    Ok(tally)
}
