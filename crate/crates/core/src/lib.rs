//! Coded-modulation performance laboratory.
//!
//! The crate covers the chain used to evaluate forward error correction on
//! bit-interleaved coded modulation (BICM):
//!
//! * [`modem`]: constellations, labeling, hard decisions and bit-metric demapping.
//! * [`channels`]: AWGN / Laplace / quantized channels and the two-channel mixer.
//! * [`ldpc`]: regular QC-LDPC construction, systematic encoding and layered
//!   scaled min-sum decoding.
//! * [`metrics`]: pre-FEC SER/BER, GMI, MI, NGMI, the symbol-wise hard-decision
//!   rate and equal-GMI channel calibration.
//! * [`experiments`]: reference curves, thresholds, interpolation-based
//!   post-FEC prediction and the universality sweep.
//! * [`replay`]: decoding real codewords through a recorded measurement by
//!   means of equivalent LLRs.

pub mod channels;
pub mod error;
pub mod experiments;
pub mod ldpc;
pub mod metrics;
pub mod modem;
pub mod replay;
pub mod rng;
pub mod stats;

pub use channels::{apply_channel, mixed_transmit, ChannelSpec, NoiseFamily, Quantizer};
pub use error::{Error, Result};
pub use ldpc::{build_qc_code, CodeRate, DecodeResult, DecoderParams, QcLdpcCode};
pub use modem::{
    build_constellation, demap_llr, BitFrame, Constellation, ConstellationSpec, DemapMode, LlrFrame, LLR_MAX,
};

pub use num_complex::Complex64;

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
