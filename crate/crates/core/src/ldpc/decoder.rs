//! Layered scaled min-sum decoding.
//!
//! One layer is one row of the base matrix (`Z` checks that touch disjoint
//! variables); layers are processed top to bottom and each check update is
//! written back to the posteriors immediately.

use super::QcLdpcCode;
use crate::error::{Error, Result};
use crate::modem::{BitFrame, LlrFrame};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    /// Iteration cap; decoding stops early on a zero syndrome.
    pub max_iters: usize,
    /// Scaling applied to check-to-variable magnitudes, in `(0, 1]`.
    pub alpha: f64,
}

impl Default for DecoderParams {
    fn default() -> Self {
        DecoderParams {
            max_iters: 10,
            alpha: 0.75,
        }
    }
}

impl DecoderParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub decoded: BitFrame,
    pub iterations_used: usize,
    /// Zero syndrome reached.
    pub converged: bool,
    /// Bit errors against a reference codeword, once compared.
    pub bit_errors: Option<usize>,
}

impl DecodeResult {
    /// Counts and records the bit errors against `reference`.
    pub fn compare(&mut self, reference: &BitFrame) -> Result<usize> {
        let e = self.decoded.hamming_distance(reference)?;
        self.bit_errors = Some(e);
        Ok(e)
    }
}

/// Decoder with reusable message buffers.
pub struct LayeredMinSum<'a> {
    code: &'a QcLdpcCode,
    params: DecoderParams,
    posterior: Vec<f64>,
    messages: Vec<f64>,
    scratch: Vec<f64>,
    hard: Vec<u8>,
}

impl<'a> LayeredMinSum<'a> {
    pub fn new(code: &'a QcLdpcCode, params: DecoderParams) -> Result<LayeredMinSum<'a>> {
        params.validate()?;
        let (_, dc) = code.degrees();
        Ok(LayeredMinSum {
            code,
            params,
            posterior: vec![0.0; code.n()],
            messages: vec![0.0; code.check_vars().len()],
            scratch: vec![0.0; dc],
            hard: vec![0; code.n()],
        })
    }

    /// Posterior LLRs after the last call to [`LayeredMinSum::decode`].
    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn decode(&mut self, llrs: &LlrFrame) -> Result<DecodeResult> {
        let n = self.code.n();
        if llrs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: llrs.len(),
            });
        }
        self.posterior.copy_from_slice(llrs.as_slice());
        self.messages.fill(0.0);
        let ptr = self.code.check_ptr();
        let vars = self.code.check_vars();
        let alpha = self.params.alpha;
        let mut converged = false;
        let mut iterations = 0;
        for _ in 0..self.params.max_iters {
            iterations += 1;
            // Check rows are stored layer by layer, so one pass over all rows
            // in order is one layered iteration.
            for r in 0..self.code.checks() {
                let (lo, hi) = (ptr[r], ptr[r + 1]);
                let q = &mut self.scratch[..hi - lo];
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut arg = 0;
                let mut negative = false;
                for (j, e) in (lo..hi).enumerate() {
                    let v = self.posterior[vars[e]] - self.messages[e];
                    q[j] = v;
                    negative ^= v < 0.0;
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = j;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for (j, e) in (lo..hi).enumerate() {
                    let mag = if j == arg { min2 } else { min1 };
                    let sign_neg = negative ^ (q[j] < 0.0);
                    let msg = if sign_neg { -alpha * mag } else { alpha * mag };
                    self.messages[e] = msg;
                    self.posterior[vars[e]] = q[j] + msg;
                }
            }
            for (h, &l) in self.hard.iter_mut().zip(&self.posterior) {
                *h = (l < 0.0) as u8;
            }
            if self.code.syndrome_weight_raw(&self.hard) == 0 {
                converged = true;
                break;
            }
        }
        Ok(DecodeResult {
            decoded: BitFrame::new(self.hard.clone())?,
            iterations_used: iterations,
            converged,
            bit_errors: None,
        })
    }
}

/// Decodes `llrs` with a fresh [`LayeredMinSum`].
pub fn decode_layered_minsum(code: &QcLdpcCode, llrs: &LlrFrame, params: DecoderParams) -> Result<DecodeResult> {
    LayeredMinSum::new(code, params)?.decode(llrs)
}
