//! Memoryless channel models parametrized by Es/N0 (linear).
//!
//! Constellations have unit mean energy, so with `Es = 1` the noise in each
//! real dimension has variance `1 / (2 Es/N0)` for both families:
//! Gaussian with `σ² = 1 / (2 Es/N0)` and Laplace with scale
//! `b = (Es/N0)^(-1/2) / 2`, whose variance `2b²` is the same.

use crate::error::{Error, Result};
use crate::modem::{BitFrame, Constellation};
use crate::rng::{self, SimRng};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::fmt;

/// Noise law applied independently to each real dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Awgn,
    Laplace,
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseFamily::Awgn => "awgn",
            NoiseFamily::Laplace => "laplace",
        })
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<NoiseFamily> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" | "gaussian" => Ok(NoiseFamily::Awgn),
            "laplace" => Ok(NoiseFamily::Laplace),
            _ => Err(Error::InvalidChannel(format!("unknown channel family '{s}'"))),
        }
    }
}

/// Uniform mid-rise quantizer with `levels` cells on `[-range, range]` per
/// real dimension; the outer cells extend to infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    levels: u32,
    range: f64,
}

impl Quantizer {
    pub fn new(levels: u32, range: f64) -> Result<Quantizer> {
        if levels < 2 {
            return Err(Error::InvalidChannel(format!("quantizer needs >= 2 levels, got {levels}")));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::InvalidChannel(format!("quantizer range must be positive, got {range}")));
        }
        Ok(Quantizer { levels, range })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    fn step(&self) -> f64 {
        2.0 * self.range / self.levels as f64
    }

    pub fn cell(&self, v: f64) -> u32 {
        let k = ((v + self.range) / self.step()).floor();
        k.clamp(0.0, (self.levels - 1) as f64) as u32
    }

    pub fn reconstruct(&self, cell: u32) -> f64 {
        -self.range + (cell as f64 + 0.5) * self.step()
    }

    pub fn quantize(&self, v: f64) -> f64 {
        self.reconstruct(self.cell(v))
    }

    /// Cell bounds, with infinite outer edges.
    pub fn bounds(&self, cell: u32) -> (f64, f64) {
        let lo = if cell == 0 {
            f64::NEG_INFINITY
        } else {
            -self.range + cell as f64 * self.step()
        };
        let hi = if cell + 1 == self.levels {
            f64::INFINITY
        } else {
            -self.range + (cell + 1) as f64 * self.step()
        };
        (lo, hi)
    }
}

/// A memoryless channel: noise family, Es/N0 and an optional output quantizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    family: NoiseFamily,
    esn0: f64,
    quantizer: Option<Quantizer>,
}

impl ChannelSpec {
    pub fn new(family: NoiseFamily, esn0: f64) -> Result<ChannelSpec> {
        if !(esn0 > 0.0 && esn0.is_finite()) {
            return Err(Error::InvalidChannel(format!("Es/N0 must be positive and finite, got {esn0}")));
        }
        Ok(ChannelSpec {
            family,
            esn0,
            quantizer: None,
        })
    }

    pub fn awgn(esn0: f64) -> Result<ChannelSpec> {
        ChannelSpec::new(NoiseFamily::Awgn, esn0)
    }

    pub fn laplace(esn0: f64) -> Result<ChannelSpec> {
        ChannelSpec::new(NoiseFamily::Laplace, esn0)
    }

    /// Wraps the channel with an output quantizer.
    pub fn quantized(mut self, levels: u32, range: f64) -> Result<ChannelSpec> {
        self.quantizer = Some(Quantizer::new(levels, range)?);
        Ok(self)
    }

    /// Same family and quantizer at a different Es/N0.
    pub fn with_esn0(&self, esn0: f64) -> Result<ChannelSpec> {
        let mut ch = ChannelSpec::new(self.family, esn0)?;
        ch.quantizer = self.quantizer;
        Ok(ch)
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn esn0(&self) -> f64 {
        self.esn0
    }

    pub fn esn0_db(&self) -> f64 {
        10.0 * self.esn0.log10()
    }

    pub fn quantizer(&self) -> Option<&Quantizer> {
        self.quantizer.as_ref()
    }

    /// Noise variance per real dimension, `1 / (2 Es/N0)`.
    pub fn noise_variance(&self) -> f64 {
        0.5 / self.esn0
    }

    /// Laplace scale `b = (Es/N0)^(-1/2) / 2`.
    pub fn laplace_scale(&self) -> f64 {
        self.esn0.sqrt().recip() / 2.0
    }

    /// Scale multiplying a unit-parameter noise draw (standard normal or
    /// standard Laplace).
    fn noise_scale(&self) -> f64 {
        match self.family {
            NoiseFamily::Awgn => self.noise_variance().sqrt(),
            NoiseFamily::Laplace => self.laplace_scale(),
        }
    }

    fn unit_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Awgn => StandardNormal.sample(rng),
            NoiseFamily::Laplace => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                a - b
            }
        }
    }

    /// Adds noise to `x` (and quantizes, if configured) using `rng`.
    ///
    /// Noise is drawn as unit-parameter samples scaled by the channel, so two
    /// channels of the same family driven by the same stream see common
    /// random numbers.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &[Complex64], rng: &mut R) -> Vec<Complex64> {
        let s = self.noise_scale();
        x.iter()
            .map(|&x| {
                let re = x.re + s * self.unit_noise(rng);
                let im = x.im + s * self.unit_noise(rng);
                match &self.quantizer {
                    Some(q) => Complex64::new(q.quantize(re), q.quantize(im)),
                    None => Complex64::new(re, im),
                }
            })
            .collect()
    }

    fn ln_density_1d(&self, d: f64) -> f64 {
        match self.family {
            NoiseFamily::Awgn => {
                let v = self.noise_variance();
                -d * d / (2.0 * v) - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
            }
            NoiseFamily::Laplace => {
                let b = self.laplace_scale();
                -d.abs() / b - (2.0 * b).ln()
            }
        }
    }

    /// Noise CDF and survival function at `t`.
    fn cdf(&self, t: f64) -> f64 {
        match self.family {
            NoiseFamily::Awgn => 0.5 * erfc(-t / (2.0 * self.noise_variance()).sqrt()),
            NoiseFamily::Laplace => {
                let b = self.laplace_scale();
                if t < 0.0 {
                    0.5 * (t / b).exp()
                } else {
                    1.0 - 0.5 * (-t / b).exp()
                }
            }
        }
    }

    fn ln_cell_prob(&self, q: &Quantizer, y: f64, x: f64) -> f64 {
        let (lo, hi) = q.bounds(q.cell(y));
        let (lo, hi) = (lo - x, hi - x);
        // Subtract in the tail the interval lies in to keep precision.
        let p = if lo >= 0.0 {
            self.cdf(-lo) - self.cdf(-hi)
        } else {
            self.cdf(hi) - self.cdf(lo)
        };
        p.max(1e-300).ln()
    }

    /// Per-dimension log density (or log cell probability when quantized).
    #[inline]
    pub fn ln_pdf_1d(&self, y: f64, x: f64) -> f64 {
        match &self.quantizer {
            None => self.ln_density_1d(y - x),
            Some(q) => self.ln_cell_prob(q, y, x),
        }
    }

    /// `ln p(y|x)` for a complex sample; the product of the per-dimension laws.
    #[inline]
    pub fn ln_pdf(&self, y: Complex64, x: Complex64) -> f64 {
        self.ln_pdf_1d(y.re, x.re) + self.ln_pdf_1d(y.im, x.im)
    }

    /// `p(y|x)`; a probability mass over quantizer cells for quantized channels.
    pub fn pdf(&self, y: Complex64, x: Complex64) -> f64 {
        self.ln_pdf(y, x).exp()
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Es/N0 = {:.3} dB", self.family, self.esn0_db())?;
        if let Some(q) = &self.quantizer {
            write!(f, " quantized({} levels, ±{})", q.levels, q.range)?;
        }
        Ok(())
    }
}

/// Passes `x` through the channel with noise drawn from `seed`.
pub fn apply_channel(ch: &ChannelSpec, x: &[Complex64], seed: u64) -> Vec<Complex64> {
    let mut rng = rng::stream(seed, DOMAIN_CHANNEL, 0);
    ch.transmit(x, &mut rng)
}

const DOMAIN_CHANNEL: u64 = 0x4348_414e;

/// Which branch of a mixed transmission a symbol went through.
pub type ChannelTag = u8;

/// Number of leading symbols routed over channel 1 for a fraction `gamma`.
pub fn split_point(gamma: f64, n_symbols: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(((gamma * n_symbols as f64).round() as usize).min(n_symbols))
}

/// Maps `bits` and sends the first `round(gamma * N_sym)` symbols over `ch1`
/// and the rest over `ch2`. Tag 0 marks channel 1, tag 1 channel 2.
pub fn mixed_transmit(
    bits: &BitFrame,
    ch1: &ChannelSpec,
    ch2: &ChannelSpec,
    gamma: f64,
    c: &Constellation,
    seed: u64,
) -> Result<(Vec<Complex64>, Vec<ChannelTag>)> {
    let mut rng = rng::stream(seed, DOMAIN_CHANNEL, 1);
    let x = c.map_bits(bits)?;
    mixed_transmit_with(&x, ch1, ch2, gamma, &mut rng)
}

pub(crate) fn mixed_transmit_with(
    x: &[Complex64],
    ch1: &ChannelSpec,
    ch2: &ChannelSpec,
    gamma: f64,
    rng: &mut SimRng,
) -> Result<(Vec<Complex64>, Vec<ChannelTag>)> {
    let split = split_point(gamma, x.len())?;
    let mut y = ch1.transmit(&x[..split], rng);
    y.extend(ch2.transmit(&x[split..], rng));
    let mut tags = vec![0; split];
    tags.resize(x.len(), 1);
    Ok((y, tags))
}
