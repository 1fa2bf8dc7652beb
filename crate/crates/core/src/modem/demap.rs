use super::{Constellation, LlrFrame, LLR_MAX};
use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Bit-metric demapping rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemapMode {
    /// Log-sum-exp over each bit coset.
    #[default]
    Exact,
    /// Max over each bit coset.
    MaxLog,
}

impl std::str::FromStr for DemapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<DemapMode> {
        match s {
            "exact" => Ok(DemapMode::Exact),
            "max-log" | "maxlog" => Ok(DemapMode::MaxLog),
            _ => Err(Error::InvalidArgument(format!("unknown demap mode '{s}'"))),
        }
    }
}

/// Computes the `m` LLRs of one received sample into `out`.
///
/// `metric` is scratch space of at least `c.size()` entries.
pub fn demap_symbol(
    c: &Constellation,
    y: Complex64,
    ch: &ChannelSpec,
    mode: DemapMode,
    metric: &mut [f64],
    out: &mut [f64],
) {
    let size = c.size();
    for (mt, &p) in metric[..size].iter_mut().zip(c.points()) {
        *mt = ch.ln_pdf(y, p);
    }
    for (level, o) in out[..c.m].iter_mut().enumerate() {
        let mut max0 = f64::NEG_INFINITY;
        let mut max1 = f64::NEG_INFINITY;
        for (i, &mt) in metric[..size].iter().enumerate() {
            if c.bit(i, level) == 0 {
                max0 = max0.max(mt);
            } else {
                max1 = max1.max(mt);
            }
        }
        let llr = match mode {
            DemapMode::MaxLog => max0 - max1,
            DemapMode::Exact => {
                let (mut s0, mut s1) = (0.0, 0.0);
                for (i, &mt) in metric[..size].iter().enumerate() {
                    if c.bit(i, level) == 0 {
                        s0 += (mt - max0).exp();
                    } else {
                        s1 += (mt - max1).exp();
                    }
                }
                (max0 + s0.ln()) - (max1 + s1.ln())
            }
        };
        *o = if llr.is_nan() { 0.0 } else { llr.clamp(-LLR_MAX, LLR_MAX) };
    }
}

/// Bit-metric demapping of `y` under the channel law of `ch` with uniform
/// bit priors. Output length is `m * y.len()`; values are clipped to
/// `±LLR_MAX`.
pub fn demap_llr(c: &Constellation, y: &[Complex64], ch: &ChannelSpec, mode: DemapMode) -> Result<LlrFrame> {
    if y.is_empty() {
        return Err(Error::Empty);
    }
    let mut llrs = vec![0.0; y.len() * c.m];
    demap_into(c, y, ch, mode, &mut llrs);
    LlrFrame::new(llrs)
}

pub(crate) fn demap_into(c: &Constellation, y: &[Complex64], ch: &ChannelSpec, mode: DemapMode, llrs: &mut [f64]) {
    let mut metric = vec![0.0; c.size()];
    for (&s, out) in y.iter().zip(llrs.chunks_exact_mut(c.m)) {
        demap_symbol(c, s, ch, mode, &mut metric, out);
    }
}

impl Constellation {
    /// See [`demap_llr`].
    pub fn demap_llr(&self, y: &[Complex64], ch: &ChannelSpec, mode: DemapMode) -> Result<LlrFrame> {
        demap_llr(self, y, ch, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::apply_channel;
    use crate::modem::{build_constellation, ConstellationSpec};
    use proptest::prelude::*;

    fn named(n: &str) -> Constellation {
        build_constellation(&ConstellationSpec::named(n)).unwrap()
    }

    fn one(c: &Constellation, y: Complex64, ch: &ChannelSpec, mode: DemapMode) -> Vec<f64> {
        demap_llr(c, &[y], ch, mode).unwrap().into_inner()
    }

    #[test]
    fn bpsk_awgn_closed_form() {
        // σ² = N0/2 = 0.5 at Es/N0 = 1, so L = 2y/σ² = 2.
        let c = named("BPSK");
        let ch = ChannelSpec::awgn(1.0).unwrap();
        let l = one(&c, Complex64::new(0.5, 0.0), &ch, DemapMode::Exact);
        assert!((l[0] - 2.0).abs() < 1e-12);
        // The imaginary part does not carry information for BPSK.
        let l = one(&c, Complex64::new(0.5, 0.7), &ch, DemapMode::Exact);
        assert!((l[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bpsk_laplace_closed_form() {
        // b = 0.5 at Es/N0 = 1: L = (|y+1| - |y-1|) / b = 2.
        let c = named("BPSK");
        let ch = ChannelSpec::laplace(1.0).unwrap();
        assert!((ch.laplace_scale() - 0.5).abs() < 1e-15);
        let l = one(&c, Complex64::new(0.5, 0.0), &ch, DemapMode::Exact);
        assert!((l[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_is_uninformative() {
        let c = named("BPSK");
        for ch in [ChannelSpec::awgn(2.0).unwrap(), ChannelSpec::laplace(2.0).unwrap()] {
            let l = one(&c, Complex64::new(0.0, 0.3), &ch, DemapMode::Exact);
            assert_eq!(l[0], 0.0);
        }
    }

    #[test]
    fn llrs_are_clipped() {
        let c = named("BPSK");
        let ch = ChannelSpec::awgn(1e6).unwrap();
        let l = one(&c, Complex64::new(1.0, 0.0), &ch, DemapMode::Exact);
        assert_eq!(l[0], LLR_MAX);
    }

    #[test]
    fn empty_input_is_rejected() {
        let c = named("QPSK");
        let ch = ChannelSpec::awgn(1.0).unwrap();
        assert!(matches!(demap_llr(&c, &[], &ch, DemapMode::Exact), Err(Error::Empty)));
    }

    #[test]
    fn output_length_and_quantized_channel() {
        let c = named("16QAM");
        let ch = ChannelSpec::awgn(10.0).unwrap().quantized(16, 1.5).unwrap();
        let x: Vec<_> = c.points().to_vec();
        let y = apply_channel(&ch, &x, 2);
        let l = demap_llr(&c, &y, &ch, DemapMode::Exact).unwrap();
        assert_eq!(l.len(), 64);
        assert!(l.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sign_decision_matches_hard_decision_for_qpsk() {
        let c = named("QPSK");
        let ch = ChannelSpec::awgn(1.5).unwrap();
        let x: Vec<_> = (0..2000).map(|i| c.points()[(i * 3 + i / 5) % 4]).collect();
        let y = apply_channel(&ch, &x, 11);
        let soft = demap_llr(&c, &y, &ch, DemapMode::Exact).unwrap().hard_decision();
        let hard = c.inverse_label(&c.hard_decide(&y).unwrap()).unwrap();
        assert_eq!(soft, hard);
    }

    proptest! {
        #[test]
        fn maxlog_within_coset_bound_of_exact(re in -1.5f64..1.5, im in -1.5f64..1.5, db in -2.0f64..20.0) {
            let ch = ChannelSpec::awgn(10f64.powf(db / 10.0)).unwrap();
            for name in ["QPSK", "16QAM", "64QAM"] {
                let c = named(name);
                let y = Complex64::new(re, im);
                let a = one(&c, y, &ch, DemapMode::Exact);
                let b = one(&c, y, &ch, DemapMode::MaxLog);
                // Each coset log-sum-exp exceeds its max by at most ln(M/2).
                let bound = (c.size() as f64 / 2.0).ln() + 1e-12;
                for (u, v) in a.iter().zip(&b) {
                    prop_assert!((u - v).abs() <= bound, "{name}: {u} vs {v}");
                }
            }
        }

        #[test]
        fn bpsk_llr_is_odd(y in -3.0f64..3.0, db in -5.0f64..15.0) {
            let c = named("BPSK");
            let esn0 = 10f64.powf(db / 10.0);
            for ch in [ChannelSpec::awgn(esn0).unwrap(), ChannelSpec::laplace(esn0).unwrap()] {
                let a = one(&c, Complex64::new(y, 0.0), &ch, DemapMode::Exact)[0];
                let b = one(&c, Complex64::new(-y, 0.0), &ch, DemapMode::Exact)[0];
                prop_assert!((a + b).abs() < 1e-9);
            }
        }

        #[test]
        fn noiseless_round_trip(seed in 0u64..1000) {
            use rand::Rng;
            let mut rng = crate::rng::stream(seed, 0, 0);
            for name in super::super::BUILTIN_NAMES {
                let c = named(name);
                let idx: Vec<usize> = (0..32).map(|_| rng.random_range(0..c.size())).collect();
                let bits = c.inverse_label(&idx).unwrap();
                let x = c.map_bits(&bits).unwrap();
                prop_assert_eq!(c.hard_decide(&x).unwrap(), idx);
                prop_assert_eq!(c.inverse_label(&c.map_indices(&bits).unwrap()).unwrap(), bits);
            }
        }
    }
}
