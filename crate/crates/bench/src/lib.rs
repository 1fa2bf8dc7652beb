//! Deterministic inputs for the kernel benchmarks.

use fecbench_core::{
    apply_channel, build_constellation, build_qc_code, db_to_linear, demap_llr, rng, BitFrame, ChannelSpec, CodeRate,
    Constellation, ConstellationSpec, DemapMode, LlrFrame, QcLdpcCode,
};

const DOMAIN_BENCH: u64 = 0xBE4C;

pub fn constellation(name: &str) -> Constellation {
    build_constellation(&ConstellationSpec::named(name)).expect("builtin constellation")
}

pub fn code(rate: CodeRate, z: usize) -> QcLdpcCode {
    build_qc_code(rate, z).expect("code construction")
}

/// Random information word of `code`.
pub fn info_bits(code: &QcLdpcCode, seed: u64) -> BitFrame {
    BitFrame::random(code.k(), &mut rng::stream(seed, DOMAIN_BENCH, 0))
}

/// Received samples of `n_symbols` random symbols of `c` over AWGN.
pub fn received(c: &Constellation, n_symbols: usize, esn0_db: f64, seed: u64) -> (Vec<fecbench_core::Complex64>, ChannelSpec) {
    let bits = BitFrame::random(n_symbols * c.bits_per_symbol(), &mut rng::stream(seed, DOMAIN_BENCH, 1));
    let ch = ChannelSpec::awgn(db_to_linear(esn0_db)).expect("valid Es/N0");
    let y = apply_channel(&ch, &c.map_bits(&bits).expect("whole symbols"), seed);
    (y, ch)
}

/// Channel LLRs of one codeword of `code` sent with `c` over AWGN.
/// `code.n()` must be a multiple of the bits per symbol.
pub fn codeword_llrs(code: &QcLdpcCode, c: &Constellation, esn0_db: f64, seed: u64) -> LlrFrame {
    let cw = code.encode(&info_bits(code, seed)).expect("encodable");
    let ch = ChannelSpec::awgn(db_to_linear(esn0_db)).expect("valid Es/N0");
    let y = apply_channel(&ch, &c.map_bits(&cw).expect("whole symbols"), seed);
    demap_llr(c, &y, &ch, DemapMode::Exact).expect("demapping")
}
