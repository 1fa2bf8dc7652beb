//! Command-line flags. Each subcommand's flags are merged over the config
//! file; a flag that is given always wins.

use crate::config::{
    parse_grid, parse_list, ChannelSection, CodeSection, Config, ConstellationSection, CurveSection,
    DecoderSection, MeasurementSection, PredictSection, QuantSection, ReplaySection, StopSection,
    SyntheticSection, ThresholdSection, UniversalitySection,
};
use crate::error::CliError;
use clap::{Args, Parser, Subcommand};
use fecbench_core::{DemapMode, NoiseFamily};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fecbench", version, about = "FEC performance experiments: reference curves, thresholds, universality sweeps and measurement replay")]
pub struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Re-run the experiment recorded in a manifest.json.
    #[arg(long, global = true, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,

    /// Output directory for result files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true, env = "FECBENCH_JOBS")]
    pub jobs: Option<usize>,

    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a reference curve (post-FEC BER against normalized GMI).
    Curve(CurveArgs),
    /// Extract the normalized-GMI threshold at a target post-FEC BER.
    Threshold(ThresholdArgs),
    /// Mixed-channel sweep at equal GMI.
    Universality(UniversalityArgs),
    /// Predict post-FEC BER from a reference curve and a GMI.
    Predict(PredictArgs),
    /// Decode codewords through a recorded measurement.
    Replay(ReplayArgs),
    /// Print the metric report of a measurement as JSON.
    Metrics(MetricsArgs),
    /// Write a synthetic measurement file.
    GenSynthetic(GenSyntheticArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Curve(_) => "curve",
            Command::Threshold(_) => "threshold",
            Command::Universality(_) => "universality",
            Command::Predict(_) => "predict",
            Command::Replay(_) => "replay",
            Command::Metrics(_) => "metrics",
            Command::GenSynthetic(_) => "gen-synthetic",
        }
    }

    /// Merges the flags into `cfg`.
    pub fn apply(&self, cfg: &mut Config) -> Result<(), CliError> {
        match self {
            Command::Curve(a) => a.apply(cfg),
            Command::Threshold(a) => {
                a.curve.apply(cfg)?;
                let t = cfg.threshold.get_or_insert_with(ThresholdSection::default);
                set(&mut t.target_ber, a.target_ber);
                set(&mut t.curve, a.curve_file.clone());
                Ok(())
            }
            Command::Universality(a) => {
                set(&mut cfg.seed, a.seed);
                a.constellation.apply(cfg);
                a.channel.apply(cfg.channel.get_or_insert_with(ChannelSection::default))?;
                if let Some(f) = a.channel2 {
                    cfg.channel2.get_or_insert_with(ChannelSection::default).family = Some(f);
                }
                a.code.apply(cfg);
                a.stop.apply(cfg);
                let u = cfg.universality.get_or_insert_with(UniversalitySection::default);
                if let Some(g) = &a.gammas {
                    u.gammas = Some(parse_list(g).map_err(CliError::Config)?);
                }
                set(&mut u.tol, a.tol);
                Ok(())
            }
            Command::Predict(a) => {
                a.constellation.apply(cfg);
                set_input(cfg, a.input.clone());
                let p = cfg.predict.get_or_insert_with(PredictSection::default);
                set(&mut p.curve, a.curve.clone());
                set(&mut p.gmi, a.gmi);
                Ok(())
            }
            Command::Replay(a) => {
                set(&mut cfg.seed, a.seed);
                a.constellation.apply(cfg);
                set_input(cfg, a.input.clone());
                a.code.apply(cfg);
                let r = cfg.replay.get_or_insert_with(ReplaySection::default);
                set(&mut r.codewords, a.codewords);
                Ok(())
            }
            Command::Metrics(a) => {
                a.constellation.apply(cfg);
                set_input(cfg, a.input.clone());
                Ok(())
            }
            Command::GenSynthetic(a) => {
                set(&mut cfg.seed, a.seed);
                a.constellation.apply(cfg);
                a.channel.apply(cfg.channel.get_or_insert_with(ChannelSection::default))?;
                let s = cfg.synthetic.get_or_insert_with(SyntheticSection::default);
                set(&mut s.symbols, a.symbols);
                set(&mut s.output, a.output.clone());
                if a.binary {
                    s.binary = Some(true);
                }
                Ok(())
            }
        }
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn set_input(cfg: &mut Config, input: Option<PathBuf>) {
    if input.is_some() {
        cfg.measurement.get_or_insert_with(MeasurementSection::default).input = input;
    }
}

#[derive(Debug, Args)]
pub struct ConstellationArgs {
    /// Built-in constellation (BPSK, QPSK, 8QAM-rect, 8QAM-circ17, 8QAM-cross, 16QAM, 32QAM, 64QAM).
    #[arg(long)]
    pub constellation: Option<String>,
    /// Constellation CSV with columns label_bits,re,im.
    #[arg(long, conflicts_with = "constellation")]
    pub constellation_file: Option<PathBuf>,
}

impl ConstellationArgs {
    fn apply(&self, cfg: &mut Config) {
        if self.constellation.is_some() || self.constellation_file.is_some() {
            cfg.constellation = Some(ConstellationSection {
                name: self.constellation.clone(),
                file: self.constellation_file.clone(),
            });
        }
    }
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Noise family: awgn or laplace.
    #[arg(long)]
    pub channel: Option<NoiseFamily>,
    /// Es/N0 in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub esn0_db: Option<f64>,
    /// Quantizer levels per real dimension.
    #[arg(long)]
    pub quant_levels: Option<u32>,
    /// Quantizer clipping range per real dimension.
    #[arg(long)]
    pub quant_range: Option<f64>,
}

impl ChannelArgs {
    fn apply(&self, ch: &mut ChannelSection) -> Result<(), CliError> {
        set(&mut ch.family, self.channel);
        set(&mut ch.esn0_db, self.esn0_db);
        if self.quant_levels.is_some() || self.quant_range.is_some() {
            let levels = self.quant_levels.or(ch.quant.map(|q| q.levels));
            let range = self.quant_range.or(ch.quant.map(|q| q.range));
            match (levels, range) {
                (Some(levels), Some(range)) => ch.quant = Some(QuantSection { levels, range }),
                _ => {
                    return Err(CliError::Config(
                        "a quantizer needs both --quant-levels and --quant-range".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    /// Code rate: 0.8, 0.85 or 0.9.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Lifting (circulant) size Z.
    #[arg(long)]
    pub lifting: Option<usize>,
    /// Maximum decoder iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Min-sum scaling factor.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Demapper: exact or max-log.
    #[arg(long)]
    pub demap: Option<DemapMode>,
}

impl CodeArgs {
    fn apply(&self, cfg: &mut Config) {
        let code = cfg.code.get_or_insert_with(CodeSection::default);
        set(&mut code.rate, self.rate);
        set(&mut code.lifting, self.lifting);
        let d = cfg.decoder.get_or_insert_with(DecoderSection::default);
        set(&mut d.iters, self.iters);
        set(&mut d.alpha, self.alpha);
        set(&mut d.demap, self.demap);
    }
}

#[derive(Debug, Args)]
pub struct StopArgs {
    /// Stop a point after this many post-FEC bit errors.
    #[arg(long)]
    pub min_errors: Option<u64>,
    /// Stop a point after this many frames.
    #[arg(long)]
    pub max_frames: Option<u64>,
}

impl StopArgs {
    fn apply(&self, cfg: &mut Config) {
        let s = cfg.stop.get_or_insert_with(StopSection::default);
        set(&mut s.min_errors, self.min_errors);
        set(&mut s.max_frames, self.max_frames);
    }
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    /// Es/N0 grid in dB: start:stop:step or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

impl CurveArgs {
    fn apply(&self, cfg: &mut Config) -> Result<(), CliError> {
        set(&mut cfg.seed, self.seed);
        self.constellation.apply(cfg);
        self.channel.apply(cfg.channel.get_or_insert_with(ChannelSection::default))?;
        self.code.apply(cfg);
        self.stop.apply(cfg);
        if let Some(g) = &self.grid {
            cfg.curve.get_or_insert_with(CurveSection::default).esn0_db =
                Some(parse_grid(g).map_err(CliError::Config)?);
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Target post-FEC BER.
    #[arg(long)]
    pub target_ber: Option<f64>,
    /// Use an existing curve CSV instead of simulating.
    #[arg(long = "curve")]
    pub curve_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UniversalityArgs {
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    /// First channel; its Es/N0 fixes the common GMI.
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Noise family of the calibrated second channel.
    #[arg(long)]
    pub channel2: Option<NoiseFamily>,
    #[command(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    /// Comma-separated mixing fractions in [0, 1].
    #[arg(long)]
    pub gammas: Option<String>,
    /// GMI calibration tolerance in bits per symbol.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Reference curve CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Normalized GMI of the system under test.
    #[arg(long, conflicts_with = "input")]
    pub gmi: Option<f64>,
    /// Measurement file whose GMI is used.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub constellation: ConstellationArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Seed of the random codewords.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measurement file (CSV or binary).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Codewords to decode.
    #[arg(long)]
    pub codewords: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Measurement file (CSV or binary).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub constellation: ConstellationArgs,
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    /// Seed of symbols and noise.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Number of symbols.
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Output file; a .meta.json sidecar is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the binary format instead of CSV.
    #[arg(long)]
    pub binary: bool,
}
