//! Experiment configuration: a TOML file merged with command-line flags.
//!
//! Every field is optional so that flags can fill or override any value.
//! Before an experiment runs, defaults are filled in and the fully resolved
//! configuration is echoed into the manifest.

use crate::error::CliError;
use fecbench_core::experiments::{StopRule, DEFAULT_GAMMAS, TARGET_BER};
use fecbench_core::metrics::DEFAULT_GMI_TOL;
use fecbench_core::{CodeRate, DecoderParams, DemapMode, NoiseFamily};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Where results go; not part of the experiment, so not recorded.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it, so it is not recorded.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constellation: Option<ConstellationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSection>,
    /// Second channel of the universality sweep; its Es/N0 is calibrated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel2: Option<ChannelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<DecoderSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub universality: Option<UniversalitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predict: Option<PredictSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<ReplaySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    /// Built-in constellation name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// CSV file with columns `label_bits,re,im`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<NoiseFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub esn0_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quant: Option<QuantSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantSection {
    pub levels: u32,
    pub range: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifting: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demap: Option<DemapMode>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_errors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_frames: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    /// Ascending Es/N0 grid in dB.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub esn0_db: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_ber: Option<f64>,
    /// Existing curve CSV; when absent the curve is simulated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniversalitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// GMI calibration tolerance, bits per symbol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    /// Normalized GMI of the system; taken from the measurement when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmi: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codewords: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Write the binary format instead of CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary: Option<bool>,
}

pub const DEFAULT_OUT_DIR: &str = "fecbench-out";
pub const DEFAULT_RATE: f64 = 0.8;
pub const DEFAULT_CODEWORDS: usize = 1000;

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text, path)
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("a seed is required (`seed = ...` or --seed)".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn decoder_params(&self) -> DecoderParams {
        let d = DecoderParams::default();
        let s = self.decoder.clone().unwrap_or_default();
        DecoderParams {
            max_iters: s.iters.unwrap_or(d.max_iters),
            alpha: s.alpha.unwrap_or(d.alpha),
        }
    }

    pub fn demap_mode(&self) -> DemapMode {
        self.decoder.as_ref().and_then(|d| d.demap).unwrap_or_default()
    }

    pub fn stop_rule(&self) -> StopRule {
        let d = StopRule::default();
        let s = self.stop.clone().unwrap_or_default();
        StopRule {
            min_errors: s.min_errors.unwrap_or(d.min_errors),
            max_frames: s.max_frames.unwrap_or(d.max_frames),
        }
    }

    /// Fills every default a command depends on, so the manifest records
    /// the complete experiment.
    pub fn fill_defaults(&mut self, command: &str) {
        let simulates = matches!(command, "curve" | "threshold" | "universality" | "replay");
        if simulates || command == "gen-synthetic" {
            let code_used = command != "gen-synthetic";
            if code_used {
                let code = self.code.get_or_insert_with(CodeSection::default);
                let rate = *code.rate.get_or_insert(DEFAULT_RATE);
                // An unsupported rate is reported when the code is built.
                if let Ok(r) = CodeRate::from_f64(rate) {
                    code.lifting.get_or_insert(r.default_lifting());
                }
                let p = self.decoder_params();
                let demap = self.demap_mode();
                self.decoder = Some(DecoderSection {
                    iters: Some(p.max_iters),
                    alpha: Some(p.alpha),
                    demap: Some(demap),
                });
            }
        }
        if matches!(command, "curve" | "threshold" | "universality") {
            let s = self.stop_rule();
            self.stop = Some(StopSection {
                min_errors: Some(s.min_errors),
                max_frames: Some(s.max_frames),
            });
            let ch = self.channel.get_or_insert_with(ChannelSection::default);
            ch.family.get_or_insert(NoiseFamily::Awgn);
        }
        if command == "threshold" {
            let t = self.threshold.get_or_insert_with(ThresholdSection::default);
            t.target_ber.get_or_insert(TARGET_BER);
        }
        if command == "universality" {
            let u = self.universality.get_or_insert_with(UniversalitySection::default);
            u.gammas.get_or_insert_with(|| DEFAULT_GAMMAS.to_vec());
            u.tol.get_or_insert(DEFAULT_GMI_TOL);
            let ch2 = self.channel2.get_or_insert_with(ChannelSection::default);
            ch2.family.get_or_insert(NoiseFamily::Laplace);
        }
        if command == "replay" {
            let r = self.replay.get_or_insert_with(ReplaySection::default);
            r.codewords.get_or_insert(DEFAULT_CODEWORDS);
        }
        if command == "gen-synthetic" {
            let s = self.synthetic.get_or_insert_with(SyntheticSection::default);
            s.binary.get_or_insert(false);
            let ch = self.channel.get_or_insert_with(ChannelSection::default);
            ch.family.get_or_insert(NoiseFamily::Awgn);
        }
        if self.constellation.is_none() {
            self.constellation = Some(ConstellationSection {
                name: Some("QPSK".into()),
                file: None,
            });
        }
    }
}

/// Parses an Es/N0 grid: `start:stop:step` (inclusive) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("invalid number '{t}' in grid '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || b < a {
                return Err(format!("grid '{s}' needs start <= stop and a positive step"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            // Round to the step's decimal resolution so 0.1 steps print cleanly.
            Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        _ => Err(format!("grid '{s}' must be start:stop:step or a comma-separated list")),
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid number '{t}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let text = r#"
seed = 7
out_dir = "out"

[constellation]
name = "16QAM"

[channel]
family = "laplace"
esn0_db = 9.5
quant = { levels = 64, range = 2.0 }

[code]
rate = 0.85
lifting = 64

[decoder]
iters = 12
alpha = 0.8
demap = "max-log"

[stop]
min_errors = 50
max_frames = 1000

[curve]
esn0_db = [8.0, 8.5]
"#;
        let c = Config::parse(text, Path::new("x.toml")).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.channel.as_ref().unwrap().family, Some(NoiseFamily::Laplace));
        assert_eq!(c.channel.as_ref().unwrap().quant.unwrap().levels, 64);
        assert_eq!(c.demap_mode(), DemapMode::MaxLog);
        assert_eq!(c.decoder_params().max_iters, 12);
        assert_eq!(c.stop_rule().min_errors, 50);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let text = "seed = 1\n\n[channel]\nfamily = \"awgn\"\nsnr = 3\n";
        let err = Config::parse(text, Path::new("bad.toml")).unwrap_err().to_string();
        assert!(err.contains("snr"), "{err}");
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn defaults_are_filled() {
        let mut c = Config::default();
        c.fill_defaults("universality");
        let u = c.universality.as_ref().unwrap();
        assert_eq!(u.gammas.as_deref(), Some(&DEFAULT_GAMMAS[..]));
        assert_eq!(c.channel2.as_ref().unwrap().family, Some(NoiseFamily::Laplace));
        assert_eq!(c.stop_rule(), StopRule::default());
        assert!(c.require_seed().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("9.5:9.8:0.1").unwrap(), vec![9.5, 9.6, 9.7, 9.8]);
        assert_eq!(parse_grid("3, 1").unwrap(), vec![3.0, 1.0]);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut c = Config {
            seed: Some(3),
            jobs: Some(4),
            ..Config::default()
        };
        c.fill_defaults("curve");
        let back: Config = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.jobs, None);
        assert_eq!(back.seed, Some(3));
        assert_eq!(back.stop, c.stop);
    }
}
