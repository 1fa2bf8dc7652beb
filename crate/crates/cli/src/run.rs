//! Resolves the configuration and runs one experiment.

use crate::args::Cli;
use crate::config::{ChannelSection, Config, ConstellationSection};
use crate::error::CliError;
use crate::output::{curve_csv, read_curve_csv, CodeInfo, Manifest, OutputSet};
use fecbench_core::experiments::{
    extract_threshold, predict_post_fec, run_reference_curve, universality_sweep, ReferenceCurve, SimSettings,
};
use fecbench_core::replay::{gen_synthetic, load_measurements, measurement_report, meta_path, replay_decode};
use fecbench_core::{
    build_constellation, build_qc_code, db_to_linear, linear_to_db, ChannelSpec, CodeRate, Constellation,
    ConstellationSpec, QcLdpcCode,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Command name and fully resolved configuration of an invocation.
pub fn resolve(cli: &Cli) -> Result<(String, Config), CliError> {
    let (command, mut cfg) = match (&cli.manifest, &cli.command) {
        (Some(path), cmd) => {
            let m = Manifest::load(path)?;
            if let Some(c) = cmd {
                if c.name() != m.command {
                    return Err(CliError::Config(format!(
                        "manifest records '{}', not '{}'",
                        m.command,
                        c.name()
                    )));
                }
            }
            (m.command, m.config)
        }
        (None, Some(cmd)) => {
            let cfg = match &cli.config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            (cmd.name().to_string(), cfg)
        }
        (None, None) => return Err(CliError::Config("no subcommand given (see --help)".into())),
    };
    if let Some(cmd) = &cli.command {
        cmd.apply(&mut cfg)?;
    }
    if cli.out_dir.is_some() {
        cfg.out_dir = cli.out_dir.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cfg.jobs == Some(0) {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    if cfg.constellation.is_none() {
        if let Some(name) = measurement_constellation(&cfg) {
            cfg.constellation = Some(ConstellationSection {
                name: Some(name),
                file: None,
            });
        }
    }
    cfg.fill_defaults(&command);
    Ok((command, cfg))
}

/// Constellation recorded in the sidecar of the configured measurement.
fn measurement_constellation(cfg: &Config) -> Option<String> {
    let input = cfg.measurement.as_ref()?.input.as_ref()?;
    let text = std::fs::read(meta_path(input)).ok()?;
    let meta: fecbench_core::replay::MeasurementMeta = serde_json::from_slice(&text).ok()?;
    meta.constellation
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (command, cfg) = resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(CliError::runtime)?;
    pool.install(|| dispatch(&command, &cfg))
}

fn dispatch(command: &str, cfg: &Config) -> Result<(), CliError> {
    match command {
        "curve" => cmd_curve(cfg),
        "threshold" => cmd_threshold(cfg),
        "universality" => cmd_universality(cfg),
        "predict" => cmd_predict(cfg),
        "replay" => cmd_replay(cfg),
        "metrics" => cmd_metrics(cfg),
        "gen-synthetic" => cmd_gen_synthetic(cfg),
        other => Err(CliError::Config(format!("unknown command '{other}'"))),
    }
}

fn constellation(cfg: &Config) -> Result<Constellation, CliError> {
    let sec = cfg.constellation.clone().unwrap_or_default();
    let spec = match (sec.name, sec.file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("constellation: set either name or file, not both".into()))
        }
        (Some(name), None) => ConstellationSpec::Named(name),
        (None, Some(file)) => ConstellationSpec::File(file),
        (None, None) => return Err(CliError::Config("constellation: name or file is required".into())),
    };
    build_constellation(&spec).map_err(CliError::config)
}

/// Channel of `sec`; `esn0_db` overrides the configured value.
fn channel(sec: Option<&ChannelSection>, what: &str, esn0_db: Option<f64>) -> Result<ChannelSpec, CliError> {
    let sec = sec.cloned().unwrap_or_default();
    let family = sec
        .family
        .ok_or_else(|| CliError::Config(format!("{what}.family is required")))?;
    let db = esn0_db
        .or(sec.esn0_db)
        .ok_or_else(|| CliError::Config(format!("{what}.esn0_db is required")))?;
    let mut ch = ChannelSpec::new(family, db_to_linear(db)).map_err(CliError::config)?;
    if let Some(q) = sec.quant {
        ch = ch.quantized(q.levels, q.range).map_err(CliError::config)?;
    }
    Ok(ch)
}

fn code(cfg: &Config) -> Result<QcLdpcCode, CliError> {
    let sec = cfg.code.clone().unwrap_or_default();
    let rate = CodeRate::from_f64(sec.rate.unwrap_or(crate::config::DEFAULT_RATE)).map_err(CliError::config)?;
    let z = sec.lifting.unwrap_or(rate.default_lifting());
    build_qc_code(rate, z).map_err(CliError::config)
}

fn code_info(code: &QcLdpcCode) -> CodeInfo {
    CodeInfo {
        id: code.id(),
        content_hash: code.content_hash(),
    }
}

fn settings(cfg: &Config) -> Result<SimSettings, CliError> {
    let s = SimSettings {
        decoder: cfg.decoder_params(),
        demap: cfg.demap_mode(),
        stop: cfg.stop_rule(),
        seed: cfg.require_seed()?,
    };
    s.decoder.validate().map_err(CliError::config)?;
    s.stop.validate().map_err(CliError::config)?;
    Ok(s)
}

fn grid(cfg: &Config) -> Result<Vec<f64>, CliError> {
    let g = cfg
        .curve
        .as_ref()
        .and_then(|c| c.esn0_db.clone())
        .ok_or_else(|| CliError::Config("curve.esn0_db grid is required (or --grid)".into()))?;
    if g.is_empty() || !g.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Config("curve.esn0_db must be non-empty and strictly ascending".into()));
    }
    Ok(g)
}

fn measurement_input(cfg: &Config) -> Result<PathBuf, CliError> {
    cfg.measurement
        .as_ref()
        .and_then(|m| m.input.clone())
        .ok_or_else(|| CliError::Config("measurement.input is required (or --input)".into()))
}

/// Simulates the configured reference curve and writes `curve.csv`.
fn simulate_curve(cfg: &Config, out: &mut OutputSet) -> Result<(ReferenceCurve, QcLdpcCode), CliError> {
    let s = settings(cfg)?;
    let c = constellation(cfg)?;
    let grid_db = grid(cfg)?;
    let template = channel(cfg.channel.as_ref(), "channel", Some(grid_db[0]))?;
    let code = code(cfg)?;
    let esn0: Vec<f64> = grid_db.iter().map(|&d| db_to_linear(d)).collect();
    let curve = run_reference_curve(&code, &c, &template, &esn0, &s)?;
    out.write("curve.csv", curve_csv(&curve, &grid_db).as_bytes())?;
    Ok((curve, code))
}

fn cmd_curve(cfg: &Config) -> Result<(), CliError> {
    // Validate before touching the output directory.
    settings(cfg)?;
    grid(cfg)?;
    let mut out = OutputSet::new(&cfg.out_dir())?;
    let (_, code) = simulate_curve(cfg, &mut out)?;
    out.commit("curve", cfg, Some(code_info(&code)))
}

#[derive(Serialize)]
struct ThresholdReport {
    target_ber: f64,
    threshold_gmi_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    code_id: Option<String>,
    curve_points: usize,
}

fn cmd_threshold(cfg: &Config) -> Result<(), CliError> {
    let t = cfg.threshold.clone().unwrap_or_default();
    let target = t.target_ber.unwrap_or(fecbench_core::experiments::TARGET_BER);
    if !(target > 0.0 && target < 1.0) {
        return Err(CliError::Config(format!("threshold.target_ber {target} must lie in (0, 1)")));
    }
    let mut out;
    let (curve, code) = match &t.curve {
        Some(path) => {
            let curve = read_curve_csv(path)?;
            out = OutputSet::new(&cfg.out_dir())?;
            (curve, None)
        }
        None => {
            settings(cfg)?;
            grid(cfg)?;
            out = OutputSet::new(&cfg.out_dir())?;
            let (curve, code) = simulate_curve(cfg, &mut out)?;
            (curve, Some(code))
        }
    };
    let thr = extract_threshold(&curve, target)?;
    log::info!("threshold at BER {target:e}: normalized GMI {thr:.5}");
    out.write_json(
        "threshold.json",
        &ThresholdReport {
            target_ber: target,
            threshold_gmi_norm: thr,
            code_id: code.as_ref().map(|c| c.id()),
            curve_points: curve.points.len(),
        },
    )?;
    out.commit("threshold", cfg, code.as_ref().map(code_info))
}

#[derive(Serialize)]
struct UniversalitySummary {
    code_id: String,
    constellation: String,
    channel1: String,
    channel1_esn0_db: f64,
    channel2: String,
    channel2_esn0_db: f64,
    gmi_common: f64,
    gmi_common_norm: f64,
}

fn cmd_universality(cfg: &Config) -> Result<(), CliError> {
    let s = settings(cfg)?;
    let c = constellation(cfg)?;
    let ch1 = channel(cfg.channel.as_ref(), "channel", None)?;
    let sec2 = cfg.channel2.clone().unwrap_or_default();
    if sec2.esn0_db.is_some() || sec2.quant.is_some() {
        return Err(CliError::Config(
            "channel2 takes only a family: its Es/N0 is calibrated and its quantizer is that of channel".into(),
        ));
    }
    let family2 = sec2
        .family
        .ok_or_else(|| CliError::Config("channel2.family is required".into()))?;
    let u = cfg.universality.clone().unwrap_or_default();
    let gammas = u.gammas.unwrap_or_else(|| fecbench_core::experiments::DEFAULT_GAMMAS.to_vec());
    let tol = u.tol.unwrap_or(fecbench_core::metrics::DEFAULT_GMI_TOL);
    let code = code(cfg)?;
    let mut out = OutputSet::new(&cfg.out_dir())?;
    let table = universality_sweep(&code, &c, &ch1, family2, &gammas, &s, tol)?;
    let mut csv = String::from("gamma,ber,frames,bit_errors,frame_errors,sample_gmi,sample_gmi_se\n");
    for r in &table.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.gamma, r.ber, r.frames, r.bit_errors, r.frame_errors, r.sample_gmi, r.sample_gmi_se
        );
    }
    out.write("universality.csv", csv.as_bytes())?;
    let m = c.bits_per_symbol() as f64;
    out.write_json(
        "universality.json",
        &UniversalitySummary {
            code_id: table.code_id.clone(),
            constellation: table.constellation_id.clone(),
            channel1: table.ch1.to_string(),
            channel1_esn0_db: linear_to_db(table.ch1.esn0()),
            channel2: table.ch2.to_string(),
            channel2_esn0_db: linear_to_db(table.ch2.esn0()),
            gmi_common: table.gmi_common,
            gmi_common_norm: table.gmi_common / m,
        },
    )?;
    out.commit("universality", cfg, Some(code_info(&code)))
}

#[derive(Serialize)]
struct PredictReport {
    gmi_norm: f64,
    gmi_source: &'static str,
    #[serde(flatten)]
    prediction: fecbench_core::experiments::Prediction,
}

fn cmd_predict(cfg: &Config) -> Result<(), CliError> {
    let p = cfg.predict.clone().unwrap_or_default();
    let curve_path = p
        .curve
        .ok_or_else(|| CliError::Config("predict.curve is required (or --curve)".into()))?;
    let input = cfg.measurement.as_ref().and_then(|m| m.input.clone());
    let (gmi_norm, source) = match (p.gmi, input) {
        (Some(_), Some(_)) => return Err(CliError::Config("predict: give either a GMI or a measurement, not both".into())),
        (Some(g), None) => (g, "config"),
        (None, Some(path)) => {
            let c = constellation(cfg)?;
            let ms = load_measurements(&path, &c)?;
            (measurement_report(&ms, &c)?.0.gmi_normalized, "measurement")
        }
        (None, None) => return Err(CliError::Config("predict needs predict.gmi or measurement.input".into())),
    };
    let curve = read_curve_csv(&curve_path)?;
    let prediction = predict_post_fec(&curve, gmi_norm)?;
    let report = PredictReport {
        gmi_norm,
        gmi_source: source,
        prediction,
    };
    let mut out = OutputSet::new(&cfg.out_dir())?;
    out.write_json("prediction.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(CliError::runtime)?);
    out.commit("predict", cfg, None)
}

fn cmd_replay(cfg: &Config) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let c = constellation(cfg)?;
    let code = code(cfg)?;
    let params = cfg.decoder_params();
    params.validate().map_err(CliError::config)?;
    let n = cfg.replay.as_ref().and_then(|r| r.codewords).unwrap_or(crate::config::DEFAULT_CODEWORDS);
    let input = measurement_input(cfg)?;
    let ms = load_measurements(&input, &c)?;
    let mut out = OutputSet::new(&cfg.out_dir())?;
    let outcome = replay_decode(&ms, &c, &code, params, n, seed)?;
    let mut csv = String::from("draw,bit_errors,iterations,converged\n");
    for (d, r) in outcome.results.iter().enumerate() {
        let _ = writeln!(csv, "{d},{},{},{}", r.bit_errors.unwrap_or(0), r.iterations_used, r.converged);
    }
    out.write("replay.csv", csv.as_bytes())?;
    out.write_json("replay.json", &outcome)?;
    out.commit("replay", cfg, Some(code_info(&code)))
}

#[derive(Serialize)]
struct MetricsOutput {
    #[serde(flatten)]
    report: fecbench_core::metrics::MetricReport,
    fit: fecbench_core::replay::FittedChannel,
}

fn cmd_metrics(cfg: &Config) -> Result<(), CliError> {
    let c = constellation(cfg)?;
    let input = measurement_input(cfg)?;
    let ms = load_measurements(&input, &c)?;
    let (report, fit) = measurement_report(&ms, &c)?;
    let s = serde_json::to_string_pretty(&MetricsOutput { report, fit }).map_err(CliError::runtime)?;
    println!("{s}");
    Ok(())
}

fn cmd_gen_synthetic(cfg: &Config) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let c = constellation(cfg)?;
    let ch = channel(cfg.channel.as_ref(), "channel", None)?;
    let s = cfg.synthetic.clone().unwrap_or_default();
    let n = s
        .symbols
        .ok_or_else(|| CliError::Config("synthetic.symbols is required (or --symbols)".into()))?;
    let output = s
        .output
        .ok_or_else(|| CliError::Config("synthetic.output is required (or --output)".into()))?;
    let ms = gen_synthetic(&c, &ch, n, seed)?;
    let written = write_measurement(&ms, &output, s.binary.unwrap_or(false));
    if written.is_err() {
        let _ = std::fs::remove_file(&output);
        let _ = std::fs::remove_file(meta_path(&output));
    }
    written?;
    log::info!("wrote {n} symbols to {}", output.display());
    Ok(())
}

fn write_measurement(ms: &fecbench_core::replay::MeasurementSet, path: &Path, binary: bool) -> Result<(), CliError> {
    if binary {
        ms.write_binary(path)?;
    } else {
        ms.write_csv(path)?;
    }
    Ok(())
}
