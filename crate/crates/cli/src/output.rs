//! Result files, the manifest and the reference-curve CSV format.

use crate::config::Config;
use crate::error::CliError;
use fecbench_core::experiments::{CurvePoint, ReferenceCurve};
use fecbench_core::NoiseFamily;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const CURVE_HEADER: &str = "esn0_db,gmi_norm,ber,frames,bit_errors,frame_errors,low_confidence";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeInfo {
    pub id: String,
    pub content_hash: String,
}

/// Everything needed to re-run an experiment, plus hashes of its results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeInfo>,
    /// File name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Files written by one run. Dropped without [`OutputSet::commit`], it
/// removes everything it wrote.
pub struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    hashes: BTreeMap<String, String>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<OutputSet, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            hashes: BTreeMap::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes the manifest and keeps all files.
    pub fn commit(mut self, command: &str, config: &Config, code: Option<CodeInfo>) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "fecbench".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            code,
            outputs: self.hashes.clone(),
        };
        self.write_json(MANIFEST_NAME, &manifest)?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Curve CSV with the Es/N0 column printed from the configured dB grid.
pub fn curve_csv(curve: &ReferenceCurve, grid_db: &[f64]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for (p, db) in curve.points.iter().zip(grid_db) {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            db, p.gmi_norm, p.ber, p.frames, p.bit_errors, p.frame_errors, p.low_confidence
        ));
    }
    s
}

/// Reads a curve CSV. Only `esn0_db`, `gmi_norm` and `ber` are required.
pub fn read_curve_csv(path: &Path) -> Result<ReferenceCurve, CliError> {
    let err = |line: u64, msg: String| CliError::Config(format!("{}: line {line}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (i_db, i_gmi, i_ber) = match (col("esn0_db"), col("gmi_norm"), col("ber")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(err(1, "header needs esn0_db, gmi_norm and ber columns".into())),
    };
    let (i_frames, i_bits, i_frames_err, i_low) =
        (col("frames"), col("bit_errors"), col("frame_errors"), col("low_confidence"));
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(i).unwrap_or("");
        let float = |i: usize| {
            get(i)
                .parse::<f64>()
                .map_err(|_| err(line, format!("invalid number '{}'", get(i))))
        };
        let int = |i: Option<usize>| -> Result<u64, CliError> {
            i.map_or(Ok(0), |i| get(i).parse::<u64>().map_err(|_| err(line, format!("invalid count '{}'", get(i)))))
        };
        let bit_errors = int(i_bits)?;
        points.push(CurvePoint {
            esn0: fecbench_core::db_to_linear(float(i_db)?),
            gmi_norm: float(i_gmi)?,
            ber: float(i_ber)?,
            frames: int(i_frames)?,
            bit_errors,
            frame_errors: int(i_frames_err)?,
            low_confidence: i_low.is_some_and(|i| get(i) == "true"),
            sample_gmi_norm: f64::NAN,
            sample_gmi_norm_se: f64::NAN,
        });
    }
    if points.is_empty() {
        return Err(err(2, "curve has no points".into()));
    }
    Ok(ReferenceCurve {
        points,
        code_id: String::new(),
        constellation_id: String::new(),
        channel_family: NoiseFamily::Awgn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_run_leaves_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        {
            let mut o = OutputSet::new(&dir).unwrap();
            o.write("a.csv", b"x").unwrap();
            assert!(dir.join("a.csv").exists());
        }
        assert!(!dir.exists());
    }

    #[test]
    fn committed_run_keeps_files_and_hashes() {
        let tmp = tempfile::tempdir().unwrap();
        let mut o = OutputSet::new(tmp.path()).unwrap();
        o.write("a.csv", b"abc").unwrap();
        o.commit("curve", &Config::default(), None).unwrap();
        let m = Manifest::load(&tmp.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(
            m.outputs["a.csv"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(m.command, "curve");
    }

    #[test]
    fn curve_csv_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("c.csv");
        let p = |db: f64, g: f64, ber: f64| CurvePoint {
            esn0: fecbench_core::db_to_linear(db),
            gmi_norm: g,
            ber,
            frames: 10,
            bit_errors: 5,
            frame_errors: 1,
            low_confidence: true,
            sample_gmi_norm: 0.0,
            sample_gmi_norm_se: 0.0,
        };
        let curve = ReferenceCurve {
            points: vec![p(1.0, 0.8, 1e-2), p(2.0, 0.9, 1e-5)],
            code_id: "c".into(),
            constellation_id: "QPSK".into(),
            channel_family: NoiseFamily::Awgn,
        };
        fs::write(&path, curve_csv(&curve, &[1.0, 2.0])).unwrap();
        let back = read_curve_csv(&path).unwrap();
        assert_eq!(back.points.len(), 2);
        assert_eq!(back.points[1].gmi_norm, 0.9);
        assert_eq!(back.points[1].ber, 1e-5);
        assert_eq!(back.points[0].bit_errors, 5);
        assert!(back.points[0].low_confidence);
    }

    #[test]
    fn curve_csv_bad_number_names_line() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("c.csv");
        fs::write(&path, "esn0_db,gmi_norm,ber\n1,0.8,0.01\n2,x,0.001\n").unwrap();
        let e = read_curve_csv(&path).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }
}
