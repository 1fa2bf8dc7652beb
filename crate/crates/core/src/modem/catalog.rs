use super::Constellation;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::path::{Path, PathBuf};

/// Names accepted by [`build_constellation`] (case-insensitive).
pub const BUILTIN_NAMES: &[&str] = &[
    "BPSK",
    "QPSK",
    "8QAM-rect",
    "8QAM-circ17",
    "8QAM-cross",
    "16QAM",
    "32QAM",
    "64QAM",
];

/// How to obtain a constellation.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstellationSpec {
    /// One of [`BUILTIN_NAMES`].
    Named(String),
    /// Explicit `(label, point)` list.
    Points(Vec<(u32, Complex64)>),
    /// CSV file with columns `label_bits,re,im`.
    File(PathBuf),
}

impl ConstellationSpec {
    pub fn named(name: &str) -> ConstellationSpec {
        ConstellationSpec::Named(name.to_string())
    }
}

pub fn build_constellation(spec: &ConstellationSpec) -> Result<Constellation> {
    match spec {
        ConstellationSpec::Named(name) => builtin(name),
        ConstellationSpec::Points(list) => {
            let (labels, points) = list.iter().cloned().unzip();
            Constellation::from_points("custom", points, labels)
        }
        ConstellationSpec::File(path) => from_csv(path),
    }
}

fn builtin(name: &str) -> Result<Constellation> {
    let canonical = BUILTIN_NAMES
        .iter()
        .find(|n| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            Error::InvalidConstellation(format!(
                "unknown constellation '{name}' (known: {})",
                BUILTIN_NAMES.join(", ")
            ))
        })?;
    match *canonical {
        "BPSK" => Constellation::from_points(
            canonical,
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![0, 1],
        ),
        "QPSK" => square_qam(canonical, 2),
        "16QAM" => square_qam(canonical, 4),
        "64QAM" => square_qam(canonical, 6),
        "8QAM-rect" => {
            let pts = [-3.0, -1.0, 1.0, 3.0]
                .iter()
                .flat_map(|&i| [-1.0, 1.0].map(|q| Complex64::new(i, q)))
                .collect();
            searched(canonical, pts)
        }
        "8QAM-circ17" => {
            let mut pts = vec![Complex64::new(0.0, 0.0)];
            pts.extend(
                (0..7).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 7.0)),
            );
            searched(canonical, pts)
        }
        "8QAM-cross" => {
            let r = 1.0 + 3f64.sqrt();
            let pts = vec![
                Complex64::new(1.0, 1.0),
                Complex64::new(-1.0, 1.0),
                Complex64::new(-1.0, -1.0),
                Complex64::new(1.0, -1.0),
                Complex64::new(r, 0.0),
                Complex64::new(0.0, r),
                Complex64::new(-r, 0.0),
                Complex64::new(0.0, -r),
            ];
            searched(canonical, pts)
        }
        "32QAM" => {
            let levels = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
            let pts: Vec<Complex64> = levels
                .iter()
                .flat_map(|&q| levels.map(|i| Complex64::new(i, q)))
                .filter(|p: &Complex64| !(p.re.abs() == 5.0 && p.im.abs() == 5.0))
                .collect();
            searched(canonical, pts)
        }
        _ => unreachable!(),
    }
}

/// Gray-labeled square QAM; the first `m/2` label bits select the in-phase
/// level and the rest the quadrature level. Label `0` sits in the first
/// quadrant corner nearest the origin's diagonal, so point index = label.
fn square_qam(name: &str, m: usize) -> Result<Constellation> {
    let k = m / 2;
    let levels = 1usize << k;
    let pam = |bits: usize| {
        // Inverse Gray code gives the position along the axis.
        let mut pos = bits;
        let mut shift = bits >> 1;
        while shift != 0 {
            pos ^= shift;
            shift >>= 1;
        }
        (levels as f64 - 1.0) - 2.0 * pos as f64
    };
    let size = 1usize << m;
    let points = (0..size)
        .map(|label| Complex64::new(pam(label >> k), pam(label & (levels - 1))))
        .collect();
    Constellation::from_points(name, points, (0..size as u32).collect())
}

fn searched(name: &str, points: Vec<Complex64>) -> Result<Constellation> {
    let labels = quasi_gray_labels(&points);
    Constellation::from_points(name, points, labels)
}

/// Labeling cost: Hamming distance of every pair of labels weighted by
/// `exp(-d^2 / d_min^2)`, so near neighbours dominate.
fn pair_weights(points: &[Complex64]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            dmin = dmin.min((points[i] - points[j]).norm_sqr());
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        (-(points[i] - points[j]).norm_sqr() / dmin).exp()
                    }
                })
                .collect()
        })
        .collect()
}

fn labeling_cost(w: &[Vec<f64>], labels: &[u32]) -> f64 {
    let n = labels.len();
    let mut cost = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            cost += w[i][j] * (labels[i] ^ labels[j]).count_ones() as f64;
        }
    }
    cost
}

/// Quasi-Gray labeling. Exhaustive over all permutations for 8 points;
/// deterministic pairwise-swap descent from a Gray-coded start otherwise.
pub(crate) fn quasi_gray_labels(points: &[Complex64]) -> Vec<u32> {
    let n = points.len();
    let w = pair_weights(points);
    if n <= 8 {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut best = perm.clone();
        let mut best_cost = labeling_cost(&w, &perm);
        // Heap's algorithm would reorder; plain lexicographic next-permutation
        // keeps the tie-break (first minimum in lexicographic order) obvious.
        while next_permutation(&mut perm) {
            let cost = labeling_cost(&w, &perm);
            if cost < best_cost - 1e-12 {
                best_cost = cost;
                best.copy_from_slice(&perm);
            }
        }
        return best;
    }
    let mut labels: Vec<u32> = (0..n as u32).map(|i| i ^ (i >> 1)).collect();
    let mut cost = labeling_cost(&w, &labels);
    loop {
        let mut best_swap = None;
        let mut best_cost = cost - 1e-12;
        for i in 0..n {
            for j in i + 1..n {
                labels.swap(i, j);
                let c = labeling_cost(&w, &labels);
                labels.swap(i, j);
                if c < best_cost {
                    best_cost = c;
                    best_swap = Some((i, j));
                }
            }
        }
        match best_swap {
            Some((i, j)) => {
                labels.swap(i, j);
                cost = best_cost;
            }
            None => break,
        }
    }
    labels
}

fn next_permutation(v: &mut [u32]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn from_csv(path: &Path) -> Result<Constellation> {
    let display = path.display().to_string();
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: display.clone(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| {
        parse_err(0, e.to_string())
    })?;
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["label_bits", "re", "im"] {
        return Err(parse_err(1, "expected header 'label_bits,re,im'".into()));
    }
    let mut entries = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bits = &record[0];
        if bits.is_empty() || !bits.chars().all(|ch| ch == '0' || ch == '1') {
            return Err(parse_err(line, format!("label '{bits}' is not a binary string")));
        }
        match width {
            None => width = Some(bits.len()),
            Some(w) if w != bits.len() => {
                return Err(parse_err(line, format!("label '{bits}' has length {} (expected {w})", bits.len())))
            }
            _ => {}
        }
        let label = u32::from_str_radix(bits, 2).map_err(|e| parse_err(line, e.to_string()))?;
        let re: f64 = record[1].parse().map_err(|_| parse_err(line, format!("bad number '{}'", &record[1])))?;
        let im: f64 = record[2].parse().map_err(|_| parse_err(line, format!("bad number '{}'", &record[2])))?;
        entries.push((label, Complex64::new(re, im)));
    }
    if entries.is_empty() {
        return Err(parse_err(1, "no constellation points".into()));
    }
    if let Some(w) = width {
        if 1usize << w != entries.len() {
            return Err(Error::InvalidConstellation(format!(
                "{} points with {w}-bit labels",
                entries.len()
            )));
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    let (labels, points) = entries.into_iter().unzip();
    Constellation::from_points(&name, points, labels)
}
