//! CSV and JSON emitters with pinned column orders and provenance sidecars.
//!
//! Every data file can be paired with a `<name>.meta.json` sidecar recording
//! the command, seed, config hash, and crate version, so a run can be
//! regenerated from its outputs alone. Numbers are written in Rust's
//! shortest round-trip decimal form: same config and seed give byte-identical
//! files on every platform and thread count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::noise::CrossoverCurve;
use crate::sensitivity::MapCell;
use crate::sim::{RabiPoint, ReadoutRecord, T1Point};
use crate::spectroscopy::AxisStats;
use crate::stats::Histogram;

fn open_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(csv::Writer::from_path(path)?)
}

fn num(v: f64) -> String {
    v.to_string()
}

/// Raw shot dump: `shot, a, b, r1, r2`.
pub fn write_records_csv(path: &Path, records: &[ReadoutRecord]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["shot", "a", "b", "r1", "r2"])?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.r1.to_string(),
            r.r2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Crossover curve: `n, sigma_prime, err`, ascending in `n`.
pub fn write_crossover_csv(path: &Path, curve: &CrossoverCurve) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["n", "sigma_prime", "err"])?;
    for (n, sigma_prime, err) in curve.xy() {
        w.write_record([num(n), num(sigma_prime), num(err)])?;
    }
    w.flush()?;
    Ok(())
}

/// Relaxation curve: `m, p_obs, err`.
pub fn write_t1_csv(path: &Path, points: &[T1Point]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["m", "p_obs", "err"])?;
    for p in points {
        w.write_record([p.m.to_string(), num(p.p_obs), num(p.p_err)])?;
    }
    w.flush()?;
    Ok(())
}

/// Driven-rotation sweep: `angle, mean, err, sigma_spin, sigma_prime, sigma_prime_err`.
pub fn write_rabi_csv(path: &Path, points: &[RabiPoint]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record([
        "angle",
        "mean",
        "err",
        "sigma_spin",
        "sigma_prime",
        "sigma_prime_err",
    ])?;
    for p in points {
        w.write_record([
            num(p.angle),
            num(p.mean_jz),
            num(p.mean_jz_err),
            num(p.sigma_jz),
            num(p.sigma_prime),
            num(p.sigma_prime_err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a decoupling-spectroscopy sweep: an axis read at one pulse
/// spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdSpecRow {
    pub axis: String,
    /// Pulse spacing in seconds.
    pub tau: f64,
    pub mean: f64,
    pub sigma_prime: f64,
    pub err: f64,
}

impl DdSpecRow {
    pub fn from_stats(tau: f64, stats: &AxisStats) -> Self {
        DdSpecRow {
            axis: stats.axis.label().to_string(),
            tau,
            mean: stats.mean,
            sigma_prime: stats.sigma_prime,
            err: stats.sigma_prime_err,
        }
    }
}

/// Spectroscopy sweep: `axis, tau, mean, sigma_prime, err`.
pub fn write_ddspec_csv(path: &Path, rows: &[DdSpecRow]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["axis", "tau", "mean", "sigma_prime", "err"])?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            num(r.tau),
            num(r.mean),
            num(r.sigma_prime),
            num(r.err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram dump: `value, count`, one row per bin center.
pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["value", "count"])?;
    for (center, count) in hist.centers().iter().zip(&hist.counts) {
        w.write_record([num(*center), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Gridded Q field: `theta, phi, q`.
pub fn write_husimi_csv(path: &Path, points: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["theta", "phi", "q"])?;
    for &(theta, phi, q) in points {
        w.write_record([num(theta), num(phi), num(q)])?;
    }
    w.flush()?;
    Ok(())
}

/// Scheme-comparison map: `tau_sens, m, eta_conv, eta_rep, ratio`.
pub fn write_sensitivity_csv(path: &Path, cells: &[MapCell]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(["tau_sens", "m", "eta_conv", "eta_rep", "ratio"])?;
    for c in cells {
        w.write_record([
            num(c.tau_sens),
            c.m.to_string(),
            num(c.eta_conv),
            num(c.eta_rep),
            num(c.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a `value, count` histogram dump, rebuilding the uniform bin
/// edges from the centers.
pub fn read_histogram_csv(path: &Path) -> Result<Histogram> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut centers = Vec::new();
    let mut counts = Vec::new();
    for row in reader.deserialize() {
        let (value, count): (f64, u64) = row?;
        centers.push(value);
        counts.push(count);
    }
    if centers.len() < 2 {
        return Err(crate::error::Error::data(format!(
            "histogram {} needs at least 2 bins",
            path.display()
        )));
    }
    let width = centers[1] - centers[0];
    if !(width > 0.0) {
        return Err(crate::error::Error::data("histogram centers must ascend"));
    }
    for w in centers.windows(2) {
        if ((w[1] - w[0]) - width).abs() > 1e-9 * width.abs() {
            return Err(crate::error::Error::data(
                "histogram centers must be uniformly spaced",
            ));
        }
    }
    let mut edges: Vec<f64> = centers.iter().map(|c| c - 0.5 * width).collect();
    edges.push(centers[centers.len() - 1] + 0.5 * width);
    Ok(Histogram { edges, counts })
}

/// One measured axis in a reconstruction input bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMeta {
    pub label: String,
    /// Polar angle of the measurement axis in radians.
    pub theta: f64,
    /// Azimuth of the measurement axis in radians.
    pub phi: f64,
    /// Histogram file name, relative to the metadata file.
    pub hist: String,
}

/// Metadata bundle tying per-axis histograms to the photon-chain parameters
/// needed to deconvolve them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructMeta {
    /// Dicke ladder size 2J (= number of pseudo-spin-1/2 sites).
    pub two_j: u32,
    /// Baseline photons per window.
    pub n: f64,
    /// Readout contrast.
    pub c: f64,
    /// Detector correction factor.
    pub k: f64,
    pub seed: u64,
    pub axes: Vec<AxisMeta>,
}

/// Parse a JSON file into a typed value.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&body)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Hex SHA-256 of raw bytes; used to fingerprint the config that produced a
/// run.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance recorded next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Subcommand or program step that produced the file.
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the effective config text ("none" when no file was used).
    pub config_sha256: String,
    /// Crate version that wrote the file.
    pub version: String,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config_bytes: Option<&[u8]>) -> Self {
        Provenance {
            command: command.to_string(),
            seed,
            config_sha256: config_bytes.map_or_else(|| "none".to_string(), sha256_hex),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Sidecar path for a data file: `curve.csv` -> `curve.csv.meta.json`.
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let mut name = data_path.as_os_str().to_os_string();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Write the provenance sidecar next to `data_path`.
pub fn write_sidecar(data_path: &Path, provenance: &Provenance) -> Result<()> {
    write_json(&sidecar_path(data_path), provenance)
}
