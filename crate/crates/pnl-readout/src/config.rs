//! Declarative TOML run configuration.
//!
//! One file drives every subcommand: a shared `[run]` block (seed, output
//! directory, formats, threads), a shared `[ensemble]` block, and one block
//! per subcommand. Unknown keys are rejected so typos surface as config
//! errors instead of silently running defaults. A command run against a
//! config file requires its own block to be present (an empty `[crossover]`
//! header selects the defaults); without a file, built-in defaults apply.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleConfig, SpinSpecies};
use crate::error::{Error, Result};
use crate::sensitivity::{DecayConvention, SensitivityParams, SqueezingSpec};
use crate::sim::{ApdModel, Level, SimulationPlan};
use crate::spectroscopy::SincConvention;

/// Tabular output representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub seed: u64,
    /// Output directory; files are written directly into it.
    pub out: PathBuf,
    /// Tabular formats to emit; JSON reports are always written.
    pub formats: Vec<OutputFormat>,
    /// Worker threads; absent means the runtime default.
    pub threads: Option<usize>,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            seed: 7,
            out: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv],
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleBlock {
    pub n_nv: u32,
    pub species: SpinSpecies,
    pub contrast: f64,
    /// Baseline photons per readout repetition (whole ensemble).
    pub photons_per_unit: f64,
    /// Polarization decay constant in accumulated baseline counts.
    pub decay_counts: f64,
    pub p0: f64,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        EnsembleBlock {
            n_nv: 31,
            species: SpinSpecies::One,
            contrast: 0.15,
            photons_per_unit: 0.273,
            decay_counts: 1.6e6,
            p0: 1.0,
        }
    }
}

impl EnsembleBlock {
    pub fn to_config(self) -> Result<EnsembleConfig> {
        EnsembleConfig::new(
            self.n_nv,
            self.species,
            self.contrast,
            self.photons_per_unit,
            self.decay_counts,
            self.p0,
        )
    }

    /// Plan with this ensemble and default preparation/relaxation/detector.
    pub fn plan(self, m: u32, shots: u32, seed: u64) -> Result<SimulationPlan> {
        Ok(SimulationPlan::new(self.to_config()?, m, shots, seed))
    }
}

/// Log-spaced unsigned grid, deduplicated after rounding.
pub fn log_u32_grid(min: u32, max: u32, points: usize) -> Result<Vec<u32>> {
    if min == 0 {
        return Err(Error::invalid("grid minimum must be at least 1"));
    }
    if max <= min {
        return Err(Error::invalid("grid maximum must exceed the minimum"));
    }
    if points < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    let (lo, hi) = ((min as f64).ln(), (max as f64).ln());
    let mut grid: Vec<u32> = (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            x.exp().round() as u32
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Log-spaced float grid.
pub fn log_f64_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min) {
        return Err(Error::invalid("grid must satisfy 0 < min < max"));
    }
    if points < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossoverBlock {
    pub shots: u32,
    /// Explicit repetition grid; overrides the min/max/points triple.
    pub m_values: Option<Vec<u32>>,
    pub m_min: u32,
    pub m_max: u32,
    pub m_points: usize,
    /// Fixed detector correction; absent means fit it from the references.
    pub k: Option<f64>,
}

impl Default for CrossoverBlock {
    fn default() -> Self {
        CrossoverBlock {
            shots: 3000,
            m_values: None,
            m_min: 1250,
            m_max: 25_000,
            m_points: 13,
            k: None,
        }
    }
}

impl CrossoverBlock {
    pub fn m_grid(&self) -> Result<Vec<u32>> {
        match &self.m_values {
            Some(values) => {
                if values.len() < 2 {
                    return Err(Error::invalid("m_values needs at least 2 entries"));
                }
                Ok(values.clone())
            }
            None => log_u32_grid(self.m_min, self.m_max, self.m_points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RabiBlock {
    pub m: u32,
    pub shots: u32,
    /// Explicit rotation angles in degrees; default is a uniform sweep of
    /// `angle_points` over one full turn.
    pub angles_deg: Option<Vec<f64>>,
    pub angle_points: usize,
    pub active_fraction: f64,
    pub bins: usize,
}

impl Default for RabiBlock {
    fn default() -> Self {
        RabiBlock {
            m: 1000,
            shots: 3000,
            angles_deg: None,
            angle_points: 25,
            active_fraction: 1.0,
            bins: 41,
        }
    }
}

impl RabiBlock {
    pub fn angles(&self) -> Result<Vec<f64>> {
        const DEG: f64 = std::f64::consts::PI / 180.0;
        match &self.angles_deg {
            Some(degs) => {
                if degs.is_empty() {
                    return Err(Error::invalid("angles_deg must be nonempty"));
                }
                Ok(degs.iter().map(|d| d * DEG).collect())
            }
            None => {
                if self.angle_points < 2 {
                    return Err(Error::invalid("angle_points must be at least 2"));
                }
                Ok((0..self.angle_points)
                    .map(|i| 360.0 * DEG * i as f64 / (self.angle_points - 1) as f64)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T1Block {
    pub shots: u32,
    pub level: Level,
    pub m_values: Option<Vec<u32>>,
    pub m_min: u32,
    pub m_max: u32,
    pub m_points: usize,
    /// Relaxation constant in repetitions; absent means derive it from
    /// `decay_counts / photons_per_unit`.
    pub m_t1: Option<f64>,
}

impl Default for T1Block {
    fn default() -> Self {
        T1Block {
            shots: 1500,
            level: Level::Up,
            m_values: None,
            m_min: 250,
            m_max: 120_000,
            m_points: 15,
            m_t1: Some(19_430.0),
        }
    }
}

impl T1Block {
    pub fn m_grid(&self) -> Result<Vec<u32>> {
        match &self.m_values {
            Some(values) => {
                if values.len() < 2 {
                    return Err(Error::invalid("m_values needs at least 2 entries"));
                }
                Ok(values.clone())
            }
            None => log_u32_grid(self.m_min, self.m_max, self.m_points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdSpecBlock {
    /// Oscillating field amplitude in tesla.
    pub b_osc: f64,
    /// Signal frequency in hertz.
    pub f: f64,
    pub n_pulses: u32,
    pub m: u32,
    pub shots: u32,
    /// Variance transfer factor of the readout chain.
    pub k1: f64,
    /// Explicit pulse spacings in seconds; default is a linear sweep of
    /// `tau_points` spanning `tau0 * (1 +- tau_span)`.
    pub taus: Option<Vec<f64>>,
    pub tau_points: usize,
    pub tau_span: f64,
    pub bins: usize,
    pub convention: SincConvention,
}

impl Default for DdSpecBlock {
    fn default() -> Self {
        DdSpecBlock {
            b_osc: 1.84e-6,
            f: 250e3,
            n_pulses: 8,
            m: 400,
            shots: 1500,
            k1: 1.0,
            taus: None,
            tau_points: 21,
            tau_span: 0.5,
            bins: 41,
            convention: SincConvention::default(),
        }
    }
}

impl DdSpecBlock {
    pub fn tau_grid(&self) -> Result<Vec<f64>> {
        match &self.taus {
            Some(taus) => {
                if taus.is_empty() {
                    return Err(Error::invalid("taus must be nonempty"));
                }
                if taus.iter().any(|&t| !(t > 0.0)) {
                    return Err(Error::invalid("pulse spacings must be positive"));
                }
                Ok(taus.clone())
            }
            None => {
                if self.tau_points < 2 {
                    return Err(Error::invalid("tau_points must be at least 2"));
                }
                if !(self.tau_span > 0.0 && self.tau_span < 1.0) {
                    return Err(Error::invalid("tau_span must lie in (0, 1)"));
                }
                if !(self.f > 0.0) {
                    return Err(Error::invalid("signal frequency must be positive"));
                }
                let tau0 = 1.0 / (2.0 * self.f);
                let lo = tau0 * (1.0 - self.tau_span);
                let hi = tau0 * (1.0 + self.tau_span);
                Ok((0..self.tau_points)
                    .map(|i| lo + (hi - lo) * i as f64 / (self.tau_points - 1) as f64)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructBlock {
    /// Directory holding the per-axis histograms and metadata; absent means
    /// the run output directory.
    pub input: Option<PathBuf>,
    pub components: usize,
    pub refine_rounds: usize,
    /// Husimi grid resolution (polar x azimuthal).
    pub theta_points: usize,
    pub phi_points: usize,
    pub include_thermal: bool,
}

impl Default for ReconstructBlock {
    fn default() -> Self {
        ReconstructBlock {
            input: None,
            components: 51,
            refine_rounds: 2,
            theta_points: 31,
            phi_points: 61,
            include_thermal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityBlock {
    pub tau_r: f64,
    pub tau_r_rep: f64,
    pub tau_init: f64,
    pub tau_rf: f64,
    pub tau_sq: f64,
    pub n1_per_nv: f64,
    pub c: f64,
    pub m_t1: f64,
    pub n_nv: u32,
    pub gamma_e: f64,
    pub decay_convention: DecayConvention,
    pub tau_grid: Option<Vec<f64>>,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub m_grid: Option<Vec<u32>>,
    pub m_min: u32,
    pub m_max: u32,
    pub m_points: usize,
    /// Squeezing level in dB; absent means no squeezing.
    pub squeezing_db: Option<f64>,
}

impl Default for SensitivityBlock {
    fn default() -> Self {
        let p = SensitivityParams::default();
        SensitivityBlock {
            tau_r: p.tau_r,
            tau_r_rep: p.tau_r_rep,
            tau_init: p.tau_init,
            tau_rf: p.tau_rf,
            tau_sq: p.tau_sq,
            n1_per_nv: p.n1_per_nv,
            c: p.c,
            m_t1: p.m_t1,
            n_nv: p.n_nv,
            gamma_e: p.gamma_e,
            decay_convention: p.decay_convention,
            tau_grid: None,
            tau_min: 1.0,
            tau_max: 1e6,
            tau_points: 25,
            m_grid: None,
            m_min: 1,
            m_max: 500_000,
            m_points: 25,
            squeezing_db: None,
        }
    }
}

impl SensitivityBlock {
    pub fn params(&self) -> SensitivityParams {
        SensitivityParams {
            tau_r: self.tau_r,
            tau_r_rep: self.tau_r_rep,
            tau_init: self.tau_init,
            tau_rf: self.tau_rf,
            tau_sq: self.tau_sq,
            n1_per_nv: self.n1_per_nv,
            c: self.c,
            m_t1: self.m_t1,
            n_nv: self.n_nv,
            gamma_e: self.gamma_e,
            decay_convention: self.decay_convention,
        }
    }

    pub fn taus(&self) -> Result<Vec<f64>> {
        match &self.tau_grid {
            Some(taus) if !taus.is_empty() => Ok(taus.clone()),
            Some(_) => Err(Error::invalid("tau_grid must be nonempty")),
            None => log_f64_grid(self.tau_min, self.tau_max, self.tau_points),
        }
    }

    pub fn ms(&self) -> Result<Vec<u32>> {
        match &self.m_grid {
            Some(ms) if !ms.is_empty() => Ok(ms.clone()),
            Some(_) => Err(Error::invalid("m_grid must be nonempty")),
            None => log_u32_grid(self.m_min, self.m_max, self.m_points),
        }
    }

    pub fn squeezing(&self) -> Result<Option<SqueezingSpec>> {
        self.squeezing_db.map(SqueezingSpec::from_db).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateBlock {
    pub shots: u32,
    pub m_values: Vec<u32>,
    /// Simulated detector compression factor; absent means a linear APD.
    pub apd_k: Option<f64>,
    /// Simulated dead time in mean inter-photon intervals; overrides apd_k.
    pub dead_time: Option<f64>,
}

impl Default for CalibrateBlock {
    fn default() -> Self {
        CalibrateBlock {
            shots: 3000,
            m_values: vec![200, 400, 800, 1600, 3200],
            apd_k: None,
            dead_time: None,
        }
    }
}

impl CalibrateBlock {
    pub fn apd_model(&self) -> ApdModel {
        if let Some(dead_time) = self.dead_time {
            ApdModel::DeadTime { dead_time }
        } else if let Some(k) = self.apd_k {
            ApdModel::MultiplicativeK { k }
        } else {
            ApdModel::Linear
        }
    }
}

/// Full parsed configuration. Command blocks are optional so a command can
/// tell "absent" (an error when a config file is in use) from "defaulted".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunBlock,
    pub ensemble: Option<EnsembleBlock>,
    pub crossover: Option<CrossoverBlock>,
    pub rabi: Option<RabiBlock>,
    pub t1: Option<T1Block>,
    pub ddspec: Option<DdSpecBlock>,
    pub reconstruct: Option<ReconstructBlock>,
    pub sensitivity: Option<SensitivityBlock>,
    pub calibrate: Option<CalibrateBlock>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse a config file, returning the config and the raw bytes (for
    /// provenance hashing).
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = fs::read(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
        Ok((Self::from_toml_str(text)?, bytes))
    }

    /// Ensemble block, defaulted when absent (it is shared, not required).
    pub fn ensemble(&self) -> EnsembleBlock {
        self.ensemble.unwrap_or_default()
    }
}

/// Fetch a command's block: required when a config file was provided,
/// defaulted otherwise.
pub fn require_block<T: Default + Clone>(
    block: &Option<T>,
    name: &str,
    from_file: bool,
) -> Result<T> {
    match block {
        Some(b) => Ok(b.clone()),
        None if from_file => Err(Error::Config(format!(
            "missing required block [{name}] in the config file"
        ))),
        None => Ok(T::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let err = RunConfig::from_toml_str("[crossover]\nshotz = 10\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("shotz"), "{msg}");
        assert_eq!(err.exit_code(), 2);

        let err = RunConfig::from_toml_str("[blorp]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("blorp"));
    }

    #[test]
    fn full_file_parses() {
        let text = r#"
            [run]
            seed = 11
            out = "results"
            formats = ["csv", "json"]
            threads = 2

            [ensemble]
            n_nv = 170
            contrast = 0.2

            [crossover]
            shots = 500
            m_values = [1250, 5000, 25000]
            k = 0.99

            [sensitivity]
            squeezing_db = 0.5
            tau_grid = [10.0, 100.0]
            m_grid = [1, 2700]
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.run.seed, 11);
        assert_eq!(cfg.run.formats, vec![OutputFormat::Csv, OutputFormat::Json]);
        let ens = cfg.ensemble();
        assert_eq!(ens.n_nv, 170);
        assert_eq!(ens.contrast, 0.2);
        // Unset ensemble keys keep their defaults.
        assert_eq!(ens.decay_counts, 1.6e6);
        let cross = cfg.crossover.unwrap();
        assert_eq!(cross.m_grid().unwrap(), vec![1250, 5000, 25_000]);
        assert_eq!(cross.k, Some(0.99));
        let sens = cfg.sensitivity.unwrap();
        assert_eq!(sens.squeezing().unwrap().unwrap().xi_sq_db, 0.5);
        assert_eq!(sens.taus().unwrap(), vec![10.0, 100.0]);
        assert_eq!(sens.ms().unwrap(), vec![1, 2700]);
    }

    #[test]
    fn grids_are_validated() {
        assert!(log_u32_grid(0, 10, 3).is_err());
        assert!(log_u32_grid(10, 10, 3).is_err());
        assert!(log_u32_grid(1, 10, 1).is_err());
        let g = log_u32_grid(1250, 25_000, 13).unwrap();
        assert_eq!(g.first(), Some(&1250));
        assert_eq!(g.last(), Some(&25_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));

        let t = log_f64_grid(1.0, 1e6, 7).unwrap();
        assert_eq!(t.len(), 7);
        assert!((t[3] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn required_blocks_depend_on_file_presence() {
        let cfg = RunConfig::from_toml_str("[run]\nseed = 3\n").unwrap();
        let err = require_block(&cfg.crossover, "crossover", true).unwrap_err();
        assert!(err.to_string().contains("[crossover]"));
        assert_eq!(err.exit_code(), 2);
        // Without a file the defaults apply.
        let block = require_block(&cfg.crossover, "crossover", false).unwrap();
        assert_eq!(block, CrossoverBlock::default());
        // An empty header opts into defaults explicitly.
        let cfg = RunConfig::from_toml_str("[crossover]\n").unwrap();
        assert_eq!(
            require_block(&cfg.crossover, "crossover", true).unwrap(),
            CrossoverBlock::default()
        );
    }

    #[test]
    fn ensemble_block_validates_through_config() {
        let bad = EnsembleBlock {
            contrast: 1.5,
            ..EnsembleBlock::default()
        };
        assert!(bad.to_config().is_err());
        assert!(EnsembleBlock::default().plan(100, 10, 1).is_ok());
    }

    #[test]
    fn ddspec_tau_grid_spans_resonance() {
        let block = DdSpecBlock::default();
        let taus = block.tau_grid().unwrap();
        let tau0 = 1.0 / (2.0 * block.f);
        assert_eq!(taus.len(), block.tau_points);
        assert!(taus.first().unwrap() < &tau0);
        assert!(taus.last().unwrap() > &tau0);
        // The midpoint of the default odd-length grid sits on resonance.
        assert!((taus[block.tau_points / 2] - tau0).abs() < 1e-12);
    }
}
