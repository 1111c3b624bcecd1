//! Noise decomposition of readout records.
//!
//! The observed signal `b - a` carries two noise sources: Poissonian photon
//! shot noise (a Skellam difference of the two windows) and the projection
//! noise of the spin ensemble, amplified by `2 n c`. Normalizing by `2 n c`
//! puts everything in pseudo-spin units, where the shot contribution falls as
//! `1/sqrt(n)` while the projection part stays put; the detector correction
//! `k` rescales both. [`decompose`] splits a batch into these parts,
//! [`calibrate_k`] extracts `k` from the reference windows, and
//! [`sweep_crossover`] maps the transition from the shot-dominated to the
//! projection-dominated regime.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::{simulate_with_stream, ReadoutRecord, SimulationPlan};
use crate::stats;

/// Options for [`decompose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    /// Contrast to normalize with; `None` estimates it from the batch means.
    pub contrast: Option<f64>,
    /// Detector correction factor applied to the whole observed width.
    pub k: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            contrast: None,
            k: 1.0,
        }
    }
}

/// Observed width of a record batch split into photon and spin parts.
///
/// The parts satisfy `sigma_prime = k * sqrt(sigma_shot_prime^2 +
/// sigma_proj^2)` by construction unless `clipped` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDecomposition {
    /// Baseline photons per window, estimated from the reference counters.
    pub n: f64,
    /// Contrast used for normalization.
    pub c: f64,
    /// Detector correction factor used.
    pub k: f64,
    /// Sample standard deviation of `b - a` in counts.
    pub sigma_total: f64,
    /// Normalized width `sigma_total / (2 n c)` in pseudo-spin units.
    pub sigma_prime: f64,
    /// Standard error of `sigma_prime`.
    pub sigma_prime_err: f64,
    /// Photon shot-noise floor `sqrt(2 n (1 - c/2)) / (2 n c)`.
    pub sigma_shot_prime: f64,
    /// Inferred spin projection width `sqrt(sigma_prime^2/k^2 -
    /// sigma_shot_prime^2)`, clipped at zero.
    pub sigma_proj: f64,
    /// Number of records in the batch.
    pub shots: usize,
    /// Set when the shot floor exceeded the observed width and `sigma_proj`
    /// was clipped to zero.
    pub clipped: bool,
    /// Set when all records were identical; the width errors are undefined.
    pub degenerate: bool,
}

impl NoiseDecomposition {
    /// Gap `20 log10(sigma_proj / sigma_shot_prime)` in dB; `None` while the
    /// projection part is clipped to zero.
    pub fn db_gap(&self) -> Option<f64> {
        if self.clipped || self.sigma_proj <= 0.0 {
            None
        } else {
            Some(20.0 * (self.sigma_proj / self.sigma_shot_prime).log10())
        }
    }
}

/// Split the observed width of a uniform-`m` batch into photon shot noise and
/// spin projection noise.
pub fn decompose(records: &[ReadoutRecord], opts: &DecomposeOptions) -> Result<NoiseDecomposition> {
    if records.len() < 2 {
        return Err(Error::data("need at least 2 records to estimate a width"));
    }
    if records.iter().any(|r| r.m != records[0].m) {
        return Err(Error::data(
            "records mix repetition counts; decompose one batch at a time",
        ));
    }
    if !(opts.k > 0.0) {
        return Err(Error::invalid("k must be positive"));
    }
    let n = stats::mean(&records.iter().map(|r| r.baseline()).collect::<Vec<_>>());
    if !(n > 0.0) {
        return Err(Error::data("reference windows are empty; baseline n = 0"));
    }
    let mean_a = stats::mean(&records.iter().map(|r| r.a as f64).collect::<Vec<_>>());
    let mean_b = stats::mean(&records.iter().map(|r| r.b as f64).collect::<Vec<_>>());
    let c = match opts.contrast {
        Some(c) => c,
        None => 2.0 - (mean_a + mean_b) / n,
    };
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::numerical(format!(
            "contrast estimate {c:.4} outside (0, 1); batch too noisy or misconfigured"
        )));
    }
    let signals: Vec<f64> = records.iter().map(|r| r.signal() as f64).collect();
    let sigma_total = stats::std_dev(&signals);
    let degenerate = sigma_total == 0.0;
    let scale = 2.0 * n * c;
    let sigma_prime = sigma_total / scale;
    let sigma_prime_err = if degenerate {
        f64::NAN
    } else {
        stats::std_dev_err(sigma_prime, records.len())
    };
    let sigma_shot_prime = (2.0 * n * (1.0 - 0.5 * c)).sqrt() / scale;
    let excess = sigma_prime * sigma_prime / (opts.k * opts.k) - sigma_shot_prime * sigma_shot_prime;
    let clipped = excess < 0.0;
    let sigma_proj = excess.max(0.0).sqrt();
    Ok(NoiseDecomposition {
        n,
        c,
        k: opts.k,
        sigma_total,
        sigma_prime,
        sigma_prime_err,
        sigma_shot_prime,
        sigma_proj,
        shots: records.len(),
        clipped,
        degenerate,
    })
}

/// Result of the detector correction-factor calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCalibration {
    pub k: f64,
    pub err: f64,
    /// Set when only one baseline level was available; the error bar is then
    /// a single-point extrapolation rather than a fit.
    pub single_level: bool,
}

/// Fit the detector correction `k` from the reference windows.
///
/// Within each repetition-count group, `r1 - r2` is a Skellam difference
/// whose width an ideal detector fixes at `sqrt(2 n)`. The fit model is
/// `std(r1 - r2)/n = k sqrt(2/n)`, weighted by the chi-distribution error of
/// each group's width.
pub fn calibrate_k(records: &[ReadoutRecord]) -> Result<KCalibration> {
    let mut groups: BTreeMap<u32, Vec<&ReadoutRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.m).or_default().push(r);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (m, group) in &groups {
        if group.len() < 2 {
            return Err(Error::data(format!(
                "group m = {m} has fewer than 2 records"
            )));
        }
        let n = stats::mean(&group.iter().map(|r| r.baseline()).collect::<Vec<_>>());
        if !(n > 0.0) {
            return Err(Error::data("reference windows are empty"));
        }
        let diffs: Vec<f64> = group
            .iter()
            .map(|r| r.r1 as f64 - r.r2 as f64)
            .collect();
        let s = stats::std_dev(&diffs);
        if s == 0.0 {
            return Err(Error::data("degenerate reference widths"));
        }
        let y = s / n;
        let y_err = stats::std_dev_err(s, group.len()) / n;
        xs.push((2.0 / n).sqrt());
        ys.push(y);
        ws.push(1.0 / (y_err * y_err));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&ws)
        .map(|((x, y), w)| w * x * y)
        .sum();
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x * x).sum();
    let k = sxy / sxx;
    let err = (1.0 / sxx).sqrt();
    if !(k > 0.0 && k <= 1.1) {
        return Err(Error::numerical(format!(
            "calibrated k = {k:.4} outside (0, 1.1]"
        )));
    }
    Ok(KCalibration {
        k,
        err,
        single_level: groups.len() < 2,
    })
}

/// One point of a crossover sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    /// Readout repetitions at this point.
    pub m: u32,
    pub decomposition: NoiseDecomposition,
}

/// Normalized width against baseline photon number across a repetition sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverCurve {
    pub points: Vec<CrossoverPoint>,
    /// Detector correction used for every decomposition.
    pub k: f64,
    pub k_err: f64,
    /// Batch contrast shared by all points.
    pub contrast: f64,
}

impl CrossoverCurve {
    /// `(n, sigma_prime, err)` triples, ascending in `n`.
    pub fn xy(&self) -> Vec<(f64, f64, f64)> {
        self.points
            .iter()
            .map(|p| {
                (
                    p.decomposition.n,
                    p.decomposition.sigma_prime,
                    p.decomposition.sigma_prime_err,
                )
            })
            .collect()
    }
}

/// Sweep the repetition count and decompose each batch.
///
/// All points share one master seed (decorrelated per point), one fitted or
/// supplied `k`, and one pooled contrast estimate, mirroring an analysis that
/// normalizes a dataset with a single calibration.
pub fn sweep_crossover(
    plan: &SimulationPlan,
    m_values: &[u32],
    k: Option<f64>,
) -> Result<CrossoverCurve> {
    if m_values.is_empty() {
        return Err(Error::data("m grid is empty"));
    }
    if m_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::data("m grid must be strictly ascending"));
    }
    let mut batches = Vec::with_capacity(m_values.len());
    for (i, &m) in m_values.iter().enumerate() {
        let sub = SimulationPlan {
            m,
            ..plan.clone()
        };
        batches.push(simulate_with_stream(&sub, (i as u64) << 32)?);
    }
    let (k, k_err) = match k {
        Some(k) if k > 0.0 => (k, 0.0),
        Some(k) => return Err(Error::invalid(format!("k must be positive, got {k}"))),
        None => {
            let pooled: Vec<ReadoutRecord> = batches.iter().flatten().copied().collect();
            let cal = calibrate_k(&pooled)?;
            (cal.k, cal.err)
        }
    };
    // Pooled contrast: photon-precision weights n * shots per batch.
    let mut c_num = 0.0;
    let mut c_den = 0.0;
    for batch in &batches {
        let n = stats::mean(&batch.iter().map(|r| r.baseline()).collect::<Vec<_>>());
        let mean_a = stats::mean(&batch.iter().map(|r| r.a as f64).collect::<Vec<_>>());
        let mean_b = stats::mean(&batch.iter().map(|r| r.b as f64).collect::<Vec<_>>());
        let c = 2.0 - (mean_a + mean_b) / n;
        let w = n * batch.len() as f64;
        c_num += w * c;
        c_den += w;
    }
    let contrast = c_num / c_den;
    if !(contrast > 0.0 && contrast < 1.0) {
        return Err(Error::numerical(format!(
            "pooled contrast estimate {contrast:.4} outside (0, 1)"
        )));
    }
    let opts = DecomposeOptions {
        contrast: Some(contrast),
        k,
    };
    let mut points = Vec::with_capacity(batches.len());
    for (batch, &m) in batches.iter().zip(m_values) {
        points.push(CrossoverPoint {
            m,
            decomposition: decompose(batch, &opts)?,
        });
    }
    Ok(CrossoverCurve {
        points,
        k,
        k_err,
        contrast,
    })
}
