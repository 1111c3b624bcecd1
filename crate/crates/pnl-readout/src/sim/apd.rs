//! Detector response models applied to simulated photon counts.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ReadoutRecord;

/// Avalanche photodiode response model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ApdModel {
    /// Ideal detector: counts pass through unchanged.
    Linear,
    /// Post-hoc compression of count fluctuations about their batch mean by
    /// a factor `k` in (0, 1]. Mimics a detector whose noise is narrower
    /// than Poissonian by a fixed factor.
    MultiplicativeK { k: f64 },
    /// Non-paralyzable dead time. `dead_time` is expressed in units of the
    /// mean inter-photon interval of each count window at its batch mean
    /// rate, so the same value compresses harder at higher rates.
    DeadTime { dead_time: f64 },
}

impl ApdModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ApdModel::Linear => Ok(()),
            ApdModel::MultiplicativeK { k } => {
                if *k > 0.0 && *k <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("k must lie in (0, 1], got {k}")))
                }
            }
            ApdModel::DeadTime { dead_time } => {
                if *dead_time >= 0.0 && dead_time.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "dead_time must be >= 0, got {dead_time}"
                    )))
                }
            }
        }
    }
}

/// Apply a detector model to a batch of records.
///
/// The batch is needed because the multiplicative and dead-time models are
/// defined relative to batch-mean count rates. `seed` drives the stochastic
/// dead-time thinning; the other models are deterministic.
pub fn apply_apd(records: &[ReadoutRecord], model: &ApdModel, seed: u64) -> Result<Vec<ReadoutRecord>> {
    model.validate()?;
    if records.is_empty() {
        return Ok(Vec::new());
    }
    match model {
        ApdModel::Linear => Ok(records.to_vec()),
        ApdModel::MultiplicativeK { k } => {
            let means = field_means(records);
            Ok(records
                .iter()
                .map(|r| {
                    let f = |x: u64, m: f64| compress(x, m, *k);
                    ReadoutRecord {
                        a: f(r.a, means[0]),
                        b: f(r.b, means[1]),
                        r1: f(r.r1, means[2]),
                        r2: f(r.r2, means[3]),
                        m: r.m,
                    }
                })
                .collect())
        }
        ApdModel::DeadTime { dead_time } => {
            let means = field_means(records);
            Ok(records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((1 << 40) + i as u64);
                    ReadoutRecord {
                        a: thin(r.a, *dead_time / means[0].max(1.0), &mut rng),
                        b: thin(r.b, *dead_time / means[1].max(1.0), &mut rng),
                        r1: thin(r.r1, *dead_time / means[2].max(1.0), &mut rng),
                        r2: thin(r.r2, *dead_time / means[3].max(1.0), &mut rng),
                        m: r.m,
                    }
                })
                .collect())
        }
    }
}

fn field_means(records: &[ReadoutRecord]) -> [f64; 4] {
    let n = records.len() as f64;
    let mut s = [0.0f64; 4];
    for r in records {
        s[0] += r.a as f64;
        s[1] += r.b as f64;
        s[2] += r.r1 as f64;
        s[3] += r.r2 as f64;
    }
    s.map(|v| v / n)
}

fn compress(x: u64, mean: f64, k: f64) -> u64 {
    (mean + k * (x as f64 - mean)).round().max(0.0) as u64
}

/// Greedy non-paralyzable acceptance of `x` photons spread uniformly over a
/// unit window with relative dead time `tau` (fraction of the window).
fn thin<R: Rng + ?Sized>(x: u64, tau: f64, rng: &mut R) -> u64 {
    if tau <= 0.0 || x == 0 {
        return x;
    }
    let mut times: Vec<f64> = (0..x).map(|_| rng.gen::<f64>()).collect();
    times.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut accepted = 0u64;
    let mut blocked_until = f64::NEG_INFINITY;
    for t in times {
        if t >= blocked_until {
            accepted += 1;
            blocked_until = t + tau;
        }
    }
    accepted
}
