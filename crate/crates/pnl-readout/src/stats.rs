//! Small shared statistics helpers: sample moments and histograms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample standard deviation (Bessel-corrected).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of a sample standard deviation, `sigma / sqrt(2 (S - 1))`,
/// valid for approximately Gaussian samples.
pub fn std_dev_err(sigma: f64, samples: usize) -> f64 {
    if samples < 2 {
        return f64::NAN;
    }
    sigma / (2.0 * (samples - 1) as f64).sqrt()
}

/// Fixed-width histogram over a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, length `counts.len() + 1`, strictly increasing.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Build a histogram with `bins` equal-width bins spanning `[lo, hi]`.
    /// Values outside the range are clamped into the edge bins.
    pub fn from_values(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("histogram needs at least one bin"));
        }
        if !(hi > lo) {
            return Err(Error::invalid("histogram range must satisfy hi > lo"));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = ((v - lo) / width).floor() as i64;
            let idx = idx.clamp(0, bins as i64 - 1) as usize;
            counts[idx] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }
}
