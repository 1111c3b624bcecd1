//! Pulse-train spectroscopy of a weak oscillating field.
//!
//! A train of pi pulses spaced `tau` apart turns the probe spin into a
//! lock-in detector centered on `f = 1 / (2 tau)`. A signal of amplitude
//! `b_osc` at that frequency imprints a phase `alpha * sin(lambda)` per
//! train, where `lambda` is the (uniformly random) signal phase at the start
//! of the sequence. Averaging over `lambda` turns the equatorial spin
//! projections into Bessel-function moments, which is what the tomography
//! simulator in this module reproduces shot by shot.
//!
//! The module also contains a small relaxation study comparing spatially
//! correlated noise (one random drive shared by every spin in a shot)
//! against independent per-spin relaxation at matched mean decay.

use std::f64::consts::PI;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::sim::sample_poisson;
use crate::stats::{self, Histogram};

/// Electron gyromagnetic ratio in Hz per tesla.
pub const GAMMA_E: f64 = 28.04e9;

/// Oscillating test field sensed by the pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcSignal {
    /// Field amplitude in tesla.
    pub b_osc: f64,
    /// Frequency in hertz.
    pub f: f64,
}

impl AcSignal {
    pub fn new(b_osc: f64, f: f64) -> Result<Self> {
        let s = AcSignal { b_osc, f };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_osc.is_finite() && self.b_osc >= 0.0) {
            return Err(Error::invalid("b_osc must be finite and nonnegative"));
        }
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(Error::invalid("signal frequency must be positive"));
        }
        Ok(())
    }

    /// Pulse spacing that centers the filter on this signal.
    pub fn resonant_tau(&self) -> f64 {
        1.0 / (2.0 * self.f)
    }
}

/// Periodic pi-pulse train, described by its pulse count and spacing.
///
/// Pulses sit at `(k + 1/2) tau` for `k = 0 .. n_pulses`, so the phase
/// accumulation windows alternate sign every `tau` with half windows at both
/// ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdSequence {
    /// Number of pi pulses; must be a positive multiple of 8 so the train
    /// decomposes into whole phase-cycled blocks.
    pub n_pulses: u32,
    /// Pulse spacing in seconds.
    pub tau: f64,
}

impl DdSequence {
    pub fn new(n_pulses: u32, tau: f64) -> Result<Self> {
        let s = DdSequence { n_pulses, tau };
        s.validate()?;
        Ok(s)
    }

    /// Sequence tuned to the signal frequency (`tau = 1 / (2 f)`).
    pub fn resonant(n_pulses: u32, signal: &AcSignal) -> Result<Self> {
        DdSequence::new(n_pulses, signal.resonant_tau())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 || self.n_pulses % 8 != 0 {
            return Err(Error::invalid(format!(
                "n_pulses must be a positive multiple of 8, got {}",
                self.n_pulses
            )));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid("tau must be positive"));
        }
        Ok(())
    }

    /// Total phase accumulation time `n_pulses * tau`.
    pub fn tau_sens(&self) -> f64 {
        self.n_pulses as f64 * self.tau
    }
}

/// Convention for the dimensionless detuning argument of the filter
/// envelope `sinc(x)`.
///
/// The detuning `tau - tau_0` has to be scaled by a frequency to become an
/// angle, and two natural choices exist. They agree at resonance and to
/// first order around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SincConvention {
    /// `x = (tau - tau_0) * n_pulses * pi * f`. The zeros of this envelope
    /// coincide with the exact zeros of the square-modulated filter, which
    /// is why it is the default.
    #[default]
    ResonantFrequency,
    /// `x = (tau - tau_0) * n_pulses * pi / (2 tau)`, using the running
    /// filter frequency; slightly asymmetric about resonance.
    RunningFrequency,
}

/// Peak phase amplitude `2 pi * (2 / pi) * b_osc * gamma_e * tau_sens`
/// acquired on resonance; the `2 / pi` is the fundamental Fourier
/// coefficient of the square modulation.
pub fn interaction_alpha(signal: &AcSignal, seq: &DdSequence) -> f64 {
    4.0 * signal.b_osc * GAMMA_E * seq.tau_sens()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Off-resonance suppression factor of the phase amplitude, in [-1, 1].
pub fn detuning_envelope(
    seq: &DdSequence,
    signal: &AcSignal,
    convention: SincConvention,
) -> f64 {
    let detuning = seq.tau - signal.resonant_tau();
    let np = seq.n_pulses as f64;
    let x = match convention {
        SincConvention::ResonantFrequency => detuning * np * PI * signal.f,
        SincConvention::RunningFrequency => detuning * np * PI / (2.0 * seq.tau),
    };
    sinc(x)
}

/// Phase amplitude including the detuning envelope.
pub fn alpha_prime(signal: &AcSignal, seq: &DdSequence, convention: SincConvention) -> f64 {
    interaction_alpha(signal, seq) * detuning_envelope(seq, signal, convention)
}

/// Phase acquired in one train when the signal starts at phase `lambda`.
pub fn accumulated_phase(
    seq: &DdSequence,
    signal: &AcSignal,
    lambda: f64,
    convention: SincConvention,
) -> f64 {
    alpha_prime(signal, seq, convention) * lambda.sin()
}

/// Moments of the equatorial spin projections (in per-spin units, so the
/// fully polarized value is 1/2) after averaging the accumulated phase over
/// a uniform signal phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

/// Phase-averaged moments for a given `alpha_prime`.
///
/// With `theta = alpha' sin(lambda)` and the spin prepared along +Y,
/// `<Y> = J0(alpha') / 2`, `<X> = 0`, and the second moments follow from
/// `E[cos 2 theta] = J0(2 alpha')`.
pub fn marginal_moments(alpha_prime: f64) -> MarginalMoments {
    let j0a = libm::j0(alpha_prime);
    let j02a = libm::j0(2.0 * alpha_prime);
    MarginalMoments {
        mean_x: 0.0,
        mean_y: 0.5 * j0a,
        sigma_x: 0.5 * (0.5 * (1.0 - j02a)).max(0.0).sqrt(),
        sigma_y: 0.5 * ((0.5 * (1.0 + j02a) - j0a * j0a).max(0.0)).sqrt(),
    }
}

/// Readout axis for state tomography after the pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReadoutAxis {
    X,
    Y,
    Z,
}

impl ReadoutAxis {
    pub fn label(&self) -> &'static str {
        match self {
            ReadoutAxis::X => "x",
            ReadoutAxis::Y => "y",
            ReadoutAxis::Z => "z",
        }
    }
}

/// Full description of a tomography run.
///
/// The ensemble is treated as `cfg.n_nv` two-level pairs: the sequence
/// polarizes them along +Y, the signal phase rotates them in the equatorial
/// plane, and the chosen axis is mapped onto the up/rest populations before
/// the photon chain. The Z axis stays at the unpolarized pair state and is
/// insensitive to the accumulated phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyPlan {
    pub cfg: EnsembleConfig,
    pub sequence: DdSequence,
    pub signal: AcSignal,
    /// Readout repetitions accumulated per shot.
    pub m: u32,
    pub shots: u32,
    pub seed: u64,
    /// Variance transfer factor of the readout chain: the observed spin
    /// variance is `k1` times the true one. 1 is ideal.
    pub k1: f64,
    pub convention: SincConvention,
    /// Histogram bin count for the per-axis signal distributions.
    pub bins: usize,
}

impl TomographyPlan {
    pub fn new(
        cfg: EnsembleConfig,
        sequence: DdSequence,
        signal: AcSignal,
        m: u32,
        shots: u32,
        seed: u64,
    ) -> Self {
        TomographyPlan {
            cfg,
            sequence,
            signal,
            m,
            shots,
            seed,
            k1: 1.0,
            convention: SincConvention::default(),
            bins: 41,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        self.signal.validate()?;
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if self.shots < 2 {
            return Err(Error::invalid("at least 2 shots are required for widths"));
        }
        if !(self.k1 > 0.0 && self.k1 <= 1.0) {
            return Err(Error::invalid(format!(
                "k1 must lie in (0, 1], got {}",
                self.k1
            )));
        }
        Ok(())
    }
}

/// Per-axis summary of a tomography run, in per-spin projection units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisStats {
    pub axis: ReadoutAxis,
    /// Envelope-scaled phase amplitude the run was performed at.
    pub alpha_prime: f64,
    pub mean: f64,
    pub mean_err: f64,
    /// Total normalized width of `(b - a) / (2 n c)`.
    pub sigma_prime: f64,
    pub sigma_prime_err: f64,
    /// Width after removing photon shot noise in quadrature.
    pub sigma_spin: f64,
    pub histogram: Histogram,
}

fn up_probability(axis: ReadoutAxis, theta: f64) -> f64 {
    match axis {
        ReadoutAxis::X => 0.5 * (1.0 + theta.sin()),
        ReadoutAxis::Y => 0.5 * (1.0 + theta.cos()),
        ReadoutAxis::Z => 0.5,
    }
}

fn axis_mean_fraction(axis: ReadoutAxis, alpha_prime: f64) -> f64 {
    match axis {
        ReadoutAxis::X | ReadoutAxis::Z => 0.5,
        ReadoutAxis::Y => 0.5 * (1.0 + libm::j0(alpha_prime)),
    }
}

/// Simulate tomography along `axes`.
///
/// Every shot draws one signal phase shared by all spins, projects each spin
/// onto the requested axis, and reads the up fraction out through the photon
/// chain. Nonunit `k1` compresses per-shot fluctuations of the up fraction
/// around its phase-averaged mean, emulating readout infidelity.
pub fn simulate_tomography(plan: &TomographyPlan, axes: &[ReadoutAxis]) -> Result<Vec<AxisStats>> {
    plan.validate()?;
    if axes.is_empty() {
        return Err(Error::data("axis list is empty"));
    }
    let ap = alpha_prime(&plan.signal, &plan.sequence, plan.convention);
    let n = plan.cfg.photons_per_unit * plan.m as f64;
    let c = plan.cfg.contrast;
    let scale = 2.0 * n * c;
    let n_spins = plan.cfg.n_nv;
    let sqrt_k1 = plan.k1.sqrt();
    let mut out = Vec::with_capacity(axes.len());
    for (ai, &axis) in axes.iter().enumerate() {
        let center = axis_mean_fraction(axis, ap);
        let stream_base = (ai as u64) << 32;
        let values: Vec<f64> = (0..plan.shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
                rng.set_stream(stream_base + shot as u64);
                let lambda = rng.gen::<f64>() * (2.0 * PI);
                let theta = ap * lambda.sin();
                let p = up_probability(axis, theta);
                let ups = (0..n_spins).filter(|_| rng.gen::<f64>() < p).count();
                let f_up = ups as f64 / n_spins as f64;
                let f_eff = (center + sqrt_k1 * (f_up - center)).clamp(0.0, 1.0);
                let a = sample_poisson(n * (1.0 - c * f_eff), &mut rng) as f64;
                let b = sample_poisson(n * (1.0 - c * (1.0 - f_eff)), &mut rng) as f64;
                (b - a) / scale
            })
            .collect();
        let mean = stats::mean(&values);
        let sigma_prime = stats::std_dev(&values);
        let sigma_prime_err = stats::std_dev_err(sigma_prime, values.len());
        let shot_noise = (2.0 * n * (1.0 - 0.5 * c)).sqrt() / scale;
        let sigma_spin = (sigma_prime * sigma_prime - shot_noise * shot_noise)
            .max(0.0)
            .sqrt();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = 1e-9 + 1e-6 * (hi - lo).abs();
        let histogram = Histogram::from_values(&values, lo - pad, hi + pad, plan.bins)?;
        out.push(AxisStats {
            axis,
            alpha_prime: ap,
            mean,
            mean_err: sigma_prime / (values.len() as f64).sqrt(),
            sigma_prime,
            sigma_prime_err,
            sigma_spin,
            histogram,
        });
    }
    Ok(out)
}

/// Relaxation noise models compared at matched mean decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum T1NoiseModel {
    /// One random drive per shot rotates every spin through the same angle;
    /// the shot-averaged polarization follows `J0(omega t)`.
    CommonDrive,
    /// Each spin relaxes independently toward the unpolarized pair state;
    /// the polarization follows `exp(-t)`.
    Independent,
}

/// One relaxation-curve point, in per-spin projection units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurvePoint {
    /// Time in units of the 1/e decay time.
    pub t: f64,
    pub mean: f64,
    pub mean_err: f64,
    pub sigma: f64,
    pub sigma_err: f64,
}

/// Drive scale `omega` such that `J0(omega t)` crosses 1/e at `t = 1`,
/// putting both noise models on the same decay-time axis.
pub fn common_drive_scale() -> f64 {
    let target = (-1.0f64).exp();
    let (mut lo, mut hi) = (0.0f64, 2.4f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if libm::j0(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Shot-resolved spin statistics under `model` on `t_grid` (in units of the
/// 1/e decay time), starting fully polarized along the readout axis.
///
/// No photon chain is applied: the curves isolate the spin statistics, and
/// identical shot noise would be added to either model by the readout.
pub fn t1_noise_curve(
    n_spins: u32,
    model: T1NoiseModel,
    t_grid: &[f64],
    shots: u32,
    seed: u64,
) -> Result<Vec<NoiseCurvePoint>> {
    if n_spins == 0 {
        return Err(Error::invalid("n_spins must be at least 1"));
    }
    if shots < 2 {
        return Err(Error::invalid("at least 2 shots are required for widths"));
    }
    if t_grid.is_empty() {
        return Err(Error::data("time grid is empty"));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("times must be finite and nonnegative"));
    }
    let omega = common_drive_scale();
    let mut out = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let stream_base = (i as u64) << 32;
        let values: Vec<f64> = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream_base + shot as u64);
                let p = match model {
                    T1NoiseModel::CommonDrive => {
                        let psi = rng.gen::<f64>() * (2.0 * PI);
                        0.5 * (1.0 + (omega * t * psi.cos()).cos())
                    }
                    T1NoiseModel::Independent => 0.5 * (1.0 + (-t).exp()),
                };
                let ups = (0..n_spins).filter(|_| rng.gen::<f64>() < p).count();
                ups as f64 / n_spins as f64 - 0.5
            })
            .collect();
        let mean = stats::mean(&values);
        let sigma = stats::std_dev(&values);
        out.push(NoiseCurvePoint {
            t,
            mean,
            mean_err: sigma / (values.len() as f64).sqrt(),
            sigma,
            sigma_err: stats::std_dev_err(sigma, values.len()),
        });
    }
    Ok(out)
}

/// Convenience pairing of the two relaxation models on a shared grid;
/// returns `(common_drive, independent)`.
pub fn correlated_vs_uncorrelated_t1(
    n_spins: u32,
    t_grid: &[f64],
    shots: u32,
    seed: u64,
) -> Result<(Vec<NoiseCurvePoint>, Vec<NoiseCurvePoint>)> {
    Ok((
        t1_noise_curve(n_spins, T1NoiseModel::CommonDrive, t_grid, shots, seed)?,
        t1_noise_curve(
            n_spins,
            T1NoiseModel::Independent,
            t_grid,
            shots,
            seed.wrapping_add(1),
        )?,
    ))
}
