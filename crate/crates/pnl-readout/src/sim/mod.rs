//! Monte Carlo simulator of repetitive two-window optical spin readout.
//!
//! One *shot* prepares the ensemble, runs `m` readout repetitions, and
//! accumulates four photon counters: signal windows `a` and `b` flanking the
//! spin manipulation, and spin-independent reference windows `r1`, `r2`.
//! Per repetition the whole ensemble emits a baseline of
//! [`EnsembleConfig::photons_per_unit`] photons on average; a spin in the
//! binned-up level suppresses window `a` by the contrast, any other level
//! suppresses window `b`, so the mean difference `b - a` is `2 n c J~z`.
//!
//! Counts are Poissonian conditional on the level trajectory; trajectories
//! follow the configured [`TelegraphModel`]. Every shot draws from its own
//! counter-indexed RNG stream, so results are bit-identical for a given seed
//! regardless of the worker-thread count.

mod apd;
mod telegraph;

pub use apd::{apply_apd, ApdModel};
pub use telegraph::{Level, ResolvedTelegraph, TelegraphModel, TransitionRule};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleConfig, SpinSpecies};
use crate::error::{Error, Result};
use crate::stats::{self, Histogram};

/// Stream-index offset separating detector randomness from shot randomness.
const APD_STREAM_BASE: u64 = 1 << 56;

/// Photon counts of one readout shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutRecord {
    /// Signal window before the manipulation.
    pub a: u64,
    /// Signal window after the manipulation.
    pub b: u64,
    /// First spin-independent reference window.
    pub r1: u64,
    /// Second spin-independent reference window.
    pub r2: u64,
    /// Number of readout repetitions accumulated into each window.
    pub m: u32,
}

impl ReadoutRecord {
    /// Spin-dependent signal `b - a`.
    pub fn signal(&self) -> i64 {
        self.b as i64 - self.a as i64
    }

    /// Baseline estimate from the reference windows.
    pub fn baseline(&self) -> f64 {
        0.5 * (self.r1 as f64 + self.r2 as f64)
    }

    /// Contrast estimate `2 - (a + b)/n` given a baseline `n`.
    pub fn contrast_estimate(&self, n: f64) -> f64 {
        2.0 - (self.a as f64 + self.b as f64) / n
    }
}

/// How spins are prepared at the start of each shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitState {
    /// Fully mixed over the species' levels.
    Thermal,
    /// Pseudo-spin polarization `p0`: up with probability `(1 + p0)/2`,
    /// remainder split evenly over the binned-down levels.
    Polarized { p0: f64 },
    /// Each spin lands in `level` with probability `fidelity`, otherwise
    /// thermal.
    Level { level: Level, fidelity: f64 },
    /// Explicit per-spin level distribution (up, zero, down).
    Distribution { probs: [f64; 3] },
}

impl InitState {
    fn resolve(&self, species: SpinSpecies) -> Result<[f64; 3]> {
        let probs = match *self {
            InitState::Thermal => match species {
                SpinSpecies::Half => [0.5, 0.0, 0.5],
                SpinSpecies::One => [1.0 / 3.0; 3],
            },
            InitState::Polarized { p0 } => {
                if !(-1.0..=1.0).contains(&p0) {
                    return Err(Error::invalid(format!("p0 must lie in [-1, 1], got {p0}")));
                }
                let up = 0.5 * (1.0 + p0);
                match species {
                    SpinSpecies::Half => [up, 0.0, 1.0 - up],
                    SpinSpecies::One => [up, 0.5 * (1.0 - up), 0.5 * (1.0 - up)],
                }
            }
            InitState::Level { level, fidelity } => {
                if !(0.0..=1.0).contains(&fidelity) {
                    return Err(Error::invalid(format!(
                        "fidelity must lie in [0, 1], got {fidelity}"
                    )));
                }
                let thermal = match species {
                    SpinSpecies::Half => [0.5, 0.0, 0.5],
                    SpinSpecies::One => [1.0 / 3.0; 3],
                };
                if species == SpinSpecies::Half && level == Level::Zero {
                    return Err(Error::invalid("spin 1/2 has no zero level"));
                }
                let mut probs = thermal.map(|p| p * (1.0 - fidelity));
                probs[level.index()] += fidelity;
                probs
            }
            InitState::Distribution { probs } => {
                if probs.iter().any(|&p| p < 0.0) {
                    return Err(Error::invalid("level probabilities must be >= 0"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "level probabilities must sum to 1, got {total}"
                    )));
                }
                if species == SpinSpecies::Half && probs[1] != 0.0 {
                    return Err(Error::invalid("spin 1/2 has no zero level"));
                }
                probs
            }
        };
        Ok(probs)
    }

    /// Pseudo-spin polarization implied by the initial distribution.
    pub fn polarization(&self, species: SpinSpecies) -> Result<f64> {
        let p = self.resolve(species)?;
        Ok(p[0] - p[1] - p[2])
    }
}

/// Complete description of a simulated readout run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub cfg: EnsembleConfig,
    /// Readout repetitions per shot.
    pub m: u32,
    /// Number of shots.
    pub shots: u32,
    /// Master seed; every shot derives its own RNG stream from it.
    pub seed: u64,
    pub init: InitState,
    pub telegraph: TelegraphModel,
    pub apd: ApdModel,
}

impl SimulationPlan {
    /// Plan with thermal preparation, relaxation matched to the ensemble's
    /// `decay_counts`, and an ideal detector.
    pub fn new(cfg: EnsembleConfig, m: u32, shots: u32, seed: u64) -> Self {
        let m_t1 = cfg.decay_counts / cfg.photons_per_unit;
        SimulationPlan {
            cfg,
            m,
            shots,
            seed,
            init: InitState::Thermal,
            telegraph: TelegraphModel::Rethermalizing { m_t1 },
            apd: ApdModel::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if self.shots == 0 {
            return Err(Error::invalid("shots must be at least 1"));
        }
        self.init.resolve(self.cfg.species)?;
        self.telegraph.validate()?;
        self.apd.validate()?;
        Ok(())
    }
}

/// Simulate the plan's shots. Equivalent to
/// [`simulate_with_stream`]`(plan, 0)`.
pub fn simulate_experiment(plan: &SimulationPlan) -> Result<Vec<ReadoutRecord>> {
    simulate_with_stream(plan, 0)
}

/// Simulate with an explicit RNG stream base so that sweeps can decorrelate
/// grid points while sharing one master seed. Shot `i` uses stream
/// `stream_base + i`.
pub fn simulate_with_stream(plan: &SimulationPlan, stream_base: u64) -> Result<Vec<ReadoutRecord>> {
    plan.validate()?;
    let probs = plan.init.resolve(plan.cfg.species)?;
    let chain = plan.telegraph.resolve(plan.cfg.species)?;
    let records: Vec<ReadoutRecord> = (0..plan.shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(stream_base + shot as u64);
            simulate_record(&plan.cfg, plan.m, &probs, &chain, &mut rng)
        })
        .collect();
    apply_apd(&records, &plan.apd, plan.seed.wrapping_add(APD_STREAM_BASE))
}

/// One shot: evolve every spin through `m` repetitions and draw the four
/// photon counters from the trajectory-conditioned means.
fn simulate_record(
    cfg: &EnsembleConfig,
    m: u32,
    init_probs: &[f64; 3],
    chain: &ResolvedTelegraph,
    rng: &mut ChaCha8Rng,
) -> ReadoutRecord {
    let m_steps = m as u64;
    let mut up_steps = 0u64;
    for _ in 0..cfg.n_nv {
        let mut level = sample_level(init_probs, rng);
        let mut t = 0u64;
        while t < m_steps {
            let dwell = chain.dwell(level, m_steps - t, rng);
            if level.binned_up() {
                up_steps += dwell;
            }
            t += dwell;
            if t < m_steps {
                level = chain.next_level(level, rng);
            }
        }
    }
    let n = cfg.photons_per_unit * m as f64;
    let c = cfg.contrast;
    let f_up = up_steps as f64 / (cfg.n_nv as u64 * m_steps) as f64;
    // Sum of per-repetition Poisson counts is Poisson in the summed mean.
    let mean_a = n * (1.0 - c * f_up);
    let mean_b = n * (1.0 - c * (1.0 - f_up));
    ReadoutRecord {
        a: sample_poisson(mean_a, rng),
        b: sample_poisson(mean_b, rng),
        r1: sample_poisson(n, rng),
        r2: sample_poisson(n, rng),
        m,
    }
}

fn sample_level<R: Rng + ?Sized>(probs: &[f64; 3], rng: &mut R) -> Level {
    let u: f64 = rng.gen();
    if u < probs[0] {
        Level::Up
    } else if u < probs[0] + probs[1] {
        Level::Zero
    } else {
        Level::Down
    }
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Summary of one driven-rotation angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiPoint {
    /// Rotation angle in radians.
    pub angle: f64,
    /// Mean of the normalized signal `(b - a) / (2 n c)`.
    pub mean_jz: f64,
    pub mean_jz_err: f64,
    /// Spin-projection width after subtracting photon shot noise.
    pub sigma_jz: f64,
    /// Total normalized width.
    pub sigma_prime: f64,
    pub sigma_prime_err: f64,
    pub histogram: Histogram,
}

/// Driven-rotation settings layered on top of a [`SimulationPlan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiSettings {
    /// Probability that a spin participates in the rotation; spins left out
    /// keep their prepared level.
    pub active_fraction: f64,
    /// Histogram bin count for the per-angle signal distributions.
    pub bins: usize,
}

impl Default for RabiSettings {
    fn default() -> Self {
        RabiSettings {
            active_fraction: 1.0,
            bins: 41,
        }
    }
}

/// Sweep a driven rotation of the up/zero pair over `angles`.
///
/// Spins are prepared with the plan's [`InitState`]; each active spin then
/// converts up-population to zero-population with probability
/// `sin^2(angle/2)` and vice versa. Widths are normalized with the known
/// configuration values of `n` and `c`.
pub fn run_rabi_sequence(
    plan: &SimulationPlan,
    angles: &[f64],
    settings: &RabiSettings,
) -> Result<Vec<RabiPoint>> {
    plan.validate()?;
    if angles.is_empty() {
        return Err(Error::data("angle grid is empty"));
    }
    if plan.cfg.species != SpinSpecies::One {
        return Err(Error::invalid("driven rotation requires the three-level species"));
    }
    if !(0.0..=1.0).contains(&settings.active_fraction) {
        return Err(Error::invalid("active_fraction must lie in [0, 1]"));
    }
    if plan.shots < 2 {
        return Err(Error::invalid("at least 2 shots are required for widths"));
    }
    let base = plan.init.resolve(plan.cfg.species)?;
    let mut out = Vec::with_capacity(angles.len());
    for (i, &angle) in angles.iter().enumerate() {
        let rotated = rotate_distribution(&base, angle, settings.active_fraction);
        let sub = SimulationPlan {
            init: InitState::Distribution { probs: rotated },
            ..plan.clone()
        };
        let records = simulate_with_stream(&sub, (i as u64) << 32)?;
        out.push(summarize_angle(&sub, angle, &records, settings.bins)?);
    }
    Ok(out)
}

fn rotate_distribution(base: &[f64; 3], angle: f64, active: f64) -> [f64; 3] {
    let c2 = (0.5 * angle).cos().powi(2);
    let s2 = 1.0 - c2;
    let rotated = [
        base[0] * c2 + base[1] * s2,
        base[0] * s2 + base[1] * c2,
        base[2],
    ];
    [
        active * rotated[0] + (1.0 - active) * base[0],
        active * rotated[1] + (1.0 - active) * base[1],
        active * rotated[2] + (1.0 - active) * base[2],
    ]
}

fn summarize_angle(
    plan: &SimulationPlan,
    angle: f64,
    records: &[ReadoutRecord],
    bins: usize,
) -> Result<RabiPoint> {
    let n = plan.cfg.photons_per_unit * plan.m as f64;
    let c = plan.cfg.contrast;
    let scale = 2.0 * n * c;
    let signals: Vec<f64> = records.iter().map(|r| r.signal() as f64 / scale).collect();
    let mean_jz = stats::mean(&signals);
    let sigma_prime = stats::std_dev(&signals);
    let sigma_prime_err = stats::std_dev_err(sigma_prime, signals.len());
    let shot = (2.0 * n * (1.0 - 0.5 * c)).sqrt() / scale;
    let sigma_jz = (sigma_prime * sigma_prime - shot * shot).max(0.0).sqrt();
    let lo = signals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = signals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-9 + 1e-6 * (hi - lo).abs();
    let histogram = Histogram::from_values(&signals, lo - pad, hi + pad, bins)?;
    Ok(RabiPoint {
        angle,
        mean_jz,
        mean_jz_err: sigma_prime / (signals.len() as f64).sqrt(),
        sigma_jz,
        sigma_prime,
        sigma_prime_err,
        histogram,
    })
}

/// One relaxation-curve point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Point {
    /// Readout repetitions.
    pub m: u32,
    /// Window-averaged polarization estimate.
    pub p_obs: f64,
    pub p_err: f64,
}

/// Measure the window-averaged polarization as a function of the number of
/// repetitions, starting each shot from `level` prepared with the plan
/// ensemble's `p0` as preparation fidelity.
pub fn run_t1_sequence(
    plan: &SimulationPlan,
    level: Level,
    m_grid: &[u32],
) -> Result<Vec<T1Point>> {
    if m_grid.is_empty() {
        return Err(Error::data("m grid is empty"));
    }
    let mut out = Vec::with_capacity(m_grid.len());
    for (i, &m) in m_grid.iter().enumerate() {
        let sub = SimulationPlan {
            m,
            init: InitState::Level {
                level,
                fidelity: plan.cfg.p0,
            },
            ..plan.clone()
        };
        let records = simulate_with_stream(&sub, (i as u64) << 32)?;
        let n = sub.cfg.photons_per_unit * m as f64;
        let scale = n * sub.cfg.contrast;
        let ps: Vec<f64> = records.iter().map(|r| r.signal() as f64 / scale).collect();
        let p_obs = stats::mean(&ps);
        let p_err = if ps.len() > 1 {
            stats::std_dev(&ps) / (ps.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        out.push(T1Point { m, p_obs, p_err });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{polarization_under_readout, EnsembleConfig};
    use approx::assert_relative_eq;

    fn test_cfg() -> EnsembleConfig {
        EnsembleConfig::new(31, SpinSpecies::One, 0.15, 2.0, 1e7, 1.0).unwrap()
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let plan = SimulationPlan::new(test_cfg(), 500, 64, 4242);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = pool1.install(|| simulate_experiment(&plan).unwrap());
        let r4 = pool4.install(|| simulate_experiment(&plan).unwrap());
        assert_eq!(r1, r4);
        let again = simulate_experiment(&plan).unwrap();
        assert_eq!(r1, again);
    }

    #[test]
    fn different_seeds_differ() {
        let a = simulate_experiment(&SimulationPlan::new(test_cfg(), 100, 16, 1)).unwrap();
        let b = simulate_experiment(&SimulationPlan::new(test_cfg(), 100, 16, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn frozen_thermal_variance_matches_closed_form() {
        // With dynamics disabled, Var(b - a) = 2n(1 - c/2) + (2 n c sigma)^2
        // with sigma^2 = 2/(9 N) for the binned thermal spin-1 ensemble.
        let mut plan = SimulationPlan::new(test_cfg(), 1000, 6000, 99);
        plan.telegraph = TelegraphModel::Frozen;
        let records = simulate_experiment(&plan).unwrap();
        let signals: Vec<f64> = records.iter().map(|r| r.signal() as f64).collect();
        let n: f64 = 2.0 * 1000.0;
        let c = 0.15;
        let sigma_jz_sq = 2.0 / (9.0 * 31.0);
        let expected_var = 2.0 * n * (1.0 - 0.5 * c) + (2.0 * n * c).powi(2) * sigma_jz_sq;
        let s = crate::stats::std_dev(&signals);
        let se = crate::stats::std_dev_err(s, signals.len());
        assert!(
            (s - expected_var.sqrt()).abs() < 4.0 * se,
            "std = {s}, expected = {}",
            expected_var.sqrt()
        );
        // Thermal binned mean sits at -1/3 in polarization units.
        let mean_sig = crate::stats::mean(&signals);
        let expected_mean = n * c * (-1.0 / 3.0);
        let mean_se = s / (signals.len() as f64).sqrt();
        assert!((mean_sig - expected_mean).abs() < 4.0 * mean_se);
    }

    #[test]
    fn reference_windows_are_poissonian() {
        let plan = SimulationPlan::new(test_cfg(), 2000, 4000, 7);
        let records = simulate_experiment(&plan).unwrap();
        let diffs: Vec<f64> = records.iter().map(|r| (r.r1 as f64) - (r.r2 as f64)).collect();
        let n: f64 = 2.0 * 2000.0;
        let s = crate::stats::std_dev(&diffs);
        let expected = (2.0 * n).sqrt();
        let se = crate::stats::std_dev_err(expected, diffs.len());
        assert!((s - expected).abs() < 4.0 * se, "std = {s}, expected = {expected}");
    }

    #[test]
    fn contrast_estimator_recovers_configured_contrast() {
        let plan = SimulationPlan::new(test_cfg(), 1500, 3000, 15);
        let records = simulate_experiment(&plan).unwrap();
        let n: f64 = 2.0 * 1500.0;
        let mean_ab: f64 = records
            .iter()
            .map(|r| (r.a + r.b) as f64)
            .sum::<f64>()
            / records.len() as f64;
        let c_est = 2.0 - mean_ab / n;
        assert!((c_est - 0.15).abs() < 0.01, "c_est = {c_est}");
    }

    #[test]
    fn polarized_init_shifts_signal_mean() {
        let mut plan = SimulationPlan::new(test_cfg(), 800, 2000, 3);
        plan.telegraph = TelegraphModel::Frozen;
        plan.init = InitState::Polarized { p0: 1.0 };
        let records = simulate_experiment(&plan).unwrap();
        let n: f64 = 2.0 * 800.0;
        let mean_sig = crate::stats::mean(
            &records.iter().map(|r| r.signal() as f64).collect::<Vec<_>>(),
        );
        // Fully polarized: mean(b - a) = n c.
        assert_relative_eq!(mean_sig, n * 0.15, max_relative = 0.03);
    }

    #[test]
    fn t1_sequence_follows_analytic_polarization() {
        // Decay visible within the simulated window: m_t1 = 500 repetitions.
        let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 2.0, 1000.0, 1.0).unwrap();
        let plan = SimulationPlan::new(cfg, 1, 3000, 2024);
        let m_grid = [1u32, 100, 250, 500, 1000, 2500];
        let points = run_t1_sequence(&plan, Level::Up, &m_grid).unwrap();
        for pt in &points {
            let expected = polarization_under_readout(1.0, pt.m as f64, 500.0).unwrap();
            assert!(
                (pt.p_obs - expected).abs() < 3.0 * pt.p_err,
                "m = {}: got {} +- {}, expected {expected}",
                pt.m,
                pt.p_obs,
                pt.p_err
            );
        }
    }

    #[test]
    fn t1_sequence_from_zero_level_starts_negative() {
        let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 2.0, 1e9, 1.0).unwrap();
        let plan = SimulationPlan::new(cfg, 1, 1500, 5);
        let points = run_t1_sequence(&plan, Level::Zero, &[1u32]).unwrap();
        assert!(
            (points[0].p_obs + 1.0).abs() < 4.0 * points[0].p_err.max(0.05),
            "p_obs = {}",
            points[0].p_obs
        );
    }

    #[test]
    fn rabi_sequence_mean_and_width_pattern() {
        let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 3.0, 1e9, 0.9).unwrap();
        let mut plan = SimulationPlan::new(cfg, 1000, 1500, 88);
        plan.init = InitState::Polarized { p0: 0.9 };
        plan.telegraph = TelegraphModel::Frozen;
        let angles = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI];
        let points = run_rabi_sequence(&plan, &angles, &RabiSettings::default()).unwrap();
        // Binned mean is P(up) - 1/2 with P(up) = u cos^2 + z sin^2 for the
        // prepared distribution u = 0.95, z = w = 0.025.
        let (u, z) = (0.95, 0.025);
        for (pt, &angle) in points.iter().zip(&angles) {
            let c2 = (0.5f64 * angle).cos().powi(2);
            let expected = u * c2 + z * (1.0 - c2) - 0.5;
            assert!(
                (pt.mean_jz - expected).abs() < 4.0 * pt.mean_jz_err,
                "angle {angle}: mean = {}, expected = {expected}",
                pt.mean_jz
            );
        }
        // Projection width peaks mid-rotation.
        assert!(points[1].sigma_jz > points[0].sigma_jz);
        assert!(points[1].sigma_jz > points[2].sigma_jz);
        // Binomial width at the midpoint: sigma = sqrt(p(1-p)/N).
        let p_mid: f64 = 0.5 * (u + z);
        let binom = (p_mid * (1.0 - p_mid) / 31.0).sqrt();
        assert_relative_eq!(points[1].sigma_jz, binom, max_relative = 0.1);
    }

    #[test]
    fn rabi_partial_active_fraction_limits_inversion() {
        let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 3.0, 1e9, 1.0).unwrap();
        let mut plan = SimulationPlan::new(cfg, 1000, 1200, 17);
        plan.init = InitState::Polarized { p0: 1.0 };
        plan.telegraph = TelegraphModel::Frozen;
        let settings = RabiSettings {
            active_fraction: 0.8,
            bins: 21,
        };
        let points = run_rabi_sequence(&plan, &[std::f64::consts::PI], &settings).unwrap();
        // Inversion stops at p = 1 - 2 * active_fraction = -0.6, mean -0.3.
        assert!((points[0].mean_jz + 0.3).abs() < 0.03, "mean = {}", points[0].mean_jz);
    }

    #[test]
    fn per_level_lifetimes_raise_width_at_inversion() {
        // Up and down are effectively stable while zero decays within the
        // window, so the width at full inversion (population parked in zero)
        // far exceeds the width with the population parked in up.
        let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 2.0, 1e9, 1.0).unwrap();
        let mut plan = SimulationPlan::new(cfg, 4000, 1500, 321);
        plan.init = InitState::Polarized { p0: 1.0 };
        plan.telegraph = TelegraphModel::PerLevel {
            m_t1: [1e12, 2000.0, 1e12],
        };
        let points =
            run_rabi_sequence(&plan, &[0.0, std::f64::consts::PI], &RabiSettings::default())
                .unwrap();
        assert!(
            points[1].sigma_jz > 3.0 * points[0].sigma_jz,
            "sigma(pi) = {} vs sigma(0) = {}",
            points[1].sigma_jz,
            points[0].sigma_jz
        );
    }

    #[test]
    fn plan_validation() {
        let mut plan = SimulationPlan::new(test_cfg(), 0, 10, 1);
        assert!(plan.validate().is_err());
        plan.m = 10;
        plan.shots = 0;
        assert!(plan.validate().is_err());
        plan.shots = 10;
        assert!(plan.validate().is_ok());
        plan.init = InitState::Distribution {
            probs: [0.5, 0.2, 0.2],
        };
        assert!(plan.validate().is_err());
    }

    #[test]
    fn init_state_polarizations() {
        assert_relative_eq!(
            InitState::Thermal.polarization(SpinSpecies::One).unwrap(),
            -1.0 / 3.0
        );
        assert_relative_eq!(
            InitState::Polarized { p0: 0.6 }
                .polarization(SpinSpecies::One)
                .unwrap(),
            0.6,
            max_relative = 1e-12
        );
        let lvl = InitState::Level {
            level: Level::Zero,
            fidelity: 1.0,
        };
        assert_relative_eq!(lvl.polarization(SpinSpecies::One).unwrap(), -1.0);
    }
}
