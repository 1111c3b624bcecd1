//! Sensitivity of conventional versus repetitive readout schemes.
//!
//! Both schemes measure a field through the phase accumulated during a
//! sensing window `tau_sens`; they differ in how the spin state is read out
//! afterwards. The conventional scheme reads the electron once with low
//! contrast and photon-shot-noise-dominated counts; the repetitive scheme
//! maps the state onto the nitrogen spin and reads it `m` times, trading
//! overhead and contrast decay for a noise level that can reach the spin
//! projection limit. Sensitivities are reported in tesla per root hertz.
//!
//! All durations are in microseconds; conversions to seconds happen inside
//! the formulas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Repetition dependence of the effective contrast `c_eff = 2 c D(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DecayConvention {
    /// `D(m) = (m_T1 / m)(1 - exp(-m / m_T1))`: the running time average of
    /// an exponentially decaying polarization, bounded in (0, 1].
    #[default]
    TimeAveraged,
    /// `D(m) = (m / m_T1)(1 - exp(-m / m_T1))`: grows without bound and is
    /// kept only for comparison with the time-averaged convention.
    LinearGrowth,
}

/// Timing and signal parameters of the two readout schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParams {
    /// Conventional single-readout duration (us).
    pub tau_r: f64,
    /// Per-repetition readout duration in the repetitive scheme (us).
    pub tau_r_rep: f64,
    /// Nuclear initialization time (us).
    pub tau_init: f64,
    /// Electron-to-nucleus mapping gate time (us).
    pub tau_rf: f64,
    /// Squeezed-state preparation time (us), added only when squeezing is
    /// requested.
    pub tau_sq: f64,
    /// Baseline photons per readout repetition per emitter.
    pub n1_per_nv: f64,
    /// Optical readout contrast.
    pub c: f64,
    /// Polarization decay constant in repetitions.
    pub m_t1: f64,
    /// Emitter count.
    pub n_nv: u32,
    /// Gyromagnetic ratio in Hz/T.
    pub gamma_e: f64,
    pub decay_convention: DecayConvention,
}

impl Default for SensitivityParams {
    fn default() -> Self {
        SensitivityParams {
            tau_r: 1.0,
            tau_r_rep: 7.5,
            tau_init: 5236.0,
            tau_rf: 600.0,
            tau_sq: 3.0,
            n1_per_nv: 0.036,
            c: 0.15,
            m_t1: 50_000.0,
            n_nv: 100,
            gamma_e: 28.04e9,
            decay_convention: DecayConvention::TimeAveraged,
        }
    }
}

impl SensitivityParams {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            self.tau_r,
            self.tau_r_rep,
            self.tau_init,
            self.tau_rf,
            self.tau_sq,
        ];
        if durations.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("durations must be finite and nonnegative"));
        }
        if !(self.n1_per_nv > 0.0) {
            return Err(Error::invalid("n1_per_nv must be positive"));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::invalid("contrast must lie in (0, 1)"));
        }
        if !(self.m_t1 > 0.0) {
            return Err(Error::invalid("m_t1 must be positive"));
        }
        if self.n_nv == 0 {
            return Err(Error::invalid("n_nv must be at least 1"));
        }
        if !(self.gamma_e > 0.0) {
            return Err(Error::invalid("gamma_e must be positive"));
        }
        Ok(())
    }

    /// Total baseline photons per repetition.
    pub fn n1(&self) -> f64 {
        self.n1_per_nv * self.n_nv as f64
    }

    /// Projection noise of the equatorial sensing state, per-spin units.
    pub fn sigma_proj(&self) -> f64 {
        (0.5 / self.n_nv as f64).sqrt()
    }

    fn decay(&self, m: f64) -> f64 {
        let x = m / self.m_t1;
        let d = -(-x).exp_m1();
        match self.decay_convention {
            DecayConvention::TimeAveraged => d / x,
            DecayConvention::LinearGrowth => d * x,
        }
    }

    /// Effective contrast of the repetitive readout after `m` repetitions.
    pub fn effective_contrast(&self, m: u32) -> f64 {
        2.0 * self.c * self.decay(m as f64)
    }
}

/// Projection-noise reduction from a squeezed sensing state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSpec {
    /// Squeezing parameter in dB.
    pub xi_sq_db: f64,
    /// Multiplier applied to the projection-noise amplitude, in (0, 1].
    pub amplitude_factor: f64,
}

impl SqueezingSpec {
    /// Standard decibel-on-sigma convention: `amplitude = 10^(-dB / 20)`.
    pub fn from_db(xi_sq_db: f64) -> Result<Self> {
        if !(xi_sq_db.is_finite() && xi_sq_db >= 0.0) {
            return Err(Error::invalid("squeezing dB must be finite and nonnegative"));
        }
        Ok(SqueezingSpec {
            xi_sq_db,
            amplitude_factor: 10f64.powf(-xi_sq_db / 20.0),
        })
    }

    /// Alternative reading where the exponent is used directly:
    /// `amplitude = 10^(-xi)`.
    pub fn literal_exponent(xi: f64) -> Result<Self> {
        SqueezingSpec::from_db(20.0 * xi)
    }
}

fn seconds(us: f64) -> f64 {
    1e-6 * us
}

/// Sensitivity of the conventional single readout:
/// `eta = sigma / (2 pi gamma c n1 sqrt(tau)) * duty` with `sigma = sqrt(n1)`
/// and the duty factor `sqrt((tau + tau_r) / tau)`.
pub fn eta_conventional(params: &SensitivityParams, tau_sens: f64) -> Result<f64> {
    params.validate()?;
    if !(tau_sens > 0.0 && tau_sens.is_finite()) {
        return Err(Error::invalid("tau_sens must be positive"));
    }
    let tau = seconds(tau_sens);
    let n1 = params.n1();
    let duty = ((tau + seconds(params.tau_r)) / tau).sqrt();
    Ok(n1.sqrt() / (2.0 * PI * params.gamma_e * params.c * n1 * tau.sqrt()) * duty)
}

fn eta_repetitive_continuous(
    params: &SensitivityParams,
    tau_sens: f64,
    m: f64,
    squeezing: Option<&SqueezingSpec>,
) -> f64 {
    let tau = seconds(tau_sens);
    let n1 = params.n1();
    let c_eff = 2.0 * params.c * params.decay(m);
    let amp = squeezing.map_or(1.0, |s| s.amplitude_factor);
    let proj = c_eff * n1 * m * params.sigma_proj() * amp;
    let sigma = (2.0 * n1 * m + proj * proj).sqrt();
    let overhead = params.tau_init
        + params.tau_rf
        + m * params.tau_r_rep
        + if squeezing.is_some() { params.tau_sq } else { 0.0 };
    let duty = ((tau + seconds(overhead)) / tau).sqrt();
    sigma / (2.0 * PI * params.gamma_e * c_eff * n1 * m * tau.sqrt()) * duty
}

/// Sensitivity of the repetitive readout after `m` repetitions, optionally
/// with a squeezed sensing state (which also adds the preparation time to
/// the overhead).
pub fn eta_repetitive(
    params: &SensitivityParams,
    tau_sens: f64,
    m: u32,
    squeezing: Option<&SqueezingSpec>,
) -> Result<f64> {
    params.validate()?;
    if !(tau_sens > 0.0 && tau_sens.is_finite()) {
        return Err(Error::invalid("tau_sens must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    if let Some(s) = squeezing {
        if !(s.amplitude_factor > 0.0 && s.amplitude_factor <= 1.0) {
            return Err(Error::invalid("amplitude_factor must lie in (0, 1]"));
        }
    }
    Ok(eta_repetitive_continuous(params, tau_sens, m as f64, squeezing))
}

const M_SEARCH_FACTOR: f64 = 10.0;

/// Repetition count minimizing `eta_repetitive` over `[1, 10 m_T1]`:
/// golden-section search on the continuous relaxation in log-m, then an
/// integer scan around the continuous optimum. Returns `(m, eta)`.
pub fn optimize_repetitions(
    params: &SensitivityParams,
    tau_sens: f64,
    squeezing: Option<&SqueezingSpec>,
) -> Result<(u32, f64)> {
    eta_repetitive(params, tau_sens, 1, squeezing)?;
    let upper = (M_SEARCH_FACTOR * params.m_t1).max(2.0);
    let eta_log = |x: f64| eta_repetitive_continuous(params, tau_sens, x.exp(), squeezing);
    let (mut lo, mut hi) = (0.0f64, upper.ln());
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eta_log(x1), eta_log(x2));
    for _ in 0..120 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eta_log(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eta_log(x2);
        }
    }
    let m_continuous = (0.5 * (lo + hi)).exp();
    let scan_lo = ((0.8 * m_continuous).floor() as u64).max(1);
    let scan_hi = ((1.25 * m_continuous).ceil() as u64).min(upper as u64).max(scan_lo + 1);
    let mut best = (scan_lo as u32, f64::INFINITY);
    for m in scan_lo..=scan_hi {
        let eta = eta_repetitive_continuous(params, tau_sens, m as f64, squeezing);
        if eta < best.1 {
            best = (m as u32, eta);
        }
    }
    Ok(best)
}

/// One cell of the scheme-comparison map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub tau_sens: f64,
    pub m: u32,
    pub eta_conv: f64,
    pub eta_rep: f64,
    /// `eta_conv / eta_rep`; values above 1 mark the repetitive advantage.
    pub ratio: f64,
}

/// Evaluate both schemes over the cartesian grid `tau_grid x m_grid`,
/// row-major in `tau_sens`.
pub fn sensitivity_map(
    params: &SensitivityParams,
    tau_grid: &[f64],
    m_grid: &[u32],
    squeezing: Option<&SqueezingSpec>,
) -> Result<Vec<MapCell>> {
    if tau_grid.is_empty() || m_grid.is_empty() {
        return Err(Error::data("sensitivity map grids must be nonempty"));
    }
    for &tau in tau_grid {
        eta_conventional(params, tau)?;
    }
    for &m in m_grid {
        if m == 0 {
            return Err(Error::invalid("m grid entries must be at least 1"));
        }
    }
    let cells: Vec<(f64, u32)> = tau_grid
        .iter()
        .flat_map(|&tau| m_grid.iter().map(move |&m| (tau, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(tau_sens, m)| {
            let eta_conv = eta_conventional(params, tau_sens)?;
            let eta_rep = eta_repetitive(params, tau_sens, m, squeezing)?;
            Ok(MapCell {
                tau_sens,
                m,
                eta_conv,
                eta_rep,
                ratio: eta_conv / eta_rep,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn conventional_reference_value() {
        let p = SensitivityParams::default();
        assert_relative_eq!(p.n1(), 3.6, epsilon = 1e-12);
        let eta = eta_conventional(&p, 1000.0).unwrap();
        assert_relative_eq!(eta, 6.309815e-10, max_relative = 1e-5);
    }

    #[test]
    fn conventional_scalings() {
        let p = SensitivityParams::default();
        // Duty factor drops out for long sensing windows.
        let limit = 1.0 / (2.0 * PI * p.gamma_e * p.c * p.n1().sqrt());
        let eta = eta_conventional(&p, 1e9).unwrap();
        assert_relative_eq!(eta * seconds(1e9).sqrt(), limit, max_relative = 1e-6);

        // sigma = sqrt(n1), so doubling n1 improves eta by sqrt(2).
        let mut doubled = p;
        doubled.n1_per_nv *= 2.0;
        let ratio = eta_conventional(&doubled, 50.0).unwrap() / eta_conventional(&p, 50.0).unwrap();
        assert_relative_eq!(ratio, 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn single_repetition_loses_at_short_sensing_times() {
        let p = SensitivityParams::default();
        let conv = eta_conventional(&p, 1.0).unwrap();
        let rep = eta_repetitive(&p, 1.0, 1, None).unwrap();
        assert!(rep > 10.0 * conv, "rep {rep} conv {conv}");
    }

    #[test]
    fn repetitive_reference_values() {
        let p = SensitivityParams::default();
        let (m_star, eta_star) = optimize_repetitions(&p, 1e4, None).unwrap();
        assert_eq!(m_star, 1594);
        assert_relative_eq!(eta_star, 8.975504e-12, max_relative = 1e-5);

        let ratio_2700 =
            eta_conventional(&p, 1e5).unwrap() / eta_repetitive(&p, 1e5, 2700, None).unwrap();
        assert_relative_eq!(ratio_2700, 36.345, max_relative = 1e-3);
        let (_, eta_opt) = optimize_repetitions(&p, 1e5, None).unwrap();
        let ratio_opt = eta_conventional(&p, 1e5).unwrap() / eta_opt;
        assert_relative_eq!(ratio_opt, 36.914, max_relative = 1e-3);
        assert!(ratio_opt > 10.0);
    }

    #[test]
    fn breakeven_sensing_time() {
        let p = SensitivityParams::default();
        let gap = |tau: f64| {
            let (_, eta) = optimize_repetitions(&p, tau, None).unwrap();
            eta - eta_conventional(&p, tau).unwrap()
        };
        let (mut lo, mut hi) = (2.0f64, 100.0f64);
        assert!(gap(lo) > 0.0 && gap(hi) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let breakeven = 0.5 * (lo + hi);
        assert_relative_eq!(breakeven, 11.211, max_relative = 1e-2);
        assert!((7.5..=30.0).contains(&breakeven));
    }

    #[test]
    fn eta_is_unimodal_in_repetitions() {
        let p = SensitivityParams::default();
        for tau in [10.0, 100.0, 1e3, 1e4, 1e5] {
            let ms: Vec<u32> = (0..100)
                .map(|i| {
                    let x = (5e5f64.ln()) * i as f64 / 99.0;
                    (x.exp().round() as u32).max(1)
                })
                .collect();
            let etas: Vec<f64> = ms
                .iter()
                .map(|&m| eta_repetitive(&p, tau, m, None).unwrap())
                .collect();
            let mut sign_changes = 0;
            let mut last = 0i32;
            for w in etas.windows(2) {
                let s = if w[1] > w[0] {
                    1
                } else if w[1] < w[0] {
                    -1
                } else {
                    0
                };
                if s != 0 {
                    if last != 0 && s != last {
                        sign_changes += 1;
                    }
                    last = s;
                }
            }
            assert!(sign_changes <= 1, "tau {tau}: {sign_changes} sign changes");
        }
    }

    #[test]
    fn squeezing_monotonically_helps_at_fixed_m() {
        let p = SensitivityParams::default();
        let mut last = f64::INFINITY;
        for db in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let s = SqueezingSpec::from_db(db).unwrap();
            let eta = eta_repetitive(&p, 1e4, 2000, Some(&s)).unwrap();
            assert!(eta <= last, "{db} dB should not hurt");
            last = eta;
        }
    }

    #[test]
    fn squeezing_shifts_optimum_to_more_repetitions() {
        // A smaller projection term keeps extra repetitions worthwhile, so
        // the optimum moves up with squeezing.
        let p = SensitivityParams::default();
        let (m0, _) = optimize_repetitions(&p, 1e4, None).unwrap();
        let s = SqueezingSpec::from_db(4.0).unwrap();
        let (m4, _) = optimize_repetitions(&p, 1e4, Some(&s)).unwrap();
        assert_eq!(m0, 1594);
        assert_eq!(m4, 2479);
        assert!(m4 > m0);
    }

    #[test]
    fn mild_squeezing_changes_little() {
        let p = SensitivityParams::default();
        let (_, eta0) = optimize_repetitions(&p, 1e4, None).unwrap();
        let s = SqueezingSpec::from_db(0.5).unwrap();
        let (_, eta_s) = optimize_repetitions(&p, 1e4, Some(&s)).unwrap();
        let improvement = 1.0 - eta_s / eta0;
        assert!(improvement > 0.0);
        assert_relative_eq!(improvement, 0.0310, epsilon = 2e-3);
        assert!(improvement < 0.06);
    }

    #[test]
    fn squeezing_spec_conventions() {
        let s = SqueezingSpec::from_db(4.0).unwrap();
        assert_relative_eq!(s.amplitude_factor, 10f64.powf(-0.2), epsilon = 1e-12);
        let lit = SqueezingSpec::literal_exponent(0.2).unwrap();
        assert_relative_eq!(lit.amplitude_factor, 10f64.powf(-0.2), epsilon = 1e-12);
        assert!(SqueezingSpec::from_db(-1.0).is_err());
    }

    #[test]
    fn decay_conventions_differ_beyond_m_t1() {
        let avg = SensitivityParams::default();
        let lit = SensitivityParams {
            decay_convention: DecayConvention::LinearGrowth,
            ..avg
        };
        assert_relative_eq!(
            eta_repetitive(&avg, 1e5, 200_000, None).unwrap(),
            5.3403e-12,
            max_relative = 1e-4
        );
        assert_relative_eq!(
            eta_repetitive(&lit, 1e5, 200_000, None).unwrap(),
            5.0870e-12,
            max_relative = 1e-4
        );
        // The conventions coincide exactly at m = m_T1.
        let m_eq = avg.m_t1 as u32;
        let r = eta_repetitive(&lit, 1e3, m_eq, None).unwrap()
            / eta_repetitive(&avg, 1e3, m_eq, None).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn map_marks_advantage_region() {
        let p = SensitivityParams::default();
        let taus = [1.0, 1e5];
        let ms = [1u32, 10, 100, 1000, 2700, 10_000, 100_000, 500_000];
        let map = sensitivity_map(&p, &taus, &ms, None).unwrap();
        assert_eq!(map.len(), taus.len() * ms.len());
        for cell in &map[..ms.len()] {
            assert!(cell.ratio < 1.0, "conventional should win at 1 us");
            assert!(cell.eta_conv > 0.0 && cell.eta_rep > 0.0);
        }
        let long: Vec<&MapCell> = map[ms.len()..].iter().collect();
        let at_2700 = long.iter().find(|c| c.m == 2700).unwrap();
        assert!(at_2700.ratio > 10.0);
        // Contrast decay wins at very large m: the advantage shrinks again.
        let at_tail = long.iter().find(|c| c.m == 500_000).unwrap();
        assert!(at_tail.ratio < at_2700.ratio);
    }

    #[test]
    fn asymptotic_scaling_in_sensing_time() {
        let p = SensitivityParams::default();
        let m = 1000u32;
        let overhead = p.tau_init + p.tau_rf + m as f64 * p.tau_r_rep;
        let tau = 1e4 * overhead;
        let a = eta_repetitive(&p, tau, m, None).unwrap() * seconds(tau).sqrt();
        let b = eta_repetitive(&p, 1e4 * tau, m, None).unwrap() * seconds(1e4 * tau).sqrt();
        assert!((a / b - 1.0).abs() < 0.01);
    }

    #[test]
    fn rejects_invalid_input() {
        let p = SensitivityParams::default();
        assert!(eta_conventional(&p, 0.0).is_err());
        assert!(eta_repetitive(&p, 10.0, 0, None).is_err());
        assert!(sensitivity_map(&p, &[], &[1], None).is_err());
        assert!(sensitivity_map(&p, &[10.0], &[0], None).is_err());
        let bad = SensitivityParams {
            c: 1.5,
            ..SensitivityParams::default()
        };
        assert!(eta_conventional(&bad, 10.0).is_err());
    }
}
