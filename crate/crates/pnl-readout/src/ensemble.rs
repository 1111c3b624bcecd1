//! Closed-form statistics of a finite spin ensemble read out through a
//! two-window photon-counting chain.
//!
//! The ensemble is a set of `n_nv` identical nuclear spins. Readout bins the
//! spin levels into a pseudo-spin-1/2: for spin 1 the upper level counts as
//! "up" and the two remaining levels count as "down", so the per-spin
//! observable spans [-1/2, +1/2]. All widths here are normalized per spin,
//! i.e. they refer to `J~z = (1/N) sum_i j_z,i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin quantum number of the species being read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinSpecies {
    /// I = 1/2, two levels, binning is trivial.
    Half,
    /// I = 1, three levels, two of which are binned together.
    One,
}

impl SpinSpecies {
    pub fn spin(self) -> f64 {
        match self {
            SpinSpecies::Half => 0.5,
            SpinSpecies::One => 1.0,
        }
    }

    pub fn multiplicity(self) -> usize {
        match self {
            SpinSpecies::Half => 2,
            SpinSpecies::One => 3,
        }
    }

    /// Pseudo-spin steady-state polarization of the fully mixed state.
    ///
    /// For spin 1 one level out of three is "up": p_ss = 1/3 - 2/3 = -1/3.
    /// For spin 1/2 the mixed state is balanced.
    pub fn steady_state_polarization(self) -> f64 {
        match self {
            SpinSpecies::Half => 0.0,
            SpinSpecies::One => -1.0 / 3.0,
        }
    }
}

/// Static description of one readout configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Number of spins contributing to the signal.
    pub n_nv: u32,
    pub species: SpinSpecies,
    /// Optical readout contrast c in (0, 1).
    pub contrast: f64,
    /// Baseline photon count per readout repetition (whole ensemble).
    pub photons_per_unit: f64,
    /// Characteristic polarization decay expressed in accumulated baseline
    /// counts; the readout duration T below is measured in the same units.
    pub decay_counts: f64,
    /// Initial pseudo-spin polarization, in [-1, 1].
    pub p0: f64,
}

impl EnsembleConfig {
    pub fn new(
        n_nv: u32,
        species: SpinSpecies,
        contrast: f64,
        photons_per_unit: f64,
        decay_counts: f64,
        p0: f64,
    ) -> Result<Self> {
        if n_nv == 0 {
            return Err(Error::invalid("n_nv must be at least 1"));
        }
        if !(contrast > 0.0 && contrast < 1.0) {
            return Err(Error::invalid(format!(
                "contrast must lie in (0, 1), got {contrast}"
            )));
        }
        if !(photons_per_unit > 0.0) {
            return Err(Error::invalid(format!(
                "photons_per_unit must be positive, got {photons_per_unit}"
            )));
        }
        if !(decay_counts > 0.0) {
            return Err(Error::invalid(format!(
                "decay_counts must be positive, got {decay_counts}"
            )));
        }
        if !(-1.0..=1.0).contains(&p0) {
            return Err(Error::invalid(format!("p0 must lie in [-1, 1], got {p0}")));
        }
        Ok(EnsembleConfig {
            n_nv,
            species,
            contrast,
            photons_per_unit,
            decay_counts,
            p0,
        })
    }

    /// Thermal width of the full (unbinned) per-spin observable.
    pub fn thermal_sigma0(&self) -> f64 {
        thermal_sigma0(self.species, self.n_nv)
    }

    /// Projection-noise width of the time-averaged binned observable after a
    /// readout of duration `t` (accumulated counts).
    pub fn projection_noise(&self, t: f64) -> Result<f64> {
        projection_noise(self, t)
    }

    /// Same as [`projection_noise`] but for the collective observable
    /// `sum_i j_z,i` instead of the per-spin average.
    pub fn collective_projection_noise(&self, t: f64) -> Result<f64> {
        Ok(self.projection_noise(t)? * self.n_nv as f64)
    }
}

/// Polarization bookkeeping for repetitive readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    /// Current pseudo-spin polarization.
    pub p: f64,
    /// Steady-state polarization the readout relaxes toward.
    pub p_ss: f64,
}

impl PolarizationState {
    pub fn new(p: f64, species: SpinSpecies) -> Self {
        PolarizationState {
            p,
            p_ss: species.steady_state_polarization(),
        }
    }
}

/// Exponential autocorrelation of the time-fluctuating collective spin,
/// `C(tau) = sigma0^2 exp(-|tau|/t1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFunction {
    pub sigma0_sq: f64,
    pub t1: f64,
}

impl CorrelationFunction {
    pub fn new(sigma0_sq: f64, t1: f64) -> Result<Self> {
        if !(sigma0_sq >= 0.0) {
            return Err(Error::invalid("sigma0_sq must be non-negative"));
        }
        if !(t1 > 0.0) {
            return Err(Error::invalid("t1 must be positive"));
        }
        Ok(CorrelationFunction { sigma0_sq, t1 })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.sigma0_sq * (-tau.abs() / self.t1).exp()
    }
}

/// Which bracket enters the time-averaging variance reduction.
///
/// `Standard` is the form consistent with integrating the exponential
/// correlation function twice; `Legacy` keeps an older published variant
/// whose bracket reads `2T/T1 + exp(-T/T1) - 1` and which exceeds 1 for
/// small `T/T1`. It is retained only for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DecayForm {
    #[default]
    Standard,
    Legacy,
}

/// Thermal per-spin width of the unbinned observable,
/// `sqrt(I(I+1) / (3 N))`.
pub fn thermal_sigma0(species: SpinSpecies, n_nv: u32) -> f64 {
    let i = species.spin();
    (i * (i + 1.0) / (3.0 * n_nv as f64)).sqrt()
}

/// Width reduction from binning the levels into a pseudo-spin-1/2.
///
/// For spin 1 the binned per-spin variance is 2/9 = (1/3) * I(I+1)/3, so the
/// width shrinks by sqrt(1/3). Spin 1/2 is unaffected.
pub fn binning_factor(species: SpinSpecies) -> f64 {
    match species {
        SpinSpecies::Half => 1.0,
        SpinSpecies::One => (1.0f64 / 3.0).sqrt(),
    }
}

/// Variance reduction of a time-averaged telegraph signal.
///
/// Averaging a signal with correlation `C(tau) = sigma^2 exp(-tau/t1)` over a
/// window `t` shrinks its standard deviation by
/// `sqrt((2 t1^2 / t^2) (t/t1 + exp(-t/t1) - 1))`. The factor tends to 1 as
/// `t -> 0` and to `sqrt(2 t1 / t)` for `t >> t1`.
pub fn decay_factor(t: f64, t1: f64) -> Result<f64> {
    decay_factor_with(t, t1, DecayForm::Standard)
}

pub fn decay_factor_with(t: f64, t1: f64, form: DecayForm) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("readout duration must be >= 0, got {t}")));
    }
    if !(t1 > 0.0) {
        return Err(Error::invalid(format!("t1 must be positive, got {t1}")));
    }
    let x = t / t1;
    match form {
        DecayForm::Standard => {
            if x == 0.0 {
                return Ok(1.0);
            }
            let sq = if x < 0.01 {
                // Series of 2(x + e^-x - 1)/x^2; direct evaluation cancels.
                1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0 + x * x * x * x / 360.0
            } else {
                2.0 * (x + (-x).exp_m1()) / (x * x)
            };
            Ok(sq.sqrt())
        }
        DecayForm::Legacy => {
            if x == 0.0 {
                // The legacy bracket diverges as t -> 0; report it.
                return Err(Error::numerical(
                    "legacy decay form is singular at t = 0".to_string(),
                ));
            }
            let sq = 2.0 / (x * x) * (2.0 * x + (-x).exp() - 1.0);
            Ok(sq.sqrt())
        }
    }
}

/// Projection-noise width of the binned, time-averaged thermal ensemble.
pub fn projection_noise(cfg: &EnsembleConfig, t: f64) -> Result<f64> {
    Ok(binning_factor(cfg.species)
        * thermal_sigma0(cfg.species, cfg.n_nv)
        * decay_factor(t, cfg.decay_counts)?)
}

/// Whether a statistic refers to the instantaneous end-of-window value or to
/// the average over the readout window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Averaging {
    Instantaneous,
    TimeAveraged,
}

/// First two moments of the per-spin observable of a polarized, relaxing
/// ensemble (unbinned levels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinReadoutStats {
    pub expectation: f64,
    pub sigma: f64,
}

/// Mean and width of `J~z` for initial polarization `p`, readout duration
/// `t`, and relaxation constant `t1`.
///
/// Instantaneous: `<J~z> = p I exp(-t/t1)`,
/// `sigma = sigma0 sqrt(1 - (p exp(-t/t1))^2)`.
///
/// Time-averaged: `<J~z> = p I d(t)` with `d(t) = (t1/t)(1 - exp(-t/t1))`,
/// `sigma = sigma0 sqrt(decay_factor(t)^2 - (p d(t))^2)`. At `t = 0` the
/// analytic limits (no averaging yet) are used.
pub fn table1_statistics(
    species: SpinSpecies,
    n_nv: u32,
    p: f64,
    t: f64,
    t1: f64,
    averaging: Averaging,
) -> Result<SpinReadoutStats> {
    if n_nv == 0 {
        return Err(Error::invalid("n_nv must be at least 1"));
    }
    if !(-1.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p must lie in [-1, 1], got {p}")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t must be >= 0"));
    }
    if !(t1 > 0.0) {
        return Err(Error::invalid("t1 must be positive"));
    }
    let i = species.spin();
    let sigma0 = thermal_sigma0(species, n_nv);
    let x = t / t1;
    match averaging {
        Averaging::Instantaneous => {
            let e = (-x).exp();
            let expectation = p * i * e;
            let sigma = sigma0 * (1.0 - (p * e).powi(2)).max(0.0).sqrt();
            Ok(SpinReadoutStats { expectation, sigma })
        }
        Averaging::TimeAveraged => {
            let d = averaged_decay(x);
            let expectation = p * i * d;
            let decay = decay_factor(t, t1)?;
            let sigma = sigma0 * (decay * decay - (p * d).powi(2)).max(0.0).sqrt();
            Ok(SpinReadoutStats { expectation, sigma })
        }
    }
}

/// Window average of `exp(-t/t1)`: `(t1/t)(1 - exp(-t/t1))`, with the `t -> 0`
/// limit of 1.
pub fn averaged_decay(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x < 1e-4 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Polarization observed by a readout of `m` repetitions when the spin
/// relaxes toward `p_ss = -1/3` with characteristic repetition count `m_t1`.
///
/// This is the window average of `p_ss + (p0 - p_ss) exp(-m/m_t1)`.
pub fn polarization_under_readout(p0: f64, m: f64, m_t1: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&p0) {
        return Err(Error::invalid(format!("p0 must lie in [-1, 1], got {p0}")));
    }
    if !(m >= 0.0) {
        return Err(Error::invalid("m must be >= 0"));
    }
    if !(m_t1 > 0.0) {
        return Err(Error::invalid("m_t1 must be positive"));
    }
    let p_ss = SpinSpecies::One.steady_state_polarization();
    Ok(p_ss + (p0 - p_ss) * averaged_decay(m / m_t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Quadrature oracle for the time-averaged variance:
    /// Var = (2/T^2) Int_0^T (T - tau) exp(-tau/t1) dtau, via Simpson's rule.
    fn decay_factor_quadrature(t: f64, t1: f64) -> f64 {
        // The integrand is negligible past ~60 lifetimes; restricting the
        // domain keeps the Simpson nodes on the support at large t.
        let upper = t.min(60.0 * t1);
        let n = 20_000; // even
        let h = upper / n as f64;
        let f = |tau: f64| (t - tau) * (-tau / t1).exp();
        let mut acc = f(0.0) + f(upper);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(h * k as f64);
        }
        let integral = acc * h / 3.0;
        (2.0 / (t * t) * integral).sqrt()
    }

    #[test]
    fn thermal_sigma0_closed_forms() {
        // Single spin 1: sqrt(I(I+1)/3) = sqrt(2/3).
        assert_relative_eq!(
            thermal_sigma0(SpinSpecies::One, 1),
            (2.0f64 / 3.0).sqrt(),
            max_relative = 1e-12
        );
        // Spin 1/2, N = 4: sqrt((3/4)/12) = 0.25.
        assert_relative_eq!(thermal_sigma0(SpinSpecies::Half, 4), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn thermal_sigma0_matches_multinomial_monte_carlo() {
        // Oracle: 31 iid uniform three-level spins, empirical std of the mean
        // of j_z in {-1, 0, +1}.
        let mut rng = ChaCha8Rng::seed_from_u64(07111);
        let n_nv = 31usize;
        let draws = 400_000usize;
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for _ in 0..draws {
            let mut jz = 0i32;
            for _ in 0..n_nv {
                jz += rng.gen_range(-1..=1);
            }
            let v = jz as f64 / n_nv as f64;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / draws as f64;
        let var = sumsq / draws as f64 - mean * mean;
        let mc = var.sqrt();
        let analytic = thermal_sigma0(SpinSpecies::One, 31);
        // Frozen value 0.14664 and 4-standard-error MC agreement.
        assert!((analytic - 0.14664).abs() < 1e-5, "analytic = {analytic}");
        let se = mc / (2.0 * draws as f64).sqrt();
        assert!(
            (mc - analytic).abs() < 4.0 * se,
            "mc = {mc}, analytic = {analytic}, se = {se}"
        );
    }

    #[test]
    fn binned_variance_is_two_ninths() {
        // Binned thermal spin-1 per-spin variance: Bernoulli(1/3) on {+1/2, -1/2}.
        let per_spin_var =
            (binning_factor(SpinSpecies::One) * thermal_sigma0(SpinSpecies::One, 1)).powi(2);
        assert_relative_eq!(per_spin_var, 2.0 / 9.0, max_relative = 1e-12);

        // Bernoulli Monte Carlo oracle, 4 standard errors.
        let mut rng = ChaCha8Rng::seed_from_u64(2209);
        let draws = 1_000_000usize;
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for _ in 0..draws {
            let y: f64 = if rng.gen_range(0..3) == 0 { 0.5 } else { -0.5 };
            sum += y;
            sumsq += y * y;
        }
        let mean = sum / draws as f64;
        let var = sumsq / draws as f64 - mean * mean;
        let se = var * (2.0f64 / draws as f64).sqrt();
        assert!((var - 2.0 / 9.0).abs() < 4.0 * se, "var = {var}");
    }

    #[test]
    fn decay_factor_limits_and_frozen_values() {
        assert_eq!(decay_factor(0.0, 100.0).unwrap(), 1.0);
        // t = t1: sqrt(2/e), from the quadrature oracle.
        assert_relative_eq!(
            decay_factor(1.0, 1.0).unwrap(),
            0.857763884961,
            max_relative = 1e-10
        );
        // t = 10 t1, frozen from the quadrature oracle.
        assert_relative_eq!(
            decay_factor(10.0, 1.0).unwrap(),
            0.424265138797,
            max_relative = 1e-10
        );
        // Long-window asymptote sqrt(2 t1 / t).
        let f = decay_factor(1e6, 1.0).unwrap();
        assert_relative_eq!(f, (2.0f64 / 1e6).sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn decay_factor_matches_quadrature_over_six_decades() {
        for &x in &[1e-3, 3e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 1e2, 1e3] {
            let got = decay_factor(x, 1.0).unwrap();
            let want = decay_factor_quadrature(x, 1.0);
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn decay_factor_monotone_decreasing() {
        let mut prev = decay_factor(0.0, 1.0).unwrap();
        for k in 1..200 {
            let t = 1e-3 * (1.1f64).powi(k);
            let f = decay_factor(t, 1.0).unwrap();
            assert!(f < prev, "not monotone at t = {t}");
            prev = f;
        }
    }

    #[test]
    fn legacy_decay_form_differs_and_exceeds_standard() {
        let s = decay_factor_with(1.0, 1.0, DecayForm::Standard).unwrap();
        let l = decay_factor_with(1.0, 1.0, DecayForm::Legacy).unwrap();
        assert!(l > s);
        assert!(decay_factor_with(0.0, 1.0, DecayForm::Legacy).is_err());
    }

    #[test]
    fn projection_noise_frozen_values() {
        let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 1.0, 1e9, 1.0).unwrap();
        // Frozen: binning * sigma0 * 1 for N = 31.
        assert_relative_eq!(cfg.projection_noise(1e-9).unwrap(), 0.0846668, max_relative = 1e-4);
        let cfg = EnsembleConfig::new(170, SpinSpecies::One, 0.15, 1.0, 1e9, 1.0).unwrap();
        assert_relative_eq!(cfg.projection_noise(1e-9).unwrap(), 0.0361551, max_relative = 1e-4);
    }

    #[test]
    fn correlation_function_basics() {
        let c = CorrelationFunction::new(0.04, 2.0).unwrap();
        assert_relative_eq!(c.eval(0.0), 0.04);
        assert!(c.eval(1.0) < c.eval(0.5));
        assert!(c.eval(5.0) > 0.0);
        assert_relative_eq!(c.eval(-1.0), c.eval(1.0));
    }

    #[test]
    fn table1_instantaneous_points() {
        // Fully polarized at t = 0: mean = I, width 0.
        let s = table1_statistics(SpinSpecies::Half, 1, 1.0, 0.0, 1.0, Averaging::Instantaneous)
            .unwrap();
        assert_relative_eq!(s.expectation, 0.5);
        assert_relative_eq!(s.sigma, 0.0);
        // Unpolarized: thermal width at any t.
        let s = table1_statistics(SpinSpecies::Half, 100, 0.0, 3.0, 1.0, Averaging::Instantaneous)
            .unwrap();
        assert_relative_eq!(s.expectation, 0.0);
        assert_relative_eq!(s.sigma, thermal_sigma0(SpinSpecies::Half, 100));
    }

    #[test]
    fn table1_time_averaged_points() {
        // p = 0: width is the thermal width shrunk by the decay factor.
        let s = table1_statistics(SpinSpecies::Half, 100, 0.0, 2.0, 1.0, Averaging::TimeAveraged)
            .unwrap();
        assert_relative_eq!(
            s.sigma,
            thermal_sigma0(SpinSpecies::Half, 100) * decay_factor(2.0, 1.0).unwrap(),
            max_relative = 1e-12
        );
        // t -> 0 limit reproduces the instantaneous moments.
        let s = table1_statistics(SpinSpecies::Half, 10, 0.8, 0.0, 1.0, Averaging::TimeAveraged)
            .unwrap();
        assert_relative_eq!(s.expectation, 0.4);
        assert_relative_eq!(s.sigma, thermal_sigma0(SpinSpecies::Half, 10) * 0.6);
        // Mean decays from p*I toward zero as the window grows.
        let s1 = table1_statistics(SpinSpecies::Half, 10, 1.0, 1.0, 1.0, Averaging::TimeAveraged)
            .unwrap();
        let s2 = table1_statistics(SpinSpecies::Half, 10, 1.0, 20.0, 1.0, Averaging::TimeAveraged)
            .unwrap();
        assert!(s1.expectation > s2.expectation);
        assert!(s2.expectation > 0.0);
    }

    #[test]
    fn polarization_under_readout_limits() {
        // No decay: observed polarization equals the initial one.
        assert_relative_eq!(
            polarization_under_readout(1.0, 1e-9, 19_430.0).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            polarization_under_readout(0.4, 1e-9, 100.0).unwrap(),
            0.4,
            max_relative = 1e-9
        );
        // Deep decay: observed polarization approaches the steady state.
        let p = polarization_under_readout(1.0, 1e9, 100.0).unwrap();
        assert_relative_eq!(p, -1.0 / 3.0, epsilon = 1e-6);
        // Continuity across the series/expm1 switch at x = 1e-4.
        let a = polarization_under_readout(1.0, 1e-2 * (1.0 - 1e-9), 100.0).unwrap();
        let b = polarization_under_readout(1.0, 1e-2 * (1.0 + 1e-9), 100.0).unwrap();
        assert!((a - b).abs() < 1e-10, "a = {a}, b = {b}");
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::new(0, SpinSpecies::One, 0.15, 1.0, 1e6, 1.0).is_err());
        assert!(EnsembleConfig::new(31, SpinSpecies::One, 1.5, 1.0, 1e6, 1.0).is_err());
        assert!(EnsembleConfig::new(31, SpinSpecies::One, 0.15, -1.0, 1e6, 1.0).is_err());
        assert!(EnsembleConfig::new(31, SpinSpecies::One, 0.15, 1.0, 0.0, 1.0).is_err());
        assert!(EnsembleConfig::new(31, SpinSpecies::One, 0.15, 1.0, 1e6, 2.0).is_err());
        assert!(EnsembleConfig::new(31, SpinSpecies::One, 0.15, 1.0, 1e6, 1.0).is_ok());
    }

    #[test]
    fn steady_state_polarizations() {
        assert_relative_eq!(SpinSpecies::One.steady_state_polarization(), -1.0 / 3.0);
        assert_relative_eq!(SpinSpecies::Half.steady_state_polarization(), 0.0);
    }
}
