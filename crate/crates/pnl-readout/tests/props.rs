//! Property tests for the mechanical invariants: rotation matrices stay
//! orthogonal, distributions stay normalized, envelopes stay bounded.

use proptest::prelude::*;

use pnl_readout::config::RunConfig;
use pnl_readout::ensemble::{
    averaged_decay, decay_factor, polarization_under_readout, table1_statistics, Averaging,
    SpinSpecies,
};
use pnl_readout::reconstruction::{
    marginal_of_mixture, wigner_small_d, CoherentStateMixture, DickeBasis, MeasurementAxis,
    SpinCoherentState,
};
use pnl_readout::spectroscopy::{
    alpha_prime, detuning_envelope, interaction_alpha, marginal_moments, AcSignal, DdSequence,
    SincConvention,
};
use pnl_readout::stats::Histogram;

const PI: f64 = std::f64::consts::PI;

proptest! {
    #[test]
    fn wigner_d_is_orthogonal(two_j in 1u32..=12, beta in 1e-3f64..PI) {
        let d = wigner_small_d(two_j, beta);
        let gram = &d * d.transpose();
        let dim = two_j as usize + 1;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!(
                    (gram[(i, j)] - want).abs() < 1e-9,
                    "gram[{i}][{j}] = {} at two_j = {two_j}, beta = {beta}",
                    gram[(i, j)]
                );
            }
        }
    }

    #[test]
    fn spin_coherent_state_is_normalized(
        two_j in 1u32..=40,
        theta in 0.0f64..PI,
        phi in -PI..PI,
    ) {
        let state = SpinCoherentState::new(DickeBasis::new(two_j).unwrap(), theta, phi);
        let norm: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10, "norm = {norm}");
    }

    #[test]
    fn mixture_marginals_are_normalized(
        two_j in 2u32..=30,
        delta_phi in 0.0f64..(0.5 * PI),
        theta in (0.25 * PI)..(0.75 * PI),
        thermal in 0.0f64..1.0,
        axis_phi in -PI..PI,
        polar in proptest::bool::ANY,
    ) {
        let mixture = CoherentStateMixture::ansatz(
            DickeBasis::new(two_j).unwrap(), delta_phi, theta, thermal, 17,
        ).unwrap();
        let axis = if polar { MeasurementAxis::z() } else { MeasurementAxis::equatorial(axis_phi) };
        let marginal = marginal_of_mixture(&mixture, axis).unwrap();
        prop_assert_eq!(marginal.probabilities.len(), two_j as usize + 1);
        // new() already validates: nonnegative, sums to 1 within 1e-9.
        prop_assert!(marginal.validate().is_ok());
    }

    #[test]
    fn circle_moments_sum_to_quarter(alpha in 0.0f64..25.0) {
        // X^2 + Y^2 = 1/4 pointwise, so the moments must satisfy
        // sigma_x^2 + sigma_y^2 + <Y>^2 = 1/4 at every drive amplitude.
        let m = marginal_moments(alpha);
        let total = m.sigma_x.powi(2) + m.sigma_y.powi(2) + m.mean_y.powi(2) + m.mean_x.powi(2);
        prop_assert!((total - 0.25).abs() < 1e-12, "total = {total}");
    }

    #[test]
    fn envelope_never_exceeds_peak_amplitude(
        b_osc in 1e-7f64..1e-5,
        f in 1e4f64..1e6,
        blocks in 1u32..=4,
        scale in 0.2f64..3.0,
        running in proptest::bool::ANY,
    ) {
        let convention = if running {
            SincConvention::RunningFrequency
        } else {
            SincConvention::ResonantFrequency
        };
        let n_pulses = 8 * blocks;
        let signal = AcSignal::new(b_osc, f).unwrap();
        let resonant = DdSequence::resonant(n_pulses, &signal).unwrap();
        let detuned = DdSequence::new(n_pulses, scale * resonant.tau).unwrap();
        // On resonance the suppression factor is exactly 1; off resonance
        // the phase never exceeds what the same train would acquire from a
        // perfectly tracked signal.
        let peak = alpha_prime(&signal, &resonant, convention);
        prop_assert!((peak / interaction_alpha(&signal, &resonant) - 1.0).abs() < 1e-12);
        let env = detuning_envelope(&detuned, &signal, convention);
        prop_assert!(env.abs() <= 1.0);
        prop_assert!(
            alpha_prime(&signal, &detuned, convention).abs()
                <= interaction_alpha(&signal, &detuned) * (1.0 + 1e-12)
        );
    }

    #[test]
    fn decay_factor_is_monotone_and_bounded(
        t_lo in 1e-3f64..1e3,
        ratio in 1.001f64..10.0,
    ) {
        let a = decay_factor(t_lo, 1.0).unwrap();
        let b = decay_factor(t_lo * ratio, 1.0).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a, "decay must fall: {b} at {} vs {a} at {t_lo}", t_lo * ratio);
        // Window-averaged width always exceeds the averaged mean decay,
        // otherwise a fully polarized ensemble would get negative variance.
        prop_assert!(a >= averaged_decay(t_lo) - 1e-12);
    }

    #[test]
    fn table1_widths_are_real(
        n_nv in 1u32..=1000,
        p in -1.0f64..1.0,
        t in 0.0f64..50.0,
        half in proptest::bool::ANY,
        averaged in proptest::bool::ANY,
    ) {
        let species = if half { SpinSpecies::Half } else { SpinSpecies::One };
        let averaging = if averaged { Averaging::TimeAveraged } else { Averaging::Instantaneous };
        let s = table1_statistics(species, n_nv, p, t, 1.0, averaging).unwrap();
        prop_assert!(s.sigma.is_finite() && s.sigma >= 0.0);
        prop_assert!(s.expectation.abs() <= species.spin() * p.abs() + 1e-12);
    }

    #[test]
    fn readout_polarization_relaxes_monotonically(
        p0 in -0.3f64..1.0,
        m_t1 in 1e2f64..1e6,
        m in 1.0f64..1e6,
        growth in 1.001f64..10.0,
    ) {
        let a = polarization_under_readout(p0, m, m_t1).unwrap();
        let b = polarization_under_readout(p0, m * growth, m_t1).unwrap();
        prop_assert!(a <= p0 + 1e-12 && a > -1.0 / 3.0 - 1e-12);
        prop_assert!(b <= a + 1e-12, "average must not rise: {b} vs {a}");
    }

    #[test]
    fn histogram_conserves_counts(
        values in proptest::collection::vec(-10.0f64..10.0, 1..200),
        bins in 1usize..50,
        lo in -5.0f64..0.0,
        span in 0.5f64..10.0,
    ) {
        let h = Histogram::from_values(&values, lo, lo + span, bins).unwrap();
        let total: u64 = h.counts.iter().sum();
        prop_assert_eq!(total, values.len() as u64);
        prop_assert_eq!(h.edges.len(), h.counts.len() + 1);
        prop_assert!(h.edges.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn config_round_trips_through_toml(
        seed in 0u64..u64::MAX / 2,
        n_nv in 1u32..500,
        contrast in 0.01f64..0.9,
        ppu in 1e-3f64..10.0,
        shots in 10u32..100_000,
        tau_max in 1e2f64..1e7,
    ) {
        let text = format!(
            "[run]\nseed = {seed}\n\n[ensemble]\nn_nv = {n_nv}\ncontrast = {contrast}\nphotons_per_unit = {ppu}\n\n[crossover]\nshots = {shots}\n\n[sensitivity]\ntau_max = {tau_max}\n"
        );
        let parsed = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(parsed.run.seed, seed);
        let again = RunConfig::from_toml_str(&toml::to_string(&parsed).unwrap()).unwrap();
        prop_assert_eq!(parsed, again);
    }
}
