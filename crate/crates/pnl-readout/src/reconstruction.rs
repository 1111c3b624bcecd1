//! Collective spin-state reconstruction from measured marginals.
//!
//! The model space is deliberately small: a mixture of spin-coherent states
//! equally spaced in azimuth across the equator plus a thermal part, all in
//! a single Dicke block of fixed total spin J. The pipeline is
//!
//! 1. [`deconvolve_skellam`]: remove the photon kernel from a measured
//!    signal histogram, leaving a spin marginal on the 2J+1 projection
//!    values;
//! 2. [`fit_mixture`]: grid-plus-refinement maximum likelihood for the
//!    ansatz parameters (delta_phi, theta, a_therm) against marginals from
//!    several quantization axes;
//! 3. [`husimi_q`]: phase-space picture of the fitted coherent part.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::Histogram;

/// One angular-momentum block of `2J + 1` projection states.
///
/// J is stored doubled so half-integer spins stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DickeBasis {
    two_j: u32,
}

impl DickeBasis {
    pub fn new(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::invalid("two_j must be at least 1"));
        }
        Ok(DickeBasis { two_j })
    }

    /// Basis for `n` pseudo-spin-1/2 particles in the symmetric block,
    /// `J = n / 2`.
    pub fn from_particles(n: u32) -> Result<Self> {
        DickeBasis::new(n)
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        0.5 * self.two_j as f64
    }

    pub fn dimension(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Projection quantum number of amplitude index `i` (ascending,
    /// `i = 0` is `m = -J`).
    pub fn m(&self, i: usize) -> f64 {
        i as f64 - self.j()
    }
}

/// Quantization axis on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAxis {
    /// Polar angle in radians.
    pub theta: f64,
    /// Azimuthal angle in radians.
    pub phi: f64,
}

impl MeasurementAxis {
    pub fn new(theta: f64, phi: f64) -> Self {
        MeasurementAxis { theta, phi }
    }

    pub fn z() -> Self {
        MeasurementAxis::new(0.0, 0.0)
    }

    pub fn x() -> Self {
        MeasurementAxis::new(0.5 * PI, 0.0)
    }

    pub fn y() -> Self {
        MeasurementAxis::new(0.5 * PI, 0.5 * PI)
    }

    /// Equatorial axis at azimuth `phi`.
    pub fn equatorial(phi: f64) -> Self {
        MeasurementAxis::new(0.5 * PI, phi)
    }

    pub fn is_z(&self) -> bool {
        self.theta.abs() < 1e-6
    }

    pub fn is_equatorial(&self) -> bool {
        (self.theta - 0.5 * PI).abs() < 1e-6
    }

    fn unit(&self) -> [f64; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }
}

/// Spin-coherent state `|theta, phi>` in a Dicke block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinCoherentState {
    pub basis: DickeBasis,
    pub theta: f64,
    pub phi: f64,
    /// Dicke amplitudes `<J, m|theta, phi>`, index ascending in m.
    pub amplitudes: Vec<Complex64>,
}

impl SpinCoherentState {
    pub fn new(basis: DickeBasis, theta: f64, phi: f64) -> Self {
        let two_j = basis.two_j as i32;
        let ch = (0.5 * theta).cos();
        let sh = (0.5 * theta).sin();
        let amplitudes = (0..basis.dimension())
            .map(|i| {
                // i = J + m, so the weight is binom(2J, i)^(1/2) and the
                // azimuthal phase winds with J - m = 2J - i.
                let down = two_j - i as i32;
                let mag = (0.5 * ln_binomial(basis.two_j, i as u32)).exp()
                    * ch.powi(i as i32)
                    * sh.powi(down);
                Complex64::from_polar(mag, down as f64 * phi)
            })
            .collect();
        SpinCoherentState {
            basis,
            theta,
            phi,
            amplitudes,
        }
    }

    #[cfg(test)]
    fn unit(&self) -> [f64; 3] {
        MeasurementAxis::new(self.theta, self.phi).unit()
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    libm::lgamma((n + 1) as f64) - libm::lgamma((k + 1) as f64) - libm::lgamma((n - k + 1) as f64)
}

/// Overlap `<state1|state2>` of two coherent states in the same block:
/// `(cos(t1/2) cos(t2/2) + e^{i (phi2 - phi1)} sin(t1/2) sin(t2/2))^{2J}`.
pub fn coherent_overlap(state1: &SpinCoherentState, state2: &SpinCoherentState) -> Result<Complex64> {
    if state1.basis != state2.basis {
        return Err(Error::invalid("coherent states live in different blocks"));
    }
    let base = Complex64::new((0.5 * state1.theta).cos() * (0.5 * state2.theta).cos(), 0.0)
        + Complex64::from_polar(
            (0.5 * state1.theta).sin() * (0.5 * state2.theta).sin(),
            state2.phi - state1.phi,
        );
    Ok(base.powu(state1.basis.two_j))
}

/// Rotation matrix `d^J(beta) = exp(-i beta J_y)` in the Dicke basis,
/// indices ascending in m.
///
/// `-i beta J_y` is real and antisymmetric tridiagonal, so the matrix
/// exponential is real orthogonal.
pub fn wigner_small_d(two_j: u32, beta: f64) -> DMatrix<f64> {
    let dim = two_j as usize + 1;
    let j = 0.5 * two_j as f64;
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim - 1 {
        let m = i as f64 - j;
        // Ladder coefficient sqrt((J - m)(J + m + 1)) between m and m + 1.
        let a = ((j - m) * (j + m + 1.0)).sqrt();
        gen[(i, i + 1)] = 0.5 * beta * a;
        gen[(i + 1, i)] = -0.5 * beta * a;
    }
    gen.exp()
}

/// Population distribution of the spin projection along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistribution {
    pub axis: MeasurementAxis,
    /// Probabilities over m in [-J..J], ascending, summing to 1.
    pub probabilities: Vec<f64>,
}

impl MarginalDistribution {
    pub fn new(axis: MeasurementAxis, probabilities: Vec<f64>) -> Result<Self> {
        let m = MarginalDistribution {
            axis,
            probabilities,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.probabilities.len() < 2 {
            return Err(Error::data("marginal needs at least two projections"));
        }
        if self.probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::data("marginal probabilities must be nonnegative"));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::data(format!(
                "marginal probabilities must sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<DickeBasis> {
        DickeBasis::new(self.probabilities.len() as u32 - 1)
    }
}

/// Equal-weight coherent states fanned out in azimuth about +Y, plus a
/// thermal remainder: the reconstruction ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentStateMixture {
    pub components: Vec<(f64, SpinCoherentState)>,
    pub thermal_weight: f64,
    /// Azimuthal half-spread of the fan, radians.
    pub delta_phi: f64,
    /// Shared polar angle of the fan, radians.
    pub theta: f64,
}

impl CoherentStateMixture {
    /// Build the ansatz: `count` equal-weight states at polar angle `theta`,
    /// equally spaced in azimuth over `[pi/2 - delta_phi, pi/2 + delta_phi]`.
    pub fn ansatz(
        basis: DickeBasis,
        delta_phi: f64,
        theta: f64,
        thermal_weight: f64,
        count: usize,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if !(0.0..=1.0).contains(&thermal_weight) {
            return Err(Error::invalid("thermal_weight must lie in [0, 1]"));
        }
        if !(delta_phi.is_finite() && delta_phi >= 0.0) {
            return Err(Error::invalid("delta_phi must be finite and nonnegative"));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta must be finite"));
        }
        let w = (1.0 - thermal_weight) / count as f64;
        let components = component_azimuths(delta_phi, count)
            .map(|phi| (w, SpinCoherentState::new(basis, theta, phi)))
            .collect();
        Ok(CoherentStateMixture {
            components,
            thermal_weight,
            delta_phi,
            theta,
        })
    }

    pub fn basis(&self) -> Result<DickeBasis> {
        self.components
            .first()
            .map(|(_, s)| s.basis)
            .ok_or_else(|| Error::data("mixture has no components"))
    }

    pub fn coherent_weight(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let basis = self.basis()?;
        if self.components.iter().any(|(_, s)| s.basis != basis) {
            return Err(Error::data("mixture components span different blocks"));
        }
        if self.components.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(Error::data("mixture weights must be nonnegative"));
        }
        let total = self.coherent_weight() + self.thermal_weight;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::data(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(())
    }
}

fn component_azimuths(delta_phi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| {
        if count == 1 {
            0.5 * PI
        } else {
            0.5 * PI + delta_phi * (2.0 * k as f64 / (count - 1) as f64 - 1.0)
        }
    })
}

/// Projection populations of a single coherent state along `axis`.
///
/// Each of the 2J underlying spins points along the state axis, so the
/// projection count is binomial with success probability `cos^2(gamma/2)`
/// where `gamma` is the angle between state and axis.
fn coherent_marginal(two_j: u32, cos_gamma: f64, ln_binom: &[f64]) -> Vec<f64> {
    let dim = two_j as usize + 1;
    let p = (0.5 * (1.0 + cos_gamma)).clamp(0.0, 1.0);
    let mut out = vec![0.0; dim];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[dim - 1] = 1.0;
        return out;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    for (i, v) in out.iter_mut().enumerate() {
        *v = (ln_binom[i] + i as f64 * lp + (two_j as usize - i) as f64 * lq).exp();
    }
    out
}

fn ln_binomial_row(two_j: u32) -> Vec<f64> {
    (0..=two_j).map(|i| ln_binomial(two_j, i)).collect()
}

fn cos_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
}

/// Projection populations of `mixture` along `axis`.
///
/// Each component is rotated into the axis frame with a Wigner small-d
/// matrix; the thermal part contributes the uniform block marginal.
pub fn marginal_of_mixture(
    mixture: &CoherentStateMixture,
    axis: MeasurementAxis,
) -> Result<MarginalDistribution> {
    mixture.validate()?;
    let basis = mixture.basis()?;
    let dim = basis.dimension();
    // Rotate |psi> into the axis frame: twist by exp(i phi Jz), then apply
    // d(-theta) = d(theta)^T.
    let d = wigner_small_d(basis.two_j, axis.theta);
    let mut probs = vec![mixture.thermal_weight / dim as f64; dim];
    for (w, state) in &mixture.components {
        if *w == 0.0 {
            continue;
        }
        let twisted: Vec<Complex64> = state
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, basis.m(i) * axis.phi))
            .collect();
        for i in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, t) in twisted.iter().enumerate() {
                acc += d[(k, i)] * t;
            }
            probs[i] += w * acc.norm_sqr();
        }
    }
    // Rotation is unitary, so the sum is 1 up to roundoff; tidy it.
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    MarginalDistribution::new(axis, probs)
}

/// Maximum-likelihood reconstruction result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub mixture: CoherentStateMixture,
    /// Mean cross-entropy log likelihood per axis at the optimum.
    pub log_likelihood: f64,
}

/// Search controls for [`fit_mixture`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMixtureOptions {
    /// Number of coherent components in the fan.
    pub components: usize,
    /// Local refinement passes after the coarse grid.
    pub refine_rounds: usize,
}

impl Default for FitMixtureOptions {
    fn default() -> Self {
        FitMixtureOptions {
            components: 51,
            refine_rounds: 2,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct GridPoint {
    ll: f64,
    delta_phi: f64,
    theta: f64,
    a_therm: f64,
}

impl GridPoint {
    /// Deterministic ordering: higher likelihood wins; ties prefer the
    /// smallest fan, then the most equatorial polar angle.
    fn better_than(&self, other: &GridPoint) -> bool {
        if self.ll != other.ll {
            return self.ll > other.ll;
        }
        if self.delta_phi != other.delta_phi {
            return self.delta_phi < other.delta_phi;
        }
        let da = (self.theta - 0.5 * PI).abs();
        let db = (other.theta - 0.5 * PI).abs();
        if da != db {
            return da < db;
        }
        self.a_therm < other.a_therm
    }
}

const DELTA_PHI_MAX: f64 = 0.5 * PI;
const THETA_LO: f64 = 0.25 * PI;
const THETA_HI: f64 = 0.75 * PI;
const DEG: f64 = PI / 180.0;

/// Fit the equal-weight fan ansatz to measured marginals with the default
/// 51 components.
pub fn fit_mixture(marginals: &[MarginalDistribution]) -> Result<MixtureFit> {
    fit_mixture_with(marginals, &FitMixtureOptions::default())
}

/// [`fit_mixture`] with explicit search controls.
///
/// Coarse grid: delta_phi over [0, 90] deg step 1, theta over [45, 135] deg
/// step 1, a_therm over [0, 1] step 0.01; the thermal weight enters the
/// model linearly, so it is scanned in an inner loop over precomputed
/// coherent marginals. Each refinement pass shrinks the steps fivefold
/// around the incumbent.
pub fn fit_mixture_with(
    marginals: &[MarginalDistribution],
    options: &FitMixtureOptions,
) -> Result<MixtureFit> {
    if options.components == 0 {
        return Err(Error::invalid("components must be at least 1"));
    }
    if marginals.len() < 2 {
        return Err(Error::data(
            "at least two marginals are needed to identify the mixture",
        ));
    }
    for m in marginals {
        m.validate()?;
    }
    let dim = marginals[0].probabilities.len();
    if marginals.iter().any(|m| m.probabilities.len() != dim) {
        return Err(Error::data("marginals have mismatched dimensions"));
    }
    if !marginals.iter().any(|m| m.axis.is_z()) {
        return Err(Error::data("marginals must include the Z axis"));
    }
    if !marginals.iter().any(|m| m.axis.is_equatorial()) {
        return Err(Error::data("marginals must include an equatorial axis"));
    }
    let basis = marginals[0].basis()?;
    let ln_binom = ln_binomial_row(basis.two_j);
    let axes: Vec<[f64; 3]> = marginals.iter().map(|m| m.axis.unit()).collect();

    let mut best = scan_grid(
        marginals,
        &axes,
        basis.two_j,
        &ln_binom,
        options.components,
        (0.0, DELTA_PHI_MAX, DEG),
        (THETA_LO, THETA_HI, DEG),
        (0.0, 1.0, 0.01),
    );
    let mut steps = (DEG, DEG, 0.01);
    for _ in 0..options.refine_rounds {
        let next = (steps.0 / 5.0, steps.1 / 5.0, steps.2 / 5.0);
        let refined = scan_grid(
            marginals,
            &axes,
            basis.two_j,
            &ln_binom,
            options.components,
            (
                (best.delta_phi - steps.0).max(0.0),
                (best.delta_phi + steps.0).min(DELTA_PHI_MAX),
                next.0,
            ),
            (
                (best.theta - steps.1).max(THETA_LO),
                (best.theta + steps.1).min(THETA_HI),
                next.1,
            ),
            (
                (best.a_therm - steps.2).max(0.0),
                (best.a_therm + steps.2).min(1.0),
                next.2,
            ),
        );
        if refined.better_than(&best) {
            best = refined;
        }
        steps = next;
    }

    let mixture = CoherentStateMixture::ansatz(
        basis,
        best.delta_phi,
        best.theta,
        best.a_therm,
        options.components,
    )?;
    Ok(MixtureFit {
        mixture,
        log_likelihood: best.ll,
    })
}

fn grid_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count).map(|i| (lo + step * i as f64).min(hi)).collect()
}

#[allow(clippy::too_many_arguments)]
fn scan_grid(
    marginals: &[MarginalDistribution],
    axes: &[[f64; 3]],
    two_j: u32,
    ln_binom: &[f64],
    components: usize,
    dphi_range: (f64, f64, f64),
    theta_range: (f64, f64, f64),
    a_range: (f64, f64, f64),
) -> GridPoint {
    let dphis = grid_values(dphi_range.0, dphi_range.1, dphi_range.2);
    let thetas = grid_values(theta_range.0, theta_range.1, theta_range.2);
    let a_values = grid_values(a_range.0, a_range.1, a_range.2);
    let dim = marginals[0].probabilities.len();
    let uniform = 1.0 / dim as f64;

    let pairs: Vec<(f64, f64)> = dphis
        .iter()
        .flat_map(|&d| thetas.iter().map(move |&t| (d, t)))
        .collect();
    pairs
        .par_iter()
        .map(|&(delta_phi, theta)| {
            // Component-averaged coherent marginal per axis.
            let mut fan: Vec<Vec<f64>> = vec![vec![0.0; dim]; axes.len()];
            for phi in component_azimuths(delta_phi, components) {
                let state = MeasurementAxis::new(theta, phi).unit();
                for (ai, axis) in axes.iter().enumerate() {
                    let row = coherent_marginal(two_j, cos_angle(state, *axis), ln_binom);
                    for (f, r) in fan[ai].iter_mut().zip(row.iter()) {
                        *f += r;
                    }
                }
            }
            let scale = 1.0 / components as f64;
            let mut best = GridPoint {
                ll: f64::NEG_INFINITY,
                delta_phi,
                theta,
                a_therm: 0.0,
            };
            for &a in &a_values {
                let mut ll = 0.0;
                for (ai, marginal) in marginals.iter().enumerate() {
                    for (obs, f) in marginal.probabilities.iter().zip(fan[ai].iter()) {
                        if *obs > 0.0 {
                            let model = (1.0 - a) * f * scale + a * uniform;
                            ll += obs * model.max(1e-300).ln();
                        }
                    }
                }
                let cand = GridPoint {
                    ll,
                    delta_phi,
                    theta,
                    a_therm: a,
                };
                if cand.better_than(&best) {
                    best = cand;
                }
            }
            best
        })
        .reduce(
            || GridPoint {
                ll: f64::NEG_INFINITY,
                delta_phi: f64::INFINITY,
                theta: f64::INFINITY,
                a_therm: f64::INFINITY,
            },
            |a, b| if b.better_than(&a) { b } else { a },
        )
}

/// Husimi Q of the coherent part of `mixture` at `(theta, phi)` points:
/// `Q = (1/pi) <theta,phi|rho|theta,phi>`, so a pure coherent state peaks
/// at `1/pi`. Set `include_thermal` to add the flat thermal offset.
pub fn husimi_q(
    mixture: &CoherentStateMixture,
    points: &[(f64, f64)],
    include_thermal: bool,
) -> Result<Vec<f64>> {
    mixture.validate()?;
    let basis = mixture.basis()?;
    let two_j = basis.two_j as i32;
    let offset = if include_thermal {
        mixture.thermal_weight / (PI * basis.dimension() as f64)
    } else {
        0.0
    };
    Ok(points
        .par_iter()
        .map(|&(theta, phi)| {
            let (cp, sp) = ((0.5 * theta).cos(), (0.5 * theta).sin());
            let mut q = 0.0;
            for (w, state) in &mixture.components {
                let (cs, ss) = ((0.5 * state.theta).cos(), (0.5 * state.theta).sin());
                let cc = cp * cs;
                let ss = sp * ss;
                let overlap_sq =
                    (cc * cc + ss * ss + 2.0 * cc * ss * (phi - state.phi).cos()).max(0.0);
                q += w * overlap_sq.powi(two_j);
            }
            q / PI + offset
        })
        .collect())
}

/// Quadrature check of the Husimi normalization identity
/// `(2J + 1) / 4 * integral of Q over the sphere = coherent weight`
/// (or 1 with the thermal offset included). Returns the left-hand side.
///
/// Uses Simpson quadrature in theta and the trapezoid rule in the periodic
/// azimuth.
pub fn husimi_sphere_integral(
    mixture: &CoherentStateMixture,
    n_theta: usize,
    n_phi: usize,
    include_thermal: bool,
) -> Result<f64> {
    if n_theta < 3 || n_theta % 2 == 0 || n_phi < 3 {
        return Err(Error::invalid(
            "need odd n_theta >= 3 and n_phi >= 3 for the quadrature",
        ));
    }
    let basis = mixture.basis()?;
    let h_theta = PI / (n_theta - 1) as f64;
    let h_phi = 2.0 * PI / n_phi as f64;
    let points: Vec<(f64, f64)> = (0..n_theta)
        .flat_map(|it| {
            (0..n_phi).map(move |ip| (h_theta * it as f64, h_phi * ip as f64))
        })
        .collect();
    let q = husimi_q(mixture, &points, include_thermal)?;
    let mut integral = 0.0;
    for it in 0..n_theta {
        let simpson = if it == 0 || it == n_theta - 1 {
            1.0
        } else if it % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let sin_theta = (h_theta * it as f64).sin();
        let mut phi_sum = 0.0;
        for ip in 0..n_phi {
            phi_sum += q[it * n_phi + ip];
        }
        integral += simpson / 3.0 * h_theta * sin_theta * h_phi * phi_sum;
    }
    Ok(0.25 * (basis.two_j as f64 + 1.0) * integral)
}

/// Result of the photon-kernel deconvolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deconvolution {
    pub marginal: MarginalDistribution,
    /// Mean log likelihood per shot at the last iteration.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the photon kernel is wider than the histogram support; the
    /// result then stays close to the flat prior.
    pub low_confidence: bool,
}

/// Expectation-maximization deconvolution of the photon kernel from a
/// histogram of normalized signals `(b - a) / (2 n c)`.
///
/// Spin projection `m` sits at `m / (2J)` on the signal axis; a detector
/// factor `k < 1` compresses those positions about the sample mean and
/// scales the kernel width the same way. The kernel is the large-`n`
/// Gaussian limit of the difference-of-Poissons distribution, with the
/// outermost bins absorbing the tails (matching how the histogram clamps
/// outliers).
pub fn deconvolve_skellam(
    hist: &Histogram,
    axis: MeasurementAxis,
    basis: &DickeBasis,
    n: f64,
    c: f64,
    k: f64,
) -> Result<Deconvolution> {
    if !(n > 0.0) {
        return Err(Error::invalid("n must be positive"));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid("contrast must lie in (0, 1)"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("k must be positive"));
    }
    let bins = hist.counts.len();
    if bins < 2 {
        return Err(Error::data("histogram needs at least two bins"));
    }
    let shots = hist.total();
    if shots == 0 {
        return Err(Error::data("histogram is empty"));
    }

    let dim = basis.dimension();
    let sigma = k * (2.0 * n * (1.0 - 0.5 * c)).sqrt() / (2.0 * n * c);
    let y: Vec<f64> = hist.counts.iter().map(|&h| h as f64 / shots as f64).collect();
    let centers = hist.centers();
    let sample_mean: f64 = centers.iter().zip(y.iter()).map(|(x, w)| x * w).sum();
    let span = hist.edges[bins] - hist.edges[0];
    // A kernel wider than the whole histogram cannot resolve any spin
    // structure; running the EM would only sharpen numerical noise of the
    // likelihood, so return the flat prior and let the caller know.
    if sigma > span {
        return Ok(Deconvolution {
            marginal: MarginalDistribution::new(axis, vec![1.0 / dim as f64; dim])?,
            log_likelihood: f64::NAN,
            iterations: 0,
            converged: false,
            low_confidence: true,
        });
    }

    // kernel[h][m] = P(bin h | spin projection index m); columns sum to 1.
    let positions: Vec<f64> = (0..dim)
        .map(|i| {
            let x = basis.m(i) / basis.two_j as f64;
            sample_mean + k * (x - sample_mean)
        })
        .collect();
    let gauss_cdf = |x: f64| 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let mut kernel = vec![vec![0.0; dim]; bins];
    for (m, &pos) in positions.iter().enumerate() {
        let mut prev = 0.0;
        for h in 0..bins {
            let upper = if h == bins - 1 {
                1.0
            } else {
                gauss_cdf((hist.edges[h + 1] - pos) / sigma)
            };
            kernel[h][m] = (upper - prev).max(0.0);
            prev = upper;
        }
    }

    let mut p = vec![1.0 / dim as f64; dim];
    let mut forward = vec![0.0; bins];
    let mut last_ll = f64::NEG_INFINITY;
    let mut converged = false;
    let max_iterations = 20_000;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        for (h, f) in forward.iter_mut().enumerate() {
            *f = kernel[h].iter().zip(p.iter()).map(|(k, p)| k * p).sum();
        }
        let ll: f64 = y
            .iter()
            .zip(forward.iter())
            .filter(|(y, _)| **y > 0.0)
            .map(|(y, f)| y * f.max(1e-300).ln())
            .sum();
        let mut next = vec![0.0; dim];
        for h in 0..bins {
            if y[h] == 0.0 {
                continue;
            }
            let ratio = y[h] / forward[h].max(1e-300);
            for (m, nx) in next.iter_mut().enumerate() {
                *nx += kernel[h][m] * ratio;
            }
        }
        for (pm, nx) in p.iter_mut().zip(next.iter()) {
            *pm *= nx;
        }
        let total: f64 = p.iter().sum();
        for pm in &mut p {
            *pm /= total;
        }
        if (ll - last_ll).abs() <= 1e-8 * ll.abs().max(1e-300) {
            last_ll = ll;
            converged = true;
            break;
        }
        last_ll = ll;
    }

    Ok(Deconvolution {
        marginal: MarginalDistribution::new(axis, p)?,
        log_likelihood: last_ll,
        iterations,
        converged,
        low_confidence: false,
    })
}

/// Affine rescale of a signal histogram so that `[lo, hi]` maps onto
/// `[-1/2, 1/2]`, the projection range in per-spin units. `lo` and `hi`
/// are typically the fitted extrema of a driven-rotation curve.
pub fn rescale_histogram(hist: &Histogram, lo: f64, hi: f64) -> Result<Histogram> {
    if !(hi > lo) {
        return Err(Error::invalid("rescale needs hi > lo"));
    }
    let scale = 1.0 / (hi - lo);
    let edges = hist
        .edges
        .iter()
        .map(|e| (e - lo) * scale - 0.5)
        .collect();
    Ok(Histogram {
        edges,
        counts: hist.counts.clone(),
    })
}
