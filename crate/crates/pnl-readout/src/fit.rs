//! Nonlinear and linear least-squares fitting.
//!
//! The workhorse is a small damped Gauss-Newton (Levenberg-Marquardt style)
//! minimizer over transformed parameters: positive quantities are fit in log
//! space and box-bounded ones through a scaled logistic, so the optimizer
//! itself is unconstrained. Model-specific entry points cover the crossover
//! curve (emitter count, decay constant, detector factor), polarization decay
//! under readout, and the emission-rate line, plus the confocal-volume
//! emitter estimate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensemble::{self, SpinSpecies};
use crate::error::{Error, Result};

/// Parameter transform decoupling the optimizer from physical bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// Physical = exp(internal); keeps the parameter positive.
    Log,
    /// Physical confined to (lo, hi) via a scaled logistic.
    Logistic { lo: f64, hi: f64 },
}

impl Transform {
    fn to_internal(self, x: f64) -> Result<f64> {
        match self {
            Transform::Identity => Ok(x),
            Transform::Log => {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(Error::invalid(format!(
                        "log-transformed parameter must start positive, got {x}"
                    )))
                }
            }
            Transform::Logistic { lo, hi } => {
                if x > lo && x < hi {
                    let s = (x - lo) / (hi - lo);
                    Ok((s / (1.0 - s)).ln())
                } else {
                    Err(Error::invalid(format!(
                        "parameter {x} outside its bounds ({lo}, {hi})"
                    )))
                }
            }
        }
    }

    fn to_physical(self, u: f64) -> f64 {
        match self {
            Transform::Identity => u,
            Transform::Log => u.exp(),
            Transform::Logistic { lo, hi } => {
                let s = 1.0 / (1.0 + (-u).exp());
                lo + (hi - lo) * s
            }
        }
    }

    /// d(physical)/d(internal), for the delta-method covariance.
    fn jacobian(self, u: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Log => u.exp(),
            Transform::Logistic { lo, hi } => {
                let s = 1.0 / (1.0 + (-u).exp());
                (hi - lo) * s * (1.0 - s)
            }
        }
    }
}

/// Tuning knobs of the minimizer.
#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost-decrease threshold for convergence.
    pub ftol: f64,
    /// Infinity-norm gradient threshold for convergence.
    pub gtol: f64,
    /// Scale the covariance by the reduced chi-square (set when the data
    /// carry no error bars).
    pub scale_covariance: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-12,
            gtol: 1e-10,
            scale_covariance: false,
        }
    }
}

/// Outcome of a least-squares fit in physical parameter space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1-sigma errors (delta method through the transforms).
    pub errors: Vec<f64>,
    /// Covariance in physical space, row-major `p x p`.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual norm at the optimum: sqrt(sum r_i^2).
    pub residual_norm: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Cost (0.5 sum r^2) after every accepted step, starting value first.
    pub cost_trace: Vec<f64>,
    /// Parameters whose relative error exceeds 10, i.e. the data do not
    /// constrain them.
    pub unidentifiable: Vec<String>,
}

impl FitResult {
    /// `(estimate, error)` for a named parameter.
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.params[i], self.errors[i]))
    }
}

/// Minimize `0.5 * sum(residuals^2)` over transformed parameters.
///
/// `residuals` receives physical parameters and must fill a vector of
/// weighted residuals of fixed length >= the parameter count.
pub fn least_squares<F>(
    names: &[&str],
    transforms: &[Transform],
    init: &[f64],
    residuals: F,
    opts: &LmOptions,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let p = names.len();
    if transforms.len() != p || init.len() != p {
        return Err(Error::invalid("parameter arrays disagree in length"));
    }
    let mut u: Vec<f64> = init
        .iter()
        .zip(transforms)
        .map(|(&x, t)| t.to_internal(x))
        .collect::<Result<_>>()?;
    let phys = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(transforms)
            .map(|(&v, t)| t.to_physical(v))
            .collect()
    };
    let mut r = DVector::from_vec(residuals(&phys(&u))?);
    let m = r.len();
    if m < p {
        return Err(Error::data(format!(
            "{m} residuals cannot constrain {p} parameters"
        )));
    }
    let mut cost = 0.5 * r.norm_squared();
    let mut trace = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = DMatrix::zeros(m, p);

    while iterations < opts.max_iterations {
        iterations += 1;
        // Central finite differences in internal coordinates.
        for j in 0..p {
            let h = 1e-6 * u[j].abs().max(1.0);
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let rp = DVector::from_vec(residuals(&phys(&up))?);
            let rm = DVector::from_vec(residuals(&phys(&um))?);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let grad = jac.transpose() * &r;
        if grad.amax() < opts.gtol {
            converged = true;
            break;
        }
        let hessian = jac.transpose() * &jac;
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = hessian.clone();
            for j in 0..p {
                let d = hessian[(j, j)].max(1e-12);
                damped[(j, j)] = hessian[(j, j)] + lambda * d;
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda = (lambda * 10.0).min(1e14);
                    continue;
                }
            };
            let u_new: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_new = match residuals(&phys(&u_new)) {
                Ok(v) => DVector::from_vec(v),
                Err(_) => {
                    lambda = (lambda * 10.0).min(1e14);
                    continue;
                }
            };
            let cost_new = 0.5 * r_new.norm_squared();
            if cost_new.is_finite() && cost_new < cost {
                let rel_drop = (cost - cost_new) / cost.max(1e-300);
                u = u_new;
                r = r_new;
                cost = cost_new;
                trace.push(cost);
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                if rel_drop < opts.ftol {
                    converged = true;
                }
                break;
            }
            lambda = (lambda * 10.0).min(1e14);
        }
        if !accepted {
            // No downhill step found at any damping: treat as converged to
            // numerical precision.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    // Covariance at the optimum via SVD pseudo-inverse of J^T J, mapped to
    // physical space by the transform jacobians.
    for j in 0..p {
        let h = 1e-6 * u[j].abs().max(1.0);
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        let rp = DVector::from_vec(residuals(&phys(&up))?);
        let rm = DVector::from_vec(residuals(&phys(&um))?);
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    let hessian = jac.transpose() * &jac;
    // Pseudo-inverse through the symmetric eigendecomposition; directions the
    // data do not constrain get an effectively infinite variance.
    let eig = nalgebra::SymmetricEigen::new(hessian);
    let tol = 1e-12 * eig.eigenvalues.amax().max(1e-300);
    let mut cov_internal: DMatrix<f64> = DMatrix::zeros(p, p);
    for k in 0..p {
        let ev = eig.eigenvalues[k];
        let inv = if ev.abs() > tol { 1.0 / ev.abs() } else { 1e30 };
        for i in 0..p {
            for j in 0..p {
                cov_internal[(i, j)] += eig.eigenvectors[(i, k)] * inv * eig.eigenvectors[(j, k)];
            }
        }
    }
    let scale = if opts.scale_covariance && m > p {
        2.0 * cost / (m - p) as f64
    } else {
        1.0
    };
    let jt: Vec<f64> = u
        .iter()
        .zip(transforms)
        .map(|(&v, t)| t.jacobian(v))
        .collect();
    let mut covariance: Vec<Vec<f64>> = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            covariance[i][j] = cov_internal[(i, j)] * jt[i] * jt[j] * scale;
        }
    }
    let params = phys(&u);
    let errors: Vec<f64> = (0..p).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    let unidentifiable: Vec<String> = (0..p)
        .filter(|&i| {
            !params[i].is_finite()
                || !errors[i].is_finite()
                || errors[i] > 10.0 * params[i].abs().max(1e-300)
        })
        .map(|i| names[i].to_string())
        .collect();
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        params,
        errors,
        covariance,
        residual_norm: (2.0 * cost).sqrt(),
        dof: m - p,
        converged,
        iterations,
        cost_trace: trace,
        unidentifiable,
    })
}

/// Model of the normalized width against baseline photons: detector factor
/// times the quadrature sum of the Skellam floor and the decaying projection
/// part.
pub fn crossover_model(n: f64, c: f64, species: SpinSpecies, n_nv: f64, n_t1: f64, k: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::invalid("n must be positive"));
    }
    let spin = species.spin();
    let shot_sq = (2.0 - c) / (4.0 * n * c * c);
    let s0_sq = ensemble::binning_factor(species).powi(2) * spin * (spin + 1.0) / (3.0 * n_nv);
    let d = ensemble::decay_factor(n, n_t1)?;
    Ok((k * k * (shot_sq + s0_sq * d * d)).sqrt())
}

/// Fit `(n_nv, n_t1, k)` to a crossover curve of `(n, sigma_prime, err)`
/// triples at fixed contrast and species.
pub fn fit_crossover(
    points: &[(f64, f64, f64)],
    species: SpinSpecies,
    contrast: f64,
) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::data(
            "need at least 4 curve points to fit (n_nv, n_t1, k)",
        ));
    }
    if !(contrast > 0.0 && contrast < 1.0) {
        return Err(Error::invalid("contrast must lie in (0, 1)"));
    }
    let weighted = points.iter().all(|p| p.2 > 0.0);
    let c = contrast;
    // Start values: k ideal; emitter count from inverting the plateau at the
    // largest n; decay constant beyond the sampled range.
    let spin = species.spin();
    let s0_sq_unit = ensemble::binning_factor(species).powi(2) * spin * (spin + 1.0) / 3.0;
    let (n_max, y_max, _) = *points.last().unwrap();
    let shot_sq = (2.0 - c) / (4.0 * n_max * c * c);
    let excess = (y_max * y_max - shot_sq).max(s0_sq_unit / 1e7);
    let n_nv0 = (s0_sq_unit / excess).clamp(1.0, 1e7);
    let init = [n_nv0, 20.0 * n_max, 1.0];
    let names = ["n_nv", "n_t1", "k"];
    let transforms = [
        Transform::Log,
        Transform::Log,
        Transform::Logistic { lo: 0.0, hi: 1.1 },
    ];
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        points
            .iter()
            .map(|&(n, y, e)| {
                let model = crossover_model(n, c, species, p[0], p[1], p[2])?;
                Ok((model - y) / if weighted { e } else { 1.0 })
            })
            .collect()
    };
    let opts = LmOptions {
        scale_covariance: !weighted,
        ..LmOptions::default()
    };
    least_squares(&names, &transforms, &init, residuals, &opts)
}

/// Fit `(p0, m_t1)` to observed polarization against repetition count, with
/// the steady state pinned at -1/3.
pub fn fit_polarization_decay(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::data("need at least 3 decay points"));
    }
    let weighted = points.iter().all(|p| p.2 > 0.0);
    let p_ss = SpinSpecies::One.steady_state_polarization();
    // Start values: polarization from the earliest point; decay constant
    // from the first point dropping halfway to the steady state.
    let first = points[0];
    let p0_init = first.1.clamp(-1.15, 1.15);
    let mut m_t1_init = points.last().unwrap().0;
    if (p0_init - p_ss).abs() > 1e-6 {
        for &(m, p, _) in points {
            if (p - p_ss) / (p0_init - p_ss) < 0.5 {
                m_t1_init = m.max(1.0);
                break;
            }
        }
    }
    let names = ["p0", "m_t1"];
    let transforms = [
        Transform::Logistic { lo: -1.2, hi: 1.2 },
        Transform::Log,
    ];
    let residuals = |q: &[f64]| -> Result<Vec<f64>> {
        points
            .iter()
            .map(|&(m, y, e)| {
                let model = p_ss + (q[0] - p_ss) * ensemble::averaged_decay(m / q[1]);
                Ok((model - y) / if weighted { e } else { 1.0 })
            })
            .collect()
    };
    let opts = LmOptions {
        scale_covariance: !weighted,
        ..LmOptions::default()
    };
    least_squares(&names, &transforms, &[p0_init, m_t1_init], residuals, &opts)
}

/// Ordinary least squares `rate = slope * n_nv + intercept`.
pub fn fit_emission_linear(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::data("need at least 2 points for a line"));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::data("all points share one abscissa; line underdetermined"));
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let dof = points.len().saturating_sub(2);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let var_slope = s2 / sxx;
    let var_intercept = s2 * (1.0 / n + mean_x * mean_x / sxx);
    let cov = -s2 * mean_x / sxx;
    Ok(FitResult {
        names: vec!["slope".into(), "intercept".into()],
        params: vec![slope, intercept],
        errors: vec![var_slope.sqrt(), var_intercept.sqrt()],
        covariance: vec![vec![var_slope, cov], vec![cov, var_intercept]],
        residual_norm: rss.sqrt(),
        dof,
        converged: true,
        iterations: 0,
        cost_trace: vec![0.5 * rss],
        unidentifiable: Vec::new(),
    })
}

/// Inputs of the confocal-volume emitter estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricParams {
    /// Excitation wavelength in meters.
    pub wavelength: f64,
    pub numerical_aperture: f64,
    /// Emitter layer thickness in meters.
    pub layer_thickness: f64,
    /// Substitutional nitrogen concentration in ppm of carbon sites.
    pub nitrogen_density_ppm: f64,
    /// Nitrogen-to-emitter conversion fraction.
    pub conversion_rate: f64,
}

/// Emitter-count estimate from the confocal spot geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricEstimate {
    /// Spot diameter in meters.
    pub spot_diameter: f64,
    /// Nitrogen atoms inside the effective excitation volume.
    pub n_n: f64,
    /// Expected emitter count.
    pub n_nv: f64,
}

/// Carbon number density of diamond in m^-3.
const CARBON_DENSITY: f64 = 1.76e29;

/// Estimate the addressed emitter count from the confocal spot.
///
/// The spot diameter follows d = wavelength / (0.84 NA); the effective
/// volume is the cylinder through the layer weighted by the fraction of a
/// Gaussian beam's power within its 1-sigma radius, 1 - exp(-1/2).
pub fn geometric_nv_estimate(p: &GeometricParams) -> Result<GeometricEstimate> {
    if !(p.wavelength > 0.0 && p.numerical_aperture > 0.0 && p.layer_thickness > 0.0) {
        return Err(Error::invalid("geometry inputs must be positive"));
    }
    if p.nitrogen_density_ppm < 0.0 || !(0.0..=1.0).contains(&p.conversion_rate) {
        return Err(Error::invalid("density must be >= 0 and conversion in [0, 1]"));
    }
    let d = p.wavelength / (0.84 * p.numerical_aperture);
    let area = std::f64::consts::PI * (0.5 * d).powi(2);
    let occupancy = 1.0 - (-0.5f64).exp();
    let n_n = occupancy * area * p.layer_thickness * CARBON_DENSITY * p.nitrogen_density_ppm * 1e-6;
    Ok(GeometricEstimate {
        spot_diameter: d,
        n_n,
        n_nv: n_n * p.conversion_rate,
    })
}
