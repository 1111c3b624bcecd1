//! Collective spin state reconstruction round trip.
//!
//! Builds a dephased-fan mixture of spin coherent states for 26 pseudo-spins
//! (a fan of azimuths about +Y plus a thermal part), computes its spin
//! marginals along the Z axis and nine equatorial axes, fits the ansatz
//! parameters back from the marginals alone, and renders the Husimi Q
//! function of the fitted state as an ASCII sphere map.
//!
//!     cargo run --release --example state_reconstruction

use std::f64::consts::PI;

use pnl_readout::reconstruction::{
    fit_mixture, husimi_q, husimi_sphere_integral, marginal_of_mixture, CoherentStateMixture,
    DickeBasis, MeasurementAxis,
};
use pnl_readout::Result;

const DEG: f64 = PI / 180.0;

fn main() -> Result<()> {
    let basis = DickeBasis::new(26)?;
    let truth = CoherentStateMixture::ansatz(basis, 60.0 * DEG, 90.0 * DEG, 0.3, 51)?;
    println!("truth: delta_phi = 60 deg, theta = 90 deg, thermal weight = 0.30");

    // Measurement protocol: the Z axis plus an equatorial fan.
    let mut axes = vec![MeasurementAxis::z()];
    for i in 0..9 {
        axes.push(MeasurementAxis::equatorial(-0.5 * PI + PI * i as f64 / 8.0));
    }
    let marginals = axes
        .into_iter()
        .map(|axis| marginal_of_mixture(&truth, axis))
        .collect::<Result<Vec<_>>>()?;

    let fit = fit_mixture(&marginals)?;
    println!(
        "fit:   delta_phi = {:.1} deg, theta = {:.1} deg, thermal weight = {:.2} (ll = {:.4})",
        fit.mixture.delta_phi / DEG,
        fit.mixture.theta / DEG,
        fit.mixture.thermal_weight,
        fit.log_likelihood
    );

    // Normalization check: (2J+1)/4 * integral of Q equals the coherent weight.
    let integral = husimi_sphere_integral(&fit.mixture, 201, 400, false)?;
    println!(
        "husimi normalization: {integral:.4} vs coherent weight {:.4}\n",
        fit.mixture.coherent_weight()
    );

    // ASCII sphere map of the fitted Q function (rows: theta, cols: phi).
    let (n_theta, n_phi) = (17, 61);
    let points: Vec<(f64, f64)> = (0..n_theta)
        .flat_map(|it| {
            (0..n_phi).map(move |ip| {
                (
                    PI * it as f64 / (n_theta - 1) as f64,
                    -PI + 2.0 * PI * ip as f64 / (n_phi - 1) as f64,
                )
            })
        })
        .collect();
    let q = husimi_q(&fit.mixture, &points, false)?;
    let q_max = q.iter().cloned().fold(0.0f64, f64::max);
    let shades = [' ', '.', ':', '+', 'x', 'X', '#'];
    println!("Q(theta, phi) / {q_max:.3}, phi from -180 to 180 deg left to right:");
    for it in 0..n_theta {
        let row: String = (0..n_phi)
            .map(|ip| {
                let level = (q[it * n_phi + ip] / q_max * (shades.len() - 1) as f64).round();
                shades[level as usize]
            })
            .collect();
        println!("  {row}");
    }
    Ok(())
}
