//! Shot-noise to projection-noise crossover.
//!
//! Sweeps the readout repetition count for a 31-spin ensemble, splits the
//! observed width of the normalized signal into photon shot noise and spin
//! projection noise, and fits the spin count back out of the curve.
//!
//!     cargo run --release --example crossover

use pnl_readout::ensemble::{binning_factor, thermal_sigma0, EnsembleConfig, SpinSpecies};
use pnl_readout::fit::fit_crossover;
use pnl_readout::noise::sweep_crossover;
use pnl_readout::sim::SimulationPlan;
use pnl_readout::Result;

fn main() -> Result<()> {
    let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 0.273, 1.6e6, 1.0)?;
    let plan = SimulationPlan::new(cfg.clone(), 1250, 3000, 42);

    // Log-spaced sweep from the shot-dominated into the plateau regime.
    let m_values: Vec<u32> = (0..13)
        .map(|i| (1250.0f64 * (20.0f64).powf(i as f64 / 12.0)).round() as u32)
        .collect();
    let curve = sweep_crossover(&plan, &m_values, None)?;

    println!("detector correction k = {:.4} +- {:.4}", curve.k, curve.k_err);
    println!("{:>8} {:>10} {:>12} {:>12} {:>10}", "m", "n", "sigma'", "shot floor", "gap dB");
    for point in &curve.points {
        let d = &point.decomposition;
        let gap = d
            .db_gap()
            .map_or_else(|| "  --".to_string(), |g| format!("{g:7.2}"));
        println!(
            "{:>8} {:>10.1} {:>12.5} {:>12.5} {:>10}",
            point.m, d.n, d.sigma_prime, d.sigma_shot_prime, gap
        );
    }

    // At large n the width should level at the thermal projection noise.
    let plateau = binning_factor(cfg.species) * thermal_sigma0(cfg.species, cfg.n_nv);
    let last = &curve.points.last().unwrap().decomposition;
    println!(
        "\nplateau: measured sigma_proj = {:.5}, thermal prediction = {:.5}",
        last.sigma_proj, plateau
    );

    let fit = fit_crossover(&curve.xy(), cfg.species, curve.contrast)?;
    let (n_nv, n_nv_err) = fit.get("n_nv").unwrap();
    println!(
        "fit: n_nv = {n_nv:.1} +- {n_nv_err:.1} (true 31), converged = {}",
        fit.converged
    );
    Ok(())
}
