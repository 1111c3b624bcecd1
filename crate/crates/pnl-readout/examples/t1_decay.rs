//! Readout-induced polarization decay.
//!
//! The optical readout slowly rethermalizes the nuclear spins, so the
//! window-averaged polarization decays with the repetition count toward the
//! steady state at -1/3. Simulates the decay for two relaxation constants
//! and fits them back.
//!
//!     cargo run --release --example t1_decay

use pnl_readout::ensemble::{polarization_under_readout, EnsembleConfig, SpinSpecies};
use pnl_readout::fit::fit_polarization_decay;
use pnl_readout::sim::{run_t1_sequence, Level, SimulationPlan, TelegraphModel};
use pnl_readout::Result;

fn main() -> Result<()> {
    let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 0.273, 1.6e6, 1.0)?;
    let m_grid: Vec<u32> = (0..15)
        .map(|i| (250.0f64 * (480.0f64).powf(i as f64 / 14.0)).round() as u32)
        .collect();

    for m_t1 in [19_430.0, 8_392.0] {
        let plan = SimulationPlan {
            telegraph: TelegraphModel::Rethermalizing { m_t1 },
            ..SimulationPlan::new(cfg.clone(), 1, 1500, 5)
        };
        let points = run_t1_sequence(&plan, Level::Up, &m_grid)?;

        println!("m_t1 = {m_t1}");
        println!("{:>9} {:>10} {:>10} {:>10}", "m", "p_obs", "err", "model");
        for p in &points {
            let model = polarization_under_readout(plan.cfg.p0, p.m as f64, m_t1)?;
            println!("{:>9} {:>10.4} {:>10.4} {:>10.4}", p.m, p.p_obs, p.p_err, model);
        }

        let triples: Vec<(f64, f64, f64)> =
            points.iter().map(|p| (p.m as f64, p.p_obs, p.p_err)).collect();
        let fit = fit_polarization_decay(&triples)?;
        let (est, err) = fit.get("m_t1").unwrap();
        println!(
            "fitted m_t1 = {est:.0} +- {err:.0} ({:+.1}% off)\n",
            100.0 * (est / m_t1 - 1.0)
        );
    }
    Ok(())
}
