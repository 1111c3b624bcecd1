//! Detector correction factor from reference windows.
//!
//! The two spin-independent reference counters differ by pure counting
//! noise, so their difference width pins the detector behavior: an ideal
//! APD gives std(r1 - r2) = sqrt(2 n). Simulates three detector models and
//! calibrates k for each.
//!
//!     cargo run --release --example apd_calibration

use pnl_readout::ensemble::{EnsembleConfig, SpinSpecies};
use pnl_readout::noise::calibrate_k;
use pnl_readout::sim::{simulate_with_stream, ApdModel, SimulationPlan};
use pnl_readout::Result;

fn main() -> Result<()> {
    let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 0.273, 1.6e6, 1.0)?;
    let m_values = [200u32, 400, 800, 1600, 3200];

    for (name, apd) in [
        ("linear", ApdModel::Linear),
        ("multiplicative k = 0.95", ApdModel::MultiplicativeK { k: 0.95 }),
        ("dead time 0.02", ApdModel::DeadTime { dead_time: 0.02 }),
    ] {
        let base = SimulationPlan {
            apd,
            ..SimulationPlan::new(cfg.clone(), m_values[0], 3000, 7)
        };
        let mut records = Vec::new();
        for (i, &m) in m_values.iter().enumerate() {
            let plan = SimulationPlan { m, ..base.clone() };
            records.extend(simulate_with_stream(&plan, (i as u64) << 32)?);
        }
        let cal = calibrate_k(&records)?;
        println!("{name:<24} k = {:.4} +- {:.4}", cal.k, cal.err);
    }
    Ok(())
}
