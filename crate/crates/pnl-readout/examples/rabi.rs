//! Driven rotation of the polarized ensemble.
//!
//! Prepares the spins polarized, rotates the up/zero pair through a grid
//! of angles, and plots the mean and width of the normalized signal. The
//! mean traces the fringe p0 * cos(angle) while the width stays at the
//! projection-noise level set by the ensemble size.
//!
//!     cargo run --release --example rabi

use std::f64::consts::PI;

use pnl_readout::ensemble::{EnsembleConfig, SpinSpecies};
use pnl_readout::sim::{run_rabi_sequence, InitState, RabiSettings, SimulationPlan};
use pnl_readout::Result;

fn main() -> Result<()> {
    let cfg = EnsembleConfig::new(31, SpinSpecies::One, 0.15, 0.273, 1.6e6, 1.0)?;
    let mut plan = SimulationPlan::new(cfg, 1000, 3000, 21);
    plan.init = InitState::Polarized { p0: 1.0 };

    let angles: Vec<f64> = (0..25).map(|i| 2.0 * PI * i as f64 / 24.0).collect();
    let points = run_rabi_sequence(&plan, &angles, &RabiSettings::default())?;

    println!("{:>10} {:>10} {:>10} {:>12} {:>12}", "angle/pi", "<Jz>", "expected", "sigma_spin", "bar");
    for p in &points {
        let expected = 0.5 * p.angle.cos();
        let bar_len = ((p.mean_jz + 0.5) * 40.0).round().max(0.0) as usize;
        println!(
            "{:>10.3} {:>10.3} {:>10.3} {:>12.4} {}",
            p.angle / PI,
            p.mean_jz,
            expected,
            p.sigma_jz,
            "*".repeat(bar_len)
        );
    }
    Ok(())
}
