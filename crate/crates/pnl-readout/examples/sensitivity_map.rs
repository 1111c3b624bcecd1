//! Conventional versus repetitive readout sensitivity.
//!
//! Evaluates both schemes over sensing time, finds the optimal repetition
//! count and the breakeven sensing time, and shows what mild spin squeezing
//! buys. All durations in microseconds, sensitivities in T/sqrt(Hz).
//!
//!     cargo run --release --example sensitivity_map

use pnl_readout::sensitivity::{
    eta_conventional, eta_repetitive, optimize_repetitions, SensitivityParams, SqueezingSpec,
};
use pnl_readout::Result;

fn main() -> Result<()> {
    let params = SensitivityParams::default(); // 100 emitters, timing defaults

    println!("{:>12} {:>12} {:>12} {:>8} {:>8}", "tau_sens us", "eta_conv", "eta_rep*", "m*", "ratio");
    for exp in 0..7 {
        let tau = 10f64.powi(exp);
        let conv = eta_conventional(&params, tau)?;
        let (m_star, rep) = optimize_repetitions(&params, tau, None)?;
        println!(
            "{:>12.0} {:>12.3e} {:>12.3e} {:>8} {:>8.2}",
            tau,
            conv,
            rep,
            m_star,
            conv / rep
        );
    }

    // Breakeven: bisect where the optimized repetitive scheme catches up.
    let gap = |tau: f64| -> Result<f64> {
        Ok(optimize_repetitions(&params, tau, None)?.1 - eta_conventional(&params, tau)?)
    };
    let (mut lo, mut hi) = (2.0f64, 100.0f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    println!("\nbreakeven sensing time: {:.1} us", 0.5 * (lo + hi));

    // Squeezing shifts the optimum to more repetitions and buys little at
    // half a dB.
    let tau = 1e4;
    let (m0, eta0) = optimize_repetitions(&params, tau, None)?;
    for db in [0.5, 2.0, 4.0] {
        let s = SqueezingSpec::from_db(db)?;
        let (m_s, eta_s) = optimize_repetitions(&params, tau, Some(&s))?;
        println!(
            "squeezing {db:.1} dB at tau = 1e4 us: eta improves {:.1}%, m* {m0} -> {m_s}",
            100.0 * (1.0 - eta_s / eta0)
        );
    }

    // Fixed repetition count away from the optimum still wins at long tau.
    let tau = 1e5;
    let fixed = eta_repetitive(&params, tau, 2700, None)?;
    println!(
        "\nat tau = 1e5 us with fixed m = 2700: ratio = {:.1}",
        eta_conventional(&params, tau)? / fixed
    );
    Ok(())
}
