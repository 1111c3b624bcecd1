//! Discrete-time telegraph dynamics of the spin levels during readout.
//!
//! Time is measured in readout repetitions. Each repetition a spin may
//! undergo a transition event with a level-dependent probability; dwell
//! times between events are sampled geometrically so that quiet stretches
//! cost O(1) instead of O(steps).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::SpinSpecies;
use crate::error::{Error, Result};

/// One spin level. `Zero` and `Down` are binned together by the readout;
/// for spin 1/2 only `Up` and `Down` are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Up,
    Zero,
    Down,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Up => 0,
            Level::Zero => 1,
            Level::Down => 2,
        }
    }

    pub fn binned_up(self) -> bool {
        self == Level::Up
    }
}

/// Stochastic model for level dynamics during readout.
///
/// All variants are parameterized by characteristic repetition counts
/// `m_t1`: the pseudo-spin polarization autocorrelation decays per
/// repetition by `exp(-1/m_t1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TelegraphModel {
    /// No dynamics; levels stay as initialized.
    Frozen,
    /// Each event redraws the level uniformly from all levels. Every
    /// deviation from the fully mixed state decays single-exponentially,
    /// which makes this the reference model for analytic comparisons.
    Rethermalizing { m_t1: f64 },
    /// Symmetric flips between neighboring levels. The stationary state is
    /// uniform; for spin 1 the binned correlation mixes two exponential
    /// modes (rates 1/m_t1 and 3/m_t1) with weights 3/4 and 1/4.
    NearestNeighbor { m_t1: f64 },
    /// Rethermalizing events with a separate lifetime per level
    /// (order: up, zero, down), so levels emptying at different speeds can
    /// be represented.
    PerLevel { m_t1: [f64; 3] },
}

impl TelegraphModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match self {
            TelegraphModel::Frozen => Ok(()),
            TelegraphModel::Rethermalizing { m_t1 } | TelegraphModel::NearestNeighbor { m_t1 } => {
                if ok(*m_t1) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("m_t1 must be positive, got {m_t1}")))
                }
            }
            TelegraphModel::PerLevel { m_t1 } => {
                if m_t1.iter().all(|&v| ok(v)) {
                    Ok(())
                } else {
                    Err(Error::invalid("all per-level m_t1 values must be positive"))
                }
            }
        }
    }

    /// Resolve into per-level event probabilities and a transition rule.
    pub fn resolve(&self, species: SpinSpecies) -> Result<ResolvedTelegraph> {
        self.validate()?;
        let rate = |m_t1: f64| 1.0 - (-1.0 / m_t1).exp();
        let spec = match (self, species) {
            (TelegraphModel::Frozen, _) => ResolvedTelegraph {
                event_prob: [0.0; 3],
                rule: TransitionRule::Rethermalize,
                species,
            },
            (TelegraphModel::Rethermalizing { m_t1 }, _) => ResolvedTelegraph {
                event_prob: [rate(*m_t1); 3],
                rule: TransitionRule::Rethermalize,
                species,
            },
            (TelegraphModel::NearestNeighbor { m_t1 }, SpinSpecies::Half) => {
                // A plain flip decays polarization by (1 - 2q) per step.
                let q = 0.5 * rate(*m_t1);
                ResolvedTelegraph {
                    event_prob: [q, 0.0, q],
                    rule: TransitionRule::NearestNeighbor,
                    species,
                }
            }
            (TelegraphModel::NearestNeighbor { m_t1 }, SpinSpecies::One) => {
                let q = rate(*m_t1);
                ResolvedTelegraph {
                    event_prob: [q, 2.0 * q, q],
                    rule: TransitionRule::NearestNeighbor,
                    species,
                }
            }
            (TelegraphModel::PerLevel { m_t1 }, _) => ResolvedTelegraph {
                event_prob: [rate(m_t1[0]), rate(m_t1[1]), rate(m_t1[2])],
                rule: TransitionRule::Rethermalize,
                species,
            },
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionRule {
    Rethermalize,
    NearestNeighbor,
}

/// Telegraph model resolved against a spin species.
#[derive(Debug, Clone)]
pub struct ResolvedTelegraph {
    event_prob: [f64; 3],
    rule: TransitionRule,
    species: SpinSpecies,
}

impl ResolvedTelegraph {
    pub fn event_prob(&self, level: Level) -> f64 {
        self.event_prob[level.index()]
    }

    /// Level after a transition event.
    pub fn next_level<R: Rng + ?Sized>(&self, level: Level, rng: &mut R) -> Level {
        match (self.rule, self.species) {
            (TransitionRule::Rethermalize, SpinSpecies::Half) => {
                if rng.gen_bool(0.5) {
                    Level::Up
                } else {
                    Level::Down
                }
            }
            (TransitionRule::Rethermalize, SpinSpecies::One) => match rng.gen_range(0..3u8) {
                0 => Level::Up,
                1 => Level::Zero,
                _ => Level::Down,
            },
            (TransitionRule::NearestNeighbor, SpinSpecies::Half) => match level {
                Level::Up => Level::Down,
                _ => Level::Up,
            },
            (TransitionRule::NearestNeighbor, SpinSpecies::One) => match level {
                Level::Up => Level::Zero,
                Level::Down => Level::Zero,
                Level::Zero => {
                    if rng.gen_bool(0.5) {
                        Level::Up
                    } else {
                        Level::Down
                    }
                }
            },
        }
    }

    /// Steps spent in `level` before the next event, capped at `cap`.
    pub fn dwell<R: Rng + ?Sized>(&self, level: Level, cap: u64, rng: &mut R) -> u64 {
        let q = self.event_prob(level);
        if q <= 0.0 {
            return cap;
        }
        if q >= 1.0 {
            return 1.min(cap);
        }
        let u: f64 = rng.gen();
        // Geometric with support {1, 2, ...}: P(G = g) = (1-q)^(g-1) q.
        let g = (1.0 - u).ln() / (1.0 - q).ln();
        if g >= cap as f64 {
            cap
        } else {
            (g.floor() as u64 + 1).min(cap)
        }
    }
}
