//! Per-shot atom loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{Architecture, LossState, Site, SiteSet};

/// Per-shot loss probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossRates {
    /// Background loss, applied to every atom still in the array.
    pub p_env: f64,
    /// Extra loss for atoms that are measured at the end of the shot.
    pub p_meas: f64,
}

impl Default for LossRates {
    fn default() -> Self {
        Self {
            p_env: 0.00068,
            p_meas: 0.02,
        }
    }
}

impl LossRates {
    pub const NONE: LossRates = LossRates {
        p_env: 0.0,
        p_meas: 0.0,
    };

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("p_env", self.p_env), ("p_meas", self.p_meas)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} must be in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Combined loss probability of one measured atom per shot.
    pub fn measured_loss(&self) -> f64 {
        1.0 - (1.0 - self.p_env) * (1.0 - self.p_meas)
    }
}

/// Draws the atoms lost during one shot.
///
/// Every atom in the array that is not already lost takes an environmental
/// draw; survivors among `measured` then take a measurement draw. Sites are
/// visited row-major, so the outcome is a pure function of the RNG state.
pub fn sample_shot_losses<R: Rng + ?Sized>(
    rng: &mut R,
    arch: &Architecture,
    loss: &LossState,
    measured: &SiteSet,
    rates: &LossRates,
) -> Vec<Site> {
    let mut out = Vec::new();
    for s in arch.sites() {
        if loss.is_lost(s) {
            continue;
        }
        let gone = rng.gen::<f64>() < rates.p_env || (measured.contains(s) && rng.gen::<f64>() < rates.p_meas);
        if gone {
            out.push(s);
        }
    }
    out
}
