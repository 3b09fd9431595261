use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CompiledCircuit;
use crate::circuits::GateKind;

/// Gate fidelities and ground-state coherence times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorModel {
    pub f_1q: f64,
    pub f_2q: f64,
    /// Ground-state T1, seconds.
    pub t1_ground: f64,
    /// Ground-state T2, seconds.
    pub t2_ground: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            f_1q: 0.996,
            f_2q: 0.965,
            t1_ground: 7.0,
            t2_ground: 30.0,
        }
    }
}

impl ErrorModel {
    pub fn validate(&self) -> Result<(), String> {
        for (name, f) in [("f_1q", self.f_1q), ("f_2q", self.f_2q)] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(format!("{name} = {f} must be in (0, 1]"));
            }
        }
        for (name, t) in [("t1_ground", self.t1_ground), ("t2_ground", self.t2_ground)] {
            if !(t > 0.0) {
                return Err(format!("{name} = {t} must be positive"));
            }
        }
        Ok(())
    }

    /// Success probability of one gate. A SWAP counts as three two-qubit
    /// gates and a native k-qubit gate (k >= 3) as k - 1 of them.
    pub fn gate_fidelity(&self, kind: GateKind) -> f64 {
        match (kind, kind.arity()) {
            (GateKind::Swap, _) => self.f_2q.powi(3),
            (_, 1) => self.f_1q,
            (_, k) => self.f_2q.powi(k as i32 - 1),
        }
    }
}

/// Probability that a qubit idling for `ground` does not decohere.
pub fn decoherence_factor(ground: Duration, em: &ErrorModel) -> f64 {
    let g = ground.as_secs_f64();
    (-g / em.t1_ground - g / em.t2_ground).exp()
}

/// Product of all gate fidelities and every qubit's decoherence factor.
///
/// The gate product is taken from per-class counts, so reordering or
/// splitting steps never perturbs the result.
pub fn estimate_success(cc: &CompiledCircuit, em: &ErrorModel) -> f64 {
    let (mut one, mut two) = (0i32, 0i32);
    for op in cc.ops() {
        match (op.kind, op.kind.arity()) {
            (GateKind::Swap, _) => two += 3,
            (_, 1) => one += 1,
            (_, k) => two += k as i32 - 1,
        }
    }
    let gates = em.f_1q.powi(one) * em.f_2q.powi(two);
    let idle: f64 = cc
        .ground_time()
        .iter()
        .map(|&g| decoherence_factor(g, em))
        .product();
    gates * idle
}
