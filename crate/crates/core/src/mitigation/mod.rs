//! Recovering a compiled circuit after atoms are lost.

mod adapt;
mod strategy;
mod tiles;


use std::sync::Arc;
use std::time::Duration;

use crate::arch::{Architecture, LossState, Site, SiteSet};
use crate::circuits::Circuit;
use crate::compiler::{compile, estimate_success, CompileOptions, CompiledCircuit, ErrorModel};
use crate::error::Result;
use crate::timing::TimingModel;

pub use adapt::{Scope, ShiftMethod};
pub use strategy::{InnerMethod, Strategy, DEFAULT_THRESHOLD};
pub use tiles::{bounding_box, make_tile_plan, max_instances, parallel_plan, BoxMode, TilePlan};

use adapt::{plan_hardware_shift, plan_interaction_shift, reroute_layout, Layout};

/// What a recovery attempt produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// The circuit was patched in place.
    Adapted(CompiledCircuit),
    /// The circuit was recompiled into another tile.
    Relocated { circuit: CompiledCircuit, tile: usize },
    /// Nothing works short of reloading the array.
    ReloadRequired,
}

/// A recovery plus the lookup effort it took.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub recovery: Recovery,
    pub reads: u64,
    pub writes: u64,
}

impl RecoveryOutcome {
    fn reload(reads: u64, writes: u64) -> Self {
        Self {
            recovery: Recovery::ReloadRequired,
            reads,
            writes,
        }
    }

    pub fn circuit(&self) -> Option<&CompiledCircuit> {
        match &self.recovery {
            Recovery::Adapted(c) | Recovery::Relocated { circuit: c, .. } => Some(c),
            Recovery::ReloadRequired => None,
        }
    }
}

/// Classical processing time of a recovery.
pub fn recovery_cost(outcome: &RecoveryOutcome, timing: &TimingModel) -> Duration {
    timing.table_cost(outcome.reads, outcome.writes)
}

/// Moves every qubit off lost atoms with `method` (starting with `first`
/// when given, then row-major), then reroutes gates that ended up beyond
/// `range`. The result never uses a lost atom and never leaves `scope`.
pub fn adapt(
    cc: &CompiledCircuit,
    arch: &Architecture,
    loss: &LossState,
    method: ShiftMethod,
    range: f64,
    scope: &Scope,
    first: Option<Site>,
) -> RecoveryOutcome {
    let mut layout = Layout::of(cc);
    let (mut reads, mut writes) = (0u64, 0u64);
    let mut next = first.filter(|&s| loss.is_lost(s));
    loop {
        let used = layout.used(arch);
        let lost = match next.take() {
            Some(s) if used.contains(s) => s,
            _ => match used.iter().find(|&s| loss.is_lost(s)) {
                Some(s) => s,
                None => break,
            },
        };
        let (plan, r) = match method {
            ShiftMethod::Hardware => plan_hardware_shift(arch, &used, loss, lost, scope),
            ShiftMethod::Interaction { d } => plan_interaction_shift(arch, &used, loss, lost, d, scope),
        };
        reads += r;
        let Some(moves) = plan else {
            return RecoveryOutcome::reload(reads, writes);
        };
        writes += moves.len() as u64;
        layout.remap(&moves);
    }
    let forbidden = scope.forbidden(arch, loss);
    match reroute_layout(arch, &mut layout, range, &forbidden, cc.durations()) {
        Ok((r, w)) => {
            reads += r;
            writes += w;
        }
        Err(_) => return RecoveryOutcome::reload(reads, writes),
    }
    RecoveryOutcome {
        recovery: Recovery::Adapted(layout.build(cc, scope.region)),
        reads,
        writes,
    }
}

/// Row/column shift away from `lost_site` within the circuit's own region,
/// rerouting at the hardware range.
pub fn shift_remap_hardware(
    cc: &CompiledCircuit,
    arch: &Architecture,
    loss: &LossState,
    lost_site: Site,
) -> RecoveryOutcome {
    adapt(cc, arch, loss, ShiftMethod::Hardware, arch.d_max(), &Scope::of(cc), Some(lost_site))
}

/// Interaction-path shift (hops up to `d`) away from `lost_site` within the
/// circuit's own region, rerouting at the hardware range.
pub fn shift_remap_interaction(
    cc: &CompiledCircuit,
    arch: &Architecture,
    loss: &LossState,
    lost_site: Site,
    d: f64,
) -> RecoveryOutcome {
    let method = ShiftMethod::Interaction { d };
    adapt(cc, arch, loss, method, arch.d_max(), &Scope::of(cc), Some(lost_site))
}

/// Patches only the gates that span more than `range`; fails if any used
/// atom is lost.
pub fn reroute_out_of_range(
    cc: &CompiledCircuit,
    arch: &Architecture,
    loss: &LossState,
    range: f64,
) -> RecoveryOutcome {
    let scope = Scope::of(cc);
    let mut layout = Layout::of(cc);
    if layout.used(arch).iter().any(|s| loss.is_lost(s)) {
        return RecoveryOutcome::reload(0, 0);
    }
    let forbidden = scope.forbidden(arch, loss);
    match reroute_layout(arch, &mut layout, range, &forbidden, cc.durations()) {
        Ok((reads, writes)) => RecoveryOutcome {
            recovery: Recovery::Adapted(layout.build(cc, scope.region)),
            reads,
            writes,
        },
        Err(_) => RecoveryOutcome::reload(0, 0),
    }
}

/// Recompiles into the next unvisited tile (row-major) whose estimate is at
/// least `floor`. Tiles holding an `occupied` atom are skipped without being
/// visited; every other tile tried is marked visited.
#[allow(clippy::too_many_arguments)]
pub fn relocate(
    circuit: &Arc<Circuit>,
    arch: &Architecture,
    loss: &LossState,
    plan: &mut TilePlan,
    options: &CompileOptions,
    error_model: &ErrorModel,
    floor: f64,
    occupied: Option<&SiteSet>,
) -> RecoveryOutcome {
    let (mut reads, mut writes) = (0u64, 0u64);
    let candidates: Vec<usize> = plan
        .unvisited()
        .filter(|&t| occupied.is_none_or(|o| plan.tiles[t].sites().all(|s| !o.contains(s))))
        .collect();
    for tile in candidates {
        plan.mark_visited(tile);
        reads += plan.tiles[tile].area() as u64;
        let opts = CompileOptions {
            region: Some(plan.tiles[tile]),
            ..options.clone()
        };
        let Ok(cc) = compile(circuit.clone(), arch, loss, &opts) else {
            continue;
        };
        reads += cc.effort().reads;
        writes += cc.effort().writes;
        if estimate_success(&cc, error_model) >= floor {
            return RecoveryOutcome {
                recovery: Recovery::Relocated { circuit: cc, tile },
                reads,
                writes,
            };
        }
    }
    RecoveryOutcome::reload(reads, writes)
}

/// Compiles `instances` copies into pairwise disjoint tiles of `plan`
/// (marking them visited). Returns (tile, circuit) pairs.
pub fn build_parallel(
    circuit: &Arc<Circuit>,
    arch: &Architecture,
    loss: &LossState,
    plan: &mut TilePlan,
    instances: usize,
    options: &CompileOptions,
) -> Result<Vec<(usize, CompiledCircuit)>> {
    let tiles = plan.disjoint_tiles(instances).ok_or(crate::Error::NotEnoughDisjointTiles {
        requested: instances,
        available: plan.max_disjoint(),
    })?;
    let mut out = Vec::with_capacity(instances);
    for tile in tiles {
        plan.mark_visited(tile);
        let opts = CompileOptions {
            region: Some(plan.tiles[tile]),
            ..options.clone()
        };
        out.push((tile, compile(circuit.clone(), arch, loss, &opts)?));
    }
    Ok(out)
}

/// Union of the atoms used by every circuit except `skip`.
pub fn reserved_sites(arch: &Architecture, circuits: &[&CompiledCircuit], skip: usize) -> SiteSet {
    let mut set = arch.empty_set();
    for (i, cc) in circuits.iter().enumerate() {
        if i != skip {
            set.union_with(&cc.used_sites(arch));
        }
    }
    set
}
