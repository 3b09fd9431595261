use std::collections::HashMap;
use std::time::Duration;

use crate::arch::{span, Architecture, LossState, Site, SiteSet};
use crate::circuits::GateKind;
use crate::compiler::{gather, split_step, step_is_legal, CompiledCircuit, Mapping, OpOrigin, Region, ScheduledOp, Step};
use crate::timing::GateDurations;

/// Which local shift moves qubits off a lost atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftMethod {
    /// Shift along one array row or column towards the side with most room.
    Hardware,
    /// Shift along the shortest interaction path (hops up to `d`) to the
    /// nearest free atom.
    Interaction { d: f64 },
}

/// Where a recovery may act.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub region: Region,
    /// Atoms owned by other circuits sharing the array.
    pub reserved: Option<&'a SiteSet>,
}

impl<'a> Scope<'a> {
    pub fn of(cc: &CompiledCircuit) -> Self {
        Self {
            region: cc.region(),
            reserved: None,
        }
    }

    /// Sites a recovery must never move a qubit onto.
    pub(crate) fn forbidden(&self, arch: &Architecture, loss: &LossState) -> SiteSet {
        let mut f = loss.as_set().clone();
        for s in arch.sites().filter(|&s| !self.region.contains(s)) {
            f.insert(s);
        }
        if let Some(r) = self.reserved {
            f.union_with(r);
        }
        f
    }
}

/// Editable copy of a schedule.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub initial: Vec<Site>,
    pub steps: Vec<Step>,
}

impl Layout {
    pub fn of(cc: &CompiledCircuit) -> Self {
        Self {
            initial: cc.initial_mapping().sites().to_vec(),
            steps: cc.steps().to_vec(),
        }
    }

    pub fn used(&self, arch: &Architecture) -> SiteSet {
        let mut set = SiteSet::from_sites(arch, self.initial.iter().copied());
        for op in self.steps.iter().flat_map(|s| &s.ops) {
            for &s in &op.sites {
                set.insert(s);
            }
        }
        set
    }

    /// Relabels sites everywhere in the schedule.
    pub fn remap(&mut self, moves: &[(Site, Site)]) {
        let table: HashMap<Site, Site> = moves.iter().copied().collect();
        let f = |s: &mut Site| {
            if let Some(&t) = table.get(s) {
                *s = t;
            }
        };
        self.initial.iter_mut().for_each(f);
        for op in self.steps.iter_mut().flat_map(|s| s.ops.iter_mut()) {
            op.sites.iter_mut().for_each(f);
        }
    }

    pub fn build(self, cc: &CompiledCircuit, region: Region) -> CompiledCircuit {
        let mapping = Mapping::new(self.initial).expect("remaps are injective");
        cc.with_steps(region, mapping, self.steps)
    }
}

const DIRECTIONS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

fn ray(arch: &Architecture, from: Site, dir: (isize, isize), scope: &Scope) -> Vec<Site> {
    let mut out = Vec::new();
    let (mut r, mut c) = (from.row as isize, from.col as isize);
    loop {
        r += dir.0;
        c += dir.1;
        if r < 0 || c < 0 || r as usize >= arch.rows() || c as usize >= arch.cols() {
            break;
        }
        let s = Site::new(r as usize, c as usize);
        if !scope.region.contains(s) || scope.reserved.is_some_and(|x| x.contains(s)) {
            break;
        }
        out.push(s);
    }
    out
}

/// Row/column shift away from `lost`.
///
/// The four straight rays from the lost atom are scanned and the one with
/// the most free atoms (neither lost nor used) is taken, ties broken up,
/// down, left, right. Qubits on the ray slide outward in order, each onto
/// the next usable atom, until the displacement is absorbed by a free atom.
pub(crate) fn plan_hardware_shift(
    arch: &Architecture,
    used: &SiteSet,
    loss: &LossState,
    lost: Site,
    scope: &Scope,
) -> (Option<Vec<(Site, Site)>>, u64) {
    let rays: Vec<Vec<Site>> = DIRECTIONS.iter().map(|&d| ray(arch, lost, d, scope)).collect();
    let mut reads: u64 = rays.iter().map(|r| r.len() as u64).sum();
    let free = |s: Site| !loss.is_lost(s) && !used.contains(s);
    let mut order: Vec<(usize, usize)> = rays
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().filter(|&&s| free(s)).count(), i))
        .filter(|&(n, _)| n > 0)
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in order {
        let (mut movers, mut homes) = (vec![lost], Vec::new());
        for &s in &rays[i] {
            reads += 1;
            if used.contains(s) {
                movers.push(s);
            }
            if !loss.is_lost(s) {
                homes.push(s);
            }
            if movers.len() == homes.len() {
                return (Some(movers.into_iter().zip(homes).collect()), reads);
            }
        }
    }
    (None, reads)
}

/// Shift along the shortest interaction path (hops up to `d`) to the
/// nearest free atom; every qubit on the path moves one hop outward.
pub(crate) fn plan_interaction_shift(
    arch: &Architecture,
    used: &SiteSet,
    loss: &LossState,
    lost: Site,
    d: f64,
    scope: &Scope,
) -> (Option<Vec<(Site, Site)>>, u64) {
    let forbidden = scope.forbidden(arch, loss);
    let search = arch.shortest_path_to(lost, d, &forbidden, |s| {
        s != lost && !used.contains(s) && !forbidden.contains(s)
    });
    match search {
        Some(found) => {
            let moves = found.path.windows(2).map(|w| (w[0], w[1])).collect();
            (Some(moves), found.expansions as u64)
        }
        None => (None, arch.n_sites() as u64),
    }
}

fn step_of(ops: Vec<ScheduledOp>, durations: &GateDurations) -> Step {
    let duration = ops.iter().map(|op| durations.of(op.kind)).max().unwrap_or(Duration::ZERO);
    Step { ops, duration }
}

/// Repairs a remapped schedule in place without reordering anything.
///
/// Steps whose gates now clash are split; every gate that spans more than
/// `range` is pulled into its own step, preceded by SWAPs that bring its
/// operands together and followed by the same SWAPs reversed, so the
/// layout seen by later steps is unchanged. Returns (reads, writes).
pub(crate) fn reroute_layout(
    arch: &Architecture,
    layout: &mut Layout,
    range: f64,
    forbidden: &SiteSet,
    durations: &GateDurations,
) -> Result<(u64, u64), Site> {
    let (mut reads, mut writes) = (0u64, 0u64);
    let mut out = Vec::with_capacity(layout.steps.len());
    for step in std::mem::take(&mut layout.steps) {
        let parts = if step_is_legal(arch, &step) {
            vec![step]
        } else {
            split_step(arch, step, durations)
        };
        for part in parts {
            let (far, near): (Vec<_>, Vec<_>) = part
                .ops
                .into_iter()
                .partition(|op| op.sites.len() > 1 && !(span(&op.sites) <= range + 1e-9));
            if far.is_empty() {
                out.push(step_of(near, durations));
                continue;
            }
            if !near.is_empty() {
                out.push(step_of(near, durations));
            }
            for mut op in far {
                let g = gather(arch, &op.sites, range, forbidden)?;
                reads += g.expansions as u64;
                writes += 2 * g.swaps.len() as u64;
                let swap = |&(a, b): &(Site, Site)| {
                    step_of(
                        vec![ScheduledOp {
                            kind: GateKind::Swap,
                            sites: vec![a, b],
                            origin: OpOrigin::Recovery,
                        }],
                        durations,
                    )
                };
                out.extend(g.swaps.iter().map(swap));
                op.sites = g.sites;
                out.push(step_of(vec![op], durations));
                out.extend(g.swaps.iter().rev().map(swap));
            }
        }
    }
    layout.steps = out;
    Ok((reads, writes))
}
