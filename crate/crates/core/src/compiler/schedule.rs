use std::time::Duration;

use crate::arch::{Architecture, SiteSet};
use crate::timing::GateDurations;

use super::{ScheduledOp, Step};

/// A time step under construction: the sites its gates touch and the union
/// of their restriction zones.
struct Slot {
    ops: Vec<ScheduledOp>,
    touched: SiteSet,
    zone: SiteSet,
    duration: Duration,
}

impl Slot {
    fn new(arch: &Architecture) -> Self {
        Self {
            ops: Vec::new(),
            touched: arch.empty_set(),
            zone: arch.empty_set(),
            duration: Duration::ZERO,
        }
    }

    fn admits(&self, op: &ScheduledOp, zone: &SiteSet) -> bool {
        op.sites
            .iter()
            .all(|&s| !self.touched.contains(s) && !self.zone.contains(s))
            && zone.is_disjoint(&self.touched)
    }

    fn push(&mut self, op: ScheduledOp, zone: SiteSet, duration: Duration) {
        for &s in &op.sites {
            self.touched.insert(s);
        }
        self.zone.union_with(&zone);
        self.duration = self.duration.max(duration);
        self.ops.push(op);
    }

    fn finish(self) -> Step {
        Step {
            ops: self.ops,
            duration: self.duration,
        }
    }
}

/// Greedy as-soon-as-possible list scheduling.
///
/// Each op goes into the earliest step after the last op on any of its
/// sites in which it neither shares a site with, nor stands in the
/// restriction zone of, a gate already there (and vice versa).
pub fn schedule(arch: &Architecture, ops: Vec<ScheduledOp>, durations: &GateDurations) -> Vec<Step> {
    let mut ready = vec![0usize; arch.n_sites()];
    let mut slots: Vec<Slot> = Vec::new();
    for op in ops {
        let zone = arch.zone_unchecked(&op.sites);
        let dur = durations.of(op.kind);
        let earliest = op.sites.iter().map(|&s| ready[arch.index(s)]).max().unwrap_or(0);
        let mut t = earliest;
        loop {
            if t == slots.len() {
                slots.push(Slot::new(arch));
            }
            if slots[t].admits(&op, &zone) {
                break;
            }
            t += 1;
        }
        for &s in &op.sites {
            ready[arch.index(s)] = t + 1;
        }
        slots[t].push(op, zone, dur);
    }
    slots.into_iter().map(Slot::finish).collect()
}

/// Splits one step whose gates have come into conflict (after their sites
/// were moved) into consecutive conflict-free steps, first-fit in op order.
/// Ops within one step never share sites, so any partition preserves order.
pub fn split_step(arch: &Architecture, step: Step, durations: &GateDurations) -> Vec<Step> {
    let mut slots: Vec<Slot> = Vec::new();
    for op in step.ops {
        let zone = arch.zone_unchecked(&op.sites);
        let dur = durations.of(op.kind);
        match slots.iter_mut().find(|s| s.admits(&op, &zone)) {
            Some(slot) => slot.push(op, zone, dur),
            None => {
                let mut slot = Slot::new(arch);
                slot.push(op, zone, dur);
                slots.push(slot);
            }
        }
    }
    slots.into_iter().map(Slot::finish).collect()
}

/// True when no two gates of `step` clash on sites or restriction zones.
pub fn step_is_legal(arch: &Architecture, step: &Step) -> bool {
    let zones: Vec<SiteSet> = step.ops.iter().map(|op| arch.zone_unchecked(&op.sites)).collect();
    for (i, a) in step.ops.iter().enumerate() {
        for (j, b) in step.ops.iter().enumerate() {
            if i == j {
                continue;
            }
            if a.sites.iter().any(|s| b.sites.contains(s) || zones[j].contains(*s)) {
                return false;
            }
        }
    }
    true
}
