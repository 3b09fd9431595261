//! Mapping, routing and scheduling of circuits onto an atom array, plus the
//! analytic success estimate of a compiled schedule.

mod fidelity;
mod mapping;
mod route;
mod schedule;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;

use crate::arch::{span, Architecture, LossState, Site, SiteSet};
use crate::circuits::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::timing::GateDurations;

pub use fidelity::{decoherence_factor, estimate_success, ErrorModel};
pub use mapping::{map_circuit, Mapping, Placement, Region};
pub(crate) use route::gather;
pub use schedule::{schedule, split_step, step_is_legal};

/// Where a scheduled op came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "origin", content = "gate")]
pub enum OpOrigin {
    /// The n-th gate of the source circuit.
    Source(usize),
    /// A SWAP inserted by the compiler's router.
    Routing,
    /// A SWAP inserted while adapting to lost atoms.
    Recovery,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledOp {
    pub kind: GateKind,
    pub sites: Vec<Site>,
    pub origin: OpOrigin,
}

impl ScheduledOp {
    /// Routing and recovery SWAPs move qubits between sites; a SWAP that is
    /// part of the program does not change the layout.
    pub fn moves_qubits(&self) -> bool {
        self.kind == GateKind::Swap && !matches!(self.origin, OpOrigin::Source(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub ops: Vec<ScheduledOp>,
    pub duration: Duration,
}

/// Knobs for one compilation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompileOptions {
    /// Confine mapping and routing to this rectangle (whole array if None).
    pub region: Option<Region>,
    /// Range used while compiling; defaults to the architecture maximum.
    pub d_eff: Option<f64>,
    pub durations: GateDurations,
}


/// Lookup-table style effort spent producing a compilation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Effort {
    pub reads: u64,
    pub writes: u64,
}

/// A circuit placed, routed and scheduled on concrete sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    source: Arc<Circuit>,
    region: Region,
    d_eff: f64,
    durations: GateDurations,
    initial: Mapping,
    steps: Vec<Step>,
    final_mapping: Mapping,
    total_duration: Duration,
    ground_time: Vec<Duration>,
    swap_count: usize,
    effort: Effort,
}

impl CompiledCircuit {
    pub(crate) fn assemble(
        source: Arc<Circuit>,
        region: Region,
        d_eff: f64,
        durations: GateDurations,
        initial: Mapping,
        steps: Vec<Step>,
        effort: Effort,
    ) -> Self {
        let n = source.n_qubits();
        let mut occ = initial.occupancy();
        let mut busy = vec![Duration::ZERO; n];
        let mut total = Duration::ZERO;
        let mut swap_count = 0;
        let mut touched = vec![false; n];
        for step in &steps {
            total += step.duration;
            touched.iter_mut().for_each(|t| *t = false);
            for op in &step.ops {
                for s in &op.sites {
                    if let Some(&q) = occ.get(s) {
                        touched[q] = true;
                    }
                }
                if op.moves_qubits() {
                    swap_count += 1;
                    exchange(&mut occ, op.sites[0], op.sites[1]);
                }
            }
            for (q, &t) in touched.iter().enumerate() {
                if t {
                    busy[q] += step.duration;
                }
            }
        }
        let mut final_sites = vec![Site::new(0, 0); n];
        for (s, q) in occ {
            final_sites[q] = s;
        }
        let ground_time = busy.into_iter().map(|b| total - b).collect();
        Self {
            source,
            region,
            d_eff,
            durations,
            final_mapping: Mapping::new(final_sites).expect("swaps preserve injectivity"),
            initial,
            steps,
            total_duration: total,
            ground_time,
            swap_count,
            effort,
        }
    }

    /// Same circuit with a new layout and schedule; compile range and
    /// effort are kept.
    pub(crate) fn with_steps(&self, region: Region, initial: Mapping, steps: Vec<Step>) -> Self {
        Self::assemble(
            self.source.clone(),
            region,
            self.d_eff,
            self.durations,
            initial,
            steps,
            self.effort,
        )
    }

    pub fn source(&self) -> &Arc<Circuit> {
        &self.source
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn d_eff(&self) -> f64 {
        self.d_eff
    }

    pub fn durations(&self) -> &GateDurations {
        &self.durations
    }

    pub fn initial_mapping(&self) -> &Mapping {
        &self.initial
    }

    /// Layout after the last step.
    pub fn mapping(&self) -> &Mapping {
        &self.final_mapping
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn total_duration(&self) -> Duration {
        self.total_duration
    }

    /// Time each program qubit spends idle in the ground state.
    pub fn ground_time(&self) -> &[Duration] {
        &self.ground_time
    }

    /// SWAPs added by routing or recovery.
    pub fn swap_count(&self) -> usize {
        self.swap_count
    }

    pub fn effort(&self) -> Effort {
        self.effort
    }

    pub fn ops(&self) -> impl Iterator<Item = &ScheduledOp> {
        self.steps.iter().flat_map(|s| s.ops.iter())
    }

    /// Every atom the schedule relies on: the initial layout plus any site
    /// touched by an op.
    pub fn used_sites(&self, arch: &Architecture) -> SiteSet {
        let mut set = SiteSet::from_sites(arch, self.initial.sites().iter().copied());
        for op in self.ops() {
            for &s in &op.sites {
                set.insert(s);
            }
        }
        set
    }

    /// Final sites of the measured qubits.
    pub fn measured_sites(&self) -> Vec<Site> {
        self.source
            .measured()
            .iter()
            .map(|&q| self.final_mapping.site(q))
            .collect()
    }

    /// Checks every structural guarantee of a schedule against `loss`, with
    /// multi-qubit gates allowed to span at most `range`.
    pub fn check_invariants(&self, arch: &Architecture, loss: &LossState, range: f64) -> Result<(), String> {
        let used = self.used_sites(arch);
        for s in used.iter() {
            if !arch.contains(s) {
                return Err(format!("site {s} outside the array"));
            }
            if loss.is_lost(s) {
                return Err(format!("schedule relies on lost atom {s}"));
            }
            if !self.region.contains(s) {
                return Err(format!("site {s} outside region {:?}", self.region));
            }
        }
        let gates = self.source.gates();
        let mut occ = self.initial.occupancy();
        let mut next_gate: Vec<usize> = vec![0; self.source.n_qubits()];
        let mut emitted = vec![false; gates.len()];
        for (t, step) in self.steps.iter().enumerate() {
            if !step_is_legal(arch, step) {
                return Err(format!("step {t} has clashing gates or restriction zones"));
            }
            let longest = step.ops.iter().map(|op| self.durations.of(op.kind)).max().unwrap_or_default();
            if step.duration != longest {
                return Err(format!("step {t} duration mismatch"));
            }
            for op in &step.ops {
                if op.sites.len() != op.kind.arity() {
                    return Err(format!("step {t}: op arity mismatch"));
                }
                if op.sites.len() > 1 && !(span(&op.sites) <= range + 1e-9) {
                    return Err(format!("step {t}: {:?} spans beyond {range}", op.sites));
                }
                if let OpOrigin::Source(i) = op.origin {
                    let gate = gates.get(i).ok_or_else(|| format!("unknown gate {i}"))?;
                    if emitted[i] {
                        return Err(format!("gate {i} scheduled twice"));
                    }
                    emitted[i] = true;
                    for (k, &q) in gate.qubits.iter().enumerate() {
                        if occ.get(&op.sites[k]) != Some(&q) {
                            return Err(format!("gate {i}: qubit {q} not at {}", op.sites[k]));
                        }
                        // per-qubit order: every earlier gate on q already ran
                        let expected = gates[next_gate[q]..i].iter().position(|g| g.qubits.contains(&q));
                        if expected.is_some() {
                            return Err(format!("gate {i} overtakes an earlier gate on qubit {q}"));
                        }
                        next_gate[q] = i + 1;
                    }
                }
            }
            for op in step.ops.iter().filter(|op| op.moves_qubits()) {
                exchange(&mut occ, op.sites[0], op.sites[1]);
            }
        }
        if let Some(i) = emitted.iter().position(|e| !e) {
            return Err(format!("gate {i} never scheduled"));
        }
        Ok(())
    }

    pub fn report(&self, error_model: &ErrorModel) -> CompiledReport {
        let mut occ = self.initial.occupancy();
        let steps = self
            .steps
            .iter()
            .map(|step| {
                let ops = step
                    .ops
                    .iter()
                    .map(|op| OpReport {
                        kind: op.kind.name(),
                        params: op.kind.params(),
                        sites: op.sites.iter().map(|s| [s.row, s.col]).collect(),
                        qubits: op.sites.iter().map(|s| occ.get(s).copied()).collect(),
                        origin: op.origin,
                    })
                    .collect();
                for op in step.ops.iter().filter(|op| op.moves_qubits()) {
                    exchange(&mut occ, op.sites[0], op.sites[1]);
                }
                StepReport {
                    duration_us: step.duration.as_secs_f64() * 1e6,
                    ops,
                }
            })
            .collect();
        let table = |m: &Mapping| {
            m.sites()
                .iter()
                .enumerate()
                .map(|(q, s)| (q, [s.row, s.col]))
                .collect::<BTreeMap<_, _>>()
        };
        CompiledReport {
            n_qubits: self.source.n_qubits(),
            d_eff: self.d_eff,
            initial_mapping: table(&self.initial),
            final_mapping: table(&self.final_mapping),
            steps,
            total_duration_us: self.total_duration.as_secs_f64() * 1e6,
            ground_time_us: self.ground_time.iter().map(|d| d.as_secs_f64() * 1e6).collect(),
            swap_count: self.swap_count,
            estimated_success: estimate_success(self, error_model),
        }
    }
}

fn exchange(occ: &mut HashMap<Site, usize>, a: Site, b: Site) {
    let qa = occ.remove(&a);
    let qb = occ.remove(&b);
    if let Some(q) = qa {
        occ.insert(b, q);
    }
    if let Some(q) = qb {
        occ.insert(a, q);
    }
}

/// JSON view of a compilation.
#[derive(Debug, Clone, Serialize)]
pub struct CompiledReport {
    pub n_qubits: usize,
    pub d_eff: f64,
    pub initial_mapping: BTreeMap<usize, [usize; 2]>,
    pub final_mapping: BTreeMap<usize, [usize; 2]>,
    pub steps: Vec<StepReport>,
    pub total_duration_us: f64,
    pub ground_time_us: Vec<f64>,
    pub swap_count: usize,
    pub estimated_success: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub duration_us: f64,
    pub ops: Vec<OpReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    pub sites: Vec<[usize; 2]>,
    pub qubits: Vec<Option<usize>>,
    #[serde(flatten)]
    pub origin: OpOrigin,
}

/// Routes `circuit` from `mapping` with permanent SWAPs and packs the result
/// into time steps.
pub fn route_and_schedule(
    circuit: Arc<Circuit>,
    mapping: Mapping,
    arch: &Architecture,
    region: Region,
    d_eff: f64,
    loss: &LossState,
    durations: &GateDurations,
) -> Result<CompiledCircuit> {
    let mut forbidden = loss.as_set().clone();
    for s in arch.sites().filter(|&s| !region.contains(s)) {
        forbidden.insert(s);
    }
    for &s in mapping.sites() {
        arch.check(s)?;
        if forbidden.contains(s) {
            return Err(Error::InvalidConfig(format!(
                "mapping uses unusable site {s}"
            )));
        }
    }

    let mut pos: Vec<Site> = mapping.sites().to_vec();
    let mut occ = mapping.occupancy();
    let mut ops = Vec::with_capacity(circuit.gates().len());
    let mut expansions = 0u64;
    let mut swaps = 0u64;
    for (i, gate) in circuit.gates().iter().enumerate() {
        let mut sites: Vec<Site> = gate.qubits.iter().map(|&q| pos[q]).collect();
        if sites.len() > 1 && !(span(&sites) <= d_eff + 1e-9) {
            let g = gather(arch, &sites, d_eff, &forbidden).map_err(|from| Error::RoutingFailure {
                from,
                to: *sites.last().unwrap(),
            })?;
            expansions += g.expansions as u64;
            for (a, b) in g.swaps {
                ops.push(ScheduledOp {
                    kind: GateKind::Swap,
                    sites: vec![a, b],
                    origin: OpOrigin::Routing,
                });
                swaps += 1;
                let qa = occ.get(&a).copied();
                let qb = occ.get(&b).copied();
                exchange(&mut occ, a, b);
                if let Some(q) = qa {
                    pos[q] = b;
                }
                if let Some(q) = qb {
                    pos[q] = a;
                }
            }
            sites = gate.qubits.iter().map(|&q| pos[q]).collect();
            debug_assert_eq!(sites, g.sites);
        }
        ops.push(ScheduledOp {
            kind: gate.kind,
            sites,
            origin: OpOrigin::Source(i),
        });
    }
    let steps = schedule(arch, ops, durations);
    let effort = Effort {
        reads: expansions,
        writes: mapping.len() as u64 + swaps,
    };
    Ok(CompiledCircuit::assemble(
        circuit, region, d_eff, *durations, mapping, steps, effort,
    ))
}

/// Map then route and schedule, compiling against range `d_eff` (which may
/// be tighter than what the hardware can execute).
pub fn compile(
    circuit: Arc<Circuit>,
    arch: &Architecture,
    loss: &LossState,
    options: &CompileOptions,
) -> Result<CompiledCircuit> {
    let d_eff = options.d_eff.unwrap_or(arch.d_max());
    if !(d_eff > 0.0) || d_eff > arch.d_max() + 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "compile range {d_eff} must be in (0, {}]",
            arch.d_max()
        )));
    }
    let region = options.region.unwrap_or_else(|| Region::whole(arch));
    let placement = map_circuit(&circuit, arch, &region, loss, d_eff)?;
    let mut cc = route_and_schedule(
        circuit,
        placement.mapping,
        arch,
        region,
        d_eff,
        loss,
        &options.durations,
    )?;
    cc.effort.reads += placement.site_evaluations as u64;
    Ok(cc)
}

/// True when every multi-qubit op spans at most `range`.
pub fn all_in_range(cc: &CompiledCircuit, range: f64) -> bool {
    cc.ops().all(|op| op.sites.len() < 2 || span(&op.sites) <= range + 1e-9)
}
