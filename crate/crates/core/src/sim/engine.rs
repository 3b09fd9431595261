use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CountMode, SimConfig, TimeBreakdown, TraceEvent, TracePoint, TrialRecord};
use crate::arch::{LossState, SiteSet};
use crate::circuits::Circuit;
use crate::compiler::{compile, estimate_success, CompileOptions, CompiledCircuit, Region};
use crate::error::{Error, Result};
use crate::loss::sample_shot_losses;
use crate::mitigation::{
    adapt, build_parallel, make_tile_plan, max_instances, parallel_plan, recovery_cost, relocate, Recovery, Scope,
    ShiftMethod, Strategy, TilePlan,
};

/// Below this per-shot success chance a trial is treated as never finishing.
const MIN_SHOT_SUCCESS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Instance {
    cc: CompiledCircuit,
    tile: Option<usize>,
    /// Estimate of a fresh compile into the same place.
    fresh: f64,
    estimate: f64,
    used: SiteSet,
}

/// What to do when a local fix is not good enough.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fallback {
    Reload,
    Relocate,
}

/// A validated configuration with its fresh deployment compiled once and
/// shared by every trial.
#[derive(Debug, Clone)]
pub struct Prepared {
    circuit: Arc<Circuit>,
    config: SimConfig,
    options: CompileOptions,
    fresh: Vec<Instance>,
    fresh_plan: Option<TilePlan>,
    tile_fresh: Vec<f64>,
}

impl Prepared {
    pub fn new(circuit: Arc<Circuit>, config: SimConfig) -> Result<Self> {
        let arch = &config.arch;
        if config.shot_target == 0 {
            return Err(Error::InvalidConfig("shot target must be at least 1".into()));
        }
        config.rates.validate().map_err(Error::InvalidConfig)?;
        config.error_model.validate().map_err(Error::InvalidConfig)?;
        config.strategy.validate(arch)?;
        if let Some(t) = config.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!("threshold {t} must be in [0, 1]")));
            }
        }
        let options = CompileOptions {
            region: None,
            d_eff: Some(config.strategy.compile_range(arch)),
            durations: config.timing.gates,
        };
        let loss = LossState::new(arch);
        let n = circuit.n_qubits();
        let em = &config.error_model;
        let (mut plan, deployed) = match config.strategy {
            Strategy::RelocateTiles { mode, .. } => {
                let mut plan = make_tile_plan(arch, n, mode)?;
                let dep = build_parallel(&circuit, arch, &loss, &mut plan, 1, &options)?;
                (Some(plan), dep.into_iter().map(|(t, c)| (Some(t), c)).collect::<Vec<_>>())
            }
            Strategy::FullParallel { mode } => {
                let k = max_instances(arch, n);
                if k == 0 {
                    return Err(Error::NotEnoughDisjointTiles {
                        requested: 1,
                        available: 0,
                    });
                }
                let mut plan = parallel_plan(arch, n, mode, k)?;
                let dep = build_parallel(&circuit, arch, &loss, &mut plan, k, &options)?;
                (Some(plan), dep.into_iter().map(|(t, c)| (Some(t), c)).collect())
            }
            Strategy::PartialParallel { mode, instances } => {
                let mut plan = parallel_plan(arch, n, mode, instances)?;
                let dep = build_parallel(&circuit, arch, &loss, &mut plan, instances, &options)?;
                (Some(plan), dep.into_iter().map(|(t, c)| (Some(t), c)).collect())
            }
            _ => (None, vec![(None, compile(circuit.clone(), arch, &loss, &options)?)]),
        };
        let tile_fresh = match &plan {
            Some(p) => p
                .tiles
                .iter()
                .map(|&region| {
                    let opts = CompileOptions {
                        region: Some(region),
                        ..options.clone()
                    };
                    compile(circuit.clone(), arch, &loss, &opts)
                        .map(|cc| estimate_success(&cc, em))
                        .unwrap_or(0.0)
                })
                .collect(),
            None => Vec::new(),
        };
        let fresh: Vec<Instance> = deployed
            .into_iter()
            .map(|(tile, cc)| {
                let estimate = estimate_success(&cc, em);
                Instance {
                    used: cc.used_sites(arch),
                    fresh: estimate,
                    estimate,
                    tile,
                    cc,
                }
            })
            .collect();

        let best_shot = fresh
            .iter()
            .map(|x| {
                let measured = x.cc.measured_sites().len() as i32;
                (1.0 - config.rates.p_env).powi(x.used.len() as i32) * (1.0 - config.rates.p_meas).powi(measured)
            })
            .fold(0.0, f64::max);
        if config.count_mode == CountMode::Successful && best_shot < MIN_SHOT_SUCCESS {
            return Err(Error::NonterminatingConfig(format!(
                "a fresh shot succeeds with probability {best_shot:.3e}"
            )));
        }
        if let Some(p) = plan.as_mut() {
            p.reset();
            for x in &fresh {
                p.mark_visited(x.tile.expect("tiled deployments carry tiles"));
            }
        }
        Ok(Self {
            circuit,
            config,
            options,
            fresh,
            fresh_plan: plan,
            tile_fresh,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Concurrent copies of the circuit.
    pub fn instances(&self) -> usize {
        self.fresh.len()
    }

    /// Freshly compiled circuits, one per instance.
    pub fn fresh_circuits(&self) -> impl Iterator<Item = &CompiledCircuit> {
        self.fresh.iter().map(|x| &x.cc)
    }

    /// Runs one trial; everything random derives from `seed`.
    pub fn run(&self, seed: u64) -> TrialRecord {
        Trial::new(self, seed).run()
    }
}

/// Prepares and runs a single trial.
pub fn run_trial(circuit: Arc<Circuit>, config: SimConfig, seed: u64) -> Result<TrialRecord> {
    Ok(Prepared::new(circuit, config)?.run(seed))
}

/// Runs `trials` independent trials in parallel, trial `i` seeded with
/// `base_seed + i`. Output order follows the trial index.
pub fn run_trials(circuit: Arc<Circuit>, config: SimConfig, trials: usize, base_seed: u64) -> Result<Vec<TrialRecord>> {
    let prepared = Prepared::new(circuit, config)?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|i| prepared.run(base_seed.wrapping_add(i)))
        .collect())
}

struct Trial<'a> {
    p: &'a Prepared,
    rng: ChaCha8Rng,
    loss: LossState,
    plan: Option<TilePlan>,
    inst: Vec<Instance>,
    measured: SiteSet,
    rec: TrialRecord,
    cycle: u64,
    shot: u64,
}

impl<'a> Trial<'a> {
    fn new(p: &'a Prepared, seed: u64) -> Self {
        let arch = &p.config.arch;
        let mut t = Self {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
            loss: LossState::new(arch),
            plan: p.fresh_plan.clone(),
            inst: p.fresh.clone(),
            measured: arch.empty_set(),
            rec: TrialRecord {
                seed,
                instances: p.fresh.len(),
                aggregate_shots: 0,
                successful_shots: 0,
                discarded_shots: 0,
                reloads: 0,
                relocations: 0,
                adaptations: 0,
                cycle_shots: Vec::new(),
                time: TimeBreakdown {
                    reload: p.config.timing.reload,
                    ..Default::default()
                },
                trace: Vec::new(),
            },
            cycle: 0,
            shot: 0,
        };
        t.refresh_measured();
        t.trace(0, TraceEvent::Start, None);
        t
    }

    fn counted(&self) -> u64 {
        match self.p.config.count_mode {
            CountMode::Successful => self.rec.successful_shots,
            CountMode::Attempted => self.rec.attempted_shots(),
        }
    }

    fn run(mut self) -> TrialRecord {
        let p = self.p;
        let cfg = &p.config;
        while self.counted() < cfg.shot_target {
            self.shot += 1;
            self.rec.aggregate_shots += 1;
            let exec = self.inst.iter().map(|x| x.cc.total_duration()).max().unwrap_or_default();
            self.rec.time.execution += exec;
            let newly = sample_shot_losses(&mut self.rng, &cfg.arch, &self.loss, &self.measured, &cfg.rates);
            for &s in &newly {
                self.loss.mark_lost(s);
            }
            let hits: Vec<bool> = self
                .inst
                .iter()
                .map(|x| newly.iter().any(|&s| x.used.contains(s)))
                .collect();
            let credits = hits.iter().filter(|&&h| !h).count() as u64;
            self.rec.successful_shots += credits;
            self.rec.discarded_shots += hits.len() as u64 - credits;
            self.cycle += credits;
            self.rec.time.fluorescence += cfg.timing.fluorescence;
            if self.counted() >= cfg.shot_target {
                break;
            }
            if hits.iter().any(|&h| h) {
                self.recover(&hits);
            }
        }
        if self.rec.cycle_shots.is_empty() {
            self.rec.cycle_shots.push(self.cycle);
        }
        self.rec
    }

    fn recover(&mut self, hits: &[bool]) {
        let p = self.p;
        let cfg = &p.config;
        let arch = &cfg.arch;
        let interaction = ShiftMethod::Interaction { d: arch.d_max() };
        match cfg.strategy {
            Strategy::ReloadAlways => self.reload(),
            Strategy::Recompile => self.recompile(),
            Strategy::HardwareShift | Strategy::RerouteSmallerD { .. } => {
                self.local(0, ShiftMethod::Hardware, cfg.threshold, Fallback::Reload);
            }
            Strategy::InteractionShift => {
                self.local(0, interaction, cfg.threshold, Fallback::Reload);
            }
            Strategy::RelocateTiles { threshold, inner, .. } => {
                self.local(0, inner.shift(arch), Some(threshold), Fallback::Relocate);
            }
            Strategy::FullParallel { .. } | Strategy::PartialParallel { .. } => {
                let fallback = if matches!(cfg.strategy, Strategy::FullParallel { .. }) {
                    Fallback::Reload
                } else {
                    Fallback::Relocate
                };
                for (i, _) in hits.iter().enumerate().filter(|(_, &h)| h) {
                    if !self.local(i, interaction, cfg.threshold, fallback) {
                        break;
                    }
                }
            }
        }
    }

    /// Local fix for instance `i`; returns false when the array was reloaded.
    fn local(&mut self, i: usize, method: ShiftMethod, threshold: Option<f64>, fallback: Fallback) -> bool {
        let p = self.p;
        let cfg = &p.config;
        let arch = &cfg.arch;
        // tiles confine compilation, not recovery; only other instances are off limits
        let reserved = (self.inst.len() > 1).then(|| self.reserved_except(i));
        let scope = Scope {
            region: Region::whole(arch),
            reserved: reserved.as_ref(),
        };
        let out = adapt(&self.inst[i].cc, arch, &self.loss, method, arch.d_max(), &scope, None);
        self.rec.time.strategy += recovery_cost(&out, &cfg.timing);
        let Recovery::Adapted(cc) = out.recovery else {
            return self.fall_back(i, 0.0, fallback);
        };
        let estimate = estimate_success(&cc, &cfg.error_model);
        if threshold.is_some_and(|t| estimate < t * self.inst[i].fresh) {
            return self.fall_back(i, estimate, fallback);
        }
        self.replace(i, cc, None, estimate);
        self.rec.adaptations += 1;
        self.trace(i, TraceEvent::Adapted, None);
        true
    }

    fn fall_back(&mut self, i: usize, floor: f64, fallback: Fallback) -> bool {
        if fallback == Fallback::Reload {
            self.reload();
            return false;
        }
        let p = self.p;
        let cfg = &p.config;
        let occupied = (self.inst.len() > 1).then(|| self.reserved_except(i));
        let plan = self.plan.as_mut().expect("relocation needs a tile plan");
        let out = relocate(
            &p.circuit,
            &cfg.arch,
            &self.loss,
            plan,
            &p.options,
            &cfg.error_model,
            floor,
            occupied.as_ref(),
        );
        self.rec.time.strategy += recovery_cost(&out, &cfg.timing);
        match out.recovery {
            Recovery::Relocated { circuit, tile } => {
                let estimate = estimate_success(&circuit, &cfg.error_model);
                self.replace(i, circuit, Some(tile), estimate);
                self.rec.relocations += 1;
                self.trace(i, TraceEvent::Relocated, Some(floor));
                true
            }
            _ => {
                self.reload();
                false
            }
        }
    }

    fn recompile(&mut self) {
        let p = self.p;
        let cfg = &p.config;
        match compile(p.circuit.clone(), &cfg.arch, &self.loss, &p.options) {
            Ok(cc) => {
                let effort = cc.effort();
                self.rec.time.excluded += cfg.timing.table_cost(effort.reads, effort.writes);
                let estimate = estimate_success(&cc, &cfg.error_model);
                if cfg.threshold.is_some_and(|t| estimate < t * self.inst[0].fresh) {
                    self.reload();
                    return;
                }
                self.replace(0, cc, None, estimate);
                self.rec.adaptations += 1;
                self.trace(0, TraceEvent::Adapted, None);
            }
            Err(_) => self.reload(),
        }
    }

    fn replace(&mut self, i: usize, cc: CompiledCircuit, tile: Option<usize>, estimate: f64) {
        let arch = &self.p.config.arch;
        let x = &mut self.inst[i];
        if let Some(t) = tile {
            x.tile = Some(t);
            x.fresh = self.p.tile_fresh[t];
        }
        x.used = cc.used_sites(arch);
        x.estimate = estimate;
        x.cc = cc;
        self.refresh_measured();
    }

    fn reload(&mut self) {
        let lost = self.loss.len();
        self.rec.reloads += 1;
        self.rec.time.reload += self.p.config.timing.reload;
        self.rec.cycle_shots.push(self.cycle);
        self.cycle = 0;
        self.loss.clear();
        self.plan.clone_from(&self.p.fresh_plan);
        self.inst.clone_from(&self.p.fresh);
        self.refresh_measured();
        self.trace(0, TraceEvent::Reload, None);
        // a reload point records the losses that forced it
        if let Some(last) = self.rec.trace.last_mut() {
            last.atoms_lost = lost;
        }
    }

    fn reserved_except(&self, i: usize) -> SiteSet {
        let mut set = self.p.config.arch.empty_set();
        for (j, x) in self.inst.iter().enumerate() {
            if j != i {
                set.union_with(&x.used);
            }
        }
        set
    }

    fn refresh_measured(&mut self) {
        self.measured.clear();
        for x in &self.inst {
            for s in x.cc.measured_sites() {
                self.measured.insert(s);
            }
        }
    }

    fn trace(&mut self, instance: usize, event: TraceEvent, floor: Option<f64>) {
        let mean = self.inst.iter().map(|x| x.estimate).sum::<f64>() / self.inst.len() as f64;
        self.rec.trace.push(TracePoint {
            shot: self.shot,
            instance,
            atoms_lost: self.loss.len(),
            estimate: mean,
            floor,
            event,
        });
    }
}
