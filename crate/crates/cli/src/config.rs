//! Experiment configuration: built-in defaults, overlaid by a JSON file,
//! overlaid by command-line flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use atomloss::circuits::BenchmarkKind;
use atomloss::compiler::ErrorModel;
use atomloss::loss::LossRates;
use atomloss::mitigation::{BoxMode, InnerMethod, Strategy, DEFAULT_THRESHOLD};
use atomloss::sim::CountMode;
use atomloss::timing::TimingModel;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::Invalid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub rows: usize,
    pub cols: usize,
    pub d_max: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self { rows: 10, cols: 10, d_max: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub kind: BenchmarkKind,
    /// Total qubit count.
    pub size: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { kind: BenchmarkKind::Cuccaro, size: 10, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub results: PathBuf,
    pub curves: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            results: "results.csv".into(),
            curves: "curves.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum SweepAxis {
    Strategy,
    Dmax,
    Size,
    Instances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub architecture: ArchConfig,
    pub benchmark: BenchConfig,
    pub strategy: Strategy,
    /// Estimate fraction that triggers a reload for strategies without a
    /// threshold of their own; `null` disables it.
    pub threshold: Option<f64>,
    pub rates: LossRates,
    pub timing: TimingModel,
    pub error_model: ErrorModel,
    pub shot_target: u64,
    pub count_mode: CountMode,
    pub trials: usize,
    pub base_seed: u64,
    pub output: Outputs,
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            architecture: ArchConfig::default(),
            benchmark: BenchConfig::default(),
            strategy: Strategy::RelocateTiles {
                mode: BoxMode::default(),
                threshold: DEFAULT_THRESHOLD,
                inner: InnerMethod::default(),
            },
            threshold: Some(DEFAULT_THRESHOLD),
            rates: LossRates::default(),
            timing: TimingModel::default(),
            error_model: ErrorModel::default(),
            shot_target: 500,
            count_mode: CountMode::default(),
            trials: 50,
            base_seed: 0,
            output: Outputs::default(),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Invalid(format!("bad config {}: {e}", path.display())).into())
    }
}

/// `RxC`, e.g. `10x10`.
fn parse_dims(raw: &str) -> Result<(usize, usize), String> {
    let (r, c) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got '{raw}'"))?;
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad dimension '{s}'"));
    Ok((num(r)?, num(c)?))
}

#[derive(Debug, Clone, Default, Args)]
pub struct ArchArgs {
    /// Array size as ROWSxCOLS
    #[arg(long, value_parser = parse_dims)]
    pub arch: Option<(usize, usize)>,
    /// Maximum interaction distance in site spacings
    #[arg(long)]
    pub dmax: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchArgs {
    /// Benchmark family: cnu, cuccaro, qaoa or linear-vqe
    #[arg(long, alias = "kind")]
    pub bench: Option<BenchmarkKind>,
    /// Total qubit count
    #[arg(long)]
    pub size: Option<usize>,
    /// Seed for randomised benchmark parameters
    #[arg(long)]
    pub bench_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StrategyArgs {
    /// reload, recompile, hardware-shift, interaction-shift, reroute,
    /// relocate-loose, relocate-tight, full-parallel or partial-parallel
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Relocation threshold, or the reload threshold of other strategies
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Per-loss recovery inside a relocation tile
    #[arg(long)]
    pub inner: Option<InnerMethod>,
    /// Parallel copies for partial-parallel
    #[arg(long)]
    pub instances: Option<usize>,
    /// Tile bounding box: loose or tight
    #[arg(long)]
    pub mode: Option<BoxMode>,
    /// Compile range for reroute
    #[arg(long)]
    pub d_eff: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PhysicsArgs {
    /// Background loss probability per atom per shot
    #[arg(long)]
    pub p_env: Option<f64>,
    /// Loss probability of a measured atom
    #[arg(long)]
    pub p_meas: Option<f64>,
    /// Single-qubit gate fidelity
    #[arg(long)]
    pub f1q: Option<f64>,
    /// Two-qubit gate fidelity
    #[arg(long)]
    pub f2q: Option<f64>,
    /// Ground-state T1 in seconds
    #[arg(long)]
    pub t1: Option<f64>,
    /// Ground-state T2 in seconds
    #[arg(long)]
    pub t2: Option<f64>,
    /// Fluorescence imaging time per shot in ms
    #[arg(long)]
    pub fluorescence_ms: Option<f64>,
    /// Array reload time in ms
    #[arg(long)]
    pub reload_ms: Option<f64>,
    /// Lookup-table read time in ns
    #[arg(long)]
    pub read_ns: Option<f64>,
    /// Lookup-table write time in ns
    #[arg(long)]
    pub write_ns: Option<f64>,
    /// Single-qubit gate time in µs
    #[arg(long)]
    pub gate_1q_us: Option<f64>,
    /// Two-qubit gate time in µs
    #[arg(long)]
    pub gate_2q_us: Option<f64>,
    /// Three-qubit gate time in µs
    #[arg(long)]
    pub gate_3q_us: Option<f64>,
    /// SWAP time in µs
    #[arg(long)]
    pub swap_us: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Shots to collect per trial
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Seed of the first trial; trial i uses seed + i
    #[arg(long)]
    pub seed: Option<u64>,
    /// What the shot target counts: successful or attempted
    #[arg(long)]
    pub count_mode: Option<CountMode>,
    /// Per-trial results CSV
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Success-probability curves CSV
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

fn duration(value: f64, nanos_per_unit: f64, flag: &str) -> anyhow::Result<Duration> {
    let nanos = (value * nanos_per_unit).round();
    if !(nanos >= 0.0 && nanos < u64::MAX as f64) {
        return Err(Invalid(format!("--{flag} must be a finite non-negative time")).into());
    }
    Ok(Duration::from_nanos(nanos as u64))
}

impl ArchArgs {
    pub fn apply(&self, cfg: &mut ArchConfig) {
        if let Some((rows, cols)) = self.arch {
            cfg.rows = rows;
            cfg.cols = cols;
        }
        if let Some(d) = self.dmax {
            cfg.d_max = d;
        }
    }
}

impl BenchArgs {
    pub fn apply(&self, cfg: &mut BenchConfig) {
        if let Some(kind) = self.bench {
            cfg.kind = kind;
        }
        if let Some(size) = self.size {
            cfg.size = size;
        }
        if let Some(seed) = self.bench_seed {
            cfg.seed = seed;
        }
    }
}

impl StrategyArgs {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        let name = cfg.strategy.name();
        let reject = |flag: &str| Invalid(format!("--{flag} does not apply to strategy '{name}'"));
        if let Some(t) = self.threshold {
            match &mut cfg.strategy {
                Strategy::RelocateTiles { threshold, .. } => *threshold = t,
                _ => cfg.threshold = Some(t),
            }
        }
        if let Some(i) = self.inner {
            match &mut cfg.strategy {
                Strategy::RelocateTiles { inner, .. } => *inner = i,
                _ => return Err(reject("inner").into()),
            }
        }
        if let Some(k) = self.instances {
            match &mut cfg.strategy {
                Strategy::PartialParallel { instances, .. } => *instances = k,
                _ => return Err(reject("instances").into()),
            }
        }
        if let Some(m) = self.mode {
            match &mut cfg.strategy {
                Strategy::RelocateTiles { mode, .. }
                | Strategy::FullParallel { mode }
                | Strategy::PartialParallel { mode, .. } => *mode = m,
                _ => return Err(reject("mode").into()),
            }
        }
        if let Some(d) = self.d_eff {
            match &mut cfg.strategy {
                Strategy::RerouteSmallerD { d_eff } => *d_eff = Some(d),
                _ => return Err(reject("d-eff").into()),
            }
        }
        Ok(())
    }
}

impl PhysicsArgs {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.rates.p_env, self.p_env);
        set(&mut cfg.rates.p_meas, self.p_meas);
        set(&mut cfg.error_model.f_1q, self.f1q);
        set(&mut cfg.error_model.f_2q, self.f2q);
        set(&mut cfg.error_model.t1_ground, self.t1);
        set(&mut cfg.error_model.t2_ground, self.t2);
        let timing = &mut cfg.timing;
        let times = [
            (&mut timing.fluorescence, self.fluorescence_ms, 1e6, "fluorescence-ms"),
            (&mut timing.reload, self.reload_ms, 1e6, "reload-ms"),
            (&mut timing.read, self.read_ns, 1.0, "read-ns"),
            (&mut timing.write, self.write_ns, 1.0, "write-ns"),
            (&mut timing.gates.one_qubit, self.gate_1q_us, 1e3, "gate-1q-us"),
            (&mut timing.gates.two_qubit, self.gate_2q_us, 1e3, "gate-2q-us"),
            (&mut timing.gates.three_qubit, self.gate_3q_us, 1e3, "gate-3q-us"),
            (&mut timing.gates.swap, self.swap_us, 1e3, "swap-us"),
        ];
        for (slot, value, unit, flag) in times {
            if let Some(v) = value {
                *slot = duration(v, unit, flag)?;
            }
        }
        cfg.rates.validate().map_err(Invalid)?;
        Ok(())
    }
}

impl RunArgs {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.shots {
            cfg.shot_target = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(m) = self.count_mode {
            cfg.count_mode = m;
        }
        if let Some(p) = &self.results {
            cfg.output.results = p.clone();
        }
        if let Some(p) = &self.curves {
            cfg.output.curves = p.clone();
        }
    }
}
