//! The shot loop: run a circuit until enough shots succeed, losing atoms and
//! recovering from the losses along the way.

mod engine;
mod summary;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::arch::Architecture;
use crate::compiler::ErrorModel;
use crate::loss::LossRates;
use crate::mitigation::Strategy;
use crate::timing::TimingModel;
use crate::{Error, Result};

pub use engine::{run_trial, run_trials, Prepared};
pub use summary::{
    curve, summarize, write_curves_csv, write_results_csv, CurvePoint, ResultRow, RunLabel, SummaryStats,
};

/// What the shot target counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Shots (or parallel instance-shots) that lost no atom they needed.
    #[default]
    Successful,
    /// Every instance-shot executed, whether or not it was usable.
    Attempted,
}

impl std::str::FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "successful" => Ok(CountMode::Successful),
            "attempted" => Ok(CountMode::Attempted),
            other => Err(Error::InvalidConfig(format!("unknown count mode '{other}'"))),
        }
    }
}

/// Everything a trial needs besides the circuit and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub arch: Architecture,
    pub strategy: Strategy,
    pub rates: LossRates,
    pub timing: TimingModel,
    pub error_model: ErrorModel,
    pub shot_target: u64,
    pub count_mode: CountMode,
    /// Reload (or relocate) once an adapted circuit's estimate falls below
    /// this fraction of its freshly compiled value. Tile relocation uses the
    /// threshold carried by its strategy instead. `None` disables the check.
    pub threshold: Option<f64>,
}

impl SimConfig {
    pub fn new(arch: Architecture, strategy: Strategy) -> Self {
        Self {
            arch,
            strategy,
            rates: LossRates::default(),
            timing: TimingModel::default(),
            error_model: ErrorModel::default(),
            shot_target: 500,
            count_mode: CountMode::default(),
            threshold: Some(crate::mitigation::DEFAULT_THRESHOLD),
        }
    }
}

/// Where a trial's simulated time went.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeBreakdown {
    pub execution: Duration,
    pub fluorescence: Duration,
    pub reload: Duration,
    /// Lookup-table time of adaptations and relocations.
    pub strategy: Duration,
    /// Compute spent by full recompilation; reported but kept out of totals.
    pub excluded: Duration,
}

impl TimeBreakdown {
    pub fn total(&self) -> Duration {
        self.execution + self.fluorescence + self.reload + self.strategy
    }

    /// Everything except running the circuit itself.
    pub fn overhead(&self) -> Duration {
        self.fluorescence + self.reload + self.strategy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceEvent {
    /// The array was loaded and the circuit freshly deployed.
    Start,
    Adapted,
    Relocated,
    Reload,
}

/// Success estimate after a deployment change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Aggregate shot after which the change happened (0 for the initial load).
    pub shot: u64,
    /// Instance the event concerns.
    pub instance: usize,
    /// Atoms lost from the array at this point; for a reload, the losses
    /// that forced it.
    pub atoms_lost: usize,
    /// Mean estimate across live instances after the event.
    pub estimate: f64,
    /// For relocations, the estimate the new tile had to match.
    pub floor: Option<f64>,
    pub event: TraceEvent,
}

/// Full account of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub instances: usize,
    /// Aggregate shots executed (each runs every instance once).
    pub aggregate_shots: u64,
    pub successful_shots: u64,
    pub discarded_shots: u64,
    /// True reloads after the initial load.
    pub reloads: u64,
    pub relocations: u64,
    pub adaptations: u64,
    /// Successful shots per reload cycle; only completed cycles, or the
    /// single partial cycle when the trial never reloaded.
    pub cycle_shots: Vec<u64>,
    pub time: TimeBreakdown,
    pub trace: Vec<TracePoint>,
}

impl TrialRecord {
    /// Instance-shots executed.
    pub fn attempted_shots(&self) -> u64 {
        self.successful_shots + self.discarded_shots
    }

    pub fn avg_shots_per_reload(&self) -> f64 {
        if self.cycle_shots.is_empty() {
            return 0.0;
        }
        self.cycle_shots.iter().sum::<u64>() as f64 / self.cycle_shots.len() as f64
    }
}

/// Where a trial's time went, split into the four additive components;
/// `overhead()` of the result is the total minus execution.
pub fn overhead_components(record: &TrialRecord) -> TimeBreakdown {
    TimeBreakdown {
        excluded: Duration::ZERO,
        ..record.time
    }
}
