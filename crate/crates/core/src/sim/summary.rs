use std::io::Write;

use serde::Serialize;

use super::{TraceEvent, TrialRecord};
use crate::error::{Error, Result};

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Average success estimate at a given number of lost atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub atoms_lost: usize,
    pub mean_prob: f64,
    pub std_prob: f64,
    /// Trials contributing to this point.
    pub trials: usize,
}

/// Estimate of a trial's first reload cycle as a function of atoms lost.
///
/// The value at `k` is the estimate in force once `k` atoms were gone; it
/// drops to zero from the loss count that forced the first reload. Trials
/// that never reloaded stop at their last recorded loss count.
fn trial_curve(rec: &TrialRecord) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut current = 0.0;
    let fill = |out: &mut Vec<f64>, upto: usize, value: f64| {
        while out.len() < upto {
            out.push(value);
        }
    };
    for p in &rec.trace {
        if p.event == TraceEvent::Reload {
            out.truncate(p.atoms_lost);
            fill(&mut out, p.atoms_lost, current);
            out.push(0.0);
            return out;
        }
        fill(&mut out, p.atoms_lost, current);
        current = p.estimate;
        if out.len() == p.atoms_lost + 1 {
            out[p.atoms_lost] = current;
        } else {
            out.push(current);
        }
    }
    out
}

/// Success-probability curve across trials, aligned by atoms lost.
pub fn curve(records: &[TrialRecord]) -> Vec<CurvePoint> {
    let curves: Vec<Vec<f64>> = records.iter().map(trial_curve).collect();
    let longest = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let xs: Vec<f64> = curves.iter().filter_map(|c| c.get(k).copied()).collect();
            let (mean_prob, std_prob) = mean_std(&xs);
            CurvePoint {
                atoms_lost: k,
                mean_prob,
                std_prob,
                trials: xs.len(),
            }
        })
        .collect()
}

/// Mean seconds per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSummary {
    pub execution_s: f64,
    pub fluorescence_s: f64,
    pub reload_s: f64,
    pub strategy_s: f64,
    pub total_s: f64,
    pub overhead_s: f64,
}

/// Cross-trial aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub trials: usize,
    pub mean_shots_per_reload: f64,
    pub std_shots_per_reload: f64,
    pub mean_successful_shots: f64,
    pub mean_reloads: f64,
    pub mean_relocations: f64,
    pub time: TimeSummary,
    /// Fractions of the mean total taken by execution, fluorescence,
    /// reload and strategy time.
    pub shares: [f64; 4],
    pub curve: Vec<CurvePoint>,
}

pub fn summarize(records: &[TrialRecord]) -> Result<SummaryStats> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let col = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let (mean_spr, std_spr) = mean_std(&col(&|r| r.avg_shots_per_reload()));
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| mean_std(&col(f)).0;
    let time = TimeSummary {
        execution_s: mean(&|r| r.time.execution.as_secs_f64()),
        fluorescence_s: mean(&|r| r.time.fluorescence.as_secs_f64()),
        reload_s: mean(&|r| r.time.reload.as_secs_f64()),
        strategy_s: mean(&|r| r.time.strategy.as_secs_f64()),
        total_s: mean(&|r| r.time.total().as_secs_f64()),
        overhead_s: mean(&|r| r.time.overhead().as_secs_f64()),
    };
    let share = |x: f64| if time.total_s > 0.0 { x / time.total_s } else { 0.0 };
    Ok(SummaryStats {
        trials: records.len(),
        mean_shots_per_reload: mean_spr,
        std_shots_per_reload: std_spr,
        mean_successful_shots: mean(&|r| r.successful_shots as f64),
        mean_reloads: mean(&|r| r.reloads as f64),
        mean_relocations: mean(&|r| r.relocations as f64),
        shares: [
            share(time.execution_s),
            share(time.fluorescence_s),
            share(time.reload_s),
            share(time.strategy_s),
        ],
        time,
        curve: curve(records),
    })
}

/// Identifies the run a set of trials belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub benchmark: String,
    pub n_qubits: usize,
    pub dmax: f64,
    pub strategy: String,
    pub shots_target: u64,
}

/// One row of the per-trial results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub trial: usize,
    pub benchmark: String,
    pub n_qubits: usize,
    pub dmax: f64,
    pub strategy: String,
    pub shots_target: u64,
    pub successful_shots: u64,
    pub reloads: u64,
    pub relocations: u64,
    pub avg_shots_per_reload: f64,
    pub t_exec_s: f64,
    pub t_fluor_s: f64,
    pub t_reload_s: f64,
    pub t_strategy_s: f64,
    pub t_total_s: f64,
}

impl ResultRow {
    pub fn new(label: &RunLabel, trial: usize, rec: &TrialRecord) -> Self {
        Self {
            trial,
            benchmark: label.benchmark.clone(),
            n_qubits: label.n_qubits,
            dmax: label.dmax,
            strategy: label.strategy.clone(),
            shots_target: label.shots_target,
            successful_shots: rec.successful_shots,
            reloads: rec.reloads,
            relocations: rec.relocations,
            avg_shots_per_reload: rec.avg_shots_per_reload(),
            t_exec_s: rec.time.execution.as_secs_f64(),
            t_fluor_s: rec.time.fluorescence.as_secs_f64(),
            t_reload_s: rec.time.reload.as_secs_f64(),
            t_strategy_s: rec.time.strategy.as_secs_f64(),
            t_total_s: rec.time.total().as_secs_f64(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CurveRow<'a> {
    benchmark: &'a str,
    strategy: &'a str,
    atoms_lost: usize,
    mean_prob: f64,
    std_prob: f64,
}

const RESULT_COLUMNS: [&str; 15] = [
    "trial",
    "benchmark",
    "n_qubits",
    "dmax",
    "strategy",
    "shots_target",
    "successful_shots",
    "reloads",
    "relocations",
    "avg_shots_per_reload",
    "t_exec_s",
    "t_fluor_s",
    "t_reload_s",
    "t_strategy_s",
    "t_total_s",
];

fn headerless<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

pub fn write_results_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), csv::Error> {
    let mut w = headerless(out);
    w.write_record(RESULT_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes curve points of several runs, each tagged with its label.
pub fn write_curves_csv<W: Write>(out: W, curves: &[(RunLabel, Vec<CurvePoint>)]) -> Result<(), csv::Error> {
    let mut w = headerless(out);
    w.write_record(["benchmark", "strategy", "atoms_lost", "mean_prob", "std_prob"])?;
    for (label, points) in curves {
        for p in points {
            w.serialize(CurveRow {
                benchmark: &label.benchmark,
                strategy: &label.strategy,
                atoms_lost: p.atoms_lost,
                mean_prob: p.mean_prob,
                std_prob: p.std_prob,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
