mod config;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use atomloss::arch::{Architecture, LossState};
use atomloss::circuits::{BenchmarkKind, Circuit};
use atomloss::compiler::{compile, CompileOptions};
use atomloss::mitigation::{BoxMode, Strategy, DEFAULT_THRESHOLD};
use atomloss::sim::{curve, run_trials, write_curves_csv, write_results_csv, ResultRow, RunLabel, SimConfig, TrialRecord};
use clap::{Args, Parser, Subcommand};

use config::{ArchArgs, BenchArgs, ExperimentConfig, PhysicsArgs, RunArgs, StrategyArgs, SweepAxis, SweepConfig};

/// A user error: bad flags, config or parameters. Exits with status 1.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(name = "atomloss", version, about = "Atom-loss compiler and shot simulator for neutral-atom arrays")]
struct Cli {
    /// JSON experiment config; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a benchmark circuit as JSON
    Bench(BenchCmd),
    /// Compile a circuit and write the schedule as JSON
    Compile(CompileCmd),
    /// Run trials of one configuration
    Simulate(SimulateCmd),
    /// Run trials across values of one parameter
    Sweep(SweepCmd),
}

#[derive(Debug, Args)]
struct BenchCmd {
    /// cnu, cuccaro, qaoa or linear-vqe
    #[arg(long, alias = "bench")]
    kind: Option<BenchmarkKind>,
    /// Total qubit count
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompileCmd {
    /// Circuit JSON to compile instead of a generated benchmark
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    bench: BenchArgs,
    #[command(flatten)]
    arch: ArchArgs,
    /// Compile against this range instead of the maximum
    #[arg(long)]
    d_eff: Option<f64>,
    #[command(flatten)]
    physics: PhysicsArgs,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateCmd {
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    bench: BenchArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    physics: PhysicsArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct SweepCmd {
    /// Parameter to vary
    #[arg(long)]
    axis: Option<SweepAxis>,
    /// Comma-separated values; strategies replace the base strategy whole
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Option<Vec<String>>,
    #[command(flatten)]
    sim: SimulateCmd,
}

struct Run {
    label: RunLabel,
    records: Vec<TrialRecord>,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => writeln!(std::io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn cmd_bench(cmd: &BenchCmd, mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    let b = &mut cfg.benchmark;
    b.kind = cmd.kind.unwrap_or(b.kind);
    b.size = cmd.size.unwrap_or(b.size);
    b.seed = cmd.seed.unwrap_or(b.seed);
    let circuit = b.kind.generate(b.size, b.seed)?;
    emit(cmd.out.as_deref(), &circuit.to_json())
}

fn architecture(cfg: &ExperimentConfig) -> anyhow::Result<Architecture> {
    let a = cfg.architecture;
    Ok(Architecture::new_grid(a.rows, a.cols, a.d_max)?)
}

fn cmd_compile(cmd: &CompileCmd, mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    cmd.bench.apply(&mut cfg.benchmark);
    cmd.arch.apply(&mut cfg.architecture);
    cmd.physics.apply(&mut cfg)?;
    let arch = architecture(&cfg)?;
    let circuit = match &cmd.circuit {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read circuit {}: {e}", path.display())))?;
            Circuit::from_json(&text)?
        }
        None => cfg.benchmark.kind.generate(cfg.benchmark.size, cfg.benchmark.seed)?,
    };
    if let Some(d) = cmd.d_eff {
        if !(d > 0.0 && d <= arch.d_max()) {
            return Err(invalid(format!("--d-eff {d} must be in (0, {}]", arch.d_max())));
        }
    }
    let options = CompileOptions {
        d_eff: cmd.d_eff,
        durations: cfg.timing.gates,
        ..CompileOptions::default()
    };
    let compiled = compile(Arc::new(circuit), &arch, &LossState::new(&arch), &options)?;
    let report = serde_json::to_string_pretty(&compiled.report(&cfg.error_model))?;
    emit(cmd.out.as_deref(), &report)
}

fn configure(cmd: &SimulateCmd, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
    cmd.arch.apply(&mut cfg.architecture);
    cmd.bench.apply(&mut cfg.benchmark);
    cmd.strategy.apply(cfg)?;
    cmd.physics.apply(cfg)?;
    cmd.run.apply(cfg);
    if cfg.trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<Run> {
    let arch = architecture(cfg)?;
    let b = cfg.benchmark;
    let circuit = Arc::new(b.kind.generate(b.size, b.seed)?);
    let mut sim = SimConfig::new(arch, cfg.strategy);
    sim.rates = cfg.rates;
    sim.timing = cfg.timing;
    sim.error_model = cfg.error_model;
    sim.shot_target = cfg.shot_target;
    sim.count_mode = cfg.count_mode;
    sim.threshold = cfg.threshold;
    let label = RunLabel {
        benchmark: b.kind.label().to_string(),
        n_qubits: circuit.n_qubits(),
        dmax: cfg.architecture.d_max,
        strategy: cfg.strategy.to_string(),
        shots_target: cfg.shot_target,
    };
    let records = run_trials(circuit, sim, cfg.trials, cfg.base_seed)?;
    Ok(Run { label, records })
}

fn write_outputs(cfg: &ExperimentConfig, runs: &[Run]) -> anyhow::Result<()> {
    let rows: Vec<ResultRow> = runs
        .iter()
        .flat_map(|run| run.records.iter().enumerate().map(|(i, rec)| ResultRow::new(&run.label, i, rec)))
        .collect();
    let curves: Vec<_> = runs.iter().map(|run| (run.label.clone(), curve(&run.records))).collect();
    let mut w = create(&cfg.output.results)?;
    write_results_csv(&mut w, &rows)?;
    w.flush()?;
    let mut w = create(&cfg.output.curves)?;
    write_curves_csv(&mut w, &curves)?;
    w.flush()?;
    Ok(())
}

fn mean_std(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn summary_table(runs: &[Run]) -> String {
    let header = [
        "benchmark",
        "qubits",
        "dmax",
        "strategy",
        "trials",
        "shots/reload",
        "reloads",
        "relocations",
        "overhead s",
        "total s",
    ];
    let pm = |(m, s): (f64, f64), digits: usize| format!("{m:.digits$} ± {s:.digits$}");
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    for run in runs {
        let recs = &run.records;
        let stat = |f: &dyn Fn(&TrialRecord) -> f64| mean_std(recs.iter().map(f));
        table.push(vec![
            run.label.benchmark.clone(),
            run.label.n_qubits.to_string(),
            run.label.dmax.to_string(),
            run.label.strategy.clone(),
            recs.len().to_string(),
            pm(stat(&|r| r.avg_shots_per_reload()), 2),
            pm(stat(&|r| r.reloads as f64), 1),
            pm(stat(&|r| r.relocations as f64), 1),
            pm(stat(&|r| r.time.overhead().as_secs_f64()), 3),
            pm(stat(&|r| r.time.total().as_secs_f64()), 3),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn cmd_simulate(cmd: &SimulateCmd, mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    configure(cmd, &mut cfg)?;
    let runs = [execute(&cfg)?];
    write_outputs(&cfg, &runs)?;
    write!(std::io::stdout().lock(), "{}", summary_table(&runs))?;
    Ok(())
}

fn mode_of(s: &Strategy) -> BoxMode {
    match *s {
        Strategy::RelocateTiles { mode, .. } | Strategy::FullParallel { mode } | Strategy::PartialParallel { mode, .. } => mode,
        _ => BoxMode::default(),
    }
}

/// One copy relocates on its own; more run side by side.
fn with_instances(base: &Strategy, k: usize) -> Strategy {
    let mode = mode_of(base);
    match (k, *base) {
        (1, Strategy::RelocateTiles { .. }) => *base,
        (1, _) => Strategy::RelocateTiles {
            mode,
            threshold: DEFAULT_THRESHOLD,
            inner: Default::default(),
        },
        _ => Strategy::PartialParallel { mode, instances: k },
    }
}

fn sweep_point(base: &ExperimentConfig, axis: SweepAxis, raw: &str) -> anyhow::Result<ExperimentConfig> {
    let bad = |what: &str| invalid(format!("bad {what} '{raw}' in sweep"));
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Strategy => cfg.strategy = raw.parse().map_err(|_| bad("strategy"))?,
        SweepAxis::Dmax => cfg.architecture.d_max = raw.parse().map_err(|_| bad("dmax"))?,
        SweepAxis::Size => cfg.benchmark.size = raw.parse().map_err(|_| bad("size"))?,
        SweepAxis::Instances => {
            let k: usize = raw.parse().map_err(|_| bad("instance count"))?;
            if k == 0 {
                return Err(bad("instance count"));
            }
            cfg.strategy = with_instances(&cfg.strategy, k);
        }
    }
    Ok(cfg)
}

fn cmd_sweep(cmd: &SweepCmd, mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    configure(&cmd.sim, &mut cfg)?;
    let from_file = cfg.sweep.clone();
    let axis = cmd
        .axis
        .or(from_file.as_ref().map(|s| s.axis))
        .ok_or_else(|| invalid("sweep needs --axis"))?;
    let values: Vec<String> = cmd
        .values
        .clone()
        .or(from_file.map(|s| s.values))
        .unwrap_or_default()
        .into_iter()
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(invalid("sweep list is empty"));
    }
    cfg.sweep = Some(SweepConfig { axis, values: values.clone() });
    // validate every point before spending time on any of them
    let points = values
        .iter()
        .map(|v| sweep_point(&cfg, axis, v))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let runs = points.iter().map(execute).collect::<anyhow::Result<Vec<_>>>()?;
    write_outputs(&cfg, &runs)?;
    write!(std::io::stdout().lock(), "{}", summary_table(&runs))?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use atomloss::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InsufficientAtoms { .. } | E::RoutingFailure { .. } | E::EmptyInput => 2,
                _ => 1,
            };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Bench(cmd) => cmd_bench(cmd, cfg),
        Command::Compile(cmd) => cmd_compile(cmd, cfg),
        Command::Simulate(cmd) => cmd_simulate(cmd, cfg),
        Command::Sweep(cmd) => cmd_sweep(cmd, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
