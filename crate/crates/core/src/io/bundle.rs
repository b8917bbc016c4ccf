//! Output bundles: everything one `run` or `batch` invocation writes.
//!
//! ```text
//! <out>/<arm>/run_0000.csv ...   one file per replicate
//! <out>/<arm>/aggregate.csv      cross-run means
//! <out>/summary.json             convergence reports and check verdicts
//! <out>/plots/<arm>_<kind>.svg   optional
//! ```
//!
//! Nothing here depends on wall-clock time or thread count, so a bundle is
//! byte-identical whenever its spec is.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::checks::{self, CheckOutcome};
use crate::error::{Error, Result};
use crate::experiment::{aggregate_rows, Arm, BatchResult, ExperimentSpec, ExtinctPolicy};
use crate::io::csv::{
    parse_run_csv, read_run_csv, render_run_csv, scalar_name, write_aggregate_csv, write_run_csv,
    RunCsv, TOOL_VERSION,
};
use crate::io::plot::{emit_plots, emit_series_plots};
use crate::metrics::{convergence_report, ConvergenceReport, RoundMetrics, RunResult, Termination};
use crate::model::{run_simulation, SimConfig};
use crate::scalar::Scalar;
use crate::stochastic::GENERATOR_ID;

pub const SUMMARY_SCHEMA: &str = "normsim-summary/1";
pub const SUMMARY_FILE: &str = "summary.json";
/// Window of the per-run convergence reports in `summary.json`.
pub const REPORT_WINDOW: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub file: String,
    pub seed: u64,
    pub stream: u64,
    pub termination: Termination,
    pub final_population: u64,
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub condition: String,
    pub operator: String,
    pub runs: usize,
    pub successful_runs: usize,
    pub extinctions: usize,
    pub replicates: Vec<RunSummary>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct Summary<F: Scalar> {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub generator: &'static str,
    pub scalar: &'static str,
    pub master_seed: u64,
    pub replicates: u64,
    pub success_threshold: u64,
    pub averaging: ExtinctPolicy,
    pub base_config: SimConfig<F>,
    pub arms: Vec<ArmSummary>,
    pub checks: Vec<CheckOutcome>,
    /// False if any gating check failed.
    pub checks_passed: bool,
}

fn run_summary<F: Scalar>(run: &RunResult<F>, file: String) -> RunSummary {
    RunSummary {
        file,
        seed: run.config.seed,
        stream: run.config.stream,
        termination: run.termination,
        final_population: run.final_population(),
        convergence: convergence_report(run, REPORT_WINDOW),
    }
}

pub fn run_file_name(index: usize) -> String {
    format!("run_{index:04}.csv")
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn summarize<F: Scalar>(spec: &ExperimentSpec<F>, batches: &[BatchResult<F>]) -> Summary<F> {
    let arms = batches
        .iter()
        .map(|b| {
            let label = b.arm.label();
            ArmSummary {
                arm: label.clone(),
                condition: b.arm.condition.to_string(),
                operator: b.arm.operator.to_string(),
                runs: b.runs.len(),
                successful_runs: b.success.iter().filter(|&&s| s).count(),
                extinctions: b.runs.iter().filter(|r| r.went_extinct()).count(),
                replicates: b
                    .runs
                    .iter()
                    .enumerate()
                    .map(|(i, r)| run_summary(r, format!("{label}/{}", run_file_name(i))))
                    .collect(),
            }
        })
        .collect();
    let checks = checks::evaluate(batches);
    Summary {
        schema: SUMMARY_SCHEMA,
        tool_version: TOOL_VERSION,
        generator: GENERATOR_ID,
        scalar: scalar_name::<F>(),
        master_seed: spec.master_seed,
        replicates: spec.replicates,
        success_threshold: spec.success_population_threshold,
        averaging: spec.extinct_policy,
        base_config: spec.base.clone(),
        checks_passed: checks.iter().all(|c| c.passed || !c.gating),
        arms,
        checks,
    }
}

/// Writes a batch bundle under `out` and returns its summary.
pub fn write_batch_bundle<F: Scalar>(
    spec: &ExperimentSpec<F>,
    batches: &[BatchResult<F>],
    out: &Path,
    plots: bool,
) -> Result<Summary<F>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for b in batches {
        let dir = out.join(b.arm.label());
        b.runs
            .par_iter()
            .enumerate()
            .map(|(i, r)| write_run_csv(r, &dir.join(run_file_name(i))))
            .collect::<Result<Vec<_>>>()?;
        write_aggregate_csv(b, &dir.join("aggregate.csv"))?;
    }
    let summary = summarize(spec, batches);
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    if plots {
        let plot_dir = out.join("plots");
        for b in batches.iter().filter(|b| !b.runs.is_empty()) {
            emit_plots(b, &plot_dir)?;
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleRunSummary {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub generator: &'static str,
    pub scalar: &'static str,
    pub run: RunSummary,
}

/// Writes `<out>/run.csv` and `<out>/summary.json` for one run.
pub fn write_run_bundle<F: Scalar>(run: &RunResult<F>, out: &Path, plots: bool) -> Result<PathBuf> {
    let csv = out.join("run.csv");
    write_run_csv(run, &csv)?;
    let summary = SingleRunSummary {
        schema: SUMMARY_SCHEMA,
        tool_version: TOOL_VERSION,
        generator: GENERATOR_ID,
        scalar: scalar_name::<F>(),
        run: run_summary(run, "run.csv".into()),
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    if plots {
        let batch = BatchResult::from_runs(
            Arm::new(run.condition(), run.operator()),
            vec![run.clone()],
            0,
            ExtinctPolicy::AbsentAware,
        );
        emit_series_plots(
            &batch.arm.to_string(),
            "run",
            &[run.rounds.as_slice()],
            &batch.mean,
            &out.join("plots"),
        )?;
    }
    Ok(csv)
}

/// A run file next to the bytes its embedded config regenerates.
#[derive(Debug, Clone)]
pub struct Replay {
    pub original: String,
    pub regenerated: String,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.original == self.regenerated
    }
}

fn replay_as<F: Scalar>(parsed: &RunCsv) -> Result<String> {
    let run = run_simulation(&parsed.config_as::<F>()?)?;
    Ok(render_run_csv(&run))
}

/// Re-runs the configuration embedded in a run CSV.
pub fn replay_run_csv(path: &Path) -> Result<Replay> {
    let original = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_run_csv(&original, path)?;
    let regenerated = match parsed.scalar()? {
        s if s == scalar_name::<f64>() => replay_as::<f64>(&parsed)?,
        s if s == scalar_name::<f32>() => replay_as::<f32>(&parsed)?,
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("unsupported scalar `{other}`"),
            })
        }
    };
    Ok(Replay {
        original,
        regenerated,
    })
}

/// Run CSVs named by `inputs`: files are taken as given, directories are
/// searched recursively for `run*.csv`. The result is sorted by path.
pub fn collect_run_csvs(inputs: &[PathBuf]) -> Result<Vec<RunCsv>> {
    let mut files = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).map_err(|e| Error::io(input, e))?;
        if !meta.is_dir() {
            files.push(input.clone());
            continue;
        }
        for entry in WalkDir::new(input) {
            let entry = entry.map_err(|e| {
                let path = e.path().unwrap_or(input).to_path_buf();
                Error::io(path, e.into())
            })?;
            let name = entry.file_name().to_string_lossy();
            if entry.file_type().is_file() && name.starts_with("run") && name.ends_with(".csv") {
                files.push(entry.into_path());
            }
        }
    }
    files.sort();
    files.dedup();
    files.iter().map(|p| read_run_csv(p)).collect()
}

/// Renders every figure for each condition/operator pair found in `inputs`.
pub fn plot_run_csvs(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let files = collect_run_csvs(inputs)?;
    if files.is_empty() {
        return Err(Error::EmptyBatch("no run CSV files found to plot".into()));
    }
    let mut groups: BTreeMap<String, (Arm, Vec<RunCsv>)> = BTreeMap::new();
    for f in files {
        let cfg = f.config()?;
        let arm = Arm::new(cfg.condition, cfg.mutation_operator);
        groups
            .entry(arm.label())
            .or_insert_with(|| (arm, Vec::new()))
            .1
            .push(f);
    }
    let mut written = Vec::new();
    for (label, (arm, files)) in &groups {
        let series: Vec<(&[RoundMetrics], bool)> = files
            .iter()
            .map(|f| {
                let extinct = matches!(f.termination()?, Termination::Extinction { .. });
                Ok((f.rows.as_slice(), extinct))
            })
            .collect::<Result<_>>()?;
        let mean = aggregate_rows(&series, ExtinctPolicy::AbsentAware);
        let runs: Vec<&[RoundMetrics]> = series.iter().map(|s| s.0).collect();
        written.extend(emit_series_plots(
            &arm.to_string(),
            label,
            &runs,
            &mean,
            out,
        )?);
    }
    Ok(written)
}
