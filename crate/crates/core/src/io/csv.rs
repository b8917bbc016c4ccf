//! Run and aggregate CSV files.
//!
//! Each file opens with `# key: value` metadata lines carrying everything
//! needed to regenerate it, followed by a header row and one row per round.
//! Absent values are empty cells; reals use [`format_sig9`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::BatchResult;
use crate::io::number::format_sig9;
use crate::metrics::{RoundMetrics, RunResult, Termination, COLUMNS, VALUE_COLUMNS};
use crate::model::SimConfig;
use crate::scalar::Scalar;
use crate::stochastic::GENERATOR_ID;

/// Bumped whenever a column is added, renamed or reordered.
pub const RUN_CSV_SCHEMA: &str = "normsim-run-csv/1";
pub const AGGREGATE_CSV_SCHEMA: &str = "normsim-aggregate-csv/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

// value columns written as plain integers in run files
const INTEGER_COLUMNS: [usize; 3] = [0, 17, 18];

pub(crate) fn scalar_name<F: Scalar>() -> &'static str {
    std::any::type_name::<F>()
}

fn termination_label(t: Termination) -> String {
    match t {
        Termination::Completed => "completed".into(),
        Termination::Extinction { round } => format!("extinction@{round}"),
    }
}

fn parse_termination(s: &str) -> Option<Termination> {
    if s == "completed" {
        return Some(Termination::Completed);
    }
    let round = s.strip_prefix("extinction@")?.parse().ok()?;
    Some(Termination::Extinction { round })
}

fn push_meta(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "# {key}: {value}");
}

fn cell(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

pub fn render_run_csv<F: Scalar>(run: &RunResult<F>) -> String {
    let mut out = String::new();
    push_meta(&mut out, "schema", RUN_CSV_SCHEMA);
    push_meta(&mut out, "tool_version", TOOL_VERSION);
    push_meta(&mut out, "generator", &run.generator);
    push_meta(&mut out, "scalar", scalar_name::<F>());
    push_meta(&mut out, "seed", run.config.seed);
    push_meta(&mut out, "stream", run.config.stream);
    push_meta(&mut out, "condition", run.condition());
    push_meta(&mut out, "operator", run.operator());
    push_meta(&mut out, "termination", termination_label(run.termination));
    push_meta(
        &mut out,
        "config",
        serde_json::to_string(&run.config).expect("config serialises"),
    );
    let rows = run.rounds.iter().map(|m| {
        let mut row = vec![m.round.to_string()];
        row.extend(m.values().iter().enumerate().map(|(c, v)| match v {
            Some(x) if INTEGER_COLUMNS.contains(&c) => (*x as u64).to_string(),
            other => cell(*other),
        }));
        row
    });
    out.push_str(&table(
        COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
    ));
    out
}

/// Header and rows as CSV text.
fn table(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for record in std::iter::once(header).chain(rows) {
        w.write_record(&record).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("utf-8 cells")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn write_run_csv<F: Scalar>(run: &RunResult<F>, path: &Path) -> Result<()> {
    write_file(path, &render_run_csv(run))
}

pub fn render_aggregate_csv<F: Scalar>(batch: &BatchResult<F>) -> String {
    let mut out = String::new();
    push_meta(&mut out, "schema", AGGREGATE_CSV_SCHEMA);
    push_meta(&mut out, "tool_version", TOOL_VERSION);
    push_meta(&mut out, "generator", GENERATOR_ID);
    push_meta(&mut out, "scalar", scalar_name::<F>());
    push_meta(&mut out, "condition", batch.arm.condition);
    push_meta(&mut out, "operator", batch.arm.operator);
    push_meta(&mut out, "runs", batch.runs.len());
    push_meta(
        &mut out,
        "averaging",
        serde_json::to_string(&batch.policy).expect("policy serialises"),
    );
    push_meta(&mut out, "success_threshold", batch.success_threshold);
    push_meta(
        &mut out,
        "successful_runs",
        batch.success.iter().filter(|&&s| s).count(),
    );
    if let Some(first) = batch.runs.first() {
        push_meta(&mut out, "master_seed", first.config.seed);
        let streams: Vec<String> = batch
            .runs
            .iter()
            .map(|r| r.config.stream.to_string())
            .collect();
        push_meta(&mut out, "streams", streams.join(" "));
        push_meta(
            &mut out,
            "base_config",
            serde_json::to_string(&first.config).expect("config serialises"),
        );
    }
    let header = ["round", "runs"]
        .into_iter()
        .chain(COLUMNS[1..].iter().copied())
        .map(String::from)
        .collect();
    let rows = batch.mean.iter().map(|a| {
        let mut row = vec![a.round.to_string(), a.runs.to_string()];
        row.extend(a.values.iter().map(|v| cell(*v)));
        row
    });
    out.push_str(&table(header, rows));
    out
}

pub fn write_aggregate_csv<F: Scalar>(batch: &BatchResult<F>, path: &Path) -> Result<()> {
    write_file(path, &render_aggregate_csv(batch))
}

/// A run CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCsv {
    pub path: PathBuf,
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<RoundMetrics>,
}

impl RunCsv {
    fn format_err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.clone(),
            message: message.into(),
        }
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| self.format_err(format!("missing `{key}` metadata")))
    }

    /// The configuration that produced this file.
    pub fn config(&self) -> Result<SimConfig<f64>> {
        self.config_as()
    }

    pub fn config_as<F: Scalar>(&self) -> Result<SimConfig<F>> {
        serde_json::from_str(self.meta("config")?)
            .map_err(|e| self.format_err(format!("bad config metadata: {e}")))
    }

    pub fn termination(&self) -> Result<Termination> {
        let raw = self.meta("termination")?;
        parse_termination(raw).ok_or_else(|| self.format_err(format!("bad termination `{raw}`")))
    }

    pub fn scalar(&self) -> Result<&str> {
        self.meta("scalar")
    }
}

pub fn parse_run_csv(text: &str, path: &Path) -> Result<RunCsv> {
    let err = |line: u64, message: String| Error::Format {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut meta = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix("# ") else {
            continue;
        };
        let (k, v) = rest
            .split_once(": ")
            .ok_or_else(|| err(i as u64 + 1, "metadata line without `key: value`".into()))?;
        meta.insert(k.to_string(), v.to_string());
    }
    if meta.get("schema").map(String::as_str) != Some(RUN_CSV_SCHEMA) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("not a `{RUN_CSV_SCHEMA}` file"),
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(0, e.to_string()))?.clone();
    if !header.iter().eq(COLUMNS.iter().copied()) {
        return Err(err(0, "unexpected column header".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let round: u64 = record[0]
            .parse()
            .map_err(|_| err(line, format!("bad round `{}`", &record[0])))?;
        let mut values = [None; VALUE_COLUMNS];
        for (slot, raw) in values.iter_mut().zip(record.iter().skip(1)) {
            if !raw.is_empty() {
                *slot = Some(
                    raw.parse::<f64>()
                        .map_err(|_| err(line, format!("bad number `{raw}`")))?,
                );
            }
        }
        let row = RoundMetrics::from_values(round, &values)
            .ok_or_else(|| err(line, "required cell is empty".into()))?;
        rows.push(row);
    }
    Ok(RunCsv {
        path: path.to_path_buf(),
        meta,
        rows,
    })
}

pub fn read_run_csv(path: &Path) -> Result<RunCsv> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_csv(&text, path)
}
