//! CSV and JSON output, and reading it back.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::aggregate::{AggregateResult, CurvePoint};
use crate::harness::config::{AlgorithmKind, ExperimentConfig};
use crate::harness::runner::{ExperimentOutput, RunRecord};
use crate::model::RunTrace;

pub const CURVE_HEADER: [&str; 5] = ["round", "algorithm", "mean_cum_regret", "ci_low", "ci_high"];
pub const TRACE_HEADER: [&str; 5] = ["round", "arm", "source", "reward", "cum_regret"];

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACES_DIR: &str = "traces";

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x}")
}

fn parse<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("unreadable `{what}` column")))
}

pub fn write_curves_csv(result: &AggregateResult, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(CURVE_HEADER)?;
    for algo in &result.algorithms {
        for p in &algo.curve {
            w.write_record([
                p.round.to_string(),
                algo.algorithm.name().to_string(),
                num(p.mean),
                num(p.ci_low),
                num(p.ci_high),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Curves grouped by algorithm, in file order.
pub fn read_curves_csv(path: &Path) -> Result<Vec<(AlgorithmKind, Vec<CurvePoint>)>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(CURVE_HEADER) {
        return Err(Error::Config(format!(
            "{} does not have the curve header",
            path.display()
        )));
    }
    let mut out: Vec<(AlgorithmKind, Vec<CurvePoint>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let kind = AlgorithmKind::parse(rec.get(1).unwrap_or(""))?;
        let point = CurvePoint {
            round: parse(rec.get(0), "round")?,
            mean: parse(rec.get(2), "mean_cum_regret")?,
            ci_low: parse(rec.get(3), "ci_low")?,
            ci_high: parse(rec.get(4), "ci_high")?,
        };
        match out.last_mut() {
            Some((k, pts)) if *k == kind => pts.push(point),
            _ => out.push((kind, vec![point])),
        }
    }
    Ok(out)
}

/// One row of a raw trace file; arm and source are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u64,
    pub arm: usize,
    pub source: usize,
    pub reward: f64,
    pub cum_regret: f64,
}

pub fn trace_rows(trace: &RunTrace) -> Vec<TraceRow> {
    let mut cum = 0.0;
    trace
        .rounds()
        .iter()
        .map(|r| {
            cum += r.regret;
            TraceRow {
                round: r.t,
                arm: r.arm + 1,
                source: r.source + 1,
                reward: r.reward,
                cum_regret: cum,
            }
        })
        .collect()
}

pub fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for row in trace_rows(trace) {
        w.write_record([
            row.round.to_string(),
            row.arm.to_string(),
            row.source.to_string(),
            num(row.reward),
            num(row.cum_regret),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(TRACE_HEADER) {
        return Err(Error::Config(format!(
            "{} does not have the trace header",
            path.display()
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub result: AggregateResult,
    pub runs: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportPaths {
    pub curves: PathBuf,
    pub summary: PathBuf,
    pub traces: Vec<PathBuf>,
}

pub fn write_summary_json(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes curves, summary and (when kept) raw traces under `dir`.
pub fn export_results(output: &ExperimentOutput, dir: &Path) -> Result<ExportPaths> {
    fs::create_dir_all(dir)?;
    let curves = dir.join(CURVES_FILE);
    write_curves_csv(&output.result, &curves)?;
    let summary = dir.join(SUMMARY_FILE);
    write_summary_json(
        &ExperimentSummary {
            config: output.config.clone(),
            result: output.result.clone(),
            runs: output.runs.clone(),
        },
        &summary,
    )?;
    let mut traces = Vec::new();
    for run in &output.runs {
        if let Some(trace) = &run.trace {
            let tdir = dir.join(TRACES_DIR);
            fs::create_dir_all(&tdir)?;
            let path = tdir.join(format!(
                "{}_rep{:03}.csv",
                run.algorithm.name(),
                run.repetition + 1
            ));
            write_trace_csv(trace, &path)?;
            traces.push(path);
        }
    }
    Ok(ExportPaths {
        curves,
        summary,
        traces,
    })
}

pub fn read_summary_json(path: &Path) -> Result<ExperimentSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Reassembles the aggregate written by [`export_results`].
pub fn load_results(dir: &Path) -> Result<AggregateResult> {
    let mut result = read_summary_json(&dir.join(SUMMARY_FILE))?.result;
    for (kind, points) in read_curves_csv(&dir.join(CURVES_FILE))? {
        let algo = result
            .algorithms
            .iter_mut()
            .find(|a| a.algorithm == kind)
            .ok_or_else(|| {
                Error::Config(format!("curve for `{}` has no summary entry", kind.name()))
            })?;
        algo.curve = points;
    }
    Ok(result)
}
