//! Results directory layout.
//!
//! ```text
//! <out>/results.json    config echo, seed scheme, summaries, records
//! <out>/records.csv     one row per (planner, trial)
//! <out>/summary.csv     one row per planner
//! <out>/belief_std.csv  one row per (planner, trial, step) of the std curve
//! <out>/timing.json     planning wall time (not reproducible, kept apart)
//! ```
//!
//! Everything except `timing.json` is a pure function of the config.

use std::fs;
use std::path::{Path, PathBuf};

use rsbg_core::Outcome;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ResolvedPlanner};
use crate::error::BenchError;
use crate::metrics::{summarize_timing, MetricsSummary, TimingSummary, TrialRecord, TrialTiming};
use crate::runner::ExperimentOutput;
use crate::seeds;

pub const RESULTS_FORMAT: &str = "rsbg-bench-results/1";
pub const RESULTS_FILE: &str = "results.json";
pub const RECORDS_CSV: &str = "records.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const BELIEF_CSV: &str = "belief_std.csv";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub format: String,
    pub seed_scheme: String,
    pub config: ExperimentConfig,
    pub planners: Vec<ResolvedPlanner>,
    pub summaries: Vec<MetricsSummary>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingFile {
    pub summaries: Vec<TimingSummary>,
    pub trials: Vec<TrialTiming>,
}

impl ResultsFile {
    pub fn from_output(out: &ExperimentOutput) -> Self {
        let mut config = out.config.clone();
        config.output = None;
        Self {
            format: RESULTS_FORMAT.to_string(),
            seed_scheme: seeds::SCHEME.to_string(),
            config,
            planners: out.planners.clone(),
            summaries: out.summaries.clone(),
            records: out.records.clone(),
        }
    }

    /// Parses and checks a results file.
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let r: Self = serde_json::from_str(text).map_err(|e| BenchError::Results(e.to_string()))?;
        if r.format != RESULTS_FORMAT {
            return Err(BenchError::Results(format!("unsupported format `{}`", r.format)));
        }
        r.config
            .validate()
            .map_err(|e| BenchError::Results(format!("embedded config: {e}")))?;
        for s in &r.summaries {
            let total = s.success_pct + s.collision_pct + s.timeout_pct;
            if (total - 100.0).abs() > 1e-6 {
                return Err(BenchError::Results(format!(
                    "summary for `{}` sums to {total}%",
                    s.planner
                )));
            }
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
struct RecordRow<'a> {
    planner: &'a str,
    trial: usize,
    seed: &'a str,
    outcome: Outcome,
    steps: u32,
    steps_to_goal: Option<u32>,
    scenario_hash: &'a str,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    planner: &'a str,
    trials: usize,
    success_pct: f64,
    collision_pct: f64,
    timeout_pct: f64,
    mean_steps_to_goal: Option<f64>,
}

#[derive(Serialize)]
struct BeliefRow<'a> {
    planner: &'a str,
    trial: usize,
    step: usize,
    normalized_std: f64,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::Results(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Results(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn summary_csv(summaries: &[MetricsSummary]) -> Result<String, BenchError> {
    csv_string(summaries.iter().map(|s| SummaryRow {
        planner: &s.planner,
        trials: s.trials,
        success_pct: s.success_pct,
        collision_pct: s.collision_pct,
        timeout_pct: s.timeout_pct,
        mean_steps_to_goal: s.mean_steps_to_goal,
    }))
}

fn write(path: PathBuf, contents: &str) -> Result<(), BenchError> {
    fs::write(&path, contents).map_err(|e| BenchError::Io(path, e))
}

/// Writes the full results directory; returns the results-file path.
pub fn write_results(dir: &Path, out: &ExperimentOutput) -> Result<PathBuf, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::Io(dir.to_path_buf(), e))?;
    let results = ResultsFile::from_output(out);
    let path = dir.join(RESULTS_FILE);
    write(path.clone(), &results.to_json())?;
    write(
        dir.join(RECORDS_CSV),
        &csv_string(out.records.iter().map(|r| RecordRow {
            planner: &r.planner,
            trial: r.trial,
            seed: &r.seed,
            outcome: r.outcome,
            steps: r.steps,
            steps_to_goal: r.steps_to_goal,
            scenario_hash: &r.scenario_hash,
        }))?,
    )?;
    write(dir.join(SUMMARY_CSV), &summary_csv(&out.summaries)?)?;
    write(
        dir.join(BELIEF_CSV),
        &csv_string(out.records.iter().flat_map(|r| {
            r.belief_std.iter().enumerate().map(move |(i, &x)| BeliefRow {
                planner: &r.planner,
                trial: r.trial,
                step: i + 1,
                normalized_std: x,
            })
        }))?,
    )?;
    let timing = TimingFile {
        summaries: summarize_timing(&out.timings),
        trials: out.timings.clone(),
    };
    write(
        dir.join(TIMING_FILE),
        &serde_json::to_string_pretty(&timing).expect("timing serializes"),
    )?;
    Ok(path)
}
