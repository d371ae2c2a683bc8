//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rsbg_core::search::complexity_ratio;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::BenchError;
use crate::metrics::MetricsSummary;
use crate::output::{summary_csv, write_results};
use crate::runner::{replay_trial, run_experiment_with_workers, worker_count};

#[derive(Debug, Parser)]
#[command(name = "rsbg-bench", version, about = "Seeded benchmark runs for the RSBG planners")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config and write its results directory.
    Run(RunArgs),
    /// Run the experiment once per value of K or of the iteration budget.
    Sweep(SweepArgs),
    /// Print the sample-complexity exponents of the SBG and RSBG searches.
    Complexity(ComplexityArgs),
    /// Re-run one trial of one planner and dump its full trace.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Results directory (overrides `output` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Search iterations for every planner.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Worker threads (default: $RSBG_WORKERS, then all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("axis").required(true).args(["k", "iteration_list"])))]
pub struct SweepArgs {
    pub config: PathBuf,
    /// Comma-separated K values, applied to the partition planners.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Comma-separated iteration budgets, applied to every planner.
    #[arg(long = "iteration-list", value_delimiter = ',')]
    pub iteration_list: Vec<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Number of agents N, ego included.
    #[arg(long)]
    pub agents: u32,
    /// Prediction horizon t.
    #[arg(long)]
    pub horizon: u32,
    /// Hypotheses per agent; with --behavior-samples, also prints log10 of the ratio.
    #[arg(long)]
    pub k: Option<usize>,
    /// Size |B| of the sampled behavior space.
    #[arg(long)]
    pub behavior_samples: Option<f64>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub config: PathBuf,
    /// Trial index.
    #[arg(long)]
    pub trial: usize,
    /// Planner id; defaults to the first planner.
    #[arg(long)]
    pub planner: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_with(path: &Path, o: &Overrides) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(s) = o.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = o.iterations {
        cfg.search.iterations = n;
        for p in &mut cfg.planners {
            p.iterations = Some(n);
        }
    }
    if let Some(out) = &o.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(&cfg.name))
}

fn workers(o: &Overrides) -> usize {
    o.workers.filter(|&n| n > 0).unwrap_or_else(worker_count)
}

fn print_summaries(summaries: &[MetricsSummary]) {
    let w = summaries.iter().map(|s| s.planner.len()).max().unwrap_or(0).max(7);
    println!(
        "{:<w$} {:>7} {:>9} {:>11} {:>9} {:>11}",
        "planner", "trials", "success%", "collision%", "timeout%", "mean steps"
    );
    for s in summaries {
        let steps = s.mean_steps_to_goal.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
        println!(
            "{:<w$} {:>7} {:>9.1} {:>11.1} {:>9.1} {:>11}",
            s.planner, s.trials, s.success_pct, s.collision_pct, s.timeout_pct, steps
        );
    }
}

fn execute(cmd: Command) -> Result<(), BenchError> {
    match cmd {
        Command::Run(a) => {
            let cfg = load_with(&a.config, &a.overrides)?;
            let out = run_experiment_with_workers(&cfg, workers(&a.overrides))?;
            let dir = out_dir(&cfg);
            let path = write_results(&dir, &out)?;
            print_summaries(&out.summaries);
            println!("results: {}", path.display());
            Ok(())
        }
        Command::Sweep(a) => sweep(a),
        Command::Complexity(a) => complexity(a),
        Command::Replay(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if let Some(s) = a.seed {
                cfg.master_seed = s;
            }
            let planners = cfg.resolved_planners()?;
            let id = a.planner.clone().unwrap_or_else(|| planners[0].id.clone());
            let (record, trace) = replay_trial(&cfg, &id, a.trial)?;
            let mut text = serde_json::to_string_pretty(&trace).expect("trace serializes");
            text.push('\n');
            match &a.out {
                Some(path) => {
                    std::fs::write(path, &text).map_err(|e| BenchError::Io(path.clone(), e))?;
                    println!(
                        "{} trial {}: {} after {} steps, trace: {}",
                        record.planner,
                        record.trial,
                        record.outcome,
                        record.steps,
                        path.display()
                    );
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout
                        .write_all(text.as_bytes())
                        .map_err(|e| BenchError::Io(PathBuf::from("<stdout>"), e))?;
                }
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SweepPoint {
    parameter: &'static str,
    value: usize,
    results: PathBuf,
    summaries: Vec<MetricsSummary>,
}

fn sweep(a: SweepArgs) -> Result<(), BenchError> {
    let base = load_with(&a.config, &a.overrides)?;
    let (parameter, values) = if a.k.is_empty() {
        ("iterations", a.iteration_list.clone())
    } else {
        ("k", a.k.clone())
    };
    let root = out_dir(&base);
    let mut points = Vec::new();
    let mut table = String::new();
    for &value in &values {
        let mut cfg = base.clone();
        for p in &mut cfg.planners {
            if parameter == "k" {
                if p.uses_partition() {
                    p.k = Some(value);
                }
            } else {
                p.iterations = Some(value);
            }
        }
        cfg.validate()?;
        let out = run_experiment_with_workers(&cfg, workers(&a.overrides))?;
        let dir = root.join(format!("{parameter}-{value}"));
        write_results(&dir, &out)?;
        println!("{parameter} = {value}");
        print_summaries(&out.summaries);
        let csv = summary_csv(&out.summaries)?;
        for (i, line) in csv.lines().enumerate() {
            if i == 0 {
                if table.is_empty() {
                    table.push_str(&format!("{parameter},{line}\n"));
                }
            } else {
                table.push_str(&format!("{value},{line}\n"));
            }
        }
        points.push(SweepPoint {
            parameter,
            value,
            results: dir.join(crate::output::RESULTS_FILE),
            summaries: out.summaries,
        });
    }
    std::fs::create_dir_all(&root).map_err(|e| BenchError::Io(root.clone(), e))?;
    let csv_path = root.join("sweep.csv");
    std::fs::write(&csv_path, table).map_err(|e| BenchError::Io(csv_path.clone(), e))?;
    let json_path = root.join("sweep.json");
    let mut json = serde_json::to_string_pretty(&points).expect("sweep serializes");
    json.push('\n');
    std::fs::write(&json_path, json).map_err(|e| BenchError::Io(json_path.clone(), e))?;
    println!("sweep: {}", csv_path.display());
    Ok(())
}

fn complexity(a: ComplexityArgs) -> Result<(), BenchError> {
    let report = complexity_ratio(a.agents, a.horizon).map_err(|e| BenchError::Config(e.to_string()))?;
    let log10_ratio = match (a.k, a.behavior_samples) {
        (Some(k), Some(b)) => {
            if k == 0 || !(b > 0.0) {
                return Err(BenchError::Config("k and behavior-samples must be positive".into()));
            }
            Some(report.ratio_exponent as f64 * (b / k as f64).log10())
        }
        _ => None,
    };
    if a.json {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(flatten)]
            report: &'a rsbg_core::search::ComplexityReport,
            #[serde(skip_serializing_if = "Option::is_none")]
            log10_ratio: Option<f64>,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Out {
                report: &report,
                log10_ratio
            })
            .expect("report serializes")
        );
    } else {
        println!("{report}");
        println!("ratio exponent: {}", report.ratio_exponent);
        if let Some(l) = log10_ratio {
            println!("log10 ratio: {l:.3}");
        }
    }
    Ok(())
}

