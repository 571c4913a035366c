//! Runs the configured simulations against an output directory: per-episode
//! statistics, resumable checkpoints and the final run report.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ReportFormat, RunConfig};
use crate::learner::{EpisodeStats, Simulation, SimulationResult};
use crate::oracle::OracleError;
use crate::protocol::{
    efficiency_metrics, enumerate_actions, render_pseudocode, EfficiencyMetrics, StateKey, SystemParams,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("statistics file {path}: {message}")]
    Stats { path: PathBuf, message: String },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default)]
pub struct LearnOptions {
    pub resume: bool,
    /// Stop after this many episodes in this invocation, without a final
    /// checkpoint, as if the process had been killed.
    pub halt_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnOutcome {
    Finished(Box<RunReport>),
    Halted { episodes_run: usize },
}

/// File names inside the output directory.
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn stats(&self, i: usize) -> PathBuf {
        self.dir.join(format!("stats_sim{i}.csv"))
    }

    pub fn checkpoint(&self, i: usize) -> PathBuf {
        self.dir.join(format!("checkpoint_sim{i}.json"))
    }

    pub fn summary(&self, i: usize) -> PathBuf {
        self.dir.join(format!("summary_sim{i}.json"))
    }

    pub fn qtable(&self, i: usize) -> PathBuf {
        self.dir.join(format!("qtable_sim{i}.json"))
    }

    pub fn report_json(&self) -> PathBuf {
        self.dir.join("report.json")
    }

    pub fn report_text(&self) -> PathBuf {
        self.dir.join("report.txt")
    }

    pub fn best_algorithm(&self) -> PathBuf {
        self.dir.join("best_algorithm.txt")
    }

    fn is_run_artifact(name: &str) -> bool {
        let per_sim = ["stats_sim", "checkpoint_sim", "summary_sim", "qtable_sim"];
        per_sim.iter().any(|p| name.starts_with(p))
            || matches!(name, "report.json" | "report.txt" | "best_algorithm.txt")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 with fewer than two values.
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: 0.0,
                std: 0.0,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        };
        Self { mean, std, count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub states_explored: MeanStd,
    pub states_per_episode: MeanStd,
    pub algorithms_generated: MeanStd,
    pub algorithms_per_episode: MeanStd,
    pub correct: MeanStd,
    pub incorrect: MeanStd,
    /// Over the simulations that found a correct algorithm.
    pub first_correct_episode: MeanStd,
    pub algorithms_until_first_correct: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub index: usize,
    pub seed: u64,
    pub episodes: usize,
    pub states_explored: usize,
    pub algorithms_generated: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub first_correct_episode: Option<usize>,
    pub algorithms_until_first_correct: Option<usize>,
    pub best: Option<BestReport>,
    /// Every distinct correct algorithm, in key order.
    pub correct_algorithms: Vec<CorrectAlgorithm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectAlgorithm {
    pub key: StateKey,
    pub metrics: EfficiencyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestReport {
    pub simulation: usize,
    pub episode: usize,
    pub total_reward: i64,
    pub key: StateKey,
    pub metrics: EfficiencyMetrics,
    pub metrics_at: SystemParams,
    pub pseudocode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub simulations: Vec<SimulationSummary>,
    pub aggregates: Aggregates,
    pub best: Option<BestReport>,
}

impl RunReport {
    pub fn found_correct(&self) -> bool {
        self.simulations.iter().any(|s| s.correct > 0)
    }
}

/// Size used for reported metrics: the strictest configured mode.
pub fn metrics_params(cfg: &RunConfig) -> Result<SystemParams, OracleError> {
    let mode = *cfg
        .validation
        .ordered_modes()
        .last()
        .ok_or_else(|| OracleError::InvalidConfig {
            key: "validation.modes".into(),
            message: "empty".into(),
        })?;
    cfg.validation.params(mode)
}

fn summarize(res: &SimulationResult, params: SystemParams) -> SimulationSummary {
    let last = res.last().copied();
    let best = res.best.as_ref().map(|b| BestReport {
        simulation: res.index,
        episode: b.episode,
        total_reward: b.total_reward,
        key: b.algorithm.key(),
        metrics: efficiency_metrics(&b.algorithm, params).expect("best algorithm is complete"),
        metrics_at: params,
        pseudocode: render_pseudocode(&b.algorithm).expect("best algorithm is complete"),
    });
    SimulationSummary {
        index: res.index,
        seed: res.seed,
        episodes: res.episodes,
        states_explored: last.map_or(0, |s| s.cumulative_states),
        algorithms_generated: last.map_or(0, |s| s.cumulative_algorithms),
        correct: last.map_or(0, |s| s.cumulative_correct),
        incorrect: last.map_or(0, |s| s.cumulative_incorrect),
        first_correct_episode: res.first_correct.map(|f| f.episode),
        algorithms_until_first_correct: res.first_correct.map(|f| f.algorithms_generated),
        best,
        correct_algorithms: res
            .correct_algorithms
            .iter()
            .map(|key| CorrectAlgorithm {
                key: key.clone(),
                metrics: efficiency_metrics(&key.to_draft(), params).expect("correct algorithms are complete"),
            })
            .collect(),
    }
}

pub fn read_stats(path: &Path) -> Result<Vec<EpisodeStats>, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if i == 0 {
            if line != EpisodeStats::CSV_HEADER {
                return Err(HarnessError::Stats {
                    path: path.to_path_buf(),
                    message: "unexpected header".into(),
                });
            }
            continue;
        }
        let row = EpisodeStats::parse_csv_row(&line).ok_or_else(|| HarnessError::Stats {
            path: path.to_path_buf(),
            message: format!("malformed row {}", i + 1),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Aggregates over the raw statistics files, one per simulation.
pub fn aggregate_stats(per_sim: &[Vec<EpisodeStats>]) -> Aggregates {
    let finals: Vec<EpisodeStats> = per_sim.iter().filter_map(|rows| rows.last().copied()).collect();
    let over = |f: &dyn Fn(&EpisodeStats) -> f64| MeanStd::of(&finals.iter().map(f).collect::<Vec<_>>());
    let firsts: Vec<EpisodeStats> = per_sim
        .iter()
        .filter_map(|rows| rows.iter().find(|r| r.cumulative_correct > 0).copied())
        .collect();
    Aggregates {
        states_explored: over(&|s| s.cumulative_states as f64),
        states_per_episode: over(&|s| s.cumulative_states as f64 / s.episode as f64),
        algorithms_generated: over(&|s| s.cumulative_algorithms as f64),
        algorithms_per_episode: over(&|s| s.cumulative_algorithms as f64 / s.episode as f64),
        correct: over(&|s| s.cumulative_correct as f64),
        incorrect: over(&|s| s.cumulative_incorrect as f64),
        first_correct_episode: MeanStd::of(&firsts.iter().map(|s| s.episode as f64).collect::<Vec<_>>()),
        algorithms_until_first_correct: MeanStd::of(
            &firsts
                .iter()
                .map(|s| s.cumulative_algorithms as f64)
                .collect::<Vec<_>>(),
        ),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialise");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn rewrite_stats(path: &Path, rows: &[EpisodeStats]) -> Result<BufWriter<File>, HarnessError> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(EpisodeStats::CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))?;
    let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
    Ok(BufWriter::new(file))
}

fn load_checkpoint(path: &Path, seed: u64, episodes: usize) -> Result<Option<Simulation>, HarnessError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    let bad = |message: String| HarnessError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let sim: Simulation = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if sim.seed != seed || sim.episodes != episodes {
        return Err(bad(format!(
            "written for seed {} and {} episodes, the config asks for seed {seed} and {episodes}",
            sim.seed, sim.episodes
        )));
    }
    Ok(Some(sim))
}

/// Runs (or resumes) every configured simulation and writes the report.
pub fn learn(cfg: &RunConfig, opts: &LearnOptions) -> Result<LearnOutcome, HarnessError> {
    let layout = Layout::new(&cfg.output.directory);
    fs::create_dir_all(&layout.dir).map_err(io_err(&layout.dir))?;
    if !opts.resume {
        for entry in fs::read_dir(&layout.dir).map_err(io_err(&layout.dir))? {
            let entry = entry.map_err(io_err(&layout.dir))?;
            if entry.file_name().to_str().is_some_and(Layout::is_run_artifact) {
                fs::remove_file(entry.path()).map_err(io_err(&entry.path()))?;
            }
        }
    }

    let learner = cfg.learner();
    let universe = enumerate_actions(learner.max_types);
    let params = metrics_params(cfg)?;
    let gen = &cfg.generation;
    let mut budget = opts.halt_after;
    let mut episodes_run = 0;
    let mut results = Vec::with_capacity(gen.simulations);

    for i in 0..gen.simulations {
        let seed = gen.seed.wrapping_add(i as u64);
        let ckpt_path = layout.checkpoint(i);
        let mut sim = match opts.resume {
            true => load_checkpoint(&ckpt_path, seed, gen.episodes)?,
            false => None,
        }
        .unwrap_or_else(|| Simulation::new(i, seed, gen.episodes));

        let stats_path = layout.stats(i);
        let mut stats = rewrite_stats(&stats_path, sim.stats())?;
        while !sim.is_finished() {
            if budget == Some(0) {
                stats.flush().map_err(io_err(&stats_path))?;
                return Ok(LearnOutcome::Halted { episodes_run });
            }
            let (_, row) = sim.step(&learner, &universe)?;
            episodes_run += 1;
            budget = budget.map(|b| b - 1);
            writeln!(stats, "{}", row.csv_row()).map_err(io_err(&stats_path))?;
            if sim.completed() % cfg.output.checkpoint_every == 0 && !sim.is_finished() {
                stats.flush().map_err(io_err(&stats_path))?;
                write_json(&ckpt_path, &sim)?;
            }
        }
        stats.flush().map_err(io_err(&stats_path))?;
        write_json(&ckpt_path, &sim)?;
        write_json(&layout.qtable(i), sim.qtable())?;
        let res = sim.result();
        write_json(&layout.summary(i), &summarize(&res, params))?;
        results.push(res);
    }

    let per_sim = (0..gen.simulations)
        .map(|i| read_stats(&layout.stats(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries: Vec<SimulationSummary> = results.iter().map(|r| summarize(r, params)).collect();
    let best =
        summaries
            .iter()
            .filter_map(|s| s.best.clone())
            .reduce(|a, b| if b.total_reward > a.total_reward { b } else { a });
    let report = RunReport {
        aggregates: aggregate_stats(&per_sim),
        simulations: summaries,
        best,
    };

    if cfg.output.formats.contains(&ReportFormat::Json) {
        write_json(&layout.report_json(), &report)?;
    }
    if cfg.output.formats.contains(&ReportFormat::Text) {
        write_atomic(&layout.report_text(), render_report(&report).as_bytes())?;
    }
    let best_text = report
        .best
        .as_ref()
        .map_or_else(|| "no correct algorithm found\n".to_string(), |b| b.pseudocode.clone());
    write_atomic(&layout.best_algorithm(), best_text.as_bytes())?;
    Ok(LearnOutcome::Finished(Box::new(report)))
}

fn fmt_ms(m: &MeanStd) -> String {
    format!("{:.2} ± {:.2} (n={})", m.mean, m.std, m.count)
}

pub fn render_report(r: &RunReport) -> String {
    let mut out = String::new();
    let a = &r.aggregates;
    let _ = writeln!(out, "simulations: {}", r.simulations.len());
    for s in &r.simulations {
        let _ = writeln!(
            out,
            "  sim {} (seed {}): {} episodes, {} states, {} algorithms ({} correct, {} incorrect), first correct at episode {}",
            s.index,
            s.seed,
            s.episodes,
            s.states_explored,
            s.algorithms_generated,
            s.correct,
            s.incorrect,
            s.first_correct_episode.map_or_else(|| "-".into(), |e| e.to_string())
        );
    }
    let _ = writeln!(out, "mean ± sample std:");
    for (name, m) in [
        ("states explored", &a.states_explored),
        ("states per episode", &a.states_per_episode),
        ("algorithms generated", &a.algorithms_generated),
        ("algorithms per episode", &a.algorithms_per_episode),
        ("correct algorithms", &a.correct),
        ("incorrect algorithms", &a.incorrect),
        ("first correct episode", &a.first_correct_episode),
        ("algorithms until first correct", &a.algorithms_until_first_correct),
    ] {
        let _ = writeln!(out, "  {name}: {}", fmt_ms(m));
    }
    match &r.best {
        None => out.push_str("best algorithm: none\n"),
        Some(b) => {
            let _ = writeln!(
                out,
                "best algorithm: simulation {}, episode {}, total reward {}",
                b.simulation, b.episode, b.total_reward
            );
            let _ = writeln!(
                out,
                "metrics at N={}, F={}: {} messages, {} communication steps, deliver cost {}",
                b.metrics_at.n,
                b.metrics_at.f,
                b.metrics.messages_worst_case,
                b.metrics.comm_steps,
                b.metrics.deliver_cost
            );
            out.push_str(&b.pseudocode);
        }
    }
    out
}
