//! `rbsynth` command-line interface.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rbsynth::config::{RunConfig, PRESETS};
use rbsynth::harness::{learn, render_report, HarnessError, LearnOptions, LearnOutcome};
use rbsynth::oracle::{validate_summary, OracleError, Verdict};
use rbsynth::protocol::{efficiency_metrics, parse_algorithm, render_pseudocode, AlgorithmDraft, SystemParams};

const EXIT_NO_CORRECT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "rbsynth", version, about = "Learn and check reliable broadcast algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured simulations and write statistics and reports.
    Learn {
        config: PathBuf,
        /// Continue from the checkpoints in the output directory.
        #[arg(long)]
        resume: bool,
        /// Override `generation.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop after this many episodes without a final checkpoint.
        #[arg(long, hide = true)]
        halt_after: Option<usize>,
    },
    /// Check an algorithm file against the failure modes of a config.
    Validate { algorithm: PathBuf, config: PathBuf },
    /// Pretty-print an algorithm file, optionally with its cost at N and F.
    Render {
        algorithm: PathBuf,
        #[arg(long, requires = "f")]
        n: Option<usize>,
        #[arg(long, requires = "n")]
        f: Option<usize>,
    },
    /// Print a shipped configuration.
    Preset {
        #[arg(value_parser = PRESETS.map(|p| p.0))]
        name: String,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

/// Writes to stdout, ignoring a reader that has gone away.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn oracle_exit(e: &OracleError) -> u8 {
    match e {
        OracleError::StateBudget { .. } => EXIT_RESOURCE,
        _ => EXIT_INPUT,
    }
}

fn load_algorithm(path: &Path) -> Result<AlgorithmDraft, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_algorithm(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Learn {
            config,
            resume,
            seed,
            out,
            halt_after,
        } => {
            let mut cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_INPUT, e),
            };
            if let Some(seed) = seed {
                cfg.generation.seed = seed;
            }
            if let Some(out) = out {
                cfg.output.directory = out;
            }
            match learn(&cfg, &LearnOptions { resume, halt_after }) {
                Ok(LearnOutcome::Halted { episodes_run }) => {
                    eprintln!("halted after {episodes_run} episodes");
                    ExitCode::SUCCESS
                }
                Ok(LearnOutcome::Finished(report)) => {
                    emit(&render_report(&report));
                    if report.found_correct() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_NO_CORRECT)
                    }
                }
                Err(HarnessError::Oracle(e)) => fail(oracle_exit(&e), e),
                Err(e) => fail(EXIT_INPUT, e),
            }
        }
        Command::Validate { algorithm, config } => {
            let alg = match load_algorithm(&algorithm) {
                Ok(a) => a,
                Err(e) => return fail(EXIT_INPUT, e),
            };
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_INPUT, e),
            };
            match validate_summary(&alg, &cfg.validation) {
                Ok(s) => {
                    emit(&format!(
                        "{}\n({} scenarios, {} states)\n",
                        s.verdict, s.scenarios, s.states
                    ));
                    match s.verdict {
                        Verdict::Correct => ExitCode::SUCCESS,
                        Verdict::Violation(_) => ExitCode::from(EXIT_NO_CORRECT),
                    }
                }
                Err(e) => fail(oracle_exit(&e), e),
            }
        }
        Command::Render { algorithm, n, f } => {
            let alg = match load_algorithm(&algorithm) {
                Ok(a) => a,
                Err(e) => return fail(EXIT_INPUT, e),
            };
            emit(&render_pseudocode(&alg).expect("parsed algorithms are complete"));
            if let (Some(n), Some(f)) = (n, f) {
                let params = match SystemParams::new(n, f) {
                    Ok(p) => p,
                    Err(e) => return fail(EXIT_INPUT, e),
                };
                let m = efficiency_metrics(&alg, params).expect("parsed algorithms are complete");
                emit(&format!(
                    "N={n}, F={f}: {} messages, {} communication steps, deliver cost {}\n",
                    m.messages_worst_case, m.comm_steps, m.deliver_cost
                ));
            }
            ExitCode::SUCCESS
        }
        Command::Preset { name } => {
            emit(RunConfig::preset_text(&name).expect("clap checked the name"));
            ExitCode::SUCCESS
        }
    }
}
