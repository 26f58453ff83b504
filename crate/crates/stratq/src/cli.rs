//! Argument parsing and subcommand dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use stratq_core::bounds::{
    fidelity_bound_exact, fidelity_bound_hybrid, fidelity_bound_iterative, junk_necessity_check, BoundMethod,
    JunkVerdict, DEFAULT_ENUMERATION_CAP, DEFAULT_JUNK_MAX_LEN,
};
use stratq_core::clocks::{convergence_diagnostics, UniformReset};
use stratq_core::encoding::{encode_with, quantum_memory_cost, solve_overlap_system, Encoding, Variant, DEFAULT_MAX_ITER};
use stratq_core::simulator::{faithfulness_test, run_interaction};
use stratq_core::stationary::{classical_memory_cost, joint_stationary_distribution};
use stratq_core::{InputStrategy, Strategy};

use crate::formats::{self, fmt12};
use crate::sweep::parallel_sweep;
use crate::CliError;

#[derive(Debug, Clone, Parser)]
#[command(name = "stratq", version, about = "Compile agent strategies into memory-minimal quantum agents")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check a strategy (and optionally an input strategy) file.
    Validate {
        #[command(flatten)]
        files: Files,
    },
    /// Merge states with identical futures.
    Minimize {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the quantum encoding and write the bundle.
    Encode {
        #[arg(long)]
        strategy: PathBuf,
        #[command(flatten)]
        solver: Solver,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical and quantum memory costs under an input strategy.
    Cost {
        #[command(flatten)]
        files: Files,
        #[command(flatten)]
        solver: Solver,
    },
    /// Pairwise fidelity bounds.
    Bounds {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, default_value = "exact", value_parser = parse_method)]
        method: BoundMethod,
        /// Iteration depth for the iterative and hybrid methods.
        #[arg(long, default_value_t = 30)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a certificate that scalar junk cannot work.
    JunkCheck {
        #[arg(long)]
        strategy: PathBuf,
        /// Longest stimulus string searched.
        #[arg(long, default_value_t = DEFAULT_JUNK_MAX_LEN)]
        depth: usize,
    },
    /// Run the compiled agent against an input strategy.
    Simulate {
        #[command(flatten)]
        files: Files,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial causal state label (default: the first state).
        #[arg(long)]
        start: Option<String>,
        /// Run the faithfulness test at this horizon instead of a trajectory.
        #[arg(long)]
        faithfulness: Option<usize>,
        /// Samples per stimulus string for the faithfulness test.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Memory costs of a uniform clock with memoryless resets over a
    /// range of binary precisions.
    ClockSweep {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long = "reset-rate", default_value_t = 0.5)]
        reset_rate: f64,
        /// Precision range `A..B`, inclusive.
        #[arg(long = "n", default_value = "4..12", value_parser = parse_range)]
        range: (u32, u32),
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Files {
    #[arg(long)]
    pub strategy: PathBuf,
    /// Input strategy; defaults to uniform i.i.d. stimuli.
    #[arg(long = "input-strategy")]
    pub input_strategy: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Solver {
    #[arg(long, default_value = "qinf", value_parser = parse_variant)]
    pub variant: Variant,
    /// Convergence tolerance of the overlap iteration.
    #[arg(long, default_value_t = 1e-12, value_parser = parse_tol)]
    pub tol: f64,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: stratq_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<BoundMethod, String> {
    s.parse().map_err(|e: stratq_core::Error| e.to_string())
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("tolerance must be positive".into())
    }
}

/// `A..B` (inclusive) or a single `A`.
pub fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: u32 = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
    if a > b {
        return Err(format!("empty range `{s}`"));
    }
    Ok((a, b))
}

fn input_for(strategy: &Strategy, path: Option<&Path>) -> Result<InputStrategy, CliError> {
    match path {
        Some(p) => formats::load_input_strategy(p),
        None => Ok(InputStrategy::uniform_for(strategy)),
    }
}

fn encode_strategy(strategy: &Strategy, solver: &Solver) -> Result<Encoding, CliError> {
    let overlaps = solve_overlap_system(strategy, solver.variant, solver.tol, DEFAULT_MAX_ITER)
        .map_err(CliError::core("solve_overlap_system"))?;
    encode_with(strategy, overlaps).map_err(CliError::core("encode"))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => formats::write_text(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })?
    };
}

/// Run one subcommand, writing human-readable output to `out`.
pub fn dispatch(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match &config.command {
        Command::Validate { files } => {
            let s = formats::load_strategy(&files.strategy)?;
            let m = s.minimize();
            say!(out, "strategy: {} states, {} stimuli, {} actions", s.num_states(), s.num_stimuli(), s.num_actions());
            say!(out, "causal states: {}", m.strategy.num_states());
            if let Some(p) = &files.input_strategy {
                let i = formats::load_input_strategy(p)?;
                i.aligned_to(&s).map_err(|e| CliError::validation(p, e))?;
                say!(out, "input strategy: {} states", i.num_states());
            }
            say!(out, "valid");
        }
        Command::Minimize { strategy, out: path } => {
            let s = formats::load_strategy(strategy)?;
            let m = s.minimize();
            let mut text = formats::strategy_json(&m.strategy);
            text.push('\n');
            emit(out, path.as_deref(), &text)?;
            if path.is_some() {
                for (old, new) in m.merge_map.iter().enumerate() {
                    say!(out, "{} -> {}", s.states()[old], m.strategy.states()[*new]);
                }
            }
        }
        Command::Encode { strategy, solver, out: path } => {
            let s = formats::load_strategy(strategy)?;
            let e = encode_strategy(&s, solver)?;
            let text = formats::to_json(&formats::bundle(&s, &e));
            emit(out, path.as_deref(), &text)?;
            if path.is_some() {
                say!(out, "variant: {}", e.variant.name());
                say!(out, "memory dimension: {}", e.states.dim);
                say!(out, "unitary dimension: {}", e.unitary.layout.total_dim());
                say!(out, "unitarity residual: {}", fmt12(e.unitary.unitarity_residual));
                say!(out, "consistency residual: {}", fmt12(e.consistency.max_residual));
            }
        }
        Command::Cost { files, solver } => {
            let s = formats::load_strategy(&files.strategy)?;
            let input = input_for(&s, files.input_strategy.as_deref())?;
            let js = joint_stationary_distribution(&s, &input).map_err(CliError::core("joint_stationary_distribution"))?;
            say!(out, "C_mu: {}", fmt12(classical_memory_cost(&js)));
            for variant in [Variant::Q1, Variant::QInf] {
                let e = encode_strategy(&s, &Solver { variant, tol: solver.tol })?;
                let c = quantum_memory_cost(&e.states, &js.marginal).map_err(CliError::core("quantum_memory_cost"))?;
                say!(out, "C_{}: {}", variant.name(), fmt12(c));
            }
            for (k, p) in js.marginal.iter().enumerate() {
                say!(out, "P({}): {}", s.states()[k], fmt12(*p));
            }
        }
        Command::Bounds { strategy, method, depth, out: path } => {
            let s = formats::load_strategy(strategy)?;
            let table = match method {
                BoundMethod::Iterative => fidelity_bound_iterative(&s, *depth),
                BoundMethod::Exact => {
                    fidelity_bound_exact(&s, DEFAULT_ENUMERATION_CAP).map_err(CliError::core("fidelity_bound_exact"))?
                }
                BoundMethod::Hybrid => fidelity_bound_hybrid(&s, *depth),
            };
            let verdict = junk_necessity_check(&s, DEFAULT_JUNK_MAX_LEN);
            let report = formats::bounds_report(&s, &table, &verdict, DEFAULT_JUNK_MAX_LEN);
            emit(out, path.as_deref(), &formats::to_json(&report))?;
        }
        Command::JunkCheck { strategy, depth } => {
            let s = formats::load_strategy(strategy)?;
            let verdict = junk_necessity_check(&s, *depth);
            match formats::witness_file(&s, &verdict) {
                Some(w) => {
                    say!(out, "junk required");
                    say!(out, "{}", formats::to_json(&w).trim_end());
                }
                None => {
                    let JunkVerdict::Inconclusive { max_len } = verdict else { unreachable!() };
                    say!(out, "inconclusive up to length {max_len}");
                }
            }
        }
        Command::Simulate { files, solver, steps, seed, start, faithfulness, samples, out: path } => {
            let s = formats::load_strategy(&files.strategy)?;
            let s0 = match start {
                Some(label) => s.state_index(label).ok_or_else(|| CliError::Usage(format!("unknown state `{label}`")))?,
                None => 0,
            };
            let e = encode_strategy(&s, solver)?;
            if let Some(horizon) = faithfulness {
                let r = faithfulness_test(&s, &e, s0, *horizon, *samples, *seed).map_err(CliError::core("faithfulness_test"))?;
                emit(out, path.as_deref(), &formats::to_json(&formats::faithfulness_file(&s, &r, *seed)))?;
                if path.is_some() {
                    say!(out, "max tv: {} (tolerance {})", fmt12(r.max_tv), fmt12(r.tolerance));
                    say!(out, "{}", if r.passed { "passed" } else { "failed" });
                }
            } else {
                let input = input_for(&s, files.input_strategy.as_deref())?;
                let rec = run_interaction(&s, &e, &input, *steps, *seed, 0, s0).map_err(CliError::core("run_interaction"))?;
                match path {
                    Some(p) => formats::write_trajectory_csv(p, &s, &rec)?,
                    None => {
                        say!(out, "step,x,y,collapse_fidelity");
                        for k in 0..rec.stimuli.len() {
                            say!(
                                out,
                                "{k},{},{},{}",
                                s.stimuli()[rec.stimuli[k]],
                                s.actions()[rec.actions[k]],
                                fmt12(rec.collapse_fidelities[k])
                            );
                        }
                    }
                }
            }
        }
        Command::ClockSweep { tau, reset_rate, range, out: path } => {
            if tau.is_nan() || *tau <= 0.0 || reset_rate.is_nan() || *reset_rate < 0.0 {
                return Err(CliError::Usage("tau must be positive and the reset rate nonnegative".into()));
            }
            let family = UniformReset { tau: *tau, reset_rate: *reset_rate };
            let rows = parallel_sweep(&family, range.0, range.1).map_err(CliError::core("precision_sweep"))?;
            let csv = formats::sweep_csv(&rows);
            emit(out, path.as_deref(), &csv)?;
            if let Some(p) = path {
                formats::write_text(&p.with_extension("dat"), &formats::sweep_dat(&rows))?;
            }
            match convergence_diagnostics(&rows) {
                Ok(d) => {
                    let text = formats::to_json(&formats::diagnostics_file(&d));
                    if path.is_some() {
                        say!(out, "{}", text.trim_end());
                    } else {
                        eprintln!("{}", text.trim_end());
                    }
                }
                Err(e) => eprintln!("diagnostics skipped: {e}"),
            }
        }
    }
    Ok(())
}
