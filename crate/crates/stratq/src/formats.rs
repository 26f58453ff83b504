//! On-disk formats: strategy and input JSON, encoding bundles, bound and
//! faithfulness reports, trajectory and sweep tables.
//!
//! Strategy files keep full `f64` precision so that saving and loading is
//! lossless. Every report prints numbers with 12 significant digits.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use stratq_core::bounds::{FidelityBoundTable, JunkVerdict};
use stratq_core::clocks::{ConvergenceReport, SweepRow};
use stratq_core::encoding::Encoding;
use stratq_core::linalg::Matrix;
use stratq_core::simulator::{FaithfulnessReport, TrajectoryRecord};
use stratq_core::{InputSpec, InputStrategy, InputTransitionSpec, Strategy, StrategySpec, TransitionSpec};

use crate::CliError;

/// Action label meaning "any action" in input-strategy files.
pub const WILDCARD: &str = "*";

/// `%.12g`-style rendering.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

/// Round to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v.is_finite() {
        fmt12(v).parse().expect("formatted float parses")
    } else {
        v
    }
}

fn ser12<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round12(*v))
}

fn ser12_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| round12(*x)))
}

fn ser12_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_some(&round12(*x)),
        None => s.serialize_none(),
    }
}

fn ser12_rows<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.iter().map(|x| round12(*x)).collect::<Vec<_>>()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionFile {
    pub state: String,
    pub stimulus: String,
    pub action: String,
    pub prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
}

/// Shared by strategies and input strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub stimuli: Vec<String>,
    pub actions: Vec<String>,
    pub states: Vec<String>,
    pub transitions: Vec<TransitionFile>,
}

impl StrategyFile {
    pub fn from_strategy(s: &Strategy) -> Self {
        let spec = s.to_spec();
        Self {
            stimuli: spec.stimuli,
            actions: spec.actions,
            states: spec.states,
            transitions: spec
                .transitions
                .into_iter()
                .map(|t| TransitionFile { state: t.state, stimulus: t.stimulus, action: t.action, prob: t.prob, next: t.next })
                .collect(),
        }
    }

    pub fn from_input(s: &InputStrategy) -> Self {
        let spec = s.to_spec();
        Self {
            stimuli: spec.stimuli,
            actions: spec.actions,
            states: spec.states,
            transitions: spec
                .transitions
                .into_iter()
                .map(|t| TransitionFile {
                    state: t.state,
                    stimulus: t.stimulus,
                    action: t.action.unwrap_or_else(|| WILDCARD.into()),
                    prob: t.prob,
                    next: t.next,
                })
                .collect(),
        }
    }

    pub fn to_strategy_spec(&self) -> StrategySpec {
        StrategySpec {
            stimuli: self.stimuli.clone(),
            actions: self.actions.clone(),
            states: self.states.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| TransitionSpec {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: t.action.clone(),
                    prob: t.prob,
                    next: t.next.clone(),
                })
                .collect(),
        }
    }

    pub fn to_input_spec(&self) -> InputSpec {
        InputSpec {
            stimuli: self.stimuli.clone(),
            actions: self.actions.clone(),
            states: self.states.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| InputTransitionSpec {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: (t.action != WILDCARD).then(|| t.action.clone()),
                    prob: t.prob,
                    next: t.next.clone(),
                })
                .collect(),
        }
    }
}

fn read_file(path: &Path) -> Result<StrategyFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load_strategy(path: &Path) -> Result<Strategy, CliError> {
    let file = read_file(path)?;
    Strategy::from_spec(&file.to_strategy_spec()).map_err(|e| CliError::validation(path, e))
}

pub fn load_input_strategy(path: &Path) -> Result<InputStrategy, CliError> {
    let file = read_file(path)?;
    InputStrategy::from_spec(&file.to_input_spec()).map_err(|e| CliError::validation(path, e))
}

/// Either kind of file, decided by which validation succeeds. Files with a
/// wildcard action are always input strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Strategy(Strategy),
    Input(InputStrategy),
}

pub fn load_strategy_file(path: &Path) -> Result<Loaded, CliError> {
    let file = read_file(path)?;
    let wildcard = file.transitions.iter().any(|t| t.action == WILDCARD);
    if !wildcard {
        if let Ok(s) = Strategy::from_spec(&file.to_strategy_spec()) {
            return Ok(Loaded::Strategy(s));
        }
    }
    match InputStrategy::from_spec(&file.to_input_spec()) {
        Ok(i) => Ok(Loaded::Input(i)),
        Err(e) if wildcard => Err(CliError::validation(path, e)),
        Err(_) => Strategy::from_spec(&file.to_strategy_spec())
            .map(Loaded::Strategy)
            .map_err(|e| CliError::validation(path, e)),
    }
}

pub fn strategy_json(s: &Strategy) -> String {
    serde_json::to_string_pretty(&StrategyFile::from_strategy(s)).expect("serialisable")
}

pub fn input_json(s: &InputStrategy) -> String {
    serde_json::to_string_pretty(&StrategyFile::from_input(s)).expect("serialisable")
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[derive(Debug, Serialize)]
pub struct LayoutFile {
    pub memory_dim: usize,
    pub num_stimuli: usize,
    pub num_actions: usize,
    pub junk_dim: usize,
    pub total_dim: usize,
    pub order: &'static str,
}

#[derive(Debug, Serialize)]
pub struct JunkVectorFile {
    pub state: String,
    pub stimulus: String,
    pub action: String,
    #[serde(serialize_with = "ser12_vec")]
    pub vector: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ResidualFile {
    #[serde(serialize_with = "ser12")]
    pub recursion: f64,
    #[serde(serialize_with = "ser12_vec")]
    pub consistency_per_stimulus: Vec<f64>,
    #[serde(serialize_with = "ser12")]
    pub state_gram: f64,
    #[serde(serialize_with = "ser12")]
    pub junk_gram: f64,
    #[serde(serialize_with = "ser12")]
    pub unitarity: f64,
    #[serde(serialize_with = "ser12")]
    pub action: f64,
}

#[derive(Debug, Serialize)]
pub struct BundleFile {
    pub variant: &'static str,
    pub states: Vec<String>,
    pub stimuli: Vec<String>,
    pub actions: Vec<String>,
    pub iterations: usize,
    #[serde(serialize_with = "ser12_rows")]
    pub overlaps: Vec<Vec<f64>>,
    pub stimulus_overlaps: Vec<MatrixFile>,
    pub memory_dim: usize,
    #[serde(serialize_with = "ser12_rows")]
    pub memory_states: Vec<Vec<f64>>,
    pub junk_dim: usize,
    pub junk_states: Vec<JunkVectorFile>,
    pub layout: LayoutFile,
    /// Row-major.
    #[serde(serialize_with = "ser12_vec")]
    pub unitary: Vec<f64>,
    pub residuals: ResidualFile,
}

#[derive(Debug, Serialize)]
#[serde(transparent)]
pub struct MatrixFile(#[serde(serialize_with = "ser12_rows")] pub Vec<Vec<f64>>);

pub fn bundle(strategy: &Strategy, enc: &Encoding) -> BundleFile {
    let l = enc.unitary.layout;
    let mut junk_states = Vec::new();
    for s in 0..strategy.num_states() {
        for x in 0..strategy.num_stimuli() {
            for y in 0..strategy.num_actions() {
                if let Some(v) = enc.junk.get(x, y, s) {
                    junk_states.push(JunkVectorFile {
                        state: strategy.states()[s].clone(),
                        stimulus: strategy.stimuli()[x].clone(),
                        action: strategy.actions()[y].clone(),
                        vector: v.to_vec(),
                    });
                }
            }
        }
    }
    BundleFile {
        variant: enc.variant.name(),
        states: strategy.states().to_vec(),
        stimuli: strategy.stimuli().to_vec(),
        actions: strategy.actions().to_vec(),
        iterations: enc.overlaps.iterations,
        overlaps: rows(&enc.overlaps.assembled),
        stimulus_overlaps: enc.overlaps.per_stimulus.iter().map(|m| MatrixFile(rows(m))).collect(),
        memory_dim: enc.states.dim,
        memory_states: enc.states.vectors.clone(),
        junk_dim: enc.junk.dim,
        junk_states,
        layout: LayoutFile {
            memory_dim: l.memory_dim,
            num_stimuli: l.num_stimuli,
            num_actions: l.num_actions,
            junk_dim: l.junk_dim,
            total_dim: l.total_dim(),
            order: "memory,input,output,junk",
        },
        unitary: (0..enc.unitary.matrix.rows()).flat_map(|i| enc.unitary.matrix.row(i).to_vec()).collect(),
        residuals: ResidualFile {
            recursion: enc.overlaps.residual,
            consistency_per_stimulus: enc.consistency.per_stimulus.clone(),
            state_gram: enc.consistency.state_residual,
            junk_gram: enc.consistency.junk_residual,
            unitarity: enc.unitary.unitarity_residual,
            action: enc.unitary.action_residual,
        },
    }
}

#[derive(Debug, Serialize)]
pub struct PairBoundFile {
    pub s: String,
    pub t: String,
    #[serde(serialize_with = "ser12")]
    pub bound: f64,
    pub argmin: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct WitnessFile {
    pub s: String,
    pub t: String,
    pub stimuli: Vec<String>,
    pub actions: Vec<String>,
    pub second_stimuli: Vec<String>,
    #[serde(serialize_with = "ser12")]
    pub alpha: f64,
    #[serde(serialize_with = "ser12")]
    pub p: f64,
    #[serde(serialize_with = "ser12")]
    pub p_prime: f64,
    #[serde(serialize_with = "ser12")]
    pub fidelity: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundsReport {
    pub method: &'static str,
    pub depth: Option<usize>,
    pub singular_fallback: bool,
    pub pairs: Vec<PairBoundFile>,
    pub witness: Option<WitnessFile>,
    pub junk_search_len: usize,
}

pub fn witness_file(strategy: &Strategy, verdict: &JunkVerdict) -> Option<WitnessFile> {
    let JunkVerdict::Required(w) = verdict else {
        return None;
    };
    let xs = |v: &[usize]| v.iter().map(|&x| strategy.stimuli()[x].clone()).collect();
    Some(WitnessFile {
        s: strategy.states()[w.s].clone(),
        t: strategy.states()[w.t].clone(),
        stimuli: xs(&w.stimuli),
        actions: w.actions.iter().map(|&y| strategy.actions()[y].clone()).collect(),
        second_stimuli: xs(&w.second_stimuli),
        alpha: w.alpha,
        p: w.p,
        p_prime: w.p_prime,
        fidelity: w.fidelity,
    })
}

pub fn bounds_report(strategy: &Strategy, table: &FidelityBoundTable, verdict: &JunkVerdict, search_len: usize) -> BoundsReport {
    let ns = strategy.num_states();
    let mut pairs = Vec::new();
    for s in 0..ns {
        for t in (s + 1)..ns {
            pairs.push(PairBoundFile {
                s: strategy.states()[s].clone(),
                t: strategy.states()[t].clone(),
                bound: table.get(s, t),
                argmin: table.argmin(s, t).map(|x| strategy.stimuli()[x].clone()),
            });
        }
    }
    BoundsReport {
        method: table.method.name(),
        depth: table.depth,
        singular_fallback: table.singular_fallback,
        pairs,
        witness: witness_file(strategy, verdict),
        junk_search_len: search_len,
    }
}

#[derive(Debug, Serialize)]
pub struct StringReportFile {
    pub stimuli: Vec<String>,
    #[serde(serialize_with = "ser12")]
    pub tv: f64,
}

#[derive(Debug, Serialize)]
pub struct FaithfulnessFile {
    pub start: String,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(serialize_with = "ser12")]
    pub tolerance: f64,
    #[serde(serialize_with = "ser12")]
    pub max_tv: f64,
    #[serde(serialize_with = "ser12")]
    pub min_collapse_fidelity: f64,
    pub passed: bool,
    pub strings: Vec<StringReportFile>,
}

pub fn faithfulness_file(strategy: &Strategy, r: &FaithfulnessReport, seed: u64) -> FaithfulnessFile {
    FaithfulnessFile {
        start: strategy.states()[r.start].clone(),
        horizon: r.horizon,
        samples: r.samples,
        seed,
        tolerance: r.tolerance,
        max_tv: r.max_tv,
        min_collapse_fidelity: r.min_collapse_fidelity,
        passed: r.passed,
        strings: r
            .strings
            .iter()
            .map(|s| StringReportFile {
                stimuli: s.stimuli.iter().map(|&x| strategy.stimuli()[x].clone()).collect(),
                tv: s.tv,
            })
            .collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsFile {
    #[serde(serialize_with = "ser12")]
    pub k_c: f64,
    #[serde(serialize_with = "ser12")]
    pub k_p: f64,
    #[serde(serialize_with = "ser12")]
    pub k_g: f64,
    pub bounded_c: bool,
    pub bounded_p: bool,
    pub bounded_g: bool,
    pub bounded: bool,
}

pub fn diagnostics_file(d: &ConvergenceReport) -> DiagnosticsFile {
    DiagnosticsFile {
        k_c: d.k_c,
        k_p: d.k_p,
        k_g: d.k_g,
        bounded_c: d.bounded_c,
        bounded_p: d.bounded_p,
        bounded_g: d.bounded_g,
        bounded: d.bounded(),
    }
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source: std::io::Error::other(e) }
}

pub fn write_trajectory_csv(path: &Path, strategy: &Strategy, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["step", "x", "y", "collapse_fidelity"]).map_err(|e| csv_err(path, e))?;
    for k in 0..rec.stimuli.len() {
        w.write_record([
            k.to_string(),
            strategy.stimuli()[rec.stimuli[k]].clone(),
            strategy.actions()[rec.actions[k]].clone(),
            fmt12(rec.collapse_fidelities[k]),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

pub const SWEEP_COLUMNS: [&str; 8] = ["n", "delta_t", "N", "C_mu", "C_q1", "C_qinf", "delta_c", "delta_p"];

fn sweep_fields(r: &SweepRow) -> [String; 8] {
    let opt = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
    [
        r.n.to_string(),
        fmt12(r.dt),
        r.num_states.to_string(),
        fmt12(r.c_mu),
        fmt12(r.c_q1),
        fmt12(r.c_qinf),
        opt(r.delta_c),
        opt(r.delta_p),
    ]
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record(sweep_fields(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
}

/// Whitespace-separated plot data with a `#` header; missing increments
/// are written as `nan`.
pub fn sweep_dat(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# {}", SWEEP_COLUMNS.join(" ")).unwrap();
    for r in rows {
        let f = sweep_fields(r);
        let f: Vec<&str> = f.iter().map(|s| if s.is_empty() { "nan" } else { s.as_str() }).collect();
        writeln!(out, "{}", f.join(" ")).unwrap();
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

#[derive(Debug, Serialize)]
pub struct SweepRowFile {
    pub n: u32,
    #[serde(serialize_with = "ser12")]
    pub delta_t: f64,
    #[serde(rename = "N")]
    pub num_states: usize,
    #[serde(serialize_with = "ser12")]
    pub c_mu: f64,
    #[serde(serialize_with = "ser12")]
    pub c_q1: f64,
    #[serde(serialize_with = "ser12")]
    pub c_qinf: f64,
    #[serde(serialize_with = "ser12_opt")]
    pub delta_c: Option<f64>,
    #[serde(serialize_with = "ser12_opt")]
    pub delta_p: Option<f64>,
    #[serde(serialize_with = "ser12_opt")]
    pub delta_g: Option<f64>,
}

impl From<&SweepRow> for SweepRowFile {
    fn from(r: &SweepRow) -> Self {
        Self {
            n: r.n,
            delta_t: r.dt,
            num_states: r.num_states,
            c_mu: r.c_mu,
            c_q1: r.c_q1,
            c_qinf: r.c_qinf,
            delta_c: r.delta_c,
            delta_p: r.delta_p,
            delta_g: r.delta_g,
        }
    }
}
