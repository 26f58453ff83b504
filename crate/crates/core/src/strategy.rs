//! Finite-state strategies (agent transducers) and input strategies.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, PROB_TOL};

/// Emission rows are considered equal entrywise within this tolerance
/// during minimisation.
pub const ROW_EQ_TOL: f64 = 1e-12;

/// Rows summing to within this of one are stored unchanged, so that saved
/// tables load back bit for bit; others are rescaled.
const EXACT_ROW_TOL: f64 = 8.0 * f64::EPSILON;

/// One row of a strategy table: on `stimulus` in `state`, emit `action` with
/// probability `prob` and move to `next`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub state: String,
    pub stimulus: String,
    pub action: String,
    pub prob: f64,
    pub next: Option<String>,
}

/// Unvalidated strategy description, as read from a file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategySpec {
    pub stimuli: Vec<String>,
    pub actions: Vec<String>,
    pub states: Vec<String>,
    pub transitions: Vec<TransitionSpec>,
}

/// Validated unifilar transducer with emission `P(y|x,s)` and update
/// `λ(x,y,s)` defined exactly on the emission support.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    stimuli: Vec<String>,
    actions: Vec<String>,
    states: Vec<String>,
    emission: Vec<f64>,
    update: Vec<Option<usize>>,
}

fn index_labels(what: &'static str, labels: &[String]) -> Result<BTreeMap<String, usize>> {
    if labels.is_empty() {
        return Err(Error::EmptyAlphabet { what });
    }
    let mut map = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if map.insert(l.clone(), i).is_some() {
            return Err(Error::DuplicateLabel { what, label: l.clone() });
        }
    }
    Ok(map)
}

fn lookup(map: &BTreeMap<String, usize>, what: &'static str, label: &str) -> Result<usize> {
    map.get(label).copied().ok_or_else(|| Error::UnknownLabel { what, label: label.to_string() })
}

impl Strategy {
    /// Validate a raw description. Rows within [`PROB_TOL`] of 1 are
    /// renormalised; anything further off is rejected.
    pub fn from_spec(spec: &StrategySpec) -> Result<Self> {
        let xs = index_labels("stimuli", &spec.stimuli)?;
        let ys = index_labels("actions", &spec.actions)?;
        let ss = index_labels("states", &spec.states)?;
        let (nx, ny, ns) = (xs.len(), ys.len(), ss.len());
        let mut emission = vec![0.0; ns * nx * ny];
        let mut update = vec![None; ns * nx * ny];
        let mut seen = vec![false; ns * nx * ny];
        for t in &spec.transitions {
            let s = lookup(&ss, "state", &t.state)?;
            let x = lookup(&xs, "stimulus", &t.stimulus)?;
            let y = lookup(&ys, "action", &t.action)?;
            let k = (s * nx + x) * ny + y;
            if seen[k] {
                return Err(Error::DuplicateTransition {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: t.action.clone(),
                });
            }
            seen[k] = true;
            if !t.prob.is_finite() || !(0.0..=1.0 + PROB_TOL).contains(&t.prob) {
                return Err(Error::InvalidProbability {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: t.action.clone(),
                    prob: t.prob,
                });
            }
            let next = match &t.next {
                Some(label) => Some(ss.get(label).copied().ok_or_else(|| Error::DanglingTransition {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: t.action.clone(),
                    next: label.clone(),
                })?),
                None => None,
            };
            emission[k] = t.prob;
            update[k] = next;
        }
        Self::new(spec.stimuli.clone(), spec.actions.clone(), spec.states.clone(), emission, update)
    }

    /// Build from dense tables indexed `(s * |X| + x) * |Y| + y`.
    pub fn new(
        stimuli: Vec<String>,
        actions: Vec<String>,
        states: Vec<String>,
        mut emission: Vec<f64>,
        mut update: Vec<Option<usize>>,
    ) -> Result<Self> {
        index_labels("stimuli", &stimuli)?;
        index_labels("actions", &actions)?;
        index_labels("states", &states)?;
        let (nx, ny, ns) = (stimuli.len(), actions.len(), states.len());
        if emission.len() != ns * nx * ny || update.len() != ns * nx * ny {
            return Err(Error::InvalidArgument { reason: "table sizes do not match alphabets".into() });
        }
        for s in 0..ns {
            for x in 0..nx {
                let row = (s * nx + x) * ny;
                for y in 0..ny {
                    let p = emission[row + y];
                    if !p.is_finite() || !(0.0..=1.0 + PROB_TOL).contains(&p) {
                        return Err(Error::InvalidProbability {
                            state: states[s].clone(),
                            stimulus: stimuli[x].clone(),
                            action: actions[y].clone(),
                            prob: p,
                        });
                    }
                    match update[row + y] {
                        Some(n) if n >= ns => {
                            return Err(Error::DanglingTransition {
                                state: states[s].clone(),
                                stimulus: stimuli[x].clone(),
                                action: actions[y].clone(),
                                next: n.to_string(),
                            })
                        }
                        None if p > 0.0 => {
                            return Err(Error::MissingUpdate {
                                state: states[s].clone(),
                                stimulus: stimuli[x].clone(),
                                action: actions[y].clone(),
                            })
                        }
                        _ => {}
                    }
                    if p == 0.0 {
                        update[row + y] = None;
                    }
                }
                let sum: f64 = emission[row..row + ny].iter().sum();
                if libm::fabs(sum - 1.0) > PROB_TOL {
                    return Err(Error::NonStochasticRow {
                        state: states[s].clone(),
                        stimulus: stimuli[x].clone(),
                        sum,
                    });
                }
                if libm::fabs(sum - 1.0) > EXACT_ROW_TOL {
                    for p in &mut emission[row..row + ny] {
                        *p /= sum;
                    }
                }
            }
        }
        Ok(Self { stimuli, actions, states, emission, update })
    }

    /// Inverse of [`Strategy::from_spec`]; zero-probability entries are omitted.
    pub fn to_spec(&self) -> StrategySpec {
        let mut transitions = Vec::new();
        for s in 0..self.num_states() {
            for x in 0..self.num_stimuli() {
                for y in 0..self.num_actions() {
                    let p = self.prob(s, x, y);
                    if p > 0.0 {
                        transitions.push(TransitionSpec {
                            state: self.states[s].clone(),
                            stimulus: self.stimuli[x].clone(),
                            action: self.actions[y].clone(),
                            prob: p,
                            next: self.next(s, x, y).map(|n| self.states[n].clone()),
                        });
                    }
                }
            }
        }
        StrategySpec {
            stimuli: self.stimuli.clone(),
            actions: self.actions.clone(),
            states: self.states.clone(),
            transitions,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn num_stimuli(&self) -> usize {
        self.stimuli.len()
    }
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
    pub fn stimuli(&self) -> &[String] {
        &self.stimuli
    }
    pub fn actions(&self) -> &[String] {
        &self.actions
    }
    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|l| l == label)
    }
    pub fn stimulus_index(&self, label: &str) -> Option<usize> {
        self.stimuli.iter().position(|l| l == label)
    }
    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|l| l == label)
    }

    #[inline]
    fn at(&self, s: usize, x: usize, y: usize) -> usize {
        (s * self.stimuli.len() + x) * self.actions.len() + y
    }

    /// `P(y|x,s)`
    #[inline]
    pub fn prob(&self, s: usize, x: usize, y: usize) -> f64 {
        self.emission[self.at(s, x, y)]
    }

    /// `λ(x,y,s)`, defined where `P(y|x,s) > 0`.
    #[inline]
    pub fn next(&self, s: usize, x: usize, y: usize) -> Option<usize> {
        self.update[self.at(s, x, y)]
    }

    /// Emission row `P(·|x,s)`.
    pub fn row(&self, s: usize, x: usize) -> &[f64] {
        let start = self.at(s, x, 0);
        &self.emission[start..start + self.actions.len()]
    }

    /// Actions with positive probability, with their next states.
    pub fn support(&self, s: usize, x: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        (0..self.num_actions()).filter_map(move |y| {
            let p = self.prob(s, x, y);
            if p > 0.0 {
                Some((y, p, self.next(s, x, y).expect("update defined on support")))
            } else {
                None
            }
        })
    }

    /// Probability of emitting `ys` in response to `xs` from `s`, with the
    /// resulting state when that probability is positive.
    pub fn string_prob(&self, s: usize, xs: &[usize], ys: &[usize]) -> (f64, Option<usize>) {
        assert_eq!(xs.len(), ys.len());
        let mut p = 1.0;
        let mut cur = s;
        for (&x, &y) in xs.iter().zip(ys) {
            let q = self.prob(cur, x, y);
            if q == 0.0 {
                return (0.0, None);
            }
            p *= q;
            cur = self.next(cur, x, y).expect("update defined on support");
        }
        (p, Some(cur))
    }

    /// Exact distribution of action strings for stimulus string `xs` from
    /// state `s`, by forward recursion over the update map.
    pub fn future_distribution(&self, s: usize, xs: &[usize]) -> FutureDistribution {
        let ny = self.num_actions();
        let mut layer: Vec<(f64, usize)> = vec![(1.0, s)];
        for &x in xs {
            let mut next = vec![(0.0, usize::MAX); layer.len() * ny];
            for (i, &(p, st)) in layer.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (y, q, n) in self.support(st, x) {
                    next[i * ny + y] = (p * q, n);
                }
            }
            layer = next;
        }
        FutureDistribution {
            stimuli: xs.to_vec(),
            num_actions: ny,
            probs: layer.into_iter().map(|(p, _)| p).collect(),
        }
    }

    /// Draw `(y, λ(x,y,s))` with probability `P(y|x,s)`.
    pub fn sample_step<R: Rng + ?Sized>(&self, s: usize, x: usize, rng: &mut R) -> (usize, usize) {
        let u: f64 = rng.random();
        let y = sample_index(self.row(s, x), u);
        (y, self.next(s, x, y).expect("sampled action has positive probability"))
    }

    /// Seeded convenience wrapper around [`Strategy::sample_step`].
    pub fn sample_step_seeded(&self, s: usize, x: usize, seed: u64) -> (usize, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_step(s, x, &mut rng)
    }

    /// Merge states with identical future action statistics for every
    /// stimulus sequence, by partition refinement to a fixpoint.
    pub fn minimize(&self) -> Minimized {
        let ns = self.num_states();
        let (nx, ny) = (self.num_stimuli(), self.num_actions());
        // Initial classes: equal emission rows for every stimulus.
        let mut class = vec![0usize; ns];
        let mut reps: Vec<usize> = Vec::new();
        for s in 0..ns {
            let found = reps.iter().position(|&r| {
                self.emission[self.at(s, 0, 0)..self.at(s, 0, 0) + nx * ny]
                    .iter()
                    .zip(&self.emission[self.at(r, 0, 0)..self.at(r, 0, 0) + nx * ny])
                    .all(|(a, b)| libm::fabs(a - b) <= ROW_EQ_TOL)
            });
            class[s] = match found {
                Some(c) => c,
                None => {
                    reps.push(s);
                    reps.len() - 1
                }
            };
        }
        let mut count = reps.len();
        loop {
            let mut sigs: Vec<(usize, Vec<Option<usize>>)> = Vec::new();
            let mut refined = vec![0usize; ns];
            for s in 0..ns {
                let succ: Vec<Option<usize>> = (0..nx * ny)
                    .map(|k| {
                        let (x, y) = (k / ny, k % ny);
                        if self.prob(s, x, y) > 0.0 {
                            self.next(s, x, y).map(|n| class[n])
                        } else {
                            None
                        }
                    })
                    .collect();
                let key = (class[s], succ);
                refined[s] = match sigs.iter().position(|k| *k == key) {
                    Some(c) => c,
                    None => {
                        sigs.push(key);
                        sigs.len() - 1
                    }
                };
            }
            class = refined;
            if sigs.len() == count {
                break;
            }
            count = sigs.len();
        }
        // Number classes by first appearance so labels follow state order.
        let mut renumber = vec![usize::MAX; count];
        let mut representatives = Vec::with_capacity(count);
        for s in 0..ns {
            if renumber[class[s]] == usize::MAX {
                renumber[class[s]] = representatives.len();
                representatives.push(s);
            }
        }
        let merge_map: Vec<usize> = class.iter().map(|&c| renumber[c]).collect();
        let mut emission = Vec::with_capacity(count * nx * ny);
        let mut update = Vec::with_capacity(count * nx * ny);
        for &r in &representatives {
            for x in 0..nx {
                for y in 0..ny {
                    emission.push(self.prob(r, x, y));
                    update.push(self.next(r, x, y).map(|n| merge_map[n]));
                }
            }
        }
        let strategy = Strategy {
            stimuli: self.stimuli.clone(),
            actions: self.actions.clone(),
            states: representatives.iter().map(|&r| self.states[r].clone()).collect(),
            emission,
            update,
        };
        Minimized { strategy, merge_map }
    }
}

/// Index drawn from a probability row using a uniform variate `u ∈ [0,1)`.
pub(crate) fn sample_index(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Result of causal-state minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimized {
    pub strategy: Strategy,
    /// Old state index to merged state index.
    pub merge_map: Vec<usize>,
}

/// Conditional distribution over action strings for a fixed stimulus
/// string. Action strings are indexed lexicographically in base `|Y|`
/// with the first action most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureDistribution {
    pub stimuli: Vec<usize>,
    pub num_actions: usize,
    pub probs: Vec<f64>,
}

impl FutureDistribution {
    pub fn horizon(&self) -> usize {
        self.stimuli.len()
    }

    pub fn prob_of(&self, actions: &[usize]) -> f64 {
        assert_eq!(actions.len(), self.horizon());
        self.probs[encode_string(actions, self.num_actions)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Bhattacharyya coefficient `Σ √(p q)` with another distribution over
    /// the same strings.
    pub fn fidelity(&self, other: &FutureDistribution) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| libm::sqrt(a * b)).sum()
    }
}

/// Lexicographic index of a string over an alphabet of size `base`.
pub fn encode_string(symbols: &[usize], base: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * base + s)
}

/// Inverse of [`encode_string`] for strings of length `len`.
pub fn decode_string(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

/// Input-strategy table row. `action: None` applies the update to every
/// agent action. `prob` is the stimulus probability `R(x|r)` and must agree
/// across rows sharing `(state, stimulus)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTransitionSpec {
    pub state: String,
    pub stimulus: String,
    pub action: Option<String>,
    pub prob: f64,
    pub next: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputSpec {
    pub stimuli: Vec<String>,
    pub actions: Vec<String>,
    pub states: Vec<String>,
    pub transitions: Vec<InputTransitionSpec>,
}

/// Finite-state stimulus generator `R(x|r)` with deterministic update
/// `λ_I(x,y,r)` on the agent's response.
#[derive(Debug, Clone, PartialEq)]
pub struct InputStrategy {
    stimuli: Vec<String>,
    actions: Vec<String>,
    states: Vec<String>,
    emission: Vec<f64>,
    update: Vec<Option<usize>>,
}

impl InputStrategy {
    pub fn from_spec(spec: &InputSpec) -> Result<Self> {
        let xs = index_labels("stimuli", &spec.stimuli)?;
        let ys = index_labels("actions", &spec.actions)?;
        let rs = index_labels("states", &spec.states)?;
        let (nx, ny, nr) = (xs.len(), ys.len(), rs.len());
        let mut emission: Vec<Option<f64>> = vec![None; nr * nx];
        let mut update = vec![None; nr * nx * ny];
        let mut seen = vec![false; nr * nx * ny];
        for t in &spec.transitions {
            let r = lookup(&rs, "state", &t.state)?;
            let x = lookup(&xs, "stimulus", &t.stimulus)?;
            let label = |y: usize| spec.actions[y].clone();
            if !t.prob.is_finite() || !(0.0..=1.0 + PROB_TOL).contains(&t.prob) {
                return Err(Error::InvalidProbability {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: t.action.clone().unwrap_or_else(|| "*".into()),
                    prob: t.prob,
                });
            }
            match emission[r * nx + x] {
                Some(p) if libm::fabs(p - t.prob) > ROW_EQ_TOL => {
                    return Err(Error::InconsistentInputRow {
                        state: t.state.clone(),
                        stimulus: t.stimulus.clone(),
                    })
                }
                _ => emission[r * nx + x] = Some(t.prob),
            }
            let targets: Vec<usize> = match &t.action {
                Some(a) => vec![lookup(&ys, "action", a)?],
                None => (0..ny).collect(),
            };
            let next = match &t.next {
                Some(label) => Some(rs.get(label).copied().ok_or_else(|| Error::DanglingTransition {
                    state: t.state.clone(),
                    stimulus: t.stimulus.clone(),
                    action: t.action.clone().unwrap_or_else(|| "*".into()),
                    next: label.clone(),
                })?),
                None => None,
            };
            for y in targets {
                let k = (r * nx + x) * ny + y;
                if seen[k] {
                    return Err(Error::DuplicateTransition {
                        state: t.state.clone(),
                        stimulus: t.stimulus.clone(),
                        action: label(y),
                    });
                }
                seen[k] = true;
                update[k] = next;
            }
        }
        let emission = emission.into_iter().map(|p| p.unwrap_or(0.0)).collect();
        Self::new(spec.stimuli.clone(), spec.actions.clone(), spec.states.clone(), emission, update)
    }

    /// Build from dense tables: `emission[r * |X| + x]` and
    /// `update[(r * |X| + x) * |Y| + y]`.
    pub fn new(
        stimuli: Vec<String>,
        actions: Vec<String>,
        states: Vec<String>,
        mut emission: Vec<f64>,
        mut update: Vec<Option<usize>>,
    ) -> Result<Self> {
        index_labels("stimuli", &stimuli)?;
        index_labels("actions", &actions)?;
        index_labels("states", &states)?;
        let (nx, ny, nr) = (stimuli.len(), actions.len(), states.len());
        if emission.len() != nr * nx || update.len() != nr * nx * ny {
            return Err(Error::InvalidArgument { reason: "table sizes do not match alphabets".into() });
        }
        for r in 0..nr {
            let row = &mut emission[r * nx..(r + 1) * nx];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || libm::fabs(sum - 1.0) > PROB_TOL {
                return Err(Error::NonStochasticRow {
                    state: states[r].clone(),
                    stimulus: "*".into(),
                    sum,
                });
            }
            if libm::fabs(sum - 1.0) > EXACT_ROW_TOL {
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
            for x in 0..nx {
                let p = emission[r * nx + x];
                for y in 0..ny {
                    let k = (r * nx + x) * ny + y;
                    match update[k] {
                        Some(n) if n >= nr => {
                            return Err(Error::DanglingTransition {
                                state: states[r].clone(),
                                stimulus: stimuli[x].clone(),
                                action: actions[y].clone(),
                                next: n.to_string(),
                            })
                        }
                        None if p > 0.0 => {
                            return Err(Error::MissingUpdate {
                                state: states[r].clone(),
                                stimulus: stimuli[x].clone(),
                                action: actions[y].clone(),
                            })
                        }
                        _ => {}
                    }
                    if p == 0.0 {
                        update[k] = None;
                    }
                }
            }
        }
        Ok(Self { stimuli, actions, states, emission, update })
    }

    /// Memoryless input drawing stimulus `x` with probability `probs[x]`.
    pub fn iid(stimuli: Vec<String>, actions: Vec<String>, probs: &[f64]) -> Result<Self> {
        let ny = actions.len();
        let update = probs.iter().flat_map(|_| (0..ny).map(|_| Some(0))).collect();
        Self::new(stimuli, actions, vec!["r".into()], probs.to_vec(), update)
    }

    /// Uniform memoryless input over the strategy's stimuli.
    pub fn uniform_for(strategy: &Strategy) -> Self {
        let nx = strategy.num_stimuli();
        let probs = vec![1.0 / nx as f64; nx];
        Self::iid(strategy.stimuli.clone(), strategy.actions.clone(), &probs)
            .expect("uniform input is well formed")
    }

    pub fn to_spec(&self) -> InputSpec {
        let mut transitions = Vec::new();
        for r in 0..self.num_states() {
            for x in 0..self.num_stimuli() {
                let p = self.prob(r, x);
                if p == 0.0 {
                    continue;
                }
                let first = self.next(r, x, 0);
                if (1..self.num_actions()).all(|y| self.next(r, x, y) == first) {
                    transitions.push(InputTransitionSpec {
                        state: self.states[r].clone(),
                        stimulus: self.stimuli[x].clone(),
                        action: None,
                        prob: p,
                        next: first.map(|n| self.states[n].clone()),
                    });
                    continue;
                }
                for y in 0..self.num_actions() {
                    transitions.push(InputTransitionSpec {
                        state: self.states[r].clone(),
                        stimulus: self.stimuli[x].clone(),
                        action: Some(self.actions[y].clone()),
                        prob: p,
                        next: self.next(r, x, y).map(|n| self.states[n].clone()),
                    });
                }
            }
        }
        InputSpec {
            stimuli: self.stimuli.clone(),
            actions: self.actions.clone(),
            states: self.states.clone(),
            transitions,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn num_stimuli(&self) -> usize {
        self.stimuli.len()
    }
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn stimuli(&self) -> &[String] {
        &self.stimuli
    }
    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    /// `R(x|r)`
    pub fn prob(&self, r: usize, x: usize) -> f64 {
        self.emission[r * self.stimuli.len() + x]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let nx = self.stimuli.len();
        &self.emission[r * nx..(r + 1) * nx]
    }

    /// `λ_I(x,y,r)`
    pub fn next(&self, r: usize, x: usize, y: usize) -> Option<usize> {
        self.update[(r * self.stimuli.len() + x) * self.actions.len() + y]
    }

    /// Copy whose alphabets are reordered to match `strategy`, so stimulus
    /// and action indices agree between the two.
    pub fn aligned_to(&self, strategy: &Strategy) -> Result<InputStrategy> {
        if self.stimuli == strategy.stimuli && self.actions == strategy.actions {
            return Ok(self.clone());
        }
        let perm = |mine: &[String], theirs: &[String], what| -> Result<Vec<usize>> {
            if mine.len() != theirs.len() {
                return Err(Error::AlphabetMismatch { what });
            }
            theirs
                .iter()
                .map(|l| mine.iter().position(|m| m == l).ok_or(Error::AlphabetMismatch { what }))
                .collect()
        };
        let px = perm(&self.stimuli, &strategy.stimuli, "stimuli")?;
        let py = perm(&self.actions, &strategy.actions, "actions")?;
        let (nx, ny, nr) = (self.num_stimuli(), self.num_actions(), self.num_states());
        let mut emission = vec![0.0; nr * nx];
        let mut update = vec![None; nr * nx * ny];
        for r in 0..nr {
            for x in 0..nx {
                emission[r * nx + x] = self.prob(r, px[x]);
                for y in 0..ny {
                    update[(r * nx + x) * ny + y] = self.next(r, px[x], py[y]);
                }
            }
        }
        Ok(InputStrategy {
            stimuli: strategy.stimuli.clone(),
            actions: strategy.actions.clone(),
            states: self.states.clone(),
            emission,
            update,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn junk_pair_validates() {
        let s = fixtures::junk_pair();
        assert_eq!(s.num_states(), 2);
        assert_eq!(s.prob(1, 1, 1), 1.0);
        assert_eq!(s.next(0, 1, 0), Some(1));
    }

    #[test]
    fn single_state_identity() {
        let spec = StrategySpec {
            stimuli: vec!["0".into()],
            actions: vec!["0".into()],
            states: vec!["s".into()],
            transitions: vec![TransitionSpec {
                state: "s".into(),
                stimulus: "0".into(),
                action: "0".into(),
                prob: 1.0,
                next: Some("s".into()),
            }],
        };
        let s = Strategy::from_spec(&spec).unwrap();
        assert_eq!(s.minimize().strategy.num_states(), 1);
    }

    fn two_row(p0: f64, p1: f64) -> StrategySpec {
        let t = |a: &str, p| TransitionSpec {
            state: "s".into(),
            stimulus: "0".into(),
            action: a.into(),
            prob: p,
            next: Some("s".into()),
        };
        StrategySpec {
            stimuli: vec!["0".into()],
            actions: vec!["0".into(), "1".into()],
            states: vec!["s".into()],
            transitions: vec![t("0", p0), t("1", p1)],
        }
    }

    #[test]
    fn rejects_non_stochastic_row() {
        assert!(matches!(
            Strategy::from_spec(&two_row(0.7, 0.2)),
            Err(Error::NonStochasticRow { .. })
        ));
    }

    #[test]
    fn renormalises_within_tolerance() {
        let s = Strategy::from_spec(&two_row(0.5 + 4e-10, 0.5)).unwrap();
        assert!((s.row(0, 0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dangling_and_missing_updates() {
        let mut spec = two_row(0.5, 0.5);
        spec.transitions[1].next = Some("nowhere".into());
        assert!(matches!(Strategy::from_spec(&spec), Err(Error::DanglingTransition { .. })));
        spec.transitions[1].next = None;
        assert!(matches!(Strategy::from_spec(&spec), Err(Error::MissingUpdate { .. })));
    }

    #[test]
    fn empty_transitions_rejected() {
        let mut spec = two_row(0.5, 0.5);
        spec.transitions.clear();
        assert!(matches!(Strategy::from_spec(&spec), Err(Error::NonStochasticRow { .. })));
    }

    #[test]
    fn future_distribution_junk_pair() {
        let s = fixtures::junk_pair();
        let d = s.future_distribution(0, &[1, 1]);
        assert_eq!(d.prob_of(&[0, 1]), 1.0);
        assert!((d.total() - 1.0).abs() < 1e-12);
        let single = s.future_distribution(1, &[0]);
        assert_eq!(single.probs, s.row(1, 0).to_vec());
    }

    #[test]
    fn future_distribution_three_state() {
        let s = fixtures::three_state();
        let a = s.state_index("s_a").unwrap();
        let d = s.future_distribution(a, &[0, 0]);
        assert_eq!(d.prob_of(&[0, 0]), 1.0);
    }

    #[test]
    fn deterministic_sampling() {
        let s = fixtures::junk_pair();
        for seed in 0..20 {
            assert_eq!(s.sample_step_seeded(1, 1, seed), (1, 0));
        }
    }

    #[test]
    fn sampler_matches_half_half_row() {
        let s = fixtures::three_state();
        let b = s.state_index("s_b").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let hits = (0..n).filter(|_| s.sample_step(b, 0, &mut rng).0 == 0).count();
        let freq = hits as f64 / n as f64;
        let sigma = libm::sqrt(0.25 / n as f64);
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn minimise_merges_equivalent_states() {
        // s1 and s2 share rows and both map to s1.
        let spec = StrategySpec {
            stimuli: vec!["0".into(), "1".into()],
            actions: vec!["0".into(), "1".into()],
            states: vec!["s0".into(), "s1".into(), "s2".into()],
            transitions: vec![
                tr("s0", "0", "0", 0.5, "s1"),
                tr("s0", "0", "1", 0.5, "s2"),
                tr("s0", "1", "1", 1.0, "s0"),
                tr("s1", "0", "0", 0.25, "s1"),
                tr("s1", "0", "1", 0.75, "s1"),
                tr("s1", "1", "0", 1.0, "s1"),
                tr("s2", "0", "0", 0.25, "s1"),
                tr("s2", "0", "1", 0.75, "s1"),
                tr("s2", "1", "0", 1.0, "s1"),
            ],
        };
        let s = Strategy::from_spec(&spec).unwrap();
        let m = s.minimize();
        assert_eq!(m.strategy.num_states(), 2);
        assert_eq!(m.merge_map, vec![0, 1, 1]);
        // Behavioural equivalence by exhaustive enumeration at length 3.
        for old in 0..3 {
            for idx in 0..8 {
                let xs = decode_string(idx, 2, 3);
                let a = s.future_distribution(old, &xs);
                let b = m.strategy.future_distribution(m.merge_map[old], &xs);
                for (p, q) in a.probs.iter().zip(&b.probs) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
        assert_eq!(m.strategy.minimize().strategy.num_states(), 2);
    }

    #[test]
    fn minimise_keeps_junk_pair() {
        let s = fixtures::junk_pair();
        let m = s.minimize();
        assert_eq!(m.strategy, s);
    }

    fn tr(s: &str, x: &str, y: &str, p: f64, n: &str) -> TransitionSpec {
        TransitionSpec { state: s.into(), stimulus: x.into(), action: y.into(), prob: p, next: Some(n.into()) }
    }

    #[test]
    fn input_wildcard_and_alignment() {
        let spec = InputSpec {
            stimuli: vec!["1".into(), "0".into()],
            actions: vec!["1".into(), "0".into()],
            states: vec!["r".into()],
            transitions: vec![
                InputTransitionSpec { state: "r".into(), stimulus: "0".into(), action: None, prob: 0.25, next: Some("r".into()) },
                InputTransitionSpec { state: "r".into(), stimulus: "1".into(), action: None, prob: 0.75, next: Some("r".into()) },
            ],
        };
        let input = InputStrategy::from_spec(&spec).unwrap();
        let aligned = input.aligned_to(&fixtures::junk_pair()).unwrap();
        assert_eq!(aligned.row(0), &[0.25, 0.75]);
        let mut bad = spec.clone();
        bad.transitions[1].prob = 0.5;
        assert!(matches!(InputStrategy::from_spec(&bad), Err(Error::NonStochasticRow { .. })));
    }
}
