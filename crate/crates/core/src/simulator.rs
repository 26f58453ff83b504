//! State-vector execution of a compiled agent.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{Encoding, RegisterLayout};
use crate::linalg::{dot, norm};
use crate::strategy::{decode_string, encode_string, sample_index};
use crate::{Error, InputStrategy, Result, Strategy};

/// Post-measurement norms below this mean the unitary is inconsistent.
pub const NORM_LOSS_TOL: f64 = 1e-9;
/// Total-variation tolerance at the reference sample count.
pub const TV_TOL_AT_REFERENCE: f64 = 0.02;
pub const TV_REFERENCE_SAMPLES: usize = 100_000;
/// Stimulus strings are enumerated exhaustively up to this many.
pub const EXHAUSTIVE_STRINGS: usize = 64;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `i`-th independent stream under `root`.
pub fn derive_seed(root: u64, i: u64) -> u64 {
    splitmix64(root ^ splitmix64(i))
}

/// A running agent: the policy unitary, the current memory vector and its
/// random stream. `label` shadows the causal state for instrumentation and
/// is never used for sampling.
#[derive(Debug, Clone)]
pub struct AgentRuntime<'a> {
    pub strategy: &'a Strategy,
    pub encoding: &'a Encoding,
    pub memory: Vec<f64>,
    pub label: usize,
    pub step: u64,
    rng: ChaCha8Rng,
}

/// Result of one interaction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub action: usize,
    /// `⟨σ_λ|ρ'|σ_λ⟩` for the reduced post-measurement memory `ρ'`.
    pub collapse_fidelity: f64,
}

impl<'a> AgentRuntime<'a> {
    /// Agent prepared in `|σ_s⟩`.
    pub fn new(strategy: &'a Strategy, encoding: &'a Encoding, s: usize, seed: u64) -> Self {
        let mut memory = encoding.states.vectors[s].clone();
        memory.resize(encoding.unitary.layout.memory_dim, 0.0);
        Self { strategy, encoding, memory, label: s, step: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn layout(&self) -> RegisterLayout {
        self.encoding.unitary.layout
    }

    /// Sector-`x` amplitudes of `U |memory⟩|x⟩|0⟩|0⟩`, laid out
    /// `(m, y, j)` with `j` fastest. Only the columns touched by the blank
    /// tapes are read.
    pub fn evolved(&self, x: usize) -> Vec<f64> {
        let l = self.layout();
        let u = &self.encoding.unitary.matrix;
        let d = l.sector_dim();
        let cols: Vec<usize> = (0..l.memory_dim).map(|m| l.index(m, x, 0, 0)).collect();
        (0..d)
            .map(|k| {
                let row = u.row(l.sector_index(x, k));
                cols.iter().zip(&self.memory).map(|(&c, a)| row[c] * a).sum()
            })
            .collect()
    }

    /// Probability of each action before measurement.
    pub fn output_marginal(&self, x: usize) -> Vec<f64> {
        let l = self.layout();
        let out = self.evolved(x);
        let mut p = vec![0.0; l.num_actions];
        for (k, a) in out.iter().enumerate() {
            p[(k / l.junk_dim) % l.num_actions] += a * a;
        }
        p
    }

    /// Apply the policy to stimulus `x`, measure the output tape and keep
    /// the memory register.
    pub fn step(&mut self, x: usize) -> Result<StepOutcome> {
        let l = self.layout();
        let out = self.evolved(x);
        let mut p = vec![0.0; l.num_actions];
        for (k, a) in out.iter().enumerate() {
            p[(k / l.junk_dim) % l.num_actions] += a * a;
        }
        let u: f64 = self.rng.random::<f64>() * p.iter().sum::<f64>();
        let y = sample_index(&p, u);
        let nrm = libm::sqrt(p[y]);
        if nrm < NORM_LOSS_TOL {
            return Err(Error::NormLoss { norm: nrm });
        }
        // Memory × junk block for outcome y.
        let (r, rj) = (l.memory_dim, l.junk_dim);
        let block: Vec<Vec<f64>> =
            (0..r).map(|m| (0..rj).map(|j| out[(m * l.num_actions + y) * rj + j] / nrm).collect()).collect();
        let rho = |v: &[f64]| -> Vec<f64> {
            // ρ v = M (Mᵀ v)
            let t: Vec<f64> = (0..rj).map(|j| (0..r).map(|m| block[m][j] * v[m]).sum()).collect();
            (0..r).map(|m| dot(&block[m], &t)).collect()
        };
        // Top eigenvector of ρ by power iteration from its largest column.
        let jstar = (0..rj)
            .max_by(|&a, &b| {
                let na: f64 = (0..r).map(|m| block[m][a] * block[m][a]).sum();
                let nb: f64 = (0..r).map(|m| block[m][b] * block[m][b]).sum();
                na.total_cmp(&nb)
            })
            .unwrap_or(0);
        let mut v: Vec<f64> = (0..r).map(|m| block[m][jstar]).collect();
        for _ in 0..50 {
            let nv = norm(&v);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|a| *a /= nv);
            let w = rho(&v);
            let diff: f64 = {
                let nw = norm(&w);
                if nw == 0.0 {
                    break;
                }
                w.iter().zip(&v).map(|(a, b)| libm::fabs(a / nw - b)).fold(0.0, f64::max)
            };
            v = w;
            if diff < 1e-15 {
                break;
            }
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|a| *a /= nv);
        let next = self.strategy.next(self.label, x, y);
        let collapse_fidelity = match next {
            Some(n) => {
                let mut sigma = self.encoding.states.vectors[n].clone();
                sigma.resize(r, 0.0);
                dot(&sigma, &rho(&sigma)).clamp(0.0, 1.0)
            }
            None => 0.0,
        };
        if let Some(n) = next {
            self.label = n;
        }
        self.memory = v;
        self.step += 1;
        Ok(StepOutcome { action: y, collapse_fidelity })
    }
}

/// Run one step on a fresh runtime.
pub fn step_agent(rt: &mut AgentRuntime<'_>, x: usize) -> Result<StepOutcome> {
    rt.step(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub stimuli: Vec<usize>,
    pub actions: Vec<usize>,
    pub collapse_fidelities: Vec<f64>,
    pub final_label: usize,
}

/// Closed-loop run against an input strategy starting from input state
/// `r0` and causal state `s0`. The input and agent draw from independent
/// streams derived from `seed`.
pub fn run_interaction(
    strategy: &Strategy,
    encoding: &Encoding,
    input: &InputStrategy,
    steps: usize,
    seed: u64,
    r0: usize,
    s0: usize,
) -> Result<TrajectoryRecord> {
    if steps == 0 {
        return Err(Error::InvalidArgument { reason: "at least one step required".into() });
    }
    let input = input.aligned_to(strategy)?;
    let mut env = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut rt = AgentRuntime::new(strategy, encoding, s0, derive_seed(seed, 1));
    let mut r = r0;
    let mut rec = TrajectoryRecord {
        stimuli: Vec::with_capacity(steps),
        actions: Vec::with_capacity(steps),
        collapse_fidelities: Vec::with_capacity(steps),
        final_label: s0,
    };
    for _ in 0..steps {
        let x = sample_index(input.row(r), env.random());
        let out = rt.step(x)?;
        r = input.next(r, x, out.action).expect("input update defined on support");
        rec.stimuli.push(x);
        rec.actions.push(out.action);
        rec.collapse_fidelities.push(out.collapse_fidelity);
    }
    rec.final_label = rt.label;
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringReport {
    pub stimuli: Vec<usize>,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaithfulnessReport {
    pub start: usize,
    pub horizon: usize,
    pub samples: usize,
    pub tolerance: f64,
    pub strings: Vec<StringReport>,
    pub max_tv: f64,
    pub min_collapse_fidelity: f64,
    pub passed: bool,
}

/// `0.02 · √(10⁵ / M)`
pub fn tv_tolerance(samples: usize) -> f64 {
    TV_TOL_AT_REFERENCE * libm::sqrt(TV_REFERENCE_SAMPLES as f64 / samples as f64)
}

/// Compare empirical action-string frequencies of the simulated agent,
/// started in `|σ_s0⟩`, with the exact conditional distributions.
pub fn faithfulness_test(
    strategy: &Strategy,
    encoding: &Encoding,
    s0: usize,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<FaithfulnessReport> {
    let (nx, ny) = (strategy.num_stimuli(), strategy.num_actions());
    if horizon == 0 || s0 >= strategy.num_states() {
        return Err(Error::InvalidArgument { reason: "horizon must be positive and start state valid".into() });
    }
    let outcomes = (ny as u128).pow(horizon as u32);
    if outcomes.saturating_mul(20) > samples as u128 {
        return Err(Error::InvalidArgument {
            reason: alloc::format!("{samples} samples are too few for {outcomes} action strings"),
        });
    }
    let total = (nx as u128).pow(horizon as u32);
    let strings: Vec<Vec<usize>> = if total <= EXHAUSTIVE_STRINGS as u128 {
        (0..total as usize).map(|i| decode_string(i, nx, horizon)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
        (0..EXHAUSTIVE_STRINGS).map(|_| (0..horizon).map(|_| rng.random_range(0..nx)).collect()).collect()
    };
    let mut reports = Vec::with_capacity(strings.len());
    let mut min_fid: f64 = 1.0;
    for (i, xs) in strings.into_iter().enumerate() {
        let exact = strategy.future_distribution(s0, &xs);
        let mut counts = vec![0u64; exact.probs.len()];
        let mut rt = AgentRuntime::new(strategy, encoding, s0, derive_seed(seed, i as u64));
        let fresh = rt.memory.clone();
        let mut ys = vec![0usize; horizon];
        for _ in 0..samples {
            rt.memory.clone_from(&fresh);
            rt.label = s0;
            for (k, &x) in xs.iter().enumerate() {
                let out = rt.step(x)?;
                ys[k] = out.action;
                min_fid = min_fid.min(out.collapse_fidelity);
            }
            counts[encode_string(&ys, ny)] += 1;
        }
        let tv = 0.5
            * counts
                .iter()
                .zip(&exact.probs)
                .map(|(&c, &p)| libm::fabs(c as f64 / samples as f64 - p))
                .sum::<f64>();
        reports.push(StringReport { stimuli: xs, tv });
    }
    let max_tv = reports.iter().map(|r| r.tv).fold(0.0, f64::max);
    let tolerance = tv_tolerance(samples);
    Ok(FaithfulnessReport {
        start: s0,
        horizon,
        samples,
        tolerance,
        strings: reports,
        max_tv,
        min_collapse_fidelity: min_fid,
        passed: max_tv < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode, Variant};
    use crate::fixtures;

    #[test]
    fn junk_pair_deterministic_edge() {
        let s = fixtures::junk_pair();
        let enc = encode(&s, Variant::QInf).unwrap();
        for seed in 0..10 {
            let mut rt = AgentRuntime::new(&s, &enc, 1, seed);
            let out = step_agent(&mut rt, 1).unwrap();
            assert_eq!(out.action, 1);
            assert!(out.collapse_fidelity >= 1.0 - 1e-10);
            assert!((dot(&rt.memory, &enc.states.vectors[0]).abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn trivial_agent_repeats() {
        let s = fixtures::trivial();
        let enc = encode(&s, Variant::QInf).unwrap();
        let rec = run_interaction(&s, &enc, &InputStrategy::uniform_for(&s), 50, 3, 0, 0).unwrap();
        assert!(rec.actions.iter().all(|&y| y == 0));
    }

    #[test]
    fn marginal_matches_emission() {
        let s = fixtures::three_state();
        let enc = encode(&s, Variant::QInf).unwrap();
        for st in 0..3 {
            for x in 0..2 {
                let rt = AgentRuntime::new(&s, &enc, st, 0);
                for (a, b) in rt.output_marginal(x).iter().zip(s.row(st, x)) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn seeds_split() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn too_few_samples_rejected() {
        let s = fixtures::junk_pair();
        let enc = encode(&s, Variant::QInf).unwrap();
        assert!(faithfulness_test(&s, &enc, 0, 3, 100, 0).is_err());
    }

    #[test]
    fn deterministic_strategy_zero_tv() {
        let s = fixtures::trivial();
        let enc = encode(&s, Variant::QInf).unwrap();
        let rep = faithfulness_test(&s, &enc, 0, 2, 100, 0).unwrap();
        assert_eq!(rep.max_tv, 0.0);
    }
}
