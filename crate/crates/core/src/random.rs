//! Seeded generator of small random strategies for property tests.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{solve_overlaps, Variant};
use crate::stationary::joint_stationary_distribution;
use crate::{InputStrategy, Strategy};

/// Size limits for [`random_strategy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomShape {
    pub max_states: usize,
    pub max_stimuli: usize,
    pub max_actions: usize,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self { max_states: 4, max_stimuli: 3, max_actions: 3 }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// Draw one strategy with random supports, Dirichlet(1) weights and random
/// successors. May be reducible or non-minimal.
pub fn draw_strategy<R: Rng>(rng: &mut R, shape: RandomShape) -> Strategy {
    let ns = rng.random_range(2..=shape.max_states.max(2));
    let nx = rng.random_range(1..=shape.max_stimuli.max(1));
    let ny = rng.random_range(1..=shape.max_actions.max(1));
    let mut emission = vec![0.0; ns * nx * ny];
    let mut update = vec![None; ns * nx * ny];
    for s in 0..ns {
        for x in 0..nx {
            let mut support: Vec<bool> = (0..ny).map(|_| rng.random_bool(0.6)).collect();
            if !support.iter().any(|b| *b) {
                support[rng.random_range(0..ny)] = true;
            }
            let weights: Vec<f64> = support
                .iter()
                .map(|&on| if on { -libm::log(1.0 - rng.random::<f64>()) + 1e-3 } else { 0.0 })
                .collect();
            let total: f64 = weights.iter().sum();
            for y in 0..ny {
                let i = (s * nx + x) * ny + y;
                if weights[y] > 0.0 {
                    emission[i] = weights[y] / total;
                    update[i] = Some(rng.random_range(0..ns));
                }
            }
        }
    }
    Strategy::new(labels("x", nx), labels("y", ny), labels("s", ns), emission, update)
        .expect("generated tables are valid")
}

/// Minimal strategy with at least two causal states whose overlap
/// recursion converges for both variants and whose joint chain under
/// uniform i.i.d. stimuli is irreducible. Deterministic in `seed`.
pub fn random_strategy(seed: u64, shape: RandomShape) -> Strategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let candidate = draw_strategy(&mut rng, shape).minimize().strategy;
        if candidate.num_states() < 2 {
            continue;
        }
        let input = InputStrategy::uniform_for(&candidate);
        if joint_stationary_distribution(&candidate, &input).is_err() {
            continue;
        }
        if solve_overlaps(&candidate, Variant::QInf).is_err() || solve_overlaps(&candidate, Variant::Q1).is_err() {
            continue;
        }
        return candidate;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let a = random_strategy(7, RandomShape::default());
        let b = random_strategy(7, RandomShape::default());
        assert_eq!(a, b);
        assert!(a.num_states() >= 2);
        assert_eq!(a.minimize().strategy.num_states(), a.num_states());
    }
}
