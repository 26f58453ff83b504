//! Small reference strategies used throughout the tests and the CLI.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Strategy, StrategySpec, TransitionSpec};

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| String::from(*s)).collect()
}

fn tr(state: &str, stimulus: &str, action: &str, prob: f64, next: &str) -> TransitionSpec {
    TransitionSpec {
        state: state.into(),
        stimulus: stimulus.into(),
        action: action.into(),
        prob,
        next: Some(next.into()),
    }
}

/// Two-state agent whose states agree on stimulus 0 (both emit 0 and go to
/// `A`) but are told apart perfectly by stimulus 1 (`A` emits 0 and goes to
/// `B`, `B` emits 1 and goes to `A`). It cannot be run without junk.
pub fn junk_pair_spec() -> StrategySpec {
    StrategySpec {
        stimuli: labels(&["0", "1"]),
        actions: labels(&["0", "1"]),
        states: labels(&["A", "B"]),
        transitions: vec![
            tr("A", "0", "0", 1.0, "A"),
            tr("B", "0", "0", 1.0, "A"),
            tr("A", "1", "0", 1.0, "B"),
            tr("B", "1", "1", 1.0, "A"),
        ],
    }
}

pub fn junk_pair() -> Strategy {
    Strategy::from_spec(&junk_pair_spec()).expect("fixture is valid")
}

/// Three-state Markovian agent (action `y` leads to `s_y`) whose fidelity
/// bound `(√3/4, √3/4, 0)` cannot be met by any encoding.
pub fn three_state_spec() -> StrategySpec {
    StrategySpec {
        stimuli: labels(&["0", "1"]),
        actions: labels(&["a", "b", "c"]),
        states: labels(&["s_a", "s_b", "s_c"]),
        transitions: vec![
            tr("s_a", "0", "a", 1.0, "s_a"),
            tr("s_b", "0", "a", 0.5, "s_a"),
            tr("s_b", "0", "b", 0.5, "s_b"),
            tr("s_c", "0", "b", 1.0, "s_b"),
            tr("s_a", "1", "a", 0.75, "s_a"),
            tr("s_a", "1", "b", 0.25, "s_b"),
            tr("s_b", "1", "a", 0.25, "s_a"),
            tr("s_b", "1", "c", 0.75, "s_c"),
            tr("s_c", "1", "a", 0.75, "s_a"),
            tr("s_c", "1", "b", 0.25, "s_b"),
        ],
    }
}

pub fn three_state() -> Strategy {
    Strategy::from_spec(&three_state_spec()).expect("fixture is valid")
}

/// One state, one stimulus, always emits the single action.
pub fn trivial() -> Strategy {
    Strategy::from_spec(&StrategySpec {
        stimuli: labels(&["0"]),
        actions: labels(&["0"]),
        states: labels(&["s"]),
        transitions: vec![tr("s", "0", "0", 1.0, "s")],
    })
    .expect("fixture is valid")
}
