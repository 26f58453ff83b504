//! Compile finite-state agent strategies into memory-minimal quantum agents.
//!
//! A [`Strategy`] is a unifilar input–output transducer: on stimulus `x` in
//! causal state `s` it emits action `y` with probability `P(y|x,s)` and moves
//! to `λ(x,y,s)`. This crate provides
//!
//! - validation and causal-state minimisation of strategies,
//! - steady states and classical memory costs under an [`InputStrategy`],
//! - the systematic quantum encoding (overlap fixed point, memory and junk
//!   states, policy unitary) in [`encoding`],
//! - fidelity bounds and the junk-necessity test in [`bounds`],
//! - a state-vector simulator for compiled agents in [`simulator`],
//! - resettable stochastic clocks and precision sweeps in [`clocks`].
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod clocks;
pub mod encoding;
pub mod entropy;
mod error;
pub mod fixtures;
pub mod linalg;
pub mod random;
pub mod simulator;
pub mod stationary;
pub mod strategy;

pub use error::{Error, Result};
pub use strategy::{InputSpec, InputStrategy, InputTransitionSpec, Strategy, StrategySpec, TransitionSpec};

/// Absolute tolerance on probability row sums of input tables.
pub const PROB_TOL: f64 = 1e-9;
