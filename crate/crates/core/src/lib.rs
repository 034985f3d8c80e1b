//! Deterministic simulation core for a pooled-antenna cellular architecture.
//!
//! The crate models a network whose physical nodes (dense antenna arrays built
//! from identical hardware blocks) boot themselves, discover each other over
//! the air, and assemble a routed backbone without operator intervention.
//! User terminals are tracked through per-antenna delay maps, grouped into
//! terminal-centric virtual cells, and served by virtual nodes that pool
//! hardware from several physical nodes.  On top of that sit link-capacity
//! estimation (Monte-Carlo over random channels) and a simple weighted cost
//! model for traffic accounting.
//!
//! Everything in here is `no_std` (with `alloc`) and strictly deterministic:
//! all randomness flows through counter-based streams in [`rng`], so results
//! are reproducible bit-for-bit regardless of evaluation order or thread
//! count.  File formats, CLI plumbing, and parallel fan-out live in the
//! companion binary crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod accounting;
pub mod bootstrap;
pub mod capacity;
pub mod dbm;
pub mod linalg;
pub mod rng;
pub mod topology;
pub mod vnode;

pub use topology::{Scenario, ScenarioConfig};
