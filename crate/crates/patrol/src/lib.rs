//! Cooperative multi-agent patrol routing on urban grid graphs.
//!
//! The crate covers the full pipeline for planning single-shift patrol
//! routes over an area modelled as an undirected graph:
//!
//! - [`terrain`] — grid maps, skeletonization into patrol graphs, synthetic
//!   map generation, and shortest-distance queries.
//! - [`env`] — the simulation core: simultaneous agent moves, visit
//!   accounting, line-of-sight observations, and the cooperative reward.
//! - [`baselines`] — non-learning reference policies (greedy, random).
//! - [`metrics`] — coverage-index and route-entropy evaluation over
//!   batches of episodes.
//! - [`learner`] — a shared-policy clipped-surrogate policy-gradient
//!   learner with a decomposed (summed per-agent) value estimate.
//!
//! Everything is deterministic for a fixed seed: maps, episodes, training
//! runs, and evaluation reports reproduce bit-for-bit.

pub mod baselines;
pub mod env;
pub mod learner;
pub mod metrics;
pub mod terrain;
pub(crate) mod util;
