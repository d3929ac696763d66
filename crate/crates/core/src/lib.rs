//! veilrl: synthesis and auditing of privacy-preserving policies in tabular
//! MDPs.
//!
//! An agent that must act in view of others can leak its reward function:
//! an observer running inverse reinforcement learning on its behavior
//! recovers a reward whose optimization reproduces that behavior. This crate
//! plans policies that keep a floor on the agent's own return while leaking
//! as little as possible, either by maximizing causal entropy
//! ([`planners::meir`]) or by actively steering the observer toward a decoy
//! anti-reward ([`planners::mm_binary_search`] and friends), and then plays
//! the observer's side ([`observers`]) to measure what actually leaks
//! ([`metrics`]).
//!
//! The building blocks: [`mdp`] holds finite MDPs, policies, and reward
//! tables; [`occupancy`] converts between policies and normalized occupancy
//! measures; [`solve`] is hard and soft value iteration; [`antireward`]
//! constructs the decoys; [`envs`] builds the four benchmark environment
//! families; [`bench`] sweeps full experiment grids to CSV and SVG.

pub mod antireward;
pub mod bench;
pub mod envs;
pub mod error;
pub mod json;
pub mod mdp;
pub mod metrics;
pub mod observers;
pub mod occupancy;
pub mod planners;
pub mod sample;
pub mod solve;
pub mod util;

pub use error::{Error, Result};
pub use mdp::{AnyPolicy, MixedPolicy, RewardTable, StochasticPolicy, TabularMdp, Trajectory};
pub use occupancy::OccupancyMeasure;
