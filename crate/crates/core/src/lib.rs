//! Experience-driven procedural generation of anxiety-inducing spiders.
//!
//! The crate bundles the discrete spider state space, the reward shaping,
//! Q-learning and rules-based adaptation agents, simulated subjects, the
//! experiment harnesses, biosignal preprocessing and the statistics used to
//! analyze sessions.

pub mod agents;
pub mod error;
pub mod reward;
pub mod rng;
pub mod session;
pub mod signals;
pub mod state_space;
pub mod stats;
pub mod subjects;

pub use error::{Error, Result};
