//! Energy-aware remote radio head (RRH) control for cloud radio access networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`netmodel`]: channel realisation, SINR, rate and the per-slot power model.
//! * [`beamform`]: minimum transmit power beamforming under per-user SINR targets.
//! * [`gbdt`]: gradient boosted regression trees used as a fast surrogate of the solver.
//! * [`dqn`]: Q-network, replay memory and the Bellman training step.
//! * [`env`]: the slot-by-slot RRH on/off environment and its reward.
//! * [`pipeline`]: dataset generation, training, evaluation, baselines and benchmarks.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod dqn;
pub mod env;
pub mod error;
pub mod gbdt;
pub mod netmodel;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
