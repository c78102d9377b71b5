//! Deterministic simulator and evaluation harness for multi-agent airlift
//! pickup and delivery with time windows.
//!
//! A [`scenario::ScenarioSpec`] fully describes an episode: the air network,
//! the airplane roster, the initial cargo and a pre-sampled schedule of
//! route malfunctions and cargo arrivals. [`engine::run_episode`] drives a
//! [`policies::Policy`] through the episode and returns an
//! [`log::EpisodeLog`], which [`scoring`] turns into a normalized score and
//! [`replay`] re-validates.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod events;
pub mod io;
pub mod log;
pub mod model;
pub mod pddl;
pub mod policies;
pub mod replay;
pub mod rng;
pub mod scenario;
pub mod scoring;
