//! Reputation-gated publish/subscribe for cooperative vehicle fleets.
//!
//! The crate models fleets of vehicles that publish two-part sensing
//! contents through a master-vehicle broker, prices those contents with a
//! leader/follower game, learns prices and qualities online with policy hill
//! climbing, and gates subscriptions on a hybrid role and behavior
//! reputation score.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod content;
pub mod economics;
pub mod error;
pub mod exec;
pub mod learning;
pub mod mobility;
pub mod model;
pub mod reputation;
pub mod rng;
pub mod sim;
pub mod stackelberg;

pub use error::{Result, SpadError};
