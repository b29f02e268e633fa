//! Coarse-to-fine Q-learning for continuous control.
//!
//! A continuous action box is discretized by repeated zoom-in: at each of
//! `L` levels every dimension picks one of `B` bins inside the interval
//! chosen at the previous level, giving `B^L` resolution from `B`-way
//! decisions. A shared critic scores bins at every level, conditioned on the
//! previous level's action, and is trained with a distributional Q-learning
//! objective plus a behavior-cloning term on demonstrations.
//!
//! | module | contents |
//! |---|---|
//! | [`action_space`] | intervals, bin paths, encode/decode |
//! | [`distribution`] | C51 support, Bellman projection, cross-entropy, dominance loss |
//! | [`critic`] | MLP trunk with dueling heads, hand-written backward pass, AdamW, Polyak |
//! | [`replay`] | n-step replay, demo file format, action scaling, frame stacking |
//! | [`agent`] | greedy action selection, losses, training loop |
//! | [`env`] | toy environments and scripted experts |
//! | [`checkpoint`] | versioned binary checkpoints |
//! | [`run`] | config resolution and the CLI commands |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action_space;
pub mod agent;
pub mod checkpoint;
pub mod critic;
pub mod distribution;
pub mod env;
pub mod error;
pub mod replay;
pub mod run;

pub use error::{Error, Result};
