//! Simulation and analysis core for a wireless networked speed-control loop:
//! delay approximants, an adaptive discrete Smith predictor, a round-trip
//! delay estimator, a seeded network channel, DDE stability analysis and the
//! closed-loop harness.
//!
//! `no_std` with `alloc`; file IO and the CLI live in the `wncs` crate.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod approx;
pub mod control;
pub mod estimator;
pub mod lti;
pub mod netsim;
mod poly;
pub mod predictor;
pub mod sim;
pub mod stability;
