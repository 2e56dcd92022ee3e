//! Simulation and analysis of planar fast-slow systems whose critical set
//! C0 = {y >= x²} is two-dimensional.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod blowup;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod fastslow_core;
pub mod integrate;
pub mod par;

pub use error::{Error, Result};
pub use fastslow_core::{GFamily, HField, Params, PlanePoint, Regime, SystemKind, SystemSpec};
