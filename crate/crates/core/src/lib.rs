//! Modelling toolkit for evanescent-field atom traps on suspended membrane
//! waveguides: guided modes, membrane optics, trap potentials, laser heating
//! of the membrane and the supporting loss-fit and design-sweep utilities.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod atomtrap;
pub mod config;
pub mod constants;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod modesolver;
pub mod powerlab;
pub mod simplex;
pub mod sweep;
pub mod thermal;
pub mod thinfilm;

pub use error::{Error, Result};
pub use exec::Execution;
