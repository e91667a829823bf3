//! Classical simulation of spectral-filtering state preparation.
//!
//! A trial wavefunction on a periodic 1-D grid is propagated with a
//! split-operator scheme and projected onto an eigenstate by an apodized
//! time-domain filter. The filter is evaluated either as a weighted sum of
//! propagated states or by emulating the two-ancilla circuit gate by gate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod filter;
pub mod numerics;
pub mod quadrature;
pub mod spectrum;
pub mod table;
pub mod windows;

pub use error::{Error, Result};
