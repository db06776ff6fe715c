//! Long-range open quantum spin chains: exact dynamics, Liouvillian spectra,
//! steady-state correlations, and the analytic light-cone and clustering
//! envelopes they are checked against.

// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod superop;
pub mod dynamics;
pub mod spectral;
pub mod bounds;
pub mod correlations;
pub mod harness;
pub mod io;

pub use error::{Error, Result};
