//! Multiplicative functionals over truncated tensor algebras: signatures of
//! piecewise-linear paths, ω-balanced dyadic partitions, the Lyons extension,
//! uniform closeness estimates, and linear controlled differential equations.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cde;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod fixtures;
pub mod io;
pub mod partition;
pub mod path;
pub mod sampling;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::TruncatedTensor;
