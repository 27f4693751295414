//! Numerical laboratory for semilinear wave blow-up on two-dimensional
//! asymptotically Euclidean exterior domains.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bq;
pub mod cli;
pub mod cutoff;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod harmonic;
pub mod lifespan;
pub mod metric;
pub mod obstacle;
pub mod ode;
pub mod quadrature;
pub mod svg;
pub mod testfn;
pub mod wave;

pub use error::{Error, Result};
