// negated comparisons double as NaN rejection; quadrature nodes keep their published digits
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod distances;
pub mod eigen;
pub mod error;
pub mod exact_law;
pub mod quadrature;
pub mod sampling;
pub mod scaling;
pub mod special;

pub use error::{Error, Result};
