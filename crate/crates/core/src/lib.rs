// `!(x >= 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod error;
pub mod learners;
pub mod metrics;
pub mod mitigation;
pub mod rng;
pub mod statistics;
pub mod tensor;

pub use error::{Error, Result};
