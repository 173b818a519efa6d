//! Command-line front end of the meshless toolkit: reproduction experiments,
//! run configurations and result files.

// NaN must fail the positive/finite checks, hence `!(x > 0.0)` style tests.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod experiments;
