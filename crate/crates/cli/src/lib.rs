//! Experiment runner for `fracbam`: config files, the run and sweep
//! pipelines, CSV and report output, and checksummed run manifests.

// `!(a < b)` is used on purpose so that NaN takes the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod kernel_spec;
pub mod manifest;
pub mod runner;
pub mod sweep;
