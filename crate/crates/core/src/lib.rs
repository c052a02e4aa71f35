//! Caputo fractional higher-order BAM neural networks with neutral and
//! distributed delays: Mittag-Leffler functions, a predictor-corrector
//! solver, and the stability, Halanay and synchronization checks built on it.

// `!(a < b)` is used on purpose so that NaN takes the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod gamma;
pub mod halanay;
pub mod kernels;
pub mod mittag_leffler;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod stability;
pub mod sync;
pub mod trajectory;
