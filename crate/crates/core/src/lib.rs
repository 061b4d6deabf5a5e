//! Secrecy performance of NOMA mmWave UAV downlink with a ground protected zone.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod montecarlo;
pub mod optimizer;
pub mod propagation;
pub mod quadrature;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};

/// The guide's chapters, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/outage.md")]
    mod outage {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
