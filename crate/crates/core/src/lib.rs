//! Synthesis of regularized fractional Brownian motion and multifractal
//! random walks, delay embedding, exact k-nearest-neighbour analogue search,
//! and the analogue / successor volume statistics built on top of them.
//!
//! Pipeline: [`synthesis`] → [`embedding`] → [`analogues`] → [`metrics`] →
//! [`statistics`], with [`validation`] as an independent structure-function
//! check of the synthesized series and [`cli`] orchestrating batch runs.

pub mod analogues;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod regression;
pub mod series_io;
pub mod statistics;
pub mod synthesis;
pub mod validation;

pub use error::{Error, Result};
