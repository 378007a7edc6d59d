pub mod azema_yor;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod grids;
pub mod measures;
pub mod mrl;
pub mod quadrature;
pub mod rng;
pub mod totalpos;
pub mod verdict;

pub use error::{Error, Hypothesis, Result};
