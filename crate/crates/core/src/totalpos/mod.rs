//! Total positivity of order two: minor scans, kernel composition and
//! space-time kernels of random walks.

pub mod grid;
pub mod kernels;
pub mod markov;

pub use grid::{normalized_minor, tp2_check, ScanMode, Tp2Grid};
pub use kernels::{
    compose_kernels, convolution_power, convolve_steps, hypoexponential_pdf, log_concavity_check, BaseMeasure, Composed, FnKernel,
    Kernel, StepDensity, SumDensity,
};
pub use markov::{isf_grid, isf_tp2_check, nonstationary_walk_tp2, spacetime_tp2, tail_tp2, MarkovKernel, StateSpace};
