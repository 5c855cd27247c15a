//! Analyzer projectors, state and process reconstruction, entanglement metrics.

pub mod analyzer;
pub mod dataset;
pub mod metrics;
pub mod mle_state;
pub mod process;

pub use analyzer::{AnalyzerSetting, STANDARD_16};
pub use dataset::{TomoDataset, TomoPoint};
pub use metrics::{concurrence, fidelity, linear_entropy, tangle, Metrics};
pub use mle_state::{linear_inversion, mle_state, Likelihood, StateFit};
pub use process::{
    fit_pure_process, multipair_correct, process_fidelity, ProcessFit, ProcessFitOptions, ProcessMatrix,
};
