//! Simulation and analysis of a post-selected photonic CNOT gate built from
//! partially polarizing beam splitters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod countfile;
pub mod density;
pub mod detection;
pub mod error;
pub mod fock;
pub mod gates;
pub mod optimize;
pub mod pipeline;
pub mod tomography;

pub use config::ExperimentConfig;
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, ResultBundle};
