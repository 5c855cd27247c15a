//! Heralded coincidence counting with multi-pair emission and detector noise.

pub mod model;
pub mod outcomes;
pub mod sim;

pub use model::{DetectorKind, DetectorModel, MultiPairMode, PairDistribution, RunConfig, SourceModel};
pub use outcomes::{detector_modes, ExpectedRates, JointCounts, OutcomeModel, PhotonRouting};
pub use sim::{sample_pair_count, simulate_counts, subtract_accidentals, CountRecord};
