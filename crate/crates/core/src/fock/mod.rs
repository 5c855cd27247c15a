//! Few-photon bosonic states and their evolution through linear optics.

pub mod elements;
pub mod modes;
pub mod select;
pub mod state;
pub mod transfer;

pub use elements::{beam_splitter, jones, place, port_swap, ppbs, waveplate, WaveplateKind};
pub use modes::{ModeLabel, ModeSet, Polarization, MAX_MODES, MAX_PHOTONS};
pub use select::{post_select, reduce_to_polarization, PortPattern, PostSelection};
pub use state::{Occupation, PureState};
pub use transfer::{apply_transfer, compose, embed, ModeTransfer};
