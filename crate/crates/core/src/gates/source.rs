//! Sagnac-loop quantum-splitter source.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::fock::{apply_transfer, beam_splitter, embed, ModeSet, ModeTransfer, Polarization, PureState};

/// Interferometer phase and photon indistinguishability of the source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QsSpec {
    phase: f64,
    overlap: f64,
}

impl QsSpec {
    /// `overlap` is clamped to [0, 1]; NaN becomes 0.
    pub fn new(phase: f64, overlap: f64) -> Self {
        let overlap = if overlap.is_nan() {
            0.0
        } else {
            overlap.clamp(0.0, 1.0)
        };
        QsSpec { phase, overlap }
    }

    /// Splitting setting with perfectly indistinguishable photons.
    pub fn ideal() -> Self {
        QsSpec::new(0.0, 1.0)
    }

    /// Splitting setting with overlap chosen so the two-photon visibility is `visibility`.
    pub fn with_visibility(visibility: f64) -> Self {
        QsSpec::new(0.0, visibility.max(0.0).sqrt())
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Two-photon interference visibility γ².
    pub fn visibility(&self) -> f64 {
        self.overlap * self.overlap
    }

    /// Amplitudes of the second photon on internal indices 0 and 1.
    pub fn internal_weights(&self) -> [f64; 2] {
        [self.overlap, (1.0 - self.overlap * self.overlap).max(0.0).sqrt()]
    }
}

impl Default for QsSpec {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Mode set of the source: loop ports a, b and coupler outputs c, d (V only).
pub fn source_modes() -> Arc<ModeSet> {
    Arc::new(ModeSet::grid(&["a", "b", "c", "d"], &[Polarization::V], 2).expect("fixed layout"))
}

/// Pair state after the 50/50 coupler, over ports c and d.
///
/// The loop delivers `(a†a'† + e^{iδ} b†b'†)|0⟩` where the primed photon sits on
/// internal index 0 with amplitude γ and on index 1 otherwise. The coupler maps
/// a, b onto c, d.
pub fn qs_source_state(spec: QsSpec) -> Result<PureState> {
    let modes = source_modes();
    let [w0, w1] = spec.internal_weights();
    let idx = |p: &str, k: u8| modes.require(p, Polarization::V, k).expect("fixed layout");
    let phase = Complex64::from_polar(1.0, spec.phase);
    let mut mono = Vec::new();
    for (port, amp) in [("a", Complex64::new(1.0, 0.0)), ("b", phase)] {
        mono.push((amp * w0, vec![idx(port, 0), idx(port, 0)]));
        if w1 > 0.0 {
            mono.push((amp * w1, vec![idx(port, 0), idx(port, 1)]));
        }
    }
    let (input, _) = PureState::from_polynomial(modes.clone(), &mono)?;

    // a,b → c,d through the coupler; c,d → a,b keeps the map unitary.
    let bs = beam_splitter(0.5)?;
    let mut coupler = ModeTransfer::identity(modes.clone());
    for k in 0..=1u8 {
        let ab_to_cd = embed_routed(&bs, [idx("a", k), idx("b", k)], [idx("c", k), idx("d", k)], &modes)?;
        coupler = crate::fock::compose(&coupler, &ab_to_cd)?;
    }
    apply_transfer(&input, &coupler)
}

fn embed_routed(
    bs: &ModeTransfer,
    inputs: [usize; 2],
    outputs: [usize; 2],
    modes: &Arc<ModeSet>,
) -> Result<ModeTransfer> {
    let local = embed(bs, &[inputs[0], inputs[1]], modes)?;
    let mut perm: Vec<usize> = (0..modes.len()).collect();
    for (i, o) in inputs.iter().zip(outputs) {
        perm.swap(*i, o);
    }
    let relabel = ModeTransfer::permutation(modes.clone(), &perm)?;
    crate::fock::compose(&local, &relabel)
}
