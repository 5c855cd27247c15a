//! Three-PPBS post-selected CNOT.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use super::qubits::{BellState, TwoQubitState};
use super::source::QsSpec;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::{
    apply_transfer, compose, place, port_swap, post_select, ppbs, reduce_to_polarization, waveplate,
    ModeSet, ModeTransfer, PortPattern, Polarization, PureState, WaveplateKind,
};

pub const CONTROL: &str = "control";
pub const TARGET: &str = "target";
pub const DUMP1: &str = "dump1";
pub const DUMP2: &str = "dump2";
pub const PORTS: [&str; 4] = [CONTROL, TARGET, DUMP1, DUMP2];

/// Horizontal reflectivity of all three splitters.
pub const R_H: f64 = 1.0 / 3.0;
pub const R_V: f64 = 1.0;

/// Target-basis rotation angle on either side of the splitter core.
pub const TARGET_ROTATION: f64 = -PI / 8.0;

#[derive(Clone, Debug)]
pub struct CnotCircuit {
    modes: Arc<ModeSet>,
    transfer: ModeTransfer,
    success: PortPattern,
    operator: Matrix4<Complex64>,
}

/// PPBS between two ports where the reflected beam keeps its port label.
fn ppbs_reflect_keep(a: &str, b: &str, modes: &Arc<ModeSet>) -> Result<ModeTransfer> {
    let split = place(&ppbs(R_H, R_V)?, &[a, b], modes)?;
    compose(&split, &port_swap(a, b, modes)?)
}

pub fn build_cnot_circuit() -> Result<CnotCircuit> {
    let modes = Arc::new(ModeSet::grid(&PORTS, &Polarization::BOTH, 2)?);
    let rot = place(&waveplate(WaveplateKind::Hwp, TARGET_ROTATION), &[TARGET], &modes)?;
    let swap_c = place(&waveplate(WaveplateKind::Hwp, PI / 4.0), &[CONTROL], &modes)?;
    let swap_t = place(&waveplate(WaveplateKind::Hwp, PI / 4.0), &[TARGET], &modes)?;
    let stages = [
        rot.clone(),
        ppbs_reflect_keep(CONTROL, TARGET, &modes)?,
        swap_c.clone(),
        ppbs_reflect_keep(CONTROL, DUMP1, &modes)?,
        swap_c,
        swap_t.clone(),
        ppbs_reflect_keep(TARGET, DUMP2, &modes)?,
        swap_t,
        rot,
    ];
    let mut transfer = ModeTransfer::identity(modes.clone());
    for s in &stages {
        transfer = compose(&transfer, s)?;
    }
    let operator = post_selected_operator(&transfer, &modes);
    Ok(CnotCircuit {
        success: PortPattern::new([(CONTROL, 1), (TARGET, 1), (DUMP1, 0), (DUMP2, 0)]),
        modes,
        transfer,
        operator,
    })
}

/// Two-photon amplitude ⟨out|U|in⟩ restricted to one photon per port, internal index 0.
fn post_selected_operator(u: &ModeTransfer, modes: &ModeSet) -> Matrix4<Complex64> {
    let m = u.matrix();
    let idx = |port: &str, bit: usize| {
        modes
            .require(port, Polarization::from_logical(bit), 0)
            .expect("fixed layout")
    };
    Matrix4::from_fn(|row, col| {
        let (oc, ot) = (idx(CONTROL, row / 2), idx(TARGET, row % 2));
        let (ic, it) = (idx(CONTROL, col / 2), idx(TARGET, col % 2));
        m[(oc, ic)] * m[(ot, it)] + m[(oc, it)] * m[(ot, ic)]
    })
}

impl CnotCircuit {
    /// Process-wide instance; the circuit has no parameters.
    pub fn shared() -> &'static CnotCircuit {
        static CIRCUIT: OnceLock<CnotCircuit> = OnceLock::new();
        CIRCUIT.get_or_init(|| build_cnot_circuit().expect("fixed circuit builds"))
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn transfer(&self) -> &ModeTransfer {
        &self.transfer
    }

    pub fn success_pattern(&self) -> &PortPattern {
        &self.success
    }

    /// Post-selected 4×4 map on the logical basis (≈ CNOT/3 up to global phase).
    pub fn operator(&self) -> &Matrix4<Complex64> {
        &self.operator
    }

    pub fn mode(&self, port: &str, pol: Polarization, internal: u8) -> usize {
        self.modes.require(port, pol, internal).expect("circuit port")
    }

    /// Circuit followed by per-arm analyzer waveplates. `control` and `target` are
    /// Jones matrices in (H, V) order applied to the control and target outputs.
    pub fn with_analyzers(
        &self,
        control: &Matrix2<Complex64>,
        target: &Matrix2<Complex64>,
    ) -> Result<ModeTransfer> {
        let mut t = self.transfer.clone();
        for (port, j) in [(CONTROL, control), (TARGET, target)] {
            let local = ModeTransfer::new(
                Arc::new(ModeSet::grid(&["0"], &Polarization::BOTH, 1)?),
                nalgebra::DMatrix::from_fn(2, 2, |r, c| j[(r, c)]),
            )?;
            t = compose(&t, &place(&local, &[port], &self.modes)?)?;
        }
        Ok(t)
    }

    /// Creation-operator polynomial of one photon pair carrying `input`: the control
    /// photon on internal index 0, the target photon split over internal indices by
    /// the source overlap.
    pub fn pair_monomials(&self, input: &TwoQubitState, spec: QsSpec) -> Vec<(Complex64, Vec<usize>)> {
        let w = spec.internal_weights();
        let mut out = Vec::new();
        for ci in 0..2 {
            for ti in 0..2 {
                let a = input.amplitude(ci, ti);
                if a.norm() == 0.0 {
                    continue;
                }
                let c = self.mode(CONTROL, Polarization::from_logical(ci), 0);
                for (k, wk) in w.iter().enumerate() {
                    if *wk > 0.0 {
                        let t = self.mode(TARGET, Polarization::from_logical(ti), k as u8);
                        out.push((a * *wk, vec![c, t]));
                    }
                }
            }
        }
        out
    }

    /// Normalized single-pair input state.
    pub fn pair_state(&self, input: &TwoQubitState, spec: QsSpec) -> Result<PureState> {
        Ok(PureState::from_polynomial(self.modes.clone(), &self.pair_monomials(input, spec))?.0)
    }

    /// Normalized two-pair state (C†)²|0⟩ for the pair creation operator C†.
    pub fn double_pair_state(&self, input: &TwoQubitState, spec: QsSpec) -> Result<PureState> {
        let single = self.pair_monomials(input, spec);
        let mut mono = Vec::with_capacity(single.len() * single.len());
        for (a, pa) in &single {
            for (b, pb) in &single {
                let mut modes = pa.clone();
                modes.extend_from_slice(pb);
                mono.push((a * b, modes));
            }
        }
        Ok(PureState::from_polynomial(self.modes.clone(), &mono)?.0)
    }
}

/// Evolves one pair through the gate and post-selects one photon in each output.
/// Returns the reduced polarization state and the success probability.
pub fn run_cnot(input: &TwoQubitState, spec: QsSpec) -> Result<(DensityMatrix, f64)> {
    let n = input.amplitudes().norm_squared();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n));
    }
    let circuit = CnotCircuit::shared();
    let out = apply_transfer(&circuit.pair_state(input, spec)?, circuit.transfer())?;
    let sel = post_select(&out, circuit.success_pattern())?;
    let kept = sel
        .state
        .ok_or(Error::EmptyPostSelection(sel.probability))?;
    Ok((reduce_to_polarization(&kept, [CONTROL, TARGET])?, sel.probability))
}

/// Row = logical input, column = logical output, conditioned on success.
pub fn truth_table(spec: QsSpec) -> Result<[[f64; 4]; 4]> {
    let mut table = [[0.0; 4]; 4];
    for (i, row) in table.iter_mut().enumerate() {
        let (rho, _) = run_cnot(&TwoQubitState::basis(i), spec)?;
        *row = rho.populations();
    }
    Ok(table)
}

pub fn bell_prep(which: BellState, spec: QsSpec) -> Result<DensityMatrix> {
    Ok(run_cnot(&which.gate_input(), spec)?.0)
}
