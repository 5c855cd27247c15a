//! Source state, CNOT circuit and ideal gate outputs.

pub mod cnot;
pub mod qubits;
pub mod source;

pub use cnot::{bell_prep, build_cnot_circuit, run_cnot, truth_table, CnotCircuit};
pub use qubits::{ideal_cnot, pol, BellState, Ket2, TwoQubitState};
pub use source::{qs_source_state, QsSpec};
