//! Two-qubit polarization states in the logical basis |VV⟩, |VH⟩, |HV⟩, |HH⟩.

use std::fmt;

use nalgebra::{Matrix4, Vector2};
use num_complex::Complex64;

use crate::density::Ket4;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;

/// Single-qubit ket in logical order (V, H).
pub type Ket2 = Vector2<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Named single-photon polarization kets, logical order (V, H).
pub mod pol {
    use super::*;

    pub fn h() -> Ket2 {
        Ket2::new(c(0.0, 0.0), c(1.0, 0.0))
    }
    pub fn v() -> Ket2 {
        Ket2::new(c(1.0, 0.0), c(0.0, 0.0))
    }
    /// (|H⟩ + |V⟩)/√2
    pub fn d() -> Ket2 {
        let s = 0.5f64.sqrt();
        Ket2::new(c(s, 0.0), c(s, 0.0))
    }
    /// (|H⟩ − |V⟩)/√2
    pub fn a() -> Ket2 {
        let s = 0.5f64.sqrt();
        Ket2::new(c(-s, 0.0), c(s, 0.0))
    }
    /// (|H⟩ − i|V⟩)/√2
    pub fn r() -> Ket2 {
        let s = 0.5f64.sqrt();
        Ket2::new(c(0.0, -s), c(s, 0.0))
    }
    /// (|H⟩ + i|V⟩)/√2
    pub fn l() -> Ket2 {
        let s = 0.5f64.sqrt();
        Ket2::new(c(0.0, s), c(s, 0.0))
    }
}

/// α|VV⟩ + β|VH⟩ + γ|HV⟩ + δ|HH⟩, control first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    amps: Ket4,
}

impl TwoQubitState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let amps = Ket4::from(amps);
        let n = amps.norm_squared();
        if !((n - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized(n));
        }
        Ok(TwoQubitState { amps })
    }

    /// Logical basis state `index` (0 = VV … 3 = HH).
    pub fn basis(index: usize) -> Self {
        let mut amps = Ket4::zeros();
        amps[index] = c(1.0, 0.0);
        TwoQubitState { amps }
    }

    pub fn product(control: &Ket2, target: &Ket2) -> Result<Self> {
        Self::new(std::array::from_fn(|k| control[k / 2] * target[k % 2]))
    }

    pub fn amplitudes(&self) -> &Ket4 {
        &self.amps
    }

    pub fn amplitude(&self, control: usize, target: usize) -> Complex64 {
        self.amps[2 * control + target]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn ket(self) -> Ket4 {
        let s = 0.5f64.sqrt();
        let z = c(0.0, 0.0);
        let (p, m) = (c(s, 0.0), c(-s, 0.0));
        match self {
            BellState::PhiPlus => Ket4::new(p, z, z, p),
            BellState::PhiMinus => Ket4::new(p, z, z, m),
            BellState::PsiPlus => Ket4::new(z, p, p, z),
            BellState::PsiMinus => Ket4::new(z, p, m, z),
        }
    }

    /// Separable input that the CNOT maps onto this Bell state.
    pub fn gate_input(self) -> TwoQubitState {
        let (ctl, tgt) = match self {
            BellState::PhiPlus => (pol::d(), pol::v()),
            BellState::PhiMinus => (pol::a(), pol::v()),
            BellState::PsiPlus => (pol::d(), pol::h()),
            BellState::PsiMinus => (pol::a(), pol::h()),
        };
        TwoQubitState::product(&ctl, &tgt).expect("unit kets")
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi_plus",
            BellState::PhiMinus => "phi_minus",
            BellState::PsiPlus => "psi_plus",
            BellState::PsiMinus => "psi_minus",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// CNOT with control = first qubit, logical basis order VV, VH, HV, HH.
pub fn ideal_cnot() -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(i, j)] = c(1.0, 0.0);
    }
    m
}
