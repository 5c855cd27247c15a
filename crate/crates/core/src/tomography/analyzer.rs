//! Polarization analyzers: HWP, then QWP, then a polarizer transmitting H.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::Ket4;
use crate::fock::{jones, WaveplateKind};
use crate::gates::Ket2;

/// Waveplate angles of both analyzer arms (index 0 = control, 1 = target).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub id: usize,
    pub qwp: [f64; 2],
    pub hwp: [f64; 2],
}

impl AnalyzerSetting {
    pub fn new(id: usize, qwp: [f64; 2], hwp: [f64; 2]) -> Self {
        AnalyzerSetting { id, qwp, hwp }
    }

    /// Setting projecting onto named polarizations, e.g. `"DR"`.
    pub fn named(id: usize, name: &str) -> Option<Self> {
        let mut qwp = [0.0; 2];
        let mut hwp = [0.0; 2];
        let chars: Vec<char> = name.chars().collect();
        if chars.len() != 2 {
            return None;
        }
        for (arm, ch) in chars.iter().enumerate() {
            let (q, h) = arm_angles(*ch)?;
            qwp[arm] = q;
            hwp[arm] = h;
        }
        Some(AnalyzerSetting { id, qwp, hwp })
    }

    /// Jones matrix (H, V order) of one arm's waveplates in beam order.
    pub fn arm_operator(&self, arm: usize) -> Matrix2<Complex64> {
        jones(WaveplateKind::Qwp, self.qwp[arm]) * jones(WaveplateKind::Hwp, self.hwp[arm])
    }

    /// Transmitted polarization of one arm in logical order (V, H).
    pub fn arm_ket(&self, arm: usize) -> Ket2 {
        let j = self.arm_operator(arm).adjoint();
        // column of H in (H, V) order, reordered to (V, H)
        Ket2::new(j[(1, 0)], j[(0, 0)])
    }

    pub fn ket(&self) -> Ket4 {
        let (a, b) = (self.arm_ket(0), self.arm_ket(1));
        Ket4::from_fn(|k, _| a[k / 2] * b[k % 2])
    }

    pub fn projector(&self) -> Matrix4<Complex64> {
        let k = self.ket();
        k * k.adjoint()
    }
}

fn arm_angles(ch: char) -> Option<(f64, f64)> {
    Some(match ch {
        'H' => (0.0, 0.0),
        'V' => (0.0, PI / 4.0),
        'D' => (0.0, PI / 8.0),
        'A' => (0.0, -PI / 8.0),
        'R' => (PI / 4.0, 0.0),
        'L' => (-PI / 4.0, 0.0),
        _ => return None,
    })
}

pub const STANDARD_16: [&str; 16] = [
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH", "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL",
];

pub fn standard_settings() -> Vec<AnalyzerSetting> {
    STANDARD_16
        .iter()
        .enumerate()
        .map(|(i, n)| AnalyzerSetting::named(i, n).expect("valid name"))
        .collect()
}

/// All 36 pairs of {H, V, D, A, R, L}.
pub fn overcomplete_settings() -> Vec<AnalyzerSetting> {
    let basis = ['H', 'V', 'D', 'A', 'R', 'L'];
    let mut out = Vec::with_capacity(36);
    for a in basis {
        for b in basis {
            let name: String = [a, b].iter().collect();
            out.push(AnalyzerSetting::named(out.len(), &name).expect("valid name"));
        }
    }
    out
}

/// The four logical-basis projections VV, VH, HV, HH.
pub fn logical_settings() -> Vec<AnalyzerSetting> {
    ["VV", "VH", "HV", "HH"]
        .iter()
        .enumerate()
        .map(|(i, n)| AnalyzerSetting::named(i, n).expect("valid name"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::pol;

    fn same_ray(a: &Ket2, b: &Ket2) -> bool {
        (a.dotc(b).norm() - 1.0).abs() < 1e-12
    }

    #[test]
    fn named_arms_project_on_named_kets() {
        for (ch, k) in [
            ('H', pol::h()),
            ('V', pol::v()),
            ('D', pol::d()),
            ('A', pol::a()),
            ('R', pol::r()),
            ('L', pol::l()),
        ] {
            let s = AnalyzerSetting::named(0, &format!("{ch}H")).unwrap();
            assert!(same_ray(&s.arm_ket(0), &k), "{ch}");
        }
    }

    #[test]
    fn null_waveplates_project_on_hh() {
        let p = AnalyzerSetting::new(0, [0.0; 2], [0.0; 2]).projector();
        assert!((p[(3, 3)].re - 1.0).abs() < 1e-15);
        assert!((p.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_names() {
        assert!(AnalyzerSetting::named(0, "HX").is_none());
        assert!(AnalyzerSetting::named(0, "HHH").is_none());
    }

    #[test]
    fn set_sizes() {
        assert_eq!(standard_settings().len(), 16);
        assert_eq!(overcomplete_settings().len(), 36);
        assert_eq!(overcomplete_settings()[35].id, 35);
    }
}
