//! Bare optical elements on small local mode sets, ready to be embedded.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use super::modes::{ModeSet, Polarization};
use super::transfer::{embed, ModeTransfer};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaveplateKind {
    Hwp,
    Qwp,
}

impl WaveplateKind {
    /// Retardance in radians.
    pub fn retardance(self) -> f64 {
        match self {
            WaveplateKind::Hwp => std::f64::consts::PI,
            WaveplateKind::Qwp => std::f64::consts::FRAC_PI_2,
        }
    }
}

fn check_prob(name: &'static str, r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(name, format!("{r} is outside [0, 1]")));
    }
    Ok(())
}

/// Symmetric 2×2 splitter block `[[t, i√r], [i√r, t]]`.
pub fn bs_block(reflectivity: f64) -> Result<Matrix2<Complex64>> {
    check_prob("reflectivity", reflectivity)?;
    let t = Complex64::new((1.0 - reflectivity).sqrt(), 0.0);
    let r = Complex64::new(0.0, reflectivity.sqrt());
    Ok(Matrix2::new(t, r, r, t))
}

/// Polarization-independent beam splitter between local ports "0" and "1".
pub fn beam_splitter(reflectivity: f64) -> Result<ModeTransfer> {
    let b = bs_block(reflectivity)?;
    let m = DMatrix::from_fn(2, 2, |i, j| b[(i, j)]);
    ModeTransfer::new(Arc::new(ModeSet::local(2, &[Polarization::H])), m)
}

/// Jones matrix in (H, V) order of a retarder with fast axis at `angle`.
pub fn jones(kind: WaveplateKind, angle: f64) -> Matrix2<Complex64> {
    let half = kind.retardance() / 2.0;
    let (s, c) = angle.sin_cos();
    let rot = Matrix2::new(c, -s, s, c).map(|x| Complex64::new(x, 0.0));
    let ret = Matrix2::new(
        Complex64::from_polar(1.0, -half),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, half),
    );
    rot * ret * rot.transpose()
}

/// Waveplate acting on the (H, V) pair of a single local port.
pub fn waveplate(kind: WaveplateKind, angle: f64) -> ModeTransfer {
    let j = jones(kind, angle);
    let m = DMatrix::from_fn(2, 2, |r, c| j[(r, c)]);
    ModeTransfer::new(Arc::new(ModeSet::local(1, &Polarization::BOTH)), m)
        .expect("2×2 over two modes")
}

/// Partially polarizing beam splitter over local modes (0,H), (0,V), (1,H), (1,V).
pub fn ppbs(r_h: f64, r_v: f64) -> Result<ModeTransfer> {
    check_prob("r_h", r_h)?;
    check_prob("r_v", r_v)?;
    let mut m = DMatrix::zeros(4, 4);
    for (pol, r) in [(0, r_h), (1, r_v)] {
        let b = bs_block(r)?;
        for i in 0..2 {
            for j in 0..2 {
                m[(2 * i + pol, 2 * j + pol)] = b[(i, j)];
            }
        }
    }
    ModeTransfer::new(Arc::new(ModeSet::local(2, &Polarization::BOTH)), m)
}

/// Embeds a polarization element (modes ordered H, V per port) on every internal
/// index of the given global ports.
pub fn place(element: &ModeTransfer, ports: &[&str], total: &Arc<ModeSet>) -> Result<ModeTransfer> {
    let mut out = ModeTransfer::identity(total.clone());
    for internal in 0..=1u8 {
        if !ports
            .iter()
            .all(|p| total.index_of(p, Polarization::H, internal).is_some())
        {
            continue;
        }
        let mut mapping = Vec::with_capacity(2 * ports.len());
        for p in ports {
            for pol in Polarization::BOTH {
                mapping.push(total.require(p, pol, internal)?);
            }
        }
        out = super::transfer::compose(&out, &embed(element, &mapping, total)?)?;
    }
    Ok(out)
}

/// Exchanges the labels of two ports mode for mode.
pub fn port_swap(a: &str, b: &str, total: &Arc<ModeSet>) -> Result<ModeTransfer> {
    let mut perm: Vec<usize> = (0..total.len()).collect();
    for (i, l) in total.labels().iter().enumerate() {
        let other = if l.port == a {
            b
        } else if l.port == b {
            a
        } else {
            continue;
        };
        perm[i] = total.require(other, l.pol, l.internal)?;
    }
    ModeTransfer::permutation(total.clone(), &perm)
}
