//! Two-qubit density matrices over the ordered basis |VV⟩, |VH⟩, |HV⟩, |HH⟩.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const BASIS_LABELS: [&str; 4] = ["VV", "VH", "HV", "HH"];

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

pub type Ket4 = Vector4<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: Matrix4<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        let herm = (matrix - matrix.adjoint()).norm();
        if !(herm <= HERMITIAN_TOL) {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (‖ρ−ρ†‖ = {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(&matrix)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Hermitizes and rescales to unit trace before validating.
    pub fn from_unnormalized(matrix: Matrix4<Complex64>) -> Result<Self> {
        let h = (matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = h.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        Self::new(h / Complex64::new(tr, 0.0))
    }

    pub fn from_pure(ket: &Ket4) -> Result<Self> {
        let n = ket.norm_squared();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(n));
        }
        Ok(DensityMatrix {
            matrix: ket * ket.adjoint(),
        })
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            matrix: Matrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// Re Tr(ρ Π).
    pub fn expectation(&self, op: &Matrix4<Complex64>) -> f64 {
        (self.matrix * op).trace().re
    }

    /// Populations ⟨i|ρ|i⟩ in basis order.
    pub fn populations(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.matrix[(i, i)].re)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut e = hermitian_eigenvalues(&self.matrix);
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = self.matrix - other.matrix;
        0.5 * hermitian_eigenvalues(&d).iter().map(|x| x.abs()).sum::<f64>()
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(16);
        for r in 0..4 {
            for c in 0..4 {
                let z = self.matrix[(r, c)];
                out.push([z.re, z.im]);
            }
        }
        out
    }
}

pub(crate) fn hermitian_eigenvalues(m: &Matrix4<Complex64>) -> [f64; 4] {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = h.symmetric_eigenvalues();
    [e[0], e[1], e[2], e[3]]
}
