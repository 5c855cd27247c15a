//! Fidelity, tangle and linear entropy of two-qubit states.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, Ket4};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fidelity: f64,
    pub tangle: f64,
    pub linear_entropy: f64,
}

impl Metrics {
    pub fn of(rho: &DensityMatrix, target: &Ket4) -> Self {
        Metrics {
            fidelity: fidelity(rho, target),
            tangle: tangle(rho),
            linear_entropy: linear_entropy(rho),
        }
    }
}

/// ⟨ψ|ρ|ψ⟩ for a normalized target.
pub fn fidelity(rho: &DensityMatrix, target: &Ket4) -> f64 {
    (target.adjoint() * rho.matrix() * target)[(0, 0)].re
}

/// Wootters concurrence from the singular values of τ = Wᵀ(σy⊗σy)W, where
/// ρ = WW†. Eigenvalues of ρ at round-off level are dropped.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let eig = rho.matrix().symmetric_eigen();
    let top = eig.eigenvalues.max();
    let floor = 64.0 * f64::EPSILON * top.max(0.0);
    let w = Matrix4::from_fn(|i, j| {
        let p = eig.eigenvalues[j];
        eig.eigenvectors[(i, j)] * if p > floor { p.sqrt() } else { 0.0 }
    });
    // σy⊗σy is real: antidiagonal (−1, 1, 1, −1)
    let mut yy = Matrix4::<Complex64>::zeros();
    for (i, s) in [-1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
        yy[(i, 3 - i)] = Complex64::new(s, 0.0);
    }
    let tau = w.transpose() * yy * w;
    let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

pub fn tangle(rho: &DensityMatrix) -> f64 {
    concurrence(rho).powi(2)
}

/// (4/3)(1 − Tr ρ²).
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    4.0 / 3.0 * (1.0 - rho.purity())
}
