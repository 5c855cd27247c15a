//! Maximum-likelihood two-qubit state reconstruction.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dataset::{TomoDataset, TomoPoint};
use crate::density::{DensityMatrix, Ket4};
use crate::error::{Error, Result};
use crate::optimize::{minimize, Options};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    #[default]
    Poisson,
    Gaussian,
}

#[derive(Clone, Debug)]
pub struct StateFit {
    pub rho: DensityMatrix,
    /// Fitted total rate: expected counts = scale · weight · Tr(ρΠ).
    pub scale: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub likelihood: Likelihood,
}

/// Entry (row, col) of each of the 16 real parameters; diagonal entries are real.
fn param_layout() -> Vec<(usize, usize, bool)> {
    let mut out = Vec::with_capacity(16);
    for r in 0..4 {
        out.push((r, r, false));
    }
    for r in 1..4 {
        for c in 0..r {
            out.push((r, c, false));
            out.push((r, c, true));
        }
    }
    out
}

fn t_from_params(p: &[f64]) -> Matrix4<Complex64> {
    let mut t = Matrix4::<Complex64>::zeros();
    for (k, (r, c, imag)) in param_layout().into_iter().enumerate() {
        if imag {
            t[(r, c)].im = p[k];
        } else {
            t[(r, c)].re = p[k];
        }
    }
    t
}

fn params_from_t(t: &Matrix4<Complex64>) -> Vec<f64> {
    param_layout()
        .into_iter()
        .map(|(r, c, imag)| if imag { t[(r, c)].im } else { t[(r, c)].re })
        .collect()
}

/// Per-point cost and its derivative with respect to the expected count.
fn point_cost(model: Likelihood, p: &TomoPoint, e: f64) -> (f64, f64) {
    let n = p.corrected;
    match model {
        Likelihood::Poisson => {
            if n > 0.0 {
                if e <= 0.0 {
                    return (f64::INFINITY, 0.0);
                }
                (e - n - n * (e / n).ln(), 1.0 - n / e)
            } else {
                (e - n, 1.0)
            }
        }
        Likelihood::Gaussian => {
            let var = TomoDataset::variance(p);
            ((e - n).powi(2) / (2.0 * var), (e - n) / var)
        }
    }
}

fn objective(data: &[(Ket4, &TomoPoint)], model: Likelihood, params: &[f64]) -> (f64, Vec<f64>) {
    let t = t_from_params(params);
    let layout = param_layout();
    let mut f = 0.0;
    let mut g = vec![0.0; params.len()];
    for (psi, p) in data {
        let tpsi = t * psi;
        let e = p.weight * tpsi.norm_squared();
        let (c, dc) = point_cost(model, p, e);
        f += c;
        if !f.is_finite() {
            return (f64::INFINITY, g);
        }
        for (k, &(r, col, imag)) in layout.iter().enumerate() {
            let dir = if imag { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
            let de = 2.0 * p.weight * (tpsi[r].conj() * dir * psi[col]).re;
            g[k] += dc * de;
        }
    }
    (f, g)
}

/// Hermitian basis: E_ii, (E_ij + E_ji), i(E_ij − E_ji).
fn hermitian_basis() -> Vec<Matrix4<Complex64>> {
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        let mut m = Matrix4::zeros();
        m[(i, i)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut a = Matrix4::zeros();
            a[(i, j)] = Complex64::new(1.0, 0.0);
            a[(j, i)] = Complex64::new(1.0, 0.0);
            out.push(a);
            let mut b = Matrix4::zeros();
            b[(i, j)] = Complex64::new(0.0, -1.0);
            b[(j, i)] = Complex64::new(0.0, 1.0);
            out.push(b);
        }
    }
    out
}

/// Least-squares unnormalized ρ from counts (weight · Tr(ρΠ) = n).
pub fn linear_inversion(dataset: &TomoDataset) -> Result<Matrix4<Complex64>> {
    let basis = hermitian_basis();
    let rows = dataset.points.len();
    let mut a = DMatrix::<f64>::zeros(rows, 16);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, p) in dataset.points.iter().enumerate() {
        let proj = p.setting.projector();
        for (k, bk) in basis.iter().enumerate() {
            a[(i, k)] = p.weight * (bk * proj).trace().re;
        }
        b[i] = p.corrected;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rows < 16 || rank < 16 {
        return Err(Error::RankDeficient { rank, needed: 16 });
    }
    let x = svd
        .solve(&b, 1e-12 * smax)
        .map_err(|e| Error::Precondition(e.to_string()))?;
    let mut rho = Matrix4::zeros();
    for (k, bk) in basis.iter().enumerate() {
        rho += bk * Complex64::new(x[k], 0.0);
    }
    Ok(rho)
}

/// Lower-triangular T with T†T = m for positive-definite m.
fn reversed_cholesky(m: &Matrix4<Complex64>) -> Option<Matrix4<Complex64>> {
    let mut p = Matrix4::<Complex64>::zeros();
    for i in 0..4 {
        p[(i, 3 - i)] = Complex64::new(1.0, 0.0);
    }
    let l = Cholesky::new(p * m * p)?.unpack();
    Some((p * l * p).adjoint())
}

fn physical_start(rho: &Matrix4<Complex64>, total: f64) -> Matrix4<Complex64> {
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let mut sum: f64 = vals.iter().sum();
    let mut clipped = Matrix4::<Complex64>::zeros();
    for (k, v) in vals.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        clipped += col * col.adjoint() * Complex64::new(*v, 0.0);
    }
    if !(sum > 0.0) {
        clipped = Matrix4::identity() * Complex64::new(total.max(1.0) / 4.0, 0.0);
        sum = total.max(1.0);
    }
    // Keep every eigenvalue strictly positive so the factorization exists.
    clipped + Matrix4::identity() * Complex64::new(1e-6 * sum, 0.0)
}

/// Fits ρ = T†T / Tr(T†T) maximizing the chosen likelihood.
pub fn mle_state(dataset: &TomoDataset, likelihood: Likelihood) -> Result<StateFit> {
    let lin = linear_inversion(dataset)?;
    let total: f64 = dataset.points.iter().map(|p| p.corrected.max(0.0)).sum();
    let start = physical_start(&lin, total);
    let t0 = reversed_cholesky(&start)
        .ok_or_else(|| Error::Precondition("starting point is not positive definite".into()))?;

    let data: Vec<(Ket4, &TomoPoint)> = dataset
        .points
        .iter()
        .map(|p| (p.setting.ket(), p))
        .collect();
    let out = minimize(
        |x| objective(&data, likelihood, x),
        &params_from_t(&t0),
        Options::default(),
    );
    let t = t_from_params(&out.x);
    let m = t.adjoint() * t;
    let scale = m.trace().re;
    Ok(StateFit {
        rho: DensityMatrix::from_unnormalized(m)?,
        scale,
        objective: out.f,
        iterations: out.iterations,
        converged: out.converged,
        likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::numeric_gradient;
    use crate::tomography::analyzer::standard_settings;

    fn dataset_from(rho: &DensityMatrix, n: f64) -> TomoDataset {
        TomoDataset {
            points: standard_settings()
                .into_iter()
                .map(|s| {
                    let c = n * rho.expectation(&s.projector());
                    TomoPoint {
                        setting: s,
                        corrected: c,
                        total: c.round() as u64,
                        accidental: 0,
                        weight: 1.0,
                    }
                })
                .collect(),
            input: None,
            exposure: 1.0,
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let ds = dataset_from(&DensityMatrix::maximally_mixed(), 500.0);
        let data: Vec<(Ket4, &TomoPoint)> = ds.points.iter().map(|p| (p.setting.ket(), p)).collect();
        let x: Vec<f64> = (0..16).map(|i| 3.0 + 0.37 * i as f64 - 0.05 * (i * i) as f64).collect();
        for model in [Likelihood::Poisson, Likelihood::Gaussian] {
            let (_, g) = objective(&data, model, &x);
            let num = numeric_gradient(|p| objective(&data, model, p).0, &x, 1e-5);
            for (a, b) in g.iter().zip(&num) {
                assert!((a - b).abs() < 1e-4 * (1.0 + b.abs()), "{model:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reversed_cholesky_reconstructs() {
        let m = Matrix4::from_fn(|r, c| Complex64::new((r + c) as f64 * 0.1, (r as f64 - c as f64) * 0.05))
            + Matrix4::identity() * Complex64::new(2.0, 0.0);
        let m = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let t = reversed_cholesky(&m).unwrap();
        assert!((t.adjoint() * t - m).norm() < 1e-12);
        assert!(t[(0, 1)].norm() == 0.0 && t[(2, 3)].norm() == 0.0);
    }

    #[test]
    fn too_few_settings_is_rank_deficient() {
        let mut ds = dataset_from(&DensityMatrix::maximally_mixed(), 100.0);
        ds.points.truncate(10);
        assert!(matches!(mle_state(&ds, Likelihood::Poisson), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn pathological_counts_still_give_a_state() {
        let mut ds = dataset_from(&DensityMatrix::maximally_mixed(), 100.0);
        for (i, p) in ds.points.iter_mut().enumerate() {
            p.corrected = if i % 3 == 0 { -5.0 } else { 0.0 };
        }
        ds.points[5].corrected = 1.0;
        let fit = mle_state(&ds, Likelihood::Poisson).unwrap();
        assert!((fit.rho.matrix().trace().re - 1.0).abs() < 1e-10);
    }
}
