//! Independent oracles shared by integration targets.

use std::sync::Arc;

use cnotsim::fock::{ModeSet, Polarization};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the phase freedom of the QR decomposition.
    DMatrix::from_fn(n, n, |i, j| q[(i, j)] * r[(j, j)] / r[(j, j)].norm())
}

fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    fn go(m: &DMatrix<Complex64>, row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == m.nrows() {
            return Complex64::new(1.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..m.ncols() {
            if !used[c] {
                used[c] = true;
                acc += m[(row, c)] * go(m, row + 1, used);
                used[c] = false;
            }
        }
        acc
    }
    go(m, 0, &mut vec![false; m.ncols()])
}

fn factorial_product(occ: &[u8]) -> f64 {
    occ.iter().map(|&n| (1..=n as u32).product::<u32>() as f64).product()
}

fn photon_list(occ: &[u8]) -> Vec<usize> {
    occ.iter().enumerate().flat_map(|(m, &n)| std::iter::repeat_n(m, n as usize)).collect()
}

pub fn occupations(modes: usize, photons: usize) -> Vec<Vec<u8>> {
    if modes == 1 {
        return vec![vec![photons as u8]];
    }
    let mut out = Vec::new();
    for k in 0..=photons {
        for mut rest in occupations(modes - 1, photons - k) {
            rest.insert(0, k as u8);
            out.push(rest);
        }
    }
    out
}

/// ⟨out| U |in⟩ = Perm(U[out photons, in photons]) / √(∏ n_i! ∏ m_j!).
pub fn oracle_amplitude(u: &DMatrix<Complex64>, input: &[u8], output: &[u8]) -> Complex64 {
    let (rows, cols) = (photon_list(output), photon_list(input));
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| u[(rows[i], cols[j])]);
    permanent(&sub) / (factorial_product(input) * factorial_product(output)).sqrt()
}

pub fn line_modes(n: usize) -> Arc<ModeSet> {
    let names: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Arc::new(ModeSet::grid(&refs, &[Polarization::H], 1).unwrap())
}
