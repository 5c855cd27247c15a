//! Linear-optical mode transfers and their action on Fock states.
//!
//! A transfer `T` rewrites every input creation operator as
//! `a_i† → Σ_j T[j, i] b_j†`, so column `i` is where a photon entering mode `i`
//! can leave. Acting on a multi-photon ket expands the product of rewritten
//! operators and collects like monomials.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::modes::ModeSet;
use super::state::{Occupation, PureState, PRUNE_THRESHOLD};
use crate::error::{Error, Result};

/// Tolerance used to decide the unitary flag.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ModeTransfer {
    modes: Arc<ModeSet>,
    matrix: DMatrix<Complex64>,
    unitary: bool,
}

impl ModeTransfer {
    /// Wraps a square matrix over `modes`; the unitary flag is measured, not trusted.
    pub fn new(modes: Arc<ModeSet>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = modes.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix for {n} modes",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let unitary = is_unitary(&matrix);
        Ok(ModeTransfer {
            modes,
            matrix,
            unitary,
        })
    }

    pub fn identity(modes: Arc<ModeSet>) -> Self {
        let n = modes.len();
        ModeTransfer {
            modes,
            matrix: DMatrix::identity(n, n),
            unitary: true,
        }
    }

    /// Sends mode `i` to mode `perm[i]`.
    pub fn permutation(modes: Arc<ModeSet>, perm: &[usize]) -> Result<Self> {
        let n = modes.len();
        check_injective(perm, n)?;
        if perm.len() != n {
            return Err(Error::InvalidMapping(format!(
                "permutation of length {} over {n} modes",
                perm.len()
            )));
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            m[(j, i)] = Complex64::new(1.0, 0.0);
        }
        Ok(ModeTransfer {
            modes,
            matrix: m,
            unitary: true,
        })
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        ModeTransfer {
            modes: self.modes.clone(),
            matrix: self.matrix.adjoint(),
            unitary: self.unitary,
        }
    }
}

fn is_unitary(m: &DMatrix<Complex64>) -> bool {
    let n = m.nrows();
    let prod = m.adjoint() * m;
    let id = DMatrix::<Complex64>::identity(n, n);
    (prod - id).iter().all(|z| z.norm() <= UNITARY_TOL)
}

fn check_injective(mapping: &[usize], total: usize) -> Result<()> {
    for (i, &t) in mapping.iter().enumerate() {
        if t >= total {
            return Err(Error::InvalidMapping(format!(
                "target {t} out of range for {total} modes"
            )));
        }
        if mapping[..i].contains(&t) {
            return Err(Error::InvalidMapping(format!("target {t} used twice")));
        }
    }
    Ok(())
}

fn same_modes(a: &Arc<ModeSet>, b: &Arc<ModeSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// `b` after `a`, i.e. the matrix product `B · A`.
pub fn compose(a: &ModeTransfer, b: &ModeTransfer) -> Result<ModeTransfer> {
    if a.dim() != b.dim() || !same_modes(&a.modes, &b.modes) {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose transfers over {} and {} modes with different labels",
            a.dim(),
            b.dim()
        )));
    }
    Ok(ModeTransfer {
        modes: a.modes.clone(),
        matrix: &b.matrix * &a.matrix,
        unitary: a.unitary && b.unitary,
    })
}

/// Places `element` on the modes `mapping[i]` of `total`; identity elsewhere.
pub fn embed(
    element: &ModeTransfer,
    mapping: &[usize],
    total: &Arc<ModeSet>,
) -> Result<ModeTransfer> {
    if mapping.len() != element.dim() {
        return Err(Error::InvalidMapping(format!(
            "mapping has {} entries for a {}-mode element",
            mapping.len(),
            element.dim()
        )));
    }
    check_injective(mapping, total.len())?;
    let n = total.len();
    let mut m = DMatrix::<Complex64>::identity(n, n);
    for &g in mapping {
        m[(g, g)] = Complex64::new(0.0, 0.0);
    }
    for (i, &gi) in mapping.iter().enumerate() {
        for (j, &gj) in mapping.iter().enumerate() {
            m[(gi, gj)] = element.matrix[(i, j)];
        }
    }
    Ok(ModeTransfer {
        modes: total.clone(),
        matrix: m,
        unitary: element.unitary,
    })
}

/// Evolves `state` through `t`.
pub fn apply_transfer(state: &PureState, t: &ModeTransfer) -> Result<PureState> {
    let n = t.dim();
    if state.modes().len() != n || !same_modes(state.modes(), &t.modes) {
        return Err(Error::DimensionMismatch(format!(
            "state over {} modes, transfer over {n}",
            state.modes().len()
        )));
    }
    // Non-zero entries of each column: where a photon entering mode i can go.
    let columns: Vec<Vec<(usize, Complex64)>> = (0..n)
        .map(|i| {
            (0..n)
                .filter_map(|j| {
                    let z = t.matrix[(j, i)];
                    (z != Complex64::new(0.0, 0.0)).then_some((j, z))
                })
                .collect()
        })
        .collect();

    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, &amp) in state.terms() {
        // ket = ∏ (a_i†)^{n_i} / √(∏ n_i!) |0⟩; expand one creation operator at a time.
        let mut poly: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        poly.insert(Occupation::vacuum(n), amp / occ.sqrt_factorials());
        for i in occ.photon_modes() {
            let mut next: BTreeMap<Occupation, Complex64> = BTreeMap::new();
            for (mono, c) in &poly {
                for &(j, z) in &columns[i] {
                    let mut m = *mono;
                    m.add(j);
                    *next.entry(m).or_default() += c * z;
                }
            }
            poly = next;
        }
        for (mono, c) in poly {
            *out.entry(mono).or_default() += c * mono.sqrt_factorials();
        }
    }
    out.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    PureState::from_map(state.modes().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::elements::beam_splitter;
    use crate::fock::modes::Polarization;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn embed_identity_is_identity() {
        let total = Arc::new(ModeSet::local(5, &[Polarization::H]));
        let el = ModeTransfer::identity(Arc::new(ModeSet::local(2, &[Polarization::H])));
        let e = embed(&el, &[3, 1], &total).unwrap();
        assert_eq!(e.matrix(), &DMatrix::identity(5, 5));
    }

    #[test]
    fn embedded_swap_is_an_involution() {
        let total = Arc::new(ModeSet::local(4, &[Polarization::H]));
        let local = Arc::new(ModeSet::local(2, &[Polarization::H]));
        let swap = ModeTransfer::permutation(local, &[1, 0]).unwrap();
        let e = embed(&swap, &[0, 1], &total).unwrap();
        let twice = compose(&e, &e).unwrap();
        assert!((twice.matrix() - DMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn embedded_beam_splitter_matches_bare_action() {
        let bs = beam_splitter(0.5).unwrap();
        let total = Arc::new(ModeSet::local(4, &[Polarization::H]));
        let e = embed(&bs, &[2, 3], &total).unwrap();
        let big = apply_transfer(&PureState::fock(total, &[0, 0, 1, 1]).unwrap(), &e).unwrap();
        let small = apply_transfer(&PureState::fock(bs.modes().clone(), &[1, 1]).unwrap(), &bs)
            .unwrap();
        for (a, b) in [([0, 0, 2, 0], [2, 0]), ([0, 0, 1, 1], [1, 1]), ([0, 0, 0, 2], [0, 2])] {
            assert!((big.amplitude(&a) - small.amplitude(&b)).norm() < 1e-15);
        }
    }

    #[test]
    fn embed_rejects_bad_mappings() {
        let total = Arc::new(ModeSet::local(3, &[Polarization::H]));
        let bs = beam_splitter(0.3).unwrap();
        assert!(matches!(embed(&bs, &[1, 1], &total), Err(Error::InvalidMapping(_))));
        assert!(matches!(embed(&bs, &[0, 3], &total), Err(Error::InvalidMapping(_))));
        assert!(matches!(embed(&bs, &[0], &total), Err(Error::InvalidMapping(_))));
    }

    #[test]
    fn compose_with_identity_and_adjoint() {
        let bs = beam_splitter(0.3).unwrap();
        let id = ModeTransfer::identity(bs.modes().clone());
        let u = compose(&bs, &id).unwrap();
        assert!((u.matrix() - bs.matrix()).norm() < 1e-15);
        let back = compose(&bs, &bs.adjoint()).unwrap();
        assert!((back.matrix() - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(back.is_unitary());
    }

    #[test]
    fn compose_rejects_mismatched_modes() {
        let a = beam_splitter(0.3).unwrap();
        let b = ModeTransfer::identity(Arc::new(ModeSet::local(3, &[Polarization::H])));
        assert!(compose(&a, &b).is_err());
    }

    #[test]
    fn non_unitary_flag_propagates() {
        let modes = Arc::new(ModeSet::local(2, &[Polarization::H]));
        let lossy = ModeTransfer::new(
            modes,
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        assert!(!lossy.is_unitary());
        let bs = ModeTransfer::new(lossy.modes().clone(), beam_splitter(0.2).unwrap().matrix().clone())
            .unwrap();
        assert!(!compose(&lossy, &bs).unwrap().is_unitary());
    }

    #[test]
    fn identity_preserves_state() {
        let modes = Arc::new(ModeSet::local(2, &[Polarization::H]));
        let s = PureState::fock(modes.clone(), &[1, 1]).unwrap();
        let out = apply_transfer(&s, &ModeTransfer::identity(modes)).unwrap();
        assert!((out.overlap_up_to_phase(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_rejects_foreign_mode_set() {
        let s = PureState::fock(Arc::new(ModeSet::local(2, &[Polarization::H])), &[1, 0]).unwrap();
        let t = ModeTransfer::identity(Arc::new(ModeSet::local(2, &[Polarization::V])));
        assert!(matches!(apply_transfer(&s, &t), Err(Error::DimensionMismatch(_))));
    }
}
