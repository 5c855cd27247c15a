//! Superpositions of Fock occupation vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;

use super::modes::{ModeSet, MAX_MODES, MAX_PHOTONS};
use crate::error::{invalid, Error, Result};

/// Amplitudes below this magnitude are dropped after every evolution step.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Photon count per mode. Fixed-size so it is `Copy` and cheap to use as a map key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation {
    counts: [u8; MAX_MODES],
    len: u8,
}

impl Occupation {
    pub fn vacuum(modes: usize) -> Self {
        assert!(modes <= MAX_MODES);
        Occupation {
            counts: [0; MAX_MODES],
            len: modes as u8,
        }
    }

    pub fn from_slice(counts: &[u8]) -> Result<Self> {
        if counts.len() > MAX_MODES {
            return Err(Error::Capacity(format!(
                "occupation over {} modes",
                counts.len()
            )));
        }
        let mut occ = Occupation::vacuum(counts.len());
        occ.counts[..counts.len()].copy_from_slice(counts);
        Ok(occ)
    }

    /// Occupation with one photon added to `mode` per entry of `photons`.
    pub fn from_photons(modes: usize, photons: &[usize]) -> Self {
        let mut occ = Occupation::vacuum(modes);
        for &m in photons {
            occ.counts[m] += 1;
        }
        occ
    }

    pub fn total(&self) -> usize {
        self.iter().map(|&n| n as usize).sum()
    }

    pub(crate) fn clear(&mut self, mode: usize) {
        self.counts[mode] = 0;
    }

    pub(crate) fn add(&mut self, mode: usize) {
        self.counts[mode] += 1;
    }

    /// Mode index of each photon, ascending, repeated by multiplicity.
    pub fn photon_modes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (m, &n) in self.iter().enumerate() {
            out.extend(std::iter::repeat_n(m, n as usize));
        }
        out
    }

    /// √(∏ nᵢ!), the normalization linking monomials in creation operators to kets.
    pub fn sqrt_factorials(&self) -> f64 {
        self.iter()
            .map(|&n| (1..=n as u32).product::<u32>() as f64)
            .product::<f64>()
            .sqrt()
    }
}

impl Deref for Occupation {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.counts[..self.len as usize]
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

/// A superposition of Fock states with fixed total photon number.
#[derive(Clone, Debug)]
pub struct PureState {
    modes: Arc<ModeSet>,
    photons: usize,
    terms: BTreeMap<Occupation, Complex64>,
}

impl PureState {
    /// Builds a state from explicit kets. Repeated occupations are summed.
    pub fn from_terms(
        modes: Arc<ModeSet>,
        terms: impl IntoIterator<Item = (Occupation, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.len() != modes.len() {
                return Err(Error::DimensionMismatch(format!(
                    "occupation over {} modes, mode set has {}",
                    occ.len(),
                    modes.len()
                )));
            }
            *map.entry(occ).or_default() += amp;
        }
        Self::from_map(modes, map)
    }

    pub(crate) fn from_map(
        modes: Arc<ModeSet>,
        mut terms: BTreeMap<Occupation, Complex64>,
    ) -> Result<Self> {
        terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        let photons = match terms.keys().next() {
            Some(occ) => occ.total(),
            None => return Err(invalid("terms", "state has zero norm")),
        };
        if photons == 0 {
            return Err(invalid("terms", "vacuum is not a valid photon state"));
        }
        if photons > MAX_PHOTONS {
            return Err(Error::Capacity(format!(
                "{photons} photons requested, at most {MAX_PHOTONS} supported"
            )));
        }
        if terms.keys().any(|o| o.total() != photons) {
            return Err(invalid("terms", "mixed photon numbers in one state"));
        }
        let state = PureState {
            modes,
            photons,
            terms,
        };
        let n = state.norm_sqr();
        if n > 1.0 + 1e-9 {
            return Err(Error::NotNormalized(n));
        }
        Ok(state)
    }

    /// Expands `Σ c · ∏ a†_m |0⟩` and normalizes it. Returns the state and the
    /// squared norm of the unnormalized polynomial.
    pub fn from_polynomial(
        modes: Arc<ModeSet>,
        monomials: &[(Complex64, Vec<usize>)],
    ) -> Result<(Self, f64)> {
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (c, photons) in monomials {
            if let Some(&m) = photons.iter().find(|&&m| m >= modes.len()) {
                return Err(Error::DimensionMismatch(format!("mode index {m} out of range")));
            }
            let occ = Occupation::from_photons(modes.len(), photons);
            *map.entry(occ).or_default() += c * occ.sqrt_factorials();
        }
        let norm_sqr: f64 = map.values().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(invalid("monomials", "polynomial state has zero norm"));
        }
        let scale = norm_sqr.sqrt().recip();
        map.values_mut().for_each(|a| *a *= scale);
        Ok((Self::from_map(modes, map)?, norm_sqr))
    }

    /// The single Fock state `occ` with amplitude 1.
    pub fn fock(modes: Arc<ModeSet>, occ: &[u8]) -> Result<Self> {
        let occ = Occupation::from_slice(occ)?;
        Self::from_terms(modes, [(occ, Complex64::new(1.0, 0.0))])
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn photon_number(&self) -> usize {
        self.photons
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        Occupation::from_slice(occ)
            .ok()
            .and_then(|o| self.terms.get(&o).copied())
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let s = self.norm_sqr().sqrt().recip();
        PureState {
            modes: self.modes.clone(),
            photons: self.photons,
            terms: self.terms.iter().map(|(o, a)| (*o, a * s)).collect(),
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(o, a)| other.terms.get(o).map(|b| a.conj() * b))
            .sum()
    }

    /// |⟨a|b⟩|² / (‖a‖²‖b‖²): 1 exactly when the states agree up to global phase.
    pub fn overlap_up_to_phase(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    /// Probability that the photons found in `selected` modes number exactly `n`.
    pub fn count_distribution(&self, selected: &[usize]) -> Vec<f64> {
        let mut dist = vec![0.0; self.photons + 1];
        for (occ, a) in &self.terms {
            let k: usize = selected.iter().map(|&m| occ[m] as usize).sum();
            dist[k] += a.norm_sqr();
        }
        dist
    }
}
