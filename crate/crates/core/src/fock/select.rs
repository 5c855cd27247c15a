//! Post-selection on per-port photon numbers and reduction to polarization qubits.

use std::collections::BTreeMap;

use nalgebra::Matrix4;
use num_complex::Complex64;

use super::state::{Occupation, PureState};
use crate::density::{DensityMatrix, Ket4};
use crate::error::{invalid, Error, Result};

/// Below this kept probability a post-selection is reported as empty.
pub const EMPTY_PROBABILITY: f64 = 1e-15;

/// Required photon number per spatial port, summed over polarization and internal index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortPattern {
    requirements: Vec<(String, usize)>,
}

impl PortPattern {
    pub fn new<S: Into<String>>(reqs: impl IntoIterator<Item = (S, usize)>) -> Self {
        PortPattern {
            requirements: reqs.into_iter().map(|(p, n)| (p.into(), n)).collect(),
        }
    }

    /// One photon in each listed port.
    pub fn one_each(ports: &[&str]) -> Self {
        Self::new(ports.iter().map(|p| (*p, 1)))
    }

    pub fn requirements(&self) -> &[(String, usize)] {
        &self.requirements
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct PostSelection {
    /// Renormalized kept state; `None` when the probability is below [`EMPTY_PROBABILITY`].
    pub state: Option<PureState>,
    pub probability: f64,
}

pub fn post_select(state: &PureState, pattern: &PortPattern) -> Result<PostSelection> {
    if pattern.is_empty() {
        return Err(invalid("pattern", "post-selection pattern is empty"));
    }
    let modes = state.modes();
    let mut groups = Vec::with_capacity(pattern.requirements.len());
    for (port, n) in &pattern.requirements {
        if !modes.has_port(port) {
            return Err(Error::UnknownPort(port.clone()));
        }
        groups.push((modes.port_modes(port), *n));
    }
    let kept: BTreeMap<Occupation, Complex64> = state
        .terms()
        .filter(|(occ, _)| {
            groups
                .iter()
                .all(|(idx, n)| idx.iter().map(|&m| occ[m] as usize).sum::<usize>() == *n)
        })
        .map(|(o, a)| (*o, *a))
        .collect();
    let probability: f64 = kept.values().map(|a| a.norm_sqr()).sum();
    if probability < EMPTY_PROBABILITY {
        return Ok(PostSelection {
            state: None,
            probability,
        });
    }
    let kept = PureState::from_map(modes.clone(), kept)?.normalized();
    Ok(PostSelection {
        state: Some(kept),
        probability,
    })
}

/// Polarization density matrix of the photons in `ports`, tracing out internal
/// indices and every other mode. Each term must hold exactly one photon per port.
pub fn reduce_to_polarization(state: &PureState, ports: [&str; 2]) -> Result<DensityMatrix> {
    let modes = state.modes();
    let port_idx: Vec<Vec<usize>> = ports
        .iter()
        .map(|p| {
            if modes.has_port(p) {
                Ok(modes.port_modes(p))
            } else {
                Err(Error::UnknownPort(p.to_string()))
            }
        })
        .collect::<Result<_>>()?;

    // Environment = internal indices of the two photons + occupation elsewhere.
    let mut branches: BTreeMap<(u8, u8, Occupation), Ket4> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let mut env = *occ;
        let mut logical = [0usize; 2];
        let mut internal = [0u8; 2];
        for (k, idx) in port_idx.iter().enumerate() {
            let occupied: Vec<usize> = idx.iter().copied().filter(|&m| occ[m] > 0).collect();
            if occupied.len() != 1 || occ[occupied[0]] != 1 {
                return Err(Error::Precondition(format!(
                    "term {occ:?} does not hold exactly one photon in port {}",
                    ports[k]
                )));
            }
            let label = modes.label(occupied[0]);
            logical[k] = label.pol.logical();
            internal[k] = label.internal;
            env.clear(occupied[0]);
        }
        let branch = branches
            .entry((internal[0], internal[1], env))
            .or_insert_with(Ket4::zeros);
        branch[2 * logical[0] + logical[1]] += amp;
    }
    let mut rho = Matrix4::<Complex64>::zeros();
    for ket in branches.values() {
        rho += ket * ket.adjoint();
    }
    DensityMatrix::from_unnormalized(rho)
}
