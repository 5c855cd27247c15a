//! Mode labels: spatial port × polarization × internal (distinguishability) index.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest mode set any Fock operation accepts.
pub const MAX_MODES: usize = 16;
/// Largest photon number any Fock operation accepts.
pub const MAX_PHOTONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    /// Logical qubit value: 0 ≡ V, 1 ≡ H.
    pub fn logical(self) -> usize {
        match self {
            Polarization::V => 0,
            Polarization::H => 1,
        }
    }

    pub fn from_logical(bit: usize) -> Self {
        if bit == 0 {
            Polarization::V
        } else {
            Polarization::H
        }
    }

    /// Row/column of this polarization in a Jones matrix, which uses (H, V) order.
    pub fn jones_index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    pub port: String,
    pub pol: Polarization,
    /// 0 or 1; photons in different internal indices never interfere.
    pub internal: u8,
}

impl ModeLabel {
    pub fn new(port: impl Into<String>, pol: Polarization, internal: u8) -> Self {
        ModeLabel {
            port: port.into(),
            pol,
            internal,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}{}", self.port, self.pol, self.internal)
    }
}

/// Ordered, duplicate-free list of modes. Transfers and states index into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSet {
    labels: Vec<ModeLabel>,
}

impl ModeSet {
    pub fn new(labels: Vec<ModeLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("labels", "mode set is empty"));
        }
        if labels.len() > MAX_MODES {
            return Err(Error::Capacity(format!(
                "{} modes requested, at most {MAX_MODES} supported",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.internal > 1 {
                return Err(invalid("internal", format!("mode {l} has index > 1")));
            }
            if labels[..i].contains(l) {
                return Err(invalid("labels", format!("duplicate mode {l}")));
            }
        }
        Ok(ModeSet { labels })
    }

    /// Every combination of `ports × pols × 0..internals`, port-major.
    pub fn grid(ports: &[&str], pols: &[Polarization], internals: u8) -> Result<Self> {
        let mut labels = Vec::new();
        for port in ports {
            for &pol in pols {
                for k in 0..internals {
                    labels.push(ModeLabel::new(*port, pol, k));
                }
            }
        }
        ModeSet::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &ModeLabel {
        &self.labels[index]
    }

    pub fn index_of(&self, port: &str, pol: Polarization, internal: u8) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l.port == port && l.pol == pol && l.internal == internal)
    }

    pub fn require(&self, port: &str, pol: Polarization, internal: u8) -> Result<usize> {
        self.index_of(port, pol, internal)
            .ok_or_else(|| Error::UnknownPort(format!("{port}:{pol}{internal}")))
    }

    pub fn has_port(&self, port: &str) -> bool {
        self.labels.iter().any(|l| l.port == port)
    }

    /// Indices of all modes belonging to `port`.
    pub fn port_modes(&self, port: &str) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].port == port)
            .collect()
    }

    /// Distinct port names in first-appearance order.
    pub fn ports(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for l in &self.labels {
            if !out.contains(&l.port.as_str()) {
                out.push(&l.port);
            }
        }
        out
    }

    /// Local mode set used by bare optical elements: `n` ports named "0", "1", …
    /// each carrying the given polarizations at internal index 0.
    pub(crate) fn local(ports: usize, pols: &[Polarization]) -> Self {
        let names: Vec<String> = (0..ports).map(|p| p.to_string()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        ModeSet::grid(&refs, pols, 1).expect("local mode sets are small and unique")
    }
}
