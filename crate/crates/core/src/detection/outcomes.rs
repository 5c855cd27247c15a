//! Photon-number distributions at the two detectors for n pairs in one window.

use std::borrow::Cow;

use nalgebra::Matrix2;
use num_complex::Complex64;

use super::model::{DetectorModel, MultiPairMode, SourceModel};
use crate::error::Result;
use crate::fock::{apply_transfer, ModeTransfer, Polarization, PureState};
use crate::gates::cnot::{CONTROL, TARGET};
use crate::gates::{CnotCircuit, QsSpec, TwoQubitState};
use crate::tomography::AnalyzerSetting;

/// Pair numbers with precomputed tables; larger n are built on demand.
pub const MAX_TABULATED_PAIRS: usize = 8;

/// Joint distribution of photon numbers (k1 at the herald, k2 at the gated detector).
#[derive(Clone, Debug, PartialEq)]
pub struct JointCounts {
    dim: usize,
    probs: Vec<f64>,
}

impl JointCounts {
    pub fn vacuum() -> Self {
        JointCounts {
            dim: 1,
            probs: vec![1.0],
        }
    }

    pub fn zeros(max_photons: usize) -> Self {
        let dim = max_photons + 1;
        JointCounts {
            dim,
            probs: vec![0.0; dim * dim],
        }
    }

    /// Largest photon number representable on either detector.
    pub fn max_photons(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, k1: usize, k2: usize) -> f64 {
        if k1 < self.dim && k2 < self.dim {
            self.probs[k1 * self.dim + k2]
        } else {
            0.0
        }
    }

    pub(crate) fn add(&mut self, k1: usize, k2: usize, p: f64) {
        self.probs[k1 * self.dim + k2] += p;
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Iterates over `(k1, k2, p)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i / self.dim, i % self.dim, p))
    }

    /// Distribution of the sum of independent counts.
    pub fn convolve(&self, other: &JointCounts) -> JointCounts {
        let mut out = JointCounts::zeros(self.max_photons() + other.max_photons());
        for (a1, a2, p) in self.iter().filter(|t| t.2 != 0.0) {
            for (b1, b2, q) in other.iter().filter(|t| t.2 != 0.0) {
                out.add(a1 + b1, a2 + b2, p * q);
            }
        }
        out
    }

    /// Photon numbers found in `herald` and `gated` modes of a pure state.
    pub fn from_state(state: &PureState, herald: &[usize], gated: &[usize]) -> Self {
        let mut out = JointCounts::zeros(state.photon_number());
        for (occ, a) in state.terms() {
            let k1: usize = herald.iter().map(|&m| occ[m] as usize).sum();
            let k2: usize = gated.iter().map(|&m| occ[m] as usize).sum();
            out.add(k1, k2, a.norm_sqr());
        }
        out
    }

    /// Expected value of `f(k1) · g(k2)`.
    pub fn expect(&self, f: impl Fn(usize) -> f64, g: impl Fn(usize) -> f64) -> f64 {
        self.iter().map(|(k1, k2, p)| p * f(k1) * g(k2)).sum()
    }

    /// Draws `(k1, k2)` by inverse CDF from `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> (usize, usize) {
        let mut acc = 0.0;
        let mut last = (0, 0);
        for (k1, k2, p) in self.iter() {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = (k1, k2);
            if u < acc {
                return last;
            }
        }
        last
    }
}

/// Probability that one photon lands on the herald / gated detector, for the
/// control and target photon of a pair routed without interference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonRouting {
    pub control: [f64; 2],
    pub target: [f64; 2],
}

impl PhotonRouting {
    /// Joint photon numbers of one incoherently routed pair.
    pub fn pair_table(&self) -> JointCounts {
        let photon = |p: [f64; 2]| [(1, 0, p[0]), (0, 1, p[1]), (0, 0, (1.0 - p[0] - p[1]).max(0.0))];
        let mut t = JointCounts::zeros(2);
        for (c1, c2, pc) in photon(self.control) {
            for (t1, t2, pt) in photon(self.target) {
                t.add(c1 + t1, c2 + t2, pc * pt);
            }
        }
        t
    }
}

/// Per-(input, analyzer) photon statistics at the detectors.
#[derive(Clone, Debug)]
pub struct OutcomeModel {
    tables: Vec<JointCounts>,
    incoherent_pair: JointCounts,
    routing: PhotonRouting,
    mode: MultiPairMode,
}

/// Herald = H output of the control analyzer, gated = H output of the target analyzer.
pub fn detector_modes(circuit: &CnotCircuit) -> ([usize; 2], [usize; 2]) {
    let m = |p, k| circuit.mode(p, Polarization::H, k);
    ([m(CONTROL, 0), m(CONTROL, 1)], [m(TARGET, 0), m(TARGET, 1)])
}

fn reduced_qubits(input: &TwoQubitState) -> [Matrix2<Complex64>; 2] {
    let mut rc = Matrix2::zeros();
    let mut rt = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                rc[(a, b)] += input.amplitude(a, k) * input.amplitude(b, k).conj();
                rt[(a, b)] += input.amplitude(k, a) * input.amplitude(k, b).conj();
            }
        }
    }
    [rc, rt]
}

fn landing(t: &ModeTransfer, rho: &Matrix2<Complex64>, inputs: [usize; 2], outputs: &[usize]) -> f64 {
    let u = t.matrix();
    let mut p = 0.0;
    for &j in outputs {
        for a in 0..2 {
            for b in 0..2 {
                p += (rho[(a, b)] * u[(j, inputs[a])] * u[(j, inputs[b])].conj()).re;
            }
        }
    }
    p
}

impl OutcomeModel {
    pub fn build(
        circuit: &CnotCircuit,
        input: &TwoQubitState,
        spec: QsSpec,
        setting: &AnalyzerSetting,
        mode: MultiPairMode,
    ) -> Result<Self> {
        let t = circuit.with_analyzers(&setting.arm_operator(0), &setting.arm_operator(1))?;
        let (herald, gated) = detector_modes(circuit);

        let [rc, rt] = reduced_qubits(input);
        let logical = |port, internal| {
            [0, 1].map(|b| circuit.mode(port, Polarization::from_logical(b), internal))
        };
        let (cin, tin) = (logical(CONTROL, 0), logical(TARGET, 0));
        let routing = PhotonRouting {
            control: [landing(&t, &rc, cin, &herald), landing(&t, &rc, cin, &gated)],
            target: [landing(&t, &rt, tin, &herald), landing(&t, &rt, tin, &gated)],
        };
        let incoherent_pair = routing.pair_table();

        let one = apply_transfer(&circuit.pair_state(input, spec)?, &t)?;
        let mut tables = vec![JointCounts::vacuum(), JointCounts::from_state(&one, &herald, &gated)];
        let two = match mode {
            MultiPairMode::Exact => {
                let s = apply_transfer(&circuit.double_pair_state(input, spec)?, &t)?;
                JointCounts::from_state(&s, &herald, &gated)
            }
            MultiPairMode::Incoherent => incoherent_pair.convolve(&incoherent_pair),
        };
        tables.push(two);
        let mut inc = incoherent_pair.convolve(&incoherent_pair);
        for _ in 3..=MAX_TABULATED_PAIRS {
            inc = inc.convolve(&incoherent_pair);
            tables.push(inc.clone());
        }
        Ok(OutcomeModel {
            tables,
            incoherent_pair,
            routing,
            mode,
        })
    }

    pub fn mode(&self) -> MultiPairMode {
        self.mode
    }

    pub fn routing(&self) -> PhotonRouting {
        self.routing
    }

    /// Joint photon numbers for `n` pairs.
    pub fn table(&self, n: usize) -> Cow<'_, JointCounts> {
        if let Some(t) = self.tables.get(n) {
            return Cow::Borrowed(t);
        }
        let mut t = self.tables[MAX_TABULATED_PAIRS].clone();
        for _ in MAX_TABULATED_PAIRS..n {
            t = t.convolve(&self.incoherent_pair);
        }
        Cow::Owned(t)
    }

    /// Per-window probabilities of herald click, gated click and their coincidence.
    pub fn expected_rates(
        &self,
        source: &SourceModel,
        herald: &DetectorModel,
        gated: &DetectorModel,
    ) -> ExpectedRates {
        let ph = |k| herald.click_probability(k, source.raman_prob);
        let pg = |k| gated.click_probability(k, source.raman_prob);
        let mut r = ExpectedRates::default();
        let mut extra: Option<JointCounts> = None;
        for n in 0.. {
            let w = source.pair_probability(n);
            if n > 2 && w < 1e-18 {
                break;
            }
            let t: &JointCounts = if n <= MAX_TABULATED_PAIRS {
                &self.tables[n]
            } else {
                let next = match extra.take() {
                    Some(t) => t.convolve(&self.incoherent_pair),
                    None => self.tables[MAX_TABULATED_PAIRS].convolve(&self.incoherent_pair),
                };
                extra.insert(next)
            };
            r.herald += w * t.expect(ph, |_| 1.0);
            r.gated += w * t.expect(|_| 1.0, pg);
            r.coincidence += w * t.expect(ph, pg);
        }
        r.accidental = r.herald * r.gated;
        r
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpectedRates {
    pub herald: f64,
    pub gated: f64,
    pub coincidence: f64,
    pub accidental: f64,
}
