//! Detector, source and run parameters.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gates::QsSpec;
use crate::tomography::AnalyzerSetting;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Sspd,
    Apd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    pub efficiency: f64,
    pub dark_prob: f64,
}

fn unit_interval(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(name, format!("{x} is outside [0, 1]")))
    }
}

impl DetectorModel {
    pub fn new(kind: DetectorKind, efficiency: f64, dark_prob: f64) -> Result<Self> {
        unit_interval("efficiency", efficiency)?;
        unit_interval("dark_prob", dark_prob)?;
        Ok(DetectorModel {
            kind,
            efficiency,
            dark_prob,
        })
    }

    /// Low-noise herald detector.
    pub fn sspd() -> Self {
        DetectorModel {
            kind: DetectorKind::Sspd,
            efficiency: 0.01,
            dark_prob: 3e-6,
        }
    }

    /// Gated detector.
    pub fn apd() -> Self {
        DetectorModel {
            kind: DetectorKind::Apd,
            efficiency: 0.20,
            dark_prob: 3e-3,
        }
    }

    pub fn ideal(kind: DetectorKind) -> Self {
        DetectorModel {
            kind,
            efficiency: 1.0,
            dark_prob: 0.0,
        }
    }

    /// Probability of a click with `photons` incident signal photons, plus dark
    /// counts and an unpolarized spurious photon present with probability `raman`.
    pub fn click_probability(&self, photons: usize, raman: f64) -> f64 {
        let miss = (1.0 - self.efficiency).powi(photons as i32)
            * (1.0 - self.dark_prob)
            * (1.0 - raman * self.efficiency / 2.0);
        1.0 - miss
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairDistribution {
    Poisson,
    Thermal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiPairMode {
    Incoherent,
    #[default]
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub mean_pairs: f64,
    pub overlap: f64,
    pub raman_prob: f64,
    pub distribution: PairDistribution,
    /// Quantum-splitter phase; only the splitting setting (0) feeds the gate.
    pub qs_phase: f64,
}

impl SourceModel {
    pub fn new(
        mean_pairs: f64,
        overlap: f64,
        raman_prob: f64,
        distribution: PairDistribution,
    ) -> Result<Self> {
        if !(mean_pairs >= 0.0 && mean_pairs.is_finite()) {
            return Err(invalid("mean_pairs", format!("{mean_pairs} must be finite and ≥ 0")));
        }
        unit_interval("overlap", overlap)?;
        unit_interval("raman_prob", raman_prob)?;
        Ok(SourceModel {
            mean_pairs,
            overlap,
            raman_prob,
            distribution,
            qs_phase: 0.0,
        })
    }

    /// 0.15 pairs per gate, thermal statistics, 94 % two-photon visibility.
    pub fn default_experiment() -> Self {
        SourceModel {
            mean_pairs: 0.15,
            overlap: 0.94f64.sqrt(),
            raman_prob: 0.0,
            distribution: PairDistribution::Thermal,
            qs_phase: 0.0,
        }
    }

    pub fn qs_spec(&self) -> QsSpec {
        QsSpec::new(self.qs_phase, self.overlap)
    }

    /// P(n pairs in one window).
    pub fn pair_probability(&self, n: usize) -> f64 {
        let mu = self.mean_pairs;
        if mu == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        match self.distribution {
            PairDistribution::Thermal => (mu / (1.0 + mu)).powi(n as i32) / (1.0 + mu),
            PairDistribution::Poisson => {
                let ln = -mu + n as f64 * mu.ln() - ln_factorial(n);
                ln.exp()
            }
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n_gates: u64,
    pub seed: u64,
    pub gate_period_ns: f64,
    pub settings: Vec<AnalyzerSetting>,
    pub multi_pair_mode: MultiPairMode,
}

impl RunConfig {
    pub fn new(n_gates: u64, seed: u64, settings: Vec<AnalyzerSetting>) -> Result<Self> {
        let cfg = RunConfig {
            n_gates,
            seed,
            gate_period_ns: 20.0,
            settings,
            multi_pair_mode: MultiPairMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_gates == 0 {
            return Err(invalid("n_gates", "at least one gate window is required"));
        }
        if !(self.gate_period_ns > 0.0) {
            return Err(invalid("gate_period_ns", "must be positive"));
        }
        if self.settings.is_empty() {
            return Err(crate::error::Error::InvalidSettings(
                "analyzer setting list is empty".into(),
            ));
        }
        Ok(())
    }
}
