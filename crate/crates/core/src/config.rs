//! TOML experiment configuration.
//!
//! ```toml
//! pipeline = "bell"
//!
//! [source]
//! mean_pairs_per_gate = 0.15
//! overlap = 0.9695359714832659
//! distribution = "thermal"
//! raman_prob_per_gate = 0.0
//! qs_phase_rad = 0.0
//!
//! [herald]
//! efficiency = 0.01
//! dark_prob_per_gate = 3e-6
//!
//! [gated]
//! efficiency = 0.2
//! dark_prob_per_gate = 3e-3
//!
//! [run]
//! n_gates = 10000000
//! seed = 1
//! gate_period_ns = 20.0
//! multi_pair_mode = "exact"
//!
//! [tomography]
//! settings = "standard16"
//! likelihood = "poisson"
//! normalize_by_singles = false
//! correct_multipair = true
//! input = "DH"
//!
//! [sweep]
//! mean_pairs = [0.015, 0.05, 0.15]
//! ```
//!
//! Every section and key is optional except that a detector section, when
//! present, must give both of its keys. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::Ket4;
use crate::detection::{
    DetectorKind, DetectorModel, MultiPairMode, PairDistribution, RunConfig, SourceModel,
};
use crate::error::{Error, Result};
use crate::gates::{ideal_cnot, pol, BellState, Ket2, TwoQubitState};
use crate::tomography::analyzer::{overcomplete_settings, standard_settings};
use crate::tomography::{AnalyzerSetting, Likelihood};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    TruthTable,
    #[default]
    Bell,
    TomoState,
    TomoProcess,
    Sweep,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::TruthTable,
        Pipeline::Bell,
        Pipeline::TomoState,
        Pipeline::TomoProcess,
        Pipeline::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::TruthTable => "truth-table",
            Pipeline::Bell => "bell",
            Pipeline::TomoState => "tomo-state",
            Pipeline::TomoProcess => "tomo-process",
            Pipeline::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(vec![format!("unknown pipeline `{s}`")]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingSet {
    #[default]
    Standard16,
    Overcomplete36,
}

impl SettingSet {
    pub fn settings(self) -> Vec<AnalyzerSetting> {
        match self {
            SettingSet::Standard16 => standard_settings(),
            SettingSet::Overcomplete36 => overcomplete_settings(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub mean_pairs_per_gate: f64,
    /// Wave-packet overlap γ of the two photons; HOM visibility is γ².
    pub overlap: f64,
    pub distribution: PairDistribution,
    pub raman_prob_per_gate: f64,
    pub qs_phase_rad: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let s = SourceModel::default_experiment();
        SourceSection {
            mean_pairs_per_gate: s.mean_pairs,
            overlap: s.overlap,
            distribution: s.distribution,
            raman_prob_per_gate: s.raman_prob,
            qs_phase_rad: s.qs_phase,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_prob_per_gate: f64,
}

impl From<DetectorModel> for DetectorSection {
    fn from(d: DetectorModel) -> Self {
        DetectorSection {
            efficiency: d.efficiency,
            dark_prob_per_gate: d.dark_prob,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_gates: u64,
    pub seed: u64,
    pub gate_period_ns: f64,
    pub multi_pair_mode: MultiPairMode,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_gates: 10_000_000,
            seed: 1,
            gate_period_ns: 20.0,
            multi_pair_mode: MultiPairMode::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub settings: SettingSet,
    pub likelihood: Likelihood,
    pub normalize_by_singles: bool,
    /// Subtract the predicted multi-pair excess and report corrected results too.
    pub correct_multipair: bool,
    /// Gate input for `tomo-state`: two polarization letters from HVDARL
    /// (control first) or a Bell state name such as `phi_plus`.
    pub input: String,
    /// Reconstruct from this count file instead of simulating (`tomo-state` only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts_file: Option<PathBuf>,
}

impl Default for TomographySection {
    fn default() -> Self {
        TomographySection {
            settings: SettingSet::default(),
            likelihood: Likelihood::default(),
            normalize_by_singles: false,
            correct_multipair: true,
            input: "DH".into(),
            counts_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Mean pairs per gate at each point. Gate windows scale as 1/μ relative
    /// to `[source] mean_pairs_per_gate` so every point collects similar counts.
    pub mean_pairs: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            mean_pairs: vec![0.015, 0.05, 0.15],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default = "default_herald")]
    pub herald: DetectorSection,
    #[serde(default = "default_gated")]
    pub gated: DetectorSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_herald() -> DetectorSection {
    DetectorModel::sspd().into()
}

fn default_gated() -> DetectorSection {
    DetectorModel::apd().into()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: Pipeline::default(),
            source: SourceSection::default(),
            herald: default_herald(),
            gated: default_gated(),
            run: RunSection::default(),
            tomography: TomographySection::default(),
            sweep: SweepSection::default(),
        }
    }
}

fn probability(errors: &mut Vec<String>, key: &str, x: f64) {
    if !(0.0..=1.0).contains(&x) {
        errors.push(format!("{key} = {x}: must lie in [0, 1]"));
    }
}

impl ExperimentConfig {
    /// Parses without range checks, so overrides can be applied before
    /// [`validate`](Self::validate). Unknown keys are still rejected here.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string().trim_end().to_owned()]))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Checks every value and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        let s = &self.source;
        if !(s.mean_pairs_per_gate.is_finite() && s.mean_pairs_per_gate >= 0.0) {
            e.push(format!(
                "source.mean_pairs_per_gate = {}: must be finite and ≥ 0",
                s.mean_pairs_per_gate
            ));
        }
        probability(&mut e, "source.overlap", s.overlap);
        probability(&mut e, "source.raman_prob_per_gate", s.raman_prob_per_gate);
        if !s.qs_phase_rad.is_finite() {
            e.push("source.qs_phase_rad: must be finite".into());
        }
        for (name, d) in [("herald", &self.herald), ("gated", &self.gated)] {
            probability(&mut e, &format!("{name}.efficiency"), d.efficiency);
            probability(&mut e, &format!("{name}.dark_prob_per_gate"), d.dark_prob_per_gate);
        }
        if self.run.n_gates == 0 {
            e.push("run.n_gates: at least one gate window is required".into());
        }
        if !(self.run.gate_period_ns > 0.0 && self.run.gate_period_ns.is_finite()) {
            e.push(format!("run.gate_period_ns = {}: must be positive", self.run.gate_period_ns));
        }
        if let Err(err) = parse_input(&self.tomography.input) {
            e.push(format!("tomography.input: {err}"));
        }
        if self.tomography.counts_file.is_some() && self.pipeline != Pipeline::TomoState {
            e.push(format!(
                "tomography.counts_file: only the tomo-state pipeline reads counts, not {}",
                self.pipeline
            ));
        }
        if self.sweep.mean_pairs.is_empty() {
            e.push("sweep.mean_pairs: list is empty".into());
        }
        for (i, &mu) in self.sweep.mean_pairs.iter().enumerate() {
            if !(mu.is_finite() && mu > 0.0) {
                e.push(format!("sweep.mean_pairs[{i}] = {mu}: must be finite and > 0"));
            }
        }
        if self.pipeline == Pipeline::Sweep && self.source.mean_pairs_per_gate <= 0.0 {
            e.push("source.mean_pairs_per_gate: the sweep scales gate windows by it, must be > 0".into());
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }

    pub fn source_model(&self) -> Result<SourceModel> {
        let s = &self.source;
        let mut m = SourceModel::new(
            s.mean_pairs_per_gate,
            s.overlap,
            s.raman_prob_per_gate,
            s.distribution,
        )?;
        m.qs_phase = s.qs_phase_rad;
        Ok(m)
    }

    pub fn detectors(&self) -> Result<(DetectorModel, DetectorModel)> {
        Ok((
            DetectorModel::new(DetectorKind::Sspd, self.herald.efficiency, self.herald.dark_prob_per_gate)?,
            DetectorModel::new(DetectorKind::Apd, self.gated.efficiency, self.gated.dark_prob_per_gate)?,
        ))
    }

    pub fn run_config(&self, settings: Vec<AnalyzerSetting>) -> Result<RunConfig> {
        let mut rc = RunConfig::new(self.run.n_gates, self.run.seed, settings)?;
        rc.gate_period_ns = self.run.gate_period_ns;
        rc.multi_pair_mode = self.run.multi_pair_mode;
        rc.validate()?;
        Ok(rc)
    }
}

fn letter(c: char) -> Option<Ket2> {
    Some(match c {
        'H' => pol::h(),
        'V' => pol::v(),
        'D' => pol::d(),
        'A' => pol::a(),
        'R' => pol::r(),
        'L' => pol::l(),
        _ => return None,
    })
}

/// Gate input named by `text` and the ideal gate output for it.
pub fn parse_input(text: &str) -> Result<(TwoQubitState, Ket4)> {
    if let Some(b) = BellState::ALL.into_iter().find(|b| b.name() == text) {
        return Ok((b.gate_input(), b.ket()));
    }
    let chars: Vec<char> = text.chars().collect();
    let parsed = match chars.as_slice() {
        [c, t] => letter(*c).zip(letter(*t)),
        _ => None,
    };
    let (c, t) = parsed.ok_or_else(|| {
        Error::Config(vec![format!(
            "`{text}` is neither two letters from HVDARL nor a Bell state name"
        )])
    })?;
    let input = TwoQubitState::product(&c, &t)?;
    let output = ideal_cnot() * input.amplitudes();
    Ok((input, output))
}
