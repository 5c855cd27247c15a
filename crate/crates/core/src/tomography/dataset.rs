//! Counts prepared for reconstruction.

use serde::{Deserialize, Serialize};

use super::analyzer::AnalyzerSetting;
use crate::detection::CountRecord;
use crate::gates::TwoQubitState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomoPoint {
    pub setting: AnalyzerSetting,
    /// Accidental-subtracted (and possibly multi-pair-subtracted) count.
    pub corrected: f64,
    pub total: u64,
    pub accidental: u64,
    /// Relative normalization of this setting's expected counts.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomoDataset {
    pub points: Vec<TomoPoint>,
    /// Gate input that produced the data, when known.
    pub input: Option<TwoQubitState>,
    /// Gate windows × herald efficiency × gated efficiency: converts per-window
    /// detection probabilities into expected counts.
    pub exposure: f64,
}

impl TomoDataset {
    pub fn from_records(records: &[CountRecord], input: Option<TwoQubitState>, exposure: f64) -> Self {
        let points = records
            .iter()
            .map(|r| TomoPoint {
                setting: r.setting.clone(),
                corrected: r.corrected(),
                total: r.total,
                accidental: r.accidental,
                weight: 1.0,
            })
            .collect();
        TomoDataset {
            points,
            input,
            exposure,
        }
    }

    /// Scales each point's weight by its herald singles relative to the mean, as
    /// a proxy for slow source-brightness drifts.
    pub fn normalize_by_singles(&mut self, records: &[CountRecord]) {
        let mean = records.iter().map(|r| r.singles1 as f64).sum::<f64>() / records.len().max(1) as f64;
        if mean <= 0.0 {
            return;
        }
        for (p, r) in self.points.iter_mut().zip(records) {
            if r.singles1 > 0 {
                p.weight = r.singles1 as f64 / mean;
            }
        }
    }

    /// Variance estimate of a corrected count.
    pub fn variance(point: &TomoPoint) -> f64 {
        ((point.total + point.accidental) as f64).max(1.0)
    }
}
