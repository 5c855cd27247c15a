//! End-to-end runs: simulate counts, reconstruct, and emit a result bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::config::{parse_input, ExperimentConfig, Pipeline};
use crate::countfile::{export_counts, import_counts};
use crate::density::{Ket4, BASIS_LABELS};
use crate::detection::{simulate_counts, CountRecord, DetectorModel, SourceModel};
use crate::error::{Error, Result};
use crate::gates::{ideal_cnot, BellState, CnotCircuit, TwoQubitState};
use crate::tomography::analyzer::logical_settings;
use crate::tomography::{
    fit_pure_process, mle_state, multipair_correct, process_fidelity, AnalyzerSetting, Metrics,
    ProcessFitOptions, ProcessMatrix, StateFit, TomoDataset,
};

#[derive(Clone, Debug, Serialize)]
pub struct Reconstruction {
    /// Row-major (re, im) pairs of the 4×4 density matrix.
    pub rho: Vec<[f64; 2]>,
    pub metrics: Metrics,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Reconstruction {
    fn new(fit: &StateFit, target: &Ket4) -> Self {
        Reconstruction {
            rho: fit.rho.to_pairs(),
            metrics: Metrics::of(&fit.rho, target),
            objective: fit.objective,
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StateReport {
    pub label: String,
    pub n_gates: u64,
    pub raw: Reconstruction,
    pub corrected: Option<Reconstruction>,
    pub counts: Vec<CountRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthTableReport {
    /// `raw[i][j]`: fraction of accidental-subtracted counts in output j for input i.
    pub raw: [[f64; 4]; 4],
    pub corrected: Option<[[f64; 4]; 4]>,
    /// Probability of the ideal CNOT output for each input.
    pub raw_diagonal: [f64; 4],
    pub raw_average: f64,
    pub corrected_diagonal: Option<[f64; 4]>,
    pub corrected_average: Option<f64>,
    pub counts: Vec<(String, Vec<CountRecord>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProcessReport {
    /// Row-major (re, im) pairs of the 6×4 mode matrix.
    pub matrix: Vec<[f64; 2]>,
    pub process_fidelity: f64,
    pub mean_residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub best_start: usize,
    /// Bell states reconstructed after subtracting multi-pair terms predicted
    /// by the fitted matrix.
    pub bell: Vec<StateReport>,
    pub counts: Vec<(String, Vec<CountRecord>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub mean_pairs: f64,
    pub n_gates: u64,
    pub average_fidelity: f64,
    pub bell: Vec<(String, Metrics)>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TruthTable(TruthTableReport),
    Bell(Vec<StateReport>),
    TomoState(StateReport),
    TomoProcess(ProcessReport),
    Sweep(Vec<SweepPoint>),
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultBundle {
    pub version: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outcome: Outcome,
}

/// Fixed 15-significant-digit rendering used for every float in the output.
pub fn format_float(x: f64) -> String {
    format!("{x:.14e}")
}

fn reformat(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                *n = Number::from_str(&format_float(x)).expect("formatted float is valid JSON");
            }
        }
        Value::Array(a) => a.iter_mut().for_each(reformat),
        Value::Object(o) => o.values_mut().for_each(reformat),
        _ => {}
    }
}

impl ResultBundle {
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("bundle is serializable");
        reformat(&mut v);
        v
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("bundle is serializable");
        s.push('\n');
        s
    }

    /// Plot-ready CSV tables as (file name, contents).
    pub fn tables(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match &self.outcome {
            Outcome::TruthTable(t) => {
                let mut s = String::from("input,output,raw,corrected\n");
                for i in 0..4 {
                    for j in 0..4 {
                        let c = t.corrected.map(|c| format_float(c[i][j])).unwrap_or_default();
                        let _ = writeln!(s, "{},{},{},{c}", BASIS_LABELS[i], BASIS_LABELS[j], format_float(t.raw[i][j]));
                    }
                }
                out.push(("truth_table.csv".into(), s));
            }
            Outcome::Bell(states) => {
                out.push(("metrics.csv".into(), metrics_table(states)));
                out.extend(density_tables(states));
            }
            Outcome::TomoState(state) => {
                let states = std::slice::from_ref(state);
                out.push(("metrics.csv".into(), metrics_table(states)));
                out.extend(density_tables(states));
            }
            Outcome::TomoProcess(p) => {
                out.push(("process_matrix.csv".into(), complex_table(&p.matrix, 4)));
                out.push(("metrics.csv".into(), metrics_table(&p.bell)));
            }
            Outcome::Sweep(points) => {
                let mut s = String::from("mean_pairs,n_gates,state,fidelity,tangle,linear_entropy\n");
                for p in points {
                    for (label, m) in &p.bell {
                        let _ = writeln!(
                            s,
                            "{},{},{label},{},{},{}",
                            format_float(p.mean_pairs),
                            p.n_gates,
                            format_float(m.fidelity),
                            format_float(m.tangle),
                            format_float(m.linear_entropy)
                        );
                    }
                }
                out.push(("sweep.csv".into(), s));
            }
        }
        out
    }

    /// Every simulated count list, labelled by gate input.
    pub fn count_sets(&self) -> Vec<(&str, &[CountRecord])> {
        match &self.outcome {
            Outcome::TruthTable(t) => pairs(&t.counts),
            Outcome::Bell(s) => s.iter().map(|r| (r.label.as_str(), r.counts.as_slice())).collect(),
            Outcome::TomoState(r) => vec![(r.label.as_str(), r.counts.as_slice())],
            Outcome::TomoProcess(p) => pairs(&p.counts),
            Outcome::Sweep(_) => Vec::new(),
        }
    }

    /// Writes `result.json`, `config.toml`, the CSV tables and one count file
    /// per gate input into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |p: &Path, e: std::io::Error| Error::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let put = |name: &str, text: &str| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| io(&p, e))
        };
        put("result.json", &self.to_json())?;
        put("config.toml", &self.config.to_toml())?;
        for (name, text) in self.tables() {
            put(&name, &text)?;
        }
        for (label, records) in self.count_sets() {
            export_counts(&dir.join(format!("counts_{label}.csv")), records)?;
        }
        Ok(())
    }
}

fn pairs(v: &[(String, Vec<CountRecord>)]) -> Vec<(&str, &[CountRecord])> {
    v.iter().map(|(l, c)| (l.as_str(), c.as_slice())).collect()
}

fn metrics_table(states: &[StateReport]) -> String {
    let mut s = String::from("state,stage,fidelity,tangle,linear_entropy\n");
    for r in states {
        let stages = [("raw", Some(&r.raw)), ("corrected", r.corrected.as_ref())];
        for (stage, rec) in stages {
            if let Some(rec) = rec {
                let m = rec.metrics;
                let _ = writeln!(
                    s,
                    "{},{stage},{},{},{}",
                    r.label,
                    format_float(m.fidelity),
                    format_float(m.tangle),
                    format_float(m.linear_entropy)
                );
            }
        }
    }
    s
}

fn density_tables(states: &[StateReport]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for r in states {
        out.push((format!("rho_{}_raw.csv", r.label), complex_table(&r.raw.rho, 4)));
        if let Some(c) = &r.corrected {
            out.push((format!("rho_{}_corrected.csv", r.label), complex_table(&c.rho, 4)));
        }
    }
    out
}

fn complex_table(pairs: &[[f64; 2]], cols: usize) -> String {
    let mut s = String::from("row,col,re,im\n");
    for (k, [re, im]) in pairs.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", k / cols, k % cols, format_float(*re), format_float(*im));
    }
    s
}

/// Independent seeds for the `n` gate inputs of one run.
pub fn sub_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Models and counts shared by all pipelines.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    circuit: &'static CnotCircuit,
    source: SourceModel,
    herald: DetectorModel,
    gated: DetectorModel,
}

impl Context<'_> {
    fn exposure(&self, n_gates: u64) -> f64 {
        n_gates as f64 * self.herald.efficiency * self.gated.efficiency
    }

    /// Simulates each input with its own derived seed.
    fn simulate(
        &self,
        inputs: &[TwoQubitState],
        settings: &[AnalyzerSetting],
        source: &SourceModel,
        n_gates: u64,
        seed: u64,
    ) -> Result<Vec<Vec<CountRecord>>> {
        let seeds = sub_seeds(seed, inputs.len());
        inputs
            .par_iter()
            .zip(seeds)
            .map(|(input, s)| {
                let mut rc = self.cfg.run_config(settings.to_vec())?;
                rc.n_gates = n_gates;
                rc.seed = s;
                simulate_counts(self.circuit, input, source, &self.herald, &self.gated, &rc)
            })
            .collect()
    }

    fn dataset(&self, records: &[CountRecord], input: &TwoQubitState, n_gates: u64) -> TomoDataset {
        let mut d = TomoDataset::from_records(records, Some(*input), self.exposure(n_gates));
        if self.cfg.tomography.normalize_by_singles {
            d.normalize_by_singles(records);
        }
        d
    }

    fn fit_state(&self, d: &TomoDataset) -> Result<StateFit> {
        let fit = mle_state(d, self.cfg.tomography.likelihood)?;
        if !fit.converged {
            return Err(Error::Convergence(format!(
                "state fit stopped after {} iterations",
                fit.iterations
            )));
        }
        Ok(fit)
    }

    fn state_report(
        &self,
        label: &str,
        records: Vec<CountRecord>,
        input: &TwoQubitState,
        target: &Ket4,
        correction: Option<(&ProcessMatrix, &SourceModel)>,
        n_gates: u64,
    ) -> Result<StateReport> {
        let d = self.dataset(&records, input, n_gates);
        let raw = Reconstruction::new(&self.fit_state(&d)?, target);
        let corrected = match correction {
            Some((m, source)) => {
                let cd = multipair_correct(&d, m, source, self.cfg.run.multi_pair_mode)?;
                Some(Reconstruction::new(&self.fit_state(&cd)?, target))
            }
            None => None,
        };
        Ok(StateReport {
            label: label.to_owned(),
            n_gates,
            raw,
            corrected,
            counts: records,
        })
    }

    fn designed_correction(&self) -> Option<ProcessMatrix> {
        self.cfg
            .tomography
            .correct_multipair
            .then(|| ProcessMatrix::from_circuit(self.circuit))
    }
}

/// Runs the configured pipeline.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let (herald, gated) = cfg.detectors()?;
    let ctx = Context {
        cfg,
        circuit: CnotCircuit::shared(),
        source: cfg.source_model()?,
        herald,
        gated,
    };
    let outcome = match cfg.pipeline {
        Pipeline::TruthTable => Outcome::TruthTable(truth_table_run(&ctx)?),
        Pipeline::Bell => Outcome::Bell(bell_run(&ctx, &ctx.source, cfg.run.n_gates, cfg.run.seed, true)?),
        Pipeline::TomoState => Outcome::TomoState(tomo_state_run(&ctx)?),
        Pipeline::TomoProcess => Outcome::TomoProcess(tomo_process_run(&ctx)?),
        Pipeline::Sweep => Outcome::Sweep(sweep_run(&ctx)?),
    };
    Ok(ResultBundle {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        pipeline: cfg.pipeline,
        seed: cfg.run.seed,
        config: cfg.clone(),
        outcome,
    })
}

/// Index of the ideal CNOT output for each logical input.
fn cnot_permutation() -> [usize; 4] {
    let u = ideal_cnot();
    std::array::from_fn(|i| (0..4).max_by(|&a, &b| u[(a, i)].norm().total_cmp(&u[(b, i)].norm())).unwrap_or(i))
}

/// Normalizes accidental-subtracted counts in VV, VH, HV, HH order to a row of
/// probabilities, clipping negative counts to zero.
pub fn truth_table_row(d: &TomoDataset) -> [f64; 4] {
    let mut row = [0.0; 4];
    for (r, p) in row.iter_mut().zip(&d.points) {
        *r = (p.corrected / p.weight).max(0.0);
    }
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        row.iter_mut().for_each(|x| *x /= sum);
    }
    row
}

fn truth_table_run(ctx: &Context) -> Result<TruthTableReport> {
    let inputs: Vec<TwoQubitState> = (0..4).map(TwoQubitState::basis).collect();
    let n = ctx.cfg.run.n_gates;
    let counts = ctx.simulate(&inputs, &logical_settings(), &ctx.source, n, ctx.cfg.run.seed)?;
    let correction = ctx.designed_correction();
    let mut raw = [[0.0; 4]; 4];
    let mut corrected = [[0.0; 4]; 4];
    for (i, (input, records)) in inputs.iter().zip(&counts).enumerate() {
        let d = ctx.dataset(records, input, n);
        raw[i] = truth_table_row(&d);
        if let Some(m) = &correction {
            let cd = multipair_correct(&d, m, &ctx.source, ctx.cfg.run.multi_pair_mode)?;
            corrected[i] = truth_table_row(&cd);
        }
    }
    let perm = cnot_permutation();
    let diag = |t: &[[f64; 4]; 4]| -> [f64; 4] { std::array::from_fn(|i| t[i][perm[i]]) };
    let mean = |d: [f64; 4]| d.iter().sum::<f64>() / 4.0;
    let corrected = correction.map(|_| corrected);
    Ok(TruthTableReport {
        raw,
        raw_diagonal: diag(&raw),
        raw_average: mean(diag(&raw)),
        corrected,
        corrected_diagonal: corrected.as_ref().map(diag),
        corrected_average: corrected.as_ref().map(|c| mean(diag(c))),
        counts: BASIS_LABELS.iter().map(|l| l.to_string()).zip(counts).collect(),
    })
}

fn bell_run(
    ctx: &Context,
    source: &SourceModel,
    n_gates: u64,
    seed: u64,
    correct: bool,
) -> Result<Vec<StateReport>> {
    let inputs: Vec<TwoQubitState> = BellState::ALL.iter().map(|b| b.gate_input()).collect();
    let settings = ctx.cfg.tomography.settings.settings();
    let counts = ctx.simulate(&inputs, &settings, source, n_gates, seed)?;
    let correction = if correct { ctx.designed_correction() } else { None };
    BellState::ALL
        .iter()
        .zip(inputs.iter().zip(counts))
        .map(|(b, (input, records))| {
            ctx.state_report(b.name(), records, input, &b.ket(), correction.as_ref().map(|m| (m, source)), n_gates)
        })
        .collect()
}

fn tomo_state_run(ctx: &Context) -> Result<StateReport> {
    let t = &ctx.cfg.tomography;
    let (input, target) = parse_input(&t.input)?;
    let n = ctx.cfg.run.n_gates;
    let records = match &t.counts_file {
        Some(path) => import_counts(path)?,
        None => ctx
            .simulate(std::slice::from_ref(&input), &t.settings.settings(), &ctx.source, n, ctx.cfg.run.seed)?
            .remove(0),
    };
    let correction = ctx.designed_correction();
    ctx.state_report(&t.input, records, &input, &target, correction.as_ref().map(|m| (m, &ctx.source)), n)
}

fn tomo_process_run(ctx: &Context) -> Result<ProcessReport> {
    let mut labels: Vec<String> = BASIS_LABELS.iter().map(|s| s.to_string()).collect();
    labels.extend(BellState::ALL.iter().map(|b| b.name().to_owned()));
    let mut inputs: Vec<TwoQubitState> = (0..4).map(TwoQubitState::basis).collect();
    inputs.extend(BellState::ALL.iter().map(|b| b.gate_input()));
    let n = ctx.cfg.run.n_gates;
    let settings = ctx.cfg.tomography.settings.settings();
    let counts = ctx.simulate(&inputs, &settings, &ctx.source, n, ctx.cfg.run.seed)?;
    let datasets: Vec<TomoDataset> =
        inputs.iter().zip(&counts).map(|(inp, rec)| ctx.dataset(rec, inp, n)).collect();
    let fit = fit_pure_process(&datasets, &ProcessFitOptions::new(ctx.source, ctx.cfg.run.multi_pair_mode))?;
    if !fit.converged {
        return Err(Error::Convergence(format!(
            "process fit stopped after {} iterations",
            fit.iterations
        )));
    }
    let bell = BellState::ALL
        .iter()
        .zip(inputs.iter().zip(&counts).skip(4))
        .map(|(b, (input, records))| {
            ctx.state_report(b.name(), records.clone(), input, &b.ket(), Some((&fit.process, &ctx.source)), n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProcessReport {
        matrix: fit.process.to_pairs(),
        process_fidelity: process_fidelity(&fit.process, &ideal_cnot())?,
        mean_residual: fit.mean_residual,
        objective: fit.objective,
        iterations: fit.iterations,
        converged: fit.converged,
        best_start: fit.best_start,
        bell,
        counts: labels.into_iter().zip(counts).collect(),
    })
}

fn sweep_run(ctx: &Context) -> Result<Vec<SweepPoint>> {
    let base_mu = ctx.source.mean_pairs;
    let seeds = sub_seeds(ctx.cfg.run.seed, ctx.cfg.sweep.mean_pairs.len());
    ctx.cfg
        .sweep
        .mean_pairs
        .iter()
        .zip(seeds)
        .map(|(&mu, seed)| {
            let mut source = ctx.source;
            source.mean_pairs = mu;
            let n_gates = ((ctx.cfg.run.n_gates as f64 * base_mu / mu).round() as u64).max(1);
            let states = bell_run(ctx, &source, n_gates, seed, false)?;
            let bell: Vec<(String, Metrics)> =
                states.into_iter().map(|s| (s.label, s.raw.metrics)).collect();
            let average_fidelity = bell.iter().map(|(_, m)| m.fidelity).sum::<f64>() / bell.len() as f64;
            Ok(SweepPoint {
                mean_pairs: mu,
                n_gates,
                average_fidelity,
                bell,
            })
        })
        .collect()
}
