//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use cnotsim::config::{ExperimentConfig, Pipeline};
use cnotsim::density::Ket4;
use cnotsim::detection::{MultiPairMode, SourceModel};
use cnotsim::fock::{apply_transfer, beam_splitter, ModeTransfer, PureState};
use cnotsim::gates::{bell_prep, ideal_cnot, run_cnot, truth_table, BellState, QsSpec, TwoQubitState};
use cnotsim::pipeline::{run_pipeline, truth_table_row, Outcome, ProcessReport, TruthTableReport};
use cnotsim::tomography::analyzer::standard_settings;
use cnotsim::tomography::process::{predict_counts, Mat64};
use cnotsim::tomography::{
    fidelity, fit_pure_process, linear_entropy, mle_state, multipair_correct, process_fidelity, tangle, Likelihood,
    ProcessFitOptions, ProcessMatrix, TomoDataset, TomoPoint,
};
use cnotsim::DensityMatrix;
use common::{haar_unitary, line_modes, occupations, oracle_amplitude};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

fn fmt4(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn random_input(rng: &mut impl Rng) -> TwoQubitState {
    let v = Ket4::from_fn(|_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    TwoQubitState::new((v / Complex64::new(v.norm(), 0.0)).into()).unwrap()
}

fn ideal_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (_, p) = run_cnot(&random_input(&mut rng), QsSpec::ideal()).unwrap();
        worst = worst.max((p - 1.0 / 9.0).abs());
    }
    let t = truth_table(QsSpec::ideal()).unwrap();
    let perm = [0, 1, 3, 2];
    let table_err = (0..16)
        .map(|k| (t[k / 4][k % 4] - if perm[k / 4] == k % 4 { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-10 && table_err <= 1e-10,
        format!("max |P − 1/9| = {worst:.2e}, max truth-table deviation = {table_err:.2e}"),
    )
}

fn bell_generation() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for b in BellState::ALL {
        let rho = bell_prep(b, QsSpec::ideal()).unwrap();
        let (f, t, s) = (fidelity(&rho, &b.ket()), tangle(&rho), linear_entropy(&rho));
        ok &= f >= 1.0 - 1e-9 && within(t, 1.0, 1e-8) && s < 1e-8;
        parts.push(format!("{} F={f:.12} T={t:.12} S={s:.1e}", b.name()));
    }
    check(ok, parts.join("; "))
}

fn visibility_link() -> Verdict {
    let fs: Vec<f64> = BellState::ALL
        .iter()
        .map(|&b| fidelity(&bell_prep(b, QsSpec::with_visibility(0.94)).unwrap(), &b.ket()))
        .collect();
    check(
        fs.iter().all(|&f| within(f, 0.95, 0.02)),
        format!("Bell fidelities at V = 0.94: {} (band 0.95 ± 0.02)", fmt4(&fs)),
    )
}

fn default_config(p: Pipeline) -> ExperimentConfig {
    let mut c = ExperimentConfig { pipeline: p, ..Default::default() };
    c.run.n_gates = 10_000_000;
    c
}

fn noise_regression(t: &TruthTableReport) -> Verdict {
    let diag_ok = t.raw_diagonal.iter().all(|d| (0.78..=0.95).contains(d));
    check(
        diag_ok && within(t.raw_average, 0.87, 0.04),
        format!(
            "raw diagonal {} (each in [0.78, 0.95]), average {:.4} (band 0.87 ± 0.04)",
            fmt4(&t.raw_diagonal),
            t.raw_average
        ),
    )
}

fn fitted_matrix(p: &ProcessReport) -> ProcessMatrix {
    let m = Mat64::from_fn(|r, c| {
        let [re, im] = p.matrix[r * 4 + c];
        Complex64::new(re, im)
    });
    ProcessMatrix::new(m).unwrap()
}

fn multipair_subtraction(cfg: &ExperimentConfig, t: &TruthTableReport, p: &ProcessReport) -> Verdict {
    let m = fitted_matrix(p);
    let source = cfg.source_model().unwrap();
    let (h, g) = cfg.detectors().unwrap();
    let exposure = cfg.run.n_gates as f64 * h.efficiency * g.efficiency;
    let perm = [0, 1, 3, 2];
    let diag: Vec<f64> = t
        .counts
        .iter()
        .enumerate()
        .map(|(i, (_, records))| {
            let d = TomoDataset::from_records(records, Some(TwoQubitState::basis(i)), exposure);
            let cd = multipair_correct(&d, &m, &source, cfg.run.multi_pair_mode).unwrap();
            truth_table_row(&cd)[perm[i]]
        })
        .collect();
    let avg = diag.iter().sum::<f64>() / 4.0;
    let bell: Vec<f64> = p
        .bell
        .iter()
        .map(|s| s.corrected.as_ref().unwrap().metrics.fidelity)
        .collect();
    check(
        within(avg, 0.95, 0.03) && bell.iter().all(|&f| within(f, 0.93, 0.03)),
        format!(
            "corrected diagonal {}, average {avg:.4} (band 0.95 ± 0.03); corrected Bell {} (band 0.93 ± 0.03)",
            fmt4(&diag),
            fmt4(&bell)
        ),
    )
}

fn expected_dataset(rho: &DensityMatrix, n: f64) -> TomoDataset {
    let points = standard_settings()
        .into_iter()
        .map(|s| {
            let c = n * rho.expectation(&s.projector());
            TomoPoint {
                setting: s,
                corrected: c,
                total: c.round() as u64,
                accidental: 0,
                weight: 1.0,
            }
        })
        .collect();
    TomoDataset {
        points,
        input: None,
        exposure: 1.0,
    }
}

fn mle_round_trips() -> Verdict {
    let n = 1e4;
    let mut worst_td: f64 = 0.0;
    for b in BellState::ALL {
        let truth = DensityMatrix::from_pure(&b.ket()).unwrap();
        let fit = mle_state(&expected_dataset(&truth, n), Likelihood::Poisson).unwrap();
        worst_td = worst_td.max(fit.rho.trace_distance(&truth));
    }
    // Mixed state too: Werner-like mixture.
    let k = BellState::PhiPlus.ket();
    let mixed = DensityMatrix::new(
        k * k.adjoint() * Complex64::new(0.8, 0.0) + nalgebra::Matrix4::identity() * Complex64::new(0.05, 0.0),
    )
    .unwrap();
    let fit = mle_state(&expected_dataset(&mixed, n), Likelihood::Poisson).unwrap();
    worst_td = worst_td.max(fit.rho.trace_distance(&mixed));

    let truth_ket = BellState::PsiMinus.ket();
    let truth = DensityMatrix::from_pure(&truth_ket).unwrap();
    let mut fids: Vec<f64> = (0..20u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut d = expected_dataset(&truth, n);
            for p in &mut d.points {
                let mean = p.corrected;
                let k = if mean > 0.0 { Poisson::new(mean).unwrap().sample(&mut rng) } else { 0.0 };
                p.corrected = k;
                p.total = k as u64;
            }
            fidelity(&mle_state(&d, Likelihood::Poisson).unwrap().rho, &truth_ket)
        })
        .collect();
    fids.sort_by(f64::total_cmp);
    let median = (fids[9] + fids[10]) / 2.0;
    check(
        worst_td < 1e-3 && median > 0.99,
        format!("noiseless trace distance {worst_td:.2e} (< 1e-3); Poisson N=1e4 median fidelity {median:.5} (> 0.99)"),
    )
}

fn process_inputs() -> Vec<TwoQubitState> {
    let mut v: Vec<TwoQubitState> = (0..4).map(TwoQubitState::basis).collect();
    v.extend(BellState::ALL.iter().map(|b| b.gate_input()));
    v
}

fn process_tomography(cfg: &ExperimentConfig, p: &ProcessReport) -> Verdict {
    let source: SourceModel = cfg.source_model().unwrap();
    let (h, g) = cfg.detectors().unwrap();
    let exposure = cfg.run.n_gates as f64 * h.efficiency * g.efficiency;
    let ideal = ProcessMatrix::from_circuit(cnotsim::gates::CnotCircuit::shared());
    let datasets: Vec<TomoDataset> = process_inputs()
        .into_iter()
        .map(|input| {
            let mut d = TomoDataset {
                points: standard_settings()
                    .into_iter()
                    .map(|s| TomoPoint {
                        setting: s,
                        corrected: 0.0,
                        total: 0,
                        accidental: 0,
                        weight: 1.0,
                    })
                    .collect(),
                input: Some(input),
                exposure,
            };
            let rates = predict_counts(&ideal, &d, &source, MultiPairMode::Exact).unwrap();
            for (pt, r) in d.points.iter_mut().zip(rates) {
                pt.corrected = r.corrected();
                pt.total = pt.corrected.max(0.0).round() as u64;
            }
            d
        })
        .collect();
    let fit = fit_pure_process(&datasets, &ProcessFitOptions::new(source, MultiPairMode::Exact)).unwrap();
    let f_ideal = process_fidelity(&fit.process, &ideal_cnot()).unwrap();
    // Generate → fit → predict reproduces the generator.
    let mut predict_err: f64 = 0.0;
    for d in &datasets {
        let a = predict_counts(&fit.process, d, &source, MultiPairMode::Exact).unwrap();
        for (pt, r) in d.points.iter().zip(a) {
            predict_err = predict_err.max((r.corrected() - pt.corrected).abs() / exposure);
        }
    }
    check(
        f_ideal > 0.999
            && predict_err < 1e-3
            && within(p.mean_residual, 1.0, 0.5)
            && within(p.process_fidelity, 0.95, 0.03),
        format!(
            "ideal-data fidelity {f_ideal:.6} (> 0.999), max rate error {predict_err:.1e}; \
             noisy-data mean residual {:.3} (1.0 ± 0.5), fidelity {:.4} (0.95 ± 0.03)",
            p.mean_residual, p.process_fidelity
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let modes = rng.random_range(2..=6);
        let photons = rng.random_range(1..=3);
        let u = haar_unitary(modes, &mut rng);
        let set = line_modes(modes);
        let t = ModeTransfer::new(set.clone(), u.clone()).unwrap();
        let mut input = vec![0u8; modes];
        for _ in 0..photons {
            input[rng.random_range(0..modes)] += 1;
        }
        let out = apply_transfer(&PureState::fock(set, &input).unwrap(), &t).unwrap();
        for occ in occupations(modes, photons) {
            worst = worst.max((out.amplitude(&occ) - oracle_amplitude(&u, &input, &occ)).norm());
        }
    }
    let mut hom: f64 = 0.0;
    for k in 0..=10 {
        let r = k as f64 / 10.0;
        let t = beam_splitter(r).unwrap();
        let out = apply_transfer(&PureState::fock(t.modes().clone(), &[1, 1]).unwrap(), &t).unwrap();
        hom = hom.max((out.amplitude(&[1, 1]).norm_sqr() - (1.0 - 2.0 * r).powi(2)).abs());
    }
    check(
        worst < 1e-10 && hom < 1e-10,
        format!("max amplitude error {worst:.1e} over 200 cases; max HOM error {hom:.1e} over 11 points"),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

fn main() {
    let mut lines: Vec<(u32, &str, Verdict, Duration, Duration)> = Vec::new();
    let mut push = |n, name, (v, t): (Verdict, Duration), limit| lines.push((n, name, v, t, limit));
    let sec = Duration::from_secs;

    push(1, "ideal-gate algebra", timed(ideal_algebra), sec(1));
    push(2, "Bell generation", timed(bell_generation), sec(1));
    push(3, "visibility link", timed(visibility_link), sec(10));

    let tt_cfg = default_config(Pipeline::TruthTable);
    let (tt, tt_time) = timed(|| match run_pipeline(&tt_cfg).unwrap().outcome {
        Outcome::TruthTable(t) => t,
        _ => unreachable!(),
    });
    push(4, "noise pipeline regression", (noise_regression(&tt), tt_time), sec(300));

    let proc_cfg = default_config(Pipeline::TomoProcess);
    let (proc, proc_time) = timed(|| match run_pipeline(&proc_cfg).unwrap().outcome {
        Outcome::TomoProcess(p) => p,
        _ => unreachable!(),
    });
    let (v5, t5) = timed(|| multipair_subtraction(&tt_cfg, &tt, &proc));
    push(5, "multi-pair subtraction", (v5, t5 + proc_time), sec(300));
    push(6, "MLE round trips", timed(mle_round_trips), sec(30));
    let (v7, t7) = timed(|| process_tomography(&proc_cfg, &proc));
    push(7, "process tomography", (v7, t7 + proc_time), sec(300));
    push(8, "oracle equivalence", timed(oracle_equivalence), sec(10));

    let mut failed = 0;
    for (n, name, v, t, limit) in &lines {
        let in_time = t <= limit;
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {n} {}: {name}: {} [{:.2} s, limit {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            t.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", too slow" }
        );
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
