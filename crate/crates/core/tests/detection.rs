use cnotsim::countfile::{read_counts, write_counts};
use cnotsim::detection::{
    simulate_counts, subtract_accidentals, CountRecord, DetectorKind, DetectorModel, MultiPairMode, OutcomeModel,
    PairDistribution, RunConfig, SourceModel,
};
use cnotsim::gates::{BellState, CnotCircuit, TwoQubitState};
use cnotsim::tomography::analyzer::{logical_settings, standard_settings};

fn bright() -> (SourceModel, DetectorModel, DetectorModel) {
    (
        SourceModel::new(0.1, 0.97, 0.02, PairDistribution::Thermal).unwrap(),
        DetectorModel::new(DetectorKind::Sspd, 0.4, 1e-3).unwrap(),
        DetectorModel::new(DetectorKind::Apd, 0.5, 5e-3).unwrap(),
    )
}

fn z_score(observed: u64, p: f64, n: u64) -> f64 {
    let n = n as f64;
    (observed as f64 - n * p) / (n * p * (1.0 - p)).sqrt()
}

#[test]
fn counts_agree_with_analytic_rates() {
    let c = CnotCircuit::shared();
    let (src, h, g) = bright();
    let n = 400_000;
    let input = BellState::PsiPlus.gate_input();
    for mode in [MultiPairMode::Exact, MultiPairMode::Incoherent] {
        let mut cfg = RunConfig::new(n, 17, standard_settings()[..6].to_vec()).unwrap();
        cfg.multi_pair_mode = mode;
        let recs = simulate_counts(c, &input, &src, &h, &g, &cfg).unwrap();
        for r in &recs {
            let m = OutcomeModel::build(c, &input, src.qs_spec(), &r.setting, mode).unwrap();
            let e = m.expected_rates(&src, &h, &g);
            for (obs, p) in [
                (r.total, e.coincidence),
                (r.accidental, e.accidental),
                (r.singles1, e.herald),
                (r.singles2, e.gated),
            ] {
                let z = z_score(obs, p, n);
                assert!(z.abs() < 5.0, "{mode:?} setting {}: z = {z}", r.setting.id);
            }
        }
    }
}

#[test]
fn same_seed_same_counts_other_seed_other_counts() {
    let c = CnotCircuit::shared();
    let (src, h, g) = bright();
    let input = TwoQubitState::basis(2);
    let run = |seed| {
        let cfg = RunConfig::new(100_000, seed, logical_settings()).unwrap();
        simulate_counts(c, &input, &src, &h, &g, &cfg).unwrap()
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));
}

#[test]
fn accidental_fraction_drops_with_pair_rate() {
    let c = CnotCircuit::shared();
    let (h, g) = (DetectorModel::sspd(), DetectorModel::apd());
    let setting = &logical_settings()[0];
    let ratio = |mu| {
        let src = SourceModel::new(mu, 1.0, 0.0, PairDistribution::Thermal).unwrap();
        let m = OutcomeModel::build(c, &TwoQubitState::basis(0), src.qs_spec(), setting, MultiPairMode::Exact).unwrap();
        let e = m.expected_rates(&src, &h, &g);
        e.accidental / e.coincidence
    };
    assert!(ratio(0.015) < ratio(0.15));
}

#[test]
fn accidental_subtraction_keeps_sign() {
    let rec = |total, accidental| CountRecord {
        setting: logical_settings()[0].clone(),
        total,
        accidental,
        singles1: 0,
        singles2: 0,
    };
    assert_eq!(subtract_accidentals(&rec(100, 0)), 100.0);
    assert_eq!(subtract_accidentals(&rec(50, 50)), 0.0);
    assert_eq!(subtract_accidentals(&rec(3, 7)), -4.0);
}

#[test]
fn sixteen_setting_run_round_trips_through_a_count_file() {
    let c = CnotCircuit::shared();
    let (src, h, g) = bright();
    let cfg = RunConfig::new(20_000, 4, standard_settings()).unwrap();
    let recs = simulate_counts(c, &BellState::PhiPlus.gate_input(), &src, &h, &g, &cfg).unwrap();
    let mut buf = Vec::new();
    write_counts(&mut buf, &recs).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 2 + 16);
    assert_eq!(read_counts(text.as_bytes()).unwrap(), recs);
}

#[test]
fn duplicate_setting_ids_rejected() {
    let c = CnotCircuit::shared();
    let (src, h, g) = bright();
    let mut s = logical_settings();
    s[1].id = s[0].id;
    let cfg = RunConfig::new(10, 0, s).unwrap();
    assert!(simulate_counts(c, &TwoQubitState::basis(0), &src, &h, &g, &cfg).is_err());
}
