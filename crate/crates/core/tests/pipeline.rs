use cnotsim::config::{ExperimentConfig, Pipeline};
use cnotsim::detection::PairDistribution;
use cnotsim::pipeline::{run_pipeline, Outcome};
use cnotsim::Error;

fn config(p: Pipeline, gates: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig { pipeline: p, ..Default::default() };
    c.run.n_gates = gates;
    c
}

#[test]
fn ideal_truth_table_is_the_cnot_permutation() {
    let mut c = config(Pipeline::TruthTable, 2_000_000);
    c.source.mean_pairs_per_gate = 1e-3;
    c.source.distribution = PairDistribution::Poisson;
    c.source.overlap = 1.0;
    for d in [&mut c.herald, &mut c.gated] {
        d.efficiency = 1.0;
        d.dark_prob_per_gate = 0.0;
    }
    let b = run_pipeline(&c).unwrap();
    let Outcome::TruthTable(t) = &b.outcome else { panic!("wrong outcome") };
    let perm = [0, 1, 3, 2];
    for (i, &target) in perm.iter().enumerate() {
        for j in 0..4 {
            let expect = if target == j { 1.0 } else { 0.0 };
            assert!((t.raw[i][j] - expect).abs() < 0.02, "({i}, {j}) = {}", t.raw[i][j]);
        }
    }
}

#[test]
fn bundles_are_reproducible() {
    for p in [Pipeline::TruthTable, Pipeline::Bell] {
        let c = config(p, 200_000);
        let a = run_pipeline(&c).unwrap().to_json();
        let b = run_pipeline(&c).unwrap().to_json();
        assert_eq!(a, b);
        let mut other = c.clone();
        other.run.seed += 1;
        assert_ne!(a, run_pipeline(&other).unwrap().to_json());
    }
}

#[test]
fn bundle_echoes_config_and_uses_fixed_precision() {
    let b = run_pipeline(&config(Pipeline::TomoState, 200_000)).unwrap();
    let v = b.to_value();
    assert_eq!(v["config"]["tomography"]["input"], "DH");
    assert_eq!(v["seed"], 1);
    let json = b.to_json();
    assert!(json.contains("\"mean_pairs_per_gate\": 1.50000000000000e-1"), "{}", &json[..400]);
    let Outcome::TomoState(s) = &b.outcome else { panic!("wrong outcome") };
    assert_eq!(s.counts.len(), 16);
    assert_eq!(s.raw.rho.len(), 16);
}

#[test]
fn raw_bell_fidelity_degrades_with_pair_rate() {
    let b = run_pipeline(&config(Pipeline::Sweep, 1_000_000)).unwrap();
    let Outcome::Sweep(points) = &b.outcome else { panic!("wrong outcome") };
    let mus: Vec<f64> = points.iter().map(|p| p.mean_pairs).collect();
    assert_eq!(mus, [0.015, 0.05, 0.15]);
    // Windows scale as 1/μ so the points collect comparable counts.
    assert_eq!(points[0].n_gates, 10_000_000);
    for w in points.windows(2) {
        assert!(w[0].average_fidelity > w[1].average_fidelity, "{} vs {}", w[0].average_fidelity, w[1].average_fidelity);
    }
}

#[test]
fn invalid_config_fails_before_simulating() {
    let mut c = config(Pipeline::Bell, 10);
    c.source.overlap = -1.0;
    c.gated.efficiency = 3.0;
    match run_pipeline(&c) {
        Err(Error::Config(items)) => assert_eq!(items.len(), 2),
        other => panic!("expected config error, got {other:?}"),
    }
}
