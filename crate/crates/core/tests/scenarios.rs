use rfisst::scenario::{generate_scenario, run_scenario, Method, RunOptions, Scenario, ScenarioConfig};
use std::path::Path;

fn load(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn checked_in_scenarios_generate() {
    for name in ["eight_bd.json", "fifteen.json", "fifty_bd.json"] {
        let cfg = load(name);
        let scn = generate_scenario(&cfg).unwrap();
        assert_eq!(scn.total_scans(), cfg.total_scans(), "{name}");
        assert_eq!(scn.initial.hypotheses.len(), 1);
        assert_eq!(scn.initial.hypotheses[0].tracks.len(), cfg.initial.known, "{name}");
        let last = scn.truth.at(scn.total_scans());
        assert_eq!(last.len(), cfg.object_count, "{name}");
    }
}

#[test]
fn generation_depends_only_on_the_seed() {
    let cfg = load("eight_bd.json");
    let (a, b) = (generate_scenario(&cfg).unwrap(), generate_scenario(&cfg).unwrap());
    assert_eq!(a.measurements, b.measurements);
    let other = generate_scenario(&ScenarioConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(a.measurements, other.measurements);
}

fn first_scans(name: &str, n: usize) -> Scenario {
    let mut scn = generate_scenario(&load(name)).unwrap();
    scn.measurements.truncate(n);
    scn
}

#[test]
fn both_methods_keep_normalized_weights_and_track_everything() {
    let scn = first_scans("fifteen.json", 40);
    let cfg = &scn.config;
    for method in [Method::Rfisst, Method::Homht] {
        let run = RunOptions {
            seed: cfg.seed,
            mcmc_steps: 5_000,
            ..RunOptions::for_method(method)
        };
        let mut scans = 0;
        let forest = run_scenario(&scn, &run, |rec| {
            scans += 1;
            let total: f64 = rec.report.weights.iter().map(|w| w.1).sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(rec.report.hypothesis_count <= run.h_inf);
            assert!(rec.classification.all_hit(), "{method:?} scan {}", rec.report.scan);
        })
        .unwrap();
        assert_eq!(scans, 40);
        assert_eq!(rfisst::scenario::cardinality(&forest).mode, 15);
    }
}

#[test]
fn runs_repeat_exactly() {
    let scn = first_scans("eight_bd.json", 30);
    let run = RunOptions {
        seed: 4,
        mcmc_steps: 3_000,
        ..RunOptions::default()
    };
    let collect = || {
        let mut tops = Vec::new();
        run_scenario(&scn, &run, |rec| {
            tops.push((rec.top.clone(), rec.report.weights.clone()))
        })
        .unwrap();
        tops
    };
    assert_eq!(collect(), collect());
}
