//! Runs every example through its `run_example` entry point.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

#[path = "../examples/copula_covariance.rs"]
mod copula_covariance;
#[path = "../examples/dynamic_reserve.rs"]
mod dynamic_reserve;
#[path = "../examples/forecast_cdf.rs"]
mod forecast_cdf;
#[path = "../examples/full_pipeline.rs"]
mod full_pipeline;
#[path = "../examples/net_demand_combination.rs"]
mod net_demand_combination;
#[path = "../examples/probabilistic_methods.rs"]
mod probabilistic_methods;
#[path = "../examples/risk_assessment.rs"]
mod risk_assessment;
#[path = "../examples/risk_ceiling.rs"]
mod risk_ceiling;
#[path = "../examples/scenario_generation.rs"]
mod scenario_generation;
#[path = "../examples/write_fixture.rs"]
mod write_fixture;

use dynreserve::MethodId;

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json")
}

#[test]
fn forecast_cdf_moments() {
    let m = forecast_cdf::run_example().unwrap();
    assert!(m.mean > 0.0 && m.variance > 0.0);
    assert!(m.skewness.is_some());
}

#[test]
fn copula_repair_keeps_lag_one() {
    let s = copula_covariance::run_example(24).unwrap();
    assert!(s.raw_min_eigenvalue < 0.0);
    assert!(s.repaired_min_eigenvalue > 0.0);
    assert_eq!(s.lag1_after_repair, 0.92);
}

#[test]
fn scenario_generation_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("sc.csv");
    let set = scenario_generation::run_example(&path).unwrap();
    let back = dynreserve::io::load_scenarios(&path).unwrap();
    assert_eq!(back.len(), set.len());
}

#[test]
fn net_demand_probabilities_sum_to_one() {
    let net = net_demand_combination::run_example().unwrap();
    assert_eq!(net.len(), 1000);
    assert!((net.total_probability() - 1.0).abs() < 1e-12);
}

#[test]
fn dynamic_reserve_totals() {
    let total = dynamic_reserve::run_example(&config()).unwrap();
    assert_eq!(total.horizon(), 24);
    assert!(total.up.iter().all(|&v| v > 0.0));
}

#[test]
fn hybrid_dominates_the_other_methods() {
    let results = probabilistic_methods::run_example(&config()).unwrap();
    let hybrid = results.last().unwrap();
    assert_eq!(hybrid.method, MethodId::Hybrid);
    for r in &results[..results.len() - 1] {
        for t in 0..24 {
            assert!(hybrid.profile.up[t] >= r.profile.up[t]);
        }
    }
}

#[test]
fn risk_assessment_covers_both_methods() {
    let out = risk_assessment::run_example(&config()).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|(_, r)| r.horizon() == 24));
}

#[test]
fn risk_ceiling_respected() {
    let sized = risk_ceiling::run_example(&config(), 100.0).unwrap();
    assert_eq!(sized.label, "risk");
    assert_eq!(sized.params.rho_limit, Some(100.0));
}

#[test]
fn full_pipeline_reports_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let report = full_pipeline::run_example(&config(), tmp.path()).unwrap();
    assert!(report.manifest.outputs.contains_key("reserves_hybrid.csv"));
    assert!(tmp.path().join("manifest.json").is_file());
}

#[test]
fn fixture_writer_writes_config() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture::run_example(tmp.path()).unwrap();
    let cfg = dynreserve::config::RunConfig::load(&tmp.path().join("config.json")).unwrap();
    assert_eq!(cfg.seed, write_fixture::FIXTURE_SEED);
}
