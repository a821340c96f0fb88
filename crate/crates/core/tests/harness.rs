use statlens::corruption::NoiseSpec;
use statlens::harness::{run_scenario, InputSpec, Scenario, TransformRanges};
use statlens::shapes::Shape;
use statlens::{DescriptorKind, MetricTag, RegistrationConfig};

fn scenario(pipelines: Vec<RegistrationConfig>) -> Scenario {
    Scenario {
        name: "t".into(),
        trials: 3,
        base_seed: 40,
        success_threshold_deg: 5.0,
        input: InputSpec::shape(Shape::SphereCap, 160),
        noise: "subsample:count=80,to=target".parse().unwrap(),
        transform: TransformRanges::default(),
        pipelines,
    }
}

fn pipelines() -> Vec<RegistrationConfig> {
    vec![
        RegistrationConfig::point_icp(),
        RegistrationConfig::pipeline(MetricTag::Mahalanobis, DescriptorKind::Eigen),
        RegistrationConfig::pipeline(MetricTag::Euclidean, DescriptorKind::Edgeconv),
    ]
}

#[test]
fn nothing_to_recover() {
    let mut s = scenario(pipelines());
    s.trials = 1;
    s.noise = NoiseSpec::none();
    s.transform = TransformRanges::identity();
    let report = run_scenario(&s).unwrap();
    for cell in &report.cells {
        assert_eq!(cell.trials, 1);
        assert!(cell.stats["rmse_r_deg"].mean < 1e-9, "{}", cell.pipeline);
        assert_eq!(cell.success_rate, 1.0);
    }
}

#[test]
fn cells_do_not_depend_on_pipeline_order() {
    let forward = run_scenario(&scenario(pipelines())).unwrap();
    let mut reversed = pipelines();
    reversed.reverse();
    let backward = run_scenario(&scenario(reversed)).unwrap();
    for cell in &forward.cells {
        let other = backward.cell(&cell.pipeline).unwrap();
        assert_eq!(cell.stats, other.stats);
        assert_eq!(cell.success_rate, other.success_rate);
    }
}

#[test]
fn report_shape_and_determinism() {
    let s = scenario(pipelines());
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.seeds, vec![40, 41, 42]);
    assert!(a.records.iter().all(|r| r.source_points == 160 && r.target_points == 80));
    assert!(a.cells.iter().all(|c| c.trials == 3 && c.stats.values().all(|v| v.stddev >= 0.0)));
    let csv = a.to_csv();
    assert!(csv.starts_with("scenario,pipeline,statistic,mean,stddev,count\n"));
    assert!(csv.contains("t,icp,success_rate,"));
}

#[test]
fn toml_round_trip_and_hash() {
    let s = scenario(pipelines());
    let back = Scenario::from_toml(&s.to_toml()).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.config_hash(), s.config_hash());
    let mut other = s.clone();
    other.base_seed += 1;
    assert_ne!(other.config_hash(), s.config_hash());
}

#[test]
fn pipeline_failures_are_counted() {
    let mut s = scenario(vec![RegistrationConfig {
        k: 100,
        ..RegistrationConfig::pipeline(MetricTag::Euclidean, DescriptorKind::Eigen)
    }]);
    s.trials = 2;
    let report = run_scenario(&s).unwrap();
    assert_eq!(report.cells[0].failures, 2);
    assert_eq!(report.cells[0].success_rate, 0.0);
}

#[test]
fn bad_scenarios_are_rejected() {
    assert!(Scenario::from_toml("name = \"x\"\n[input]\nshape = \"sphere\"\npoints = 10\n").is_err());
    assert!(Scenario::from_toml("name = \"x\"\ntrials = 0\n[input]\nshape = \"sphere\"\npoints = 10\n[[pipelines]]\n").is_err());
    let mut s = scenario(pipelines());
    s.input = InputSpec::File { path: "/nonexistent/cloud.xyz".into() };
    assert!(matches!(run_scenario(&s), Err(statlens::Error::Io { .. })));
}
