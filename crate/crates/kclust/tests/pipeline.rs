use kclust::harness::{generate_instance, run_pipeline, write_records_csv, ExperimentConfig, GeneratorSpec};
use kclust::reduction::brute_force_opt;
use kclust::Error;

fn small() -> kclust::Instance {
    generate_instance(&GeneratorSpec::Euclidean { n_clients: 12, n_facilities: 8, dim: 2, seed: 1 }, 3, 1.0).unwrap()
}

#[test]
fn trials_are_reproducible_and_feasible() {
    let inst = small();
    let mut cfg = ExperimentConfig::new(1.0).unwrap();
    cfg.trials = 4;
    cfg.seed = 9;
    let a = run_pipeline(&inst, &cfg).unwrap();
    let b = run_pipeline(&inst, &cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.records.len(), 4);
    assert_eq!(a.exit_code(), 0);
    let opt = brute_force_opt(&inst).unwrap().total_cost;
    assert_eq!(a.oracle_opt.map(|v| (v - opt).abs() < 1e-9), Some(true));
    for r in &a.records {
        assert!(r.final_open.unwrap() <= inst.k());
        assert!(r.final_cost.unwrap() >= opt - 1e-9);
        assert!(r.lp_objective <= opt + 1e-7);
        assert!(r.error.is_none());
    }
}

#[test]
fn seeds_change_the_streams() {
    let inst = generate_instance(&GeneratorSpec::GraphMetric { n: 10, edge_density: 0.2, seed: 3 }, 2, 1.0).unwrap();
    let mut cfg = ExperimentConfig::new(1.0).unwrap();
    cfg.trials = 3;
    let seeds: Vec<u64> = run_pipeline(&inst, &cfg).unwrap().records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 3);
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
}

#[test]
fn greedy_trim_without_reduction() {
    let inst = small();
    let mut cfg = ExperimentConfig::new(1.0).unwrap();
    cfg.run_reduction = false;
    cfg.run_lmp = false;
    let report = run_pipeline(&inst, &cfg).unwrap();
    let r = &report.records[0];
    assert!(r.lmp_open.is_none());
    assert!(r.final_open.unwrap() <= inst.k());
    assert!(r.reduction == "none" || r.reduction == "greedy-trim");
}

#[test]
fn csv_has_one_row_per_trial() {
    let inst = small();
    let mut cfg = ExperimentConfig::new(1.0).unwrap();
    cfg.trials = 3;
    let report = run_pipeline(&inst, &cfg).unwrap();
    let mut buf = Vec::new();
    write_records_csv(&report.records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("trial,seed,lp_objective"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn config_errors() {
    let inst = small();
    let mut cfg = ExperimentConfig::new(2.0).unwrap();
    assert!(matches!(run_pipeline(&inst, &cfg), Err(Error::Config(_))));
    cfg = ExperimentConfig::new(1.0).unwrap();
    cfg.trials = 0;
    assert!(matches!(run_pipeline(&inst, &cfg), Err(Error::Config(_))));
}

#[test]
fn k_means_pipeline() {
    let inst = small().with_p(2.0).unwrap();
    let mut cfg = ExperimentConfig::new(2.0).unwrap();
    cfg.trials = 2;
    let report = run_pipeline(&inst, &cfg).unwrap();
    for r in &report.records {
        assert!(r.final_open.unwrap() <= inst.k());
        let ratio = r.ratio_oracle.unwrap();
        assert!(ratio >= 1.0 - 1e-9);
    }
}

#[test]
fn twenty_facility_k_means_lmp_cost() {
    let spec = GeneratorSpec::Euclidean { n_clients: 30, n_facilities: 20, dim: 2, seed: 8 };
    let inst = generate_instance(&spec, 4, 2.0).unwrap();
    let mut cfg = ExperimentConfig::new(2.0).unwrap();
    cfg.trials = 20;
    cfg.run_reduction = false;
    let report = run_pipeline(&inst, &cfg).unwrap();
    let ratios: Vec<f64> = report.records.iter().map(|r| r.lmp_cost.unwrap() / r.lp_objective).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean <= 11.0 / 3.0 * 1.02, "mean LMP cost ratio {mean}");
}
