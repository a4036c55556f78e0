use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kclust")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kclust-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn instance_file(dir: &Path) -> String {
    let path = dir.join("inst.json");
    let out = kclust(&["gen", "euclidean:clients=12,facilities=8,dim=2,seed=1", "--k", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_lp_writes_a_dump() {
    let dir = scratch("lp");
    let inst = instance_file(&dir);
    let v = json(&kclust(&["solve-lp", "--instance", &inst]));
    assert_eq!(v["y"].as_array().unwrap().len(), 8);
    let total: f64 = v["y"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!(total <= 3.0 + 1e-6);
    assert!(v["objective"].as_f64().unwrap() > 0.0);
}

#[test]
fn lmp_and_round_report_trials() {
    let dir = scratch("round");
    let inst = instance_file(&dir);
    let v = json(&kclust(&["lmp", "--instance", &inst, "--trials", "3", "--seed", "5"]));
    assert_eq!(v["trials"].as_array().unwrap().len(), 3);
    let v = json(&kclust(&["round", "--instance", &inst, "--trials", "2", "--scale-iterations", "20"]));
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["config"]["iterations"], 20);
    let v = json(&kclust(&["round", "--instance", &inst, "--seed", "4"]));
    for key in ["seed", "config", "forced_count", "final_open_count", "k", "per_client"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["seed"], 4);
    assert_eq!(v["k"], 3);
    let rows = v["per_client"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    // distance within three covering radii
    for row in rows {
        let r: Vec<f64> = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(r[1] <= 3.0 * r[2] + 1e-9);
    }
}

#[test]
fn reduce_fits_k() {
    let dir = scratch("reduce");
    let inst = instance_file(&dir);
    let v = json(&kclust(&["reduce", "--instance", &inst, "--open", "0,1,2,3,4"]));
    assert!(v["open"].as_array().unwrap().len() <= 3);
    assert_eq!(v["opt_source"], "oracle");
    assert!(v["cost"].as_f64().unwrap() <= (v["alpha"].as_f64().unwrap() + 0.25) * v["opt_estimate"].as_f64().unwrap() + 1e-9);
}

#[test]
fn pipeline_writes_csv_and_summary() {
    let dir = scratch("pipeline");
    let out_dir = dir.join("out");
    let out = kclust(&[
        "pipeline",
        "--gen",
        "graph:n=10,density=0.2,seed=3",
        "--k",
        "2",
        "--trials",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["records"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_prints_one_line_per_check() {
    let out = kclust(&["verify", "euclid,samples=200"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(kclust(&["solve-lp"]).status.code(), Some(2));
    assert_eq!(kclust(&["solve-lp", "--instance", "/nonexistent/instance.json"]).status.code(), Some(2));
    assert_eq!(kclust(&["verify", "no-such-suite"]).status.code(), Some(2));
    let dir = scratch("codes");
    let inst = instance_file(&dir);
    assert_eq!(kclust(&["solve-lp", "--instance", &inst, "--k", "0"]).status.code(), Some(2));
}

#[test]
fn lmp_trace_replays() {
    use kclust::graph::SourceOrder;
    use kclust::lmp::{run_lmp, HappyTracking, LmpIteration, LmpOptions};
    use kclust::lp::{nearest_mass_sets, solve_relaxation, DEFAULT_ACCURACY};
    use kclust::rng::{stream, tag, trial_seed};

    let dir = scratch("trace");
    // LP optimum of this graph is fractional, so the rounding has steps to trace
    let inst_path = dir.join("frac.json").to_str().unwrap().to_string();
    assert!(kclust(&["gen", "graph:n=10,density=0.2,seed=4", "--k", "2", "--out", &inst_path]).status.success());
    let trace_path = dir.join("trace.jsonl");
    let out = kclust(&["lmp", "--instance", &inst_path, "--seed", "5", "--trace", trace_path.to_str().unwrap()]);
    assert!(out.status.success());
    let dumped: Vec<LmpIteration> = std::fs::read_to_string(&trace_path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!dumped.is_empty());

    let inst = kclust::Instance::from_json(&std::fs::read_to_string(&inst_path).unwrap()).unwrap();
    let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).unwrap();
    let nm = nearest_mass_sets(&inst, &lp.y).unwrap();
    let order = SourceOrder::new(&nm.instance);
    let happy = HappyTracking { inst: &nm.instance, sets: &nm.sets.sets };
    let opts = LmpOptions { check_drift: true, ..LmpOptions::default() };
    let run = run_lmp(&nm.y, &order, Some(happy), opts, &mut stream(trial_seed(5, 0), tag::LMP, 0), |_, _| {}).unwrap();
    assert_eq!(run.trace, dumped);
}
