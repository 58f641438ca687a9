use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn beamadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamadapt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn single_link_marks_one_minimizer_per_capacity() {
    let o = beamadapt(&["single-link", "--capacity-range", "0.5:6:0.5", "--n-max", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12 * 4);
    let mut last_best = 0;
    for chunk in rows.chunks(4) {
        let best: Vec<u32> = chunk
            .iter()
            .filter(|r| &r[5] == "true")
            .map(|r| r[1].parse().unwrap())
            .collect();
        assert_eq!(best.len(), 1);
        assert!(best[0] >= last_best);
        last_best = best[0];
    }
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("crossover capacity: 3.55"), "{stderr}");
}

#[test]
fn single_link_omni_only_has_no_crossover() {
    let o = beamadapt(&["single-link", "--n-max", "1", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["crossover_capacity"].is_null());
    assert!(doc["rows"].as_array().unwrap().iter().all(|r| r["n"] == 1));
}

#[test]
fn every_subcommand_is_reproducible() {
    let runs: [&[&str]; 6] = [
        &["single-link"],
        &["two-link-sweep", "--capacity-range", "1:4:1"],
        &["converge", "--format", "json"],
        &["opt-gap", "--trials", "4", "--seed", "7"],
        &["feasible-set", "--trials", "6"],
        &["cellular", "--policy", "omni,ba4", "--duration", "2", "--seed", "3"],
    ];
    for args in runs {
        let a = beamadapt(args);
        let b = beamadapt(args);
        assert_eq!(code(&a), 0, "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn out_flag_writes_file_not_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.json");
    let o = beamadapt(&["converge", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["converged"], true);
    assert!(doc["iterations"].as_u64().unwrap() <= 3);
    assert_eq!(
        doc["rows"].as_array().unwrap().len() as u64,
        (doc["iterations"].as_u64().unwrap() + 1) * 7
    );
}

#[test]
fn cellular_records_match_frame_count() {
    let o = beamadapt(&["cellular", "--policy", "ba4", "--duration", "1", "--records"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frame,ue_id,p_tx_mw,n,sinr_db,bits,power_mw,csi_age_ms,bs_id"
    );
    assert_eq!(lines.count(), 100 * 30);
    let o = beamadapt(&["cellular", "--policy", "omni,ba4", "--records"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn cellular_json_summary_and_probes() {
    let o = beamadapt(&[
        "cellular",
        "--policy",
        "ba4",
        "--duration",
        "2",
        "--probes",
        "--per-ue",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 34);
    let o = beamadapt(&[
        "cellular",
        "--policy",
        "omni,bs2",
        "--duration",
        "1",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let runs = doc["runs"].as_array().unwrap();
    assert_eq!(runs[0]["policy"], "omni");
    assert_eq!(runs[1]["policy"], "bs2");
}

#[test]
fn infeasible_scenario_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // two clients each sitting next to the other's base station
    let path = write_scenario(
        dir.path(),
        "jam.json",
        r#"{"version": 1,
            "base_stations": [{"x": 0, "y": 0}, {"x": 1000, "y": 0}],
            "links": [
              {"client": {"x": 990, "y": 0}, "serving_bs": 0, "capacity": 4, "n_max": 1},
              {"client": {"x": 10, "y": 0}, "serving_bs": 1, "capacity": 4, "n_max": 1}
            ]}"#,
    );
    let o = beamadapt(&["converge", "--scenario", &path, "--max-iters", "20"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn usage_and_io_errors_exit_one() {
    for args in [
        &["frobnicate"][..],
        &["single-link", "--capacity-range", "5:1:1"],
        &["cellular", "--policy", "ba0x"],
        &["cellular", "--format", "xml"],
        &["converge", "--scenario", "/nonexistent/scenario.json"],
        &["converge", "--out", "/nonexistent/dir/out.csv"],
    ] {
        let o = beamadapt(args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&beamadapt(&["--help"])), 0);
}

#[test]
fn malformed_scenario_reports_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "bad.json",
        "{\n  \"version\": 1,\n  \"base_stations\": [{\"x\": 0, \"y\": 0}],\n  \"links\": [{\"client\": {\"x\": 100, \"y\": 0}, \"serving_bs\": 0, \"rho\": -1}]\n}\n",
    );
    let o = beamadapt(&["converge", "--scenario", &path]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("link 0") || err.contains("links[0]"), "{err}");
}

#[test]
fn feasible_set_counts_grow_with_size() {
    let o = beamadapt(&["feasible-set", "--trials", "10", "--format", "json"]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 30);
    for t in rows.chunks(3) {
        let k: Vec<u64> = t.iter().map(|r| r["max_links"].as_u64().unwrap()).collect();
        assert!(k[0] <= k[1] && k[1] <= k[2], "{k:?}");
    }
}
