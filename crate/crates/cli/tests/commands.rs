mod common;

use std::fs;

use common::{json, ok, p, run, scenario};

#[test]
fn missing_input_exits_with_io_code() {
    let out = run(&["loss", "--candidate", "/nonexistent/a.csv", "--target", "/nonexistent/b.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_parameters_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 2);
    let r = dir.path().join("ref");
    let out = run(&["eval", "--ref", p(&r), "--syn", p(&r), "--metrics", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let f = dir.path().join("ref/layout_0000.csv");
    let out = run(&["loss", "--candidate", p(&f), "--target", p(&f), "--weights", "-1,1,1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["--dims", "2", "loss", "--candidate", p(&f), "--target", p(&f)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_layout_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.csv");
    fs::write(&f, "class,x,y\n0,1.0,abc\n").unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"width":16,"height":16,"classes":["a"]}"#).unwrap();
    let out = run(&["dgm", "--input", p(&f), "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn loss_of_layout_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 1);
    let f = dir.path().join("ref/layout_0000.csv");
    let rep = dir.path().join("loss.json");
    ok(&["loss", "--candidate", p(&f), "--target", p(&f), "--weights", "1,1,1", "--report", p(&rep)]);
    let v = json(&rep);
    assert_eq!(v["schema"], 1);
    for k in ["count", "intra", "inter", "total"] {
        assert_eq!(v["breakdown"][k].as_f64().unwrap(), 0.0, "{k}");
    }
}

#[test]
fn optimize_trace_has_expected_schema() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 1);
    let init = dir.path().join("set1/layout_0000.csv");
    let target = dir.path().join("ref/layout_0000.csv");
    let trace = dir.path().join("trace.csv");
    let out = dir.path().join("opt.csv");
    ok(&["optimize", "--init", p(&init), "--target", p(&target), "--steps", "5", "--trace", p(&trace), "--out", p(&out)]);
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,count,intra,inter,total"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 5);
        assert_eq!(r[0], i as f64);
        assert!(r.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
    assert!(rows[5][4] <= rows[0][4]);
    assert!(out.exists());
    assert!(dir.path().join("opt.csv.manifest.json").exists());
    assert!(dir.path().join("opt.json").exists());
}

#[test]
fn eval_identical_sets_and_scenario_ordering() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 4);
    let r = dir.path().join("ref");
    let same = dir.path().join("same.json");
    ok(&["eval", "--ref", p(&r), "--syn", p(&r), "--report", p(&same)]);
    let v = json(&same);
    assert!(v["topofd"].as_f64().unwrap() <= 1e-8);
    assert!(v["mmd"].as_f64().unwrap().abs() <= 1e-12);
    assert_eq!(v["tce"].as_f64().unwrap(), 0.0);

    let score = |set: &str| {
        let rep = dir.path().join(format!("{set}.json"));
        ok(&["eval", "--ref", p(&r), "--syn", p(&dir.path().join(set)), "--report", p(&rep)]);
        json(&rep)
    };
    let (s1, s2) = (score("set1"), score("set2"));
    assert!(s1["topofd"].as_f64().unwrap() < s2["topofd"].as_f64().unwrap());
    assert_eq!(s1["tce"].as_f64().unwrap(), 0.0);
    assert!(s2["tce"].as_f64().unwrap() > 0.0);
}

#[test]
fn metric_selection_limits_report() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 2);
    let r = dir.path().join("ref");
    let rep = dir.path().join("e.json");
    ok(&["eval", "--ref", p(&r), "--syn", p(&dir.path().join("set2")), "--metrics", "tce", "--report", p(&rep)]);
    let v = json(&rep);
    assert!(v.get("tce").is_some());
    for k in ["topofd", "mmd", "cce", "per_class_fd"] {
        assert!(v.get(k).is_none(), "{k} should be absent");
    }
}

#[test]
fn dgm_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 1);
    let f = dir.path().join("ref/layout_0000.csv");
    let out = dir.path().join("d.csv");
    ok(&["dgm", "--input", p(&f), "--class", "1", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("dim,birth,death"));
    let h1 = lines.filter(|l| l.starts_with("1,")).count();
    assert!(h1 >= 1, "a ring should give an H1 bar");
    let m = json(&dir.path().join("d.csv.manifest.json"));
    assert_eq!(m["command"], "dgm");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let field = dir.path().join("f.csv");
    fs::write(&field, "0,5,0\n5,5,5\n0,5,0\n").unwrap();
    let fo = dir.path().join("f_dgm.csv");
    ok(&["dgm", "--field", p(&field), "--out", p(&fo)]);
    assert!(fs::read_to_string(&fo).unwrap().lines().count() >= 2);
}

#[test]
fn kstats_on_identical_sets_passes_everything() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), 3);
    let r = dir.path().join("ref");
    let rep = dir.path().join("k.json");
    ok(&["kstats", "--ref", p(&r), "--syn", p(&r), "--report", p(&rep)]);
    let v = json(&rep);
    assert_eq!(v["intra_pass"], v["intra_total"]);
    assert_eq!(v["cross_pass"], v["cross_total"]);
    assert_eq!(v["pairs"].as_array().unwrap().len(), 9);
}
