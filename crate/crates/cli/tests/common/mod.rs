#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topocell"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn topocell")
}

pub fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "topocell {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small scenario corpus under `dir`: ref/, set1/, set2/.
pub fn scenario(dir: &Path, n: usize) {
    ok(&["--seed", "11", "gen", "--process", "scenario", "--n", &n.to_string(), "--out", p(dir)]);
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file under `dir` as (relative path, bytes), sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn try_run(args: &[&str]) -> Result<(), String> {
    let out = run(args);
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("topocell {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

/// Runs every command once under `root` with the given thread count: three
/// generators, two evaluations, loss, optimize, both diagram modes and kstats.
pub fn pipeline(root: &Path, threads: &str) -> Result<(), String> {
    let t = ["--threads", threads];
    let w = |name: &str| root.join(name);
    let cmd = |rest: &[&str]| try_run(&[&t[..], rest].concat());
    let r0 = w("sc/ref/layout_0000.csv");
    let s0 = w("sc/set2/layout_0001.csv");
    cmd(&["--seed", "5", "gen", "--process", "scenario", "--n", "3", "--out", p(&w("sc"))])?;
    cmd(&["--seed", "6", "gen", "--process", "poisson", "--n", "3", "--counts", "15,10,12", "--min-separation", "4", "--out", p(&w("pois"))])?;
    cmd(&["--seed", "7", "gen", "--process", "matern", "--n", "2", "--out", p(&w("mat"))])?;
    cmd(&["eval", "--ref", p(&w("sc/ref")), "--syn", p(&w("sc/set2")), "--report", p(&w("eval.json")), "--csv", p(&w("eval.csv")), "--svg", p(&w("eval.svg"))])?;
    cmd(&["eval", "--ref", p(&w("sc/ref")), "--syn", p(&w("pois")), "--report", p(&w("eval2.json"))])?;
    cmd(&["loss", "--candidate", p(&s0), "--target", p(&r0), "--gradient", "--report", p(&w("loss.json"))])?;
    cmd(&["optimize", "--init", p(&s0), "--target", p(&r0), "--steps", "4", "--trace", p(&w("trace.csv")), "--out", p(&w("opt.csv")), "--report", p(&w("opt.json"))])?;
    cmd(&["dgm", "--input", p(&r0), "--out", p(&w("rips.csv"))])?;
    cmd(&["dgm", "--input", p(&r0), "--mode", "cubical", "--out", p(&w("cub.csv"))])?;
    cmd(&["kstats", "--ref", p(&w("sc/ref")), "--syn", p(&w("sc/set1")), "--border", "--report", p(&w("k.json"))])?;
    Ok(())
}

/// Files that differ between two pipeline roots; manifests embed input paths, so
/// each root is replaced by a placeholder before comparing.
pub fn differing_files(a: &Path, b: &Path) -> Result<Vec<String>, String> {
    let (sa, sb) = (snapshot(a), snapshot(b));
    let names = |s: &[(String, Vec<u8>)]| s.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    if names(&sa) != names(&sb) {
        return Err("different file sets".into());
    }
    let strip = |bytes: &[u8], root: &Path| String::from_utf8_lossy(bytes).replace(p(root), "ROOT");
    Ok(sa
        .iter()
        .zip(&sb)
        .filter(|((_, x), (_, y))| strip(x, a) != strip(y, b))
        .map(|((n, _), _)| n.clone())
        .collect())
}
