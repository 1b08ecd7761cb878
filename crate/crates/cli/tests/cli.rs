use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const PAPER_INITIAL: &str = r#"{"kappa": 100, "symmetric": true, "absorbers": [
  {"detuning": -1.5, "g": 0.318, "gamma": 1e-4}, {"detuning": -0.5, "g": 0.318, "gamma": 1e-4},
  {"detuning": 0.5, "g": 0.318, "gamma": 1e-4}, {"detuning": 1.5, "g": 0.318, "gamma": 1e-4}]}"#;

fn qmem(args: &[&str]) -> Output {
    qmem_env(args, &[])
}

fn qmem_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qmem"));
    cmd.args(args).env_remove("SOURCE_DATE_EPOCH").env_remove("QMEM_MATCH_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("qmem runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV with `#` comment lines, header first.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = table(text);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn summary(text: &str) -> String {
    text.lines().find(|l| l.starts_with("# summary:")).unwrap().to_string()
}

fn optimized(dir: &TempDir, extra: &[&str]) -> (PathBuf, serde_json::Value) {
    let init = write(dir, "initial.json", PAPER_INITIAL);
    let out = dir.path().join("optimized.json");
    let mut args = vec!["optimize", "--config", s(&init), "--out", s(&out)];
    args.extend_from_slice(extra);
    let report: serde_json::Value = serde_json::from_str(&stdout(&qmem(&args))).unwrap();
    (out, report)
}

fn positive_half(config: &serde_json::Value) -> Vec<(f64, f64)> {
    config["absorbers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["detuning"].as_f64().unwrap(), a["g"].as_f64().unwrap()))
        .filter(|&(d, _)| d > 0.0)
        .collect()
}

#[test]
fn optimize_reproduces_reference_set_and_is_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let (out, report) = optimized(&dir, &[]);
    assert_eq!(report["converged"], true);
    let half = positive_half(&report["final_config"]);
    for ((d, g), (wd, wg)) in half.iter().zip([(0.5, 0.318), (1.92, 1.09)]) {
        assert!((d - wd).abs() <= 0.02 && (g - wg).abs() <= 0.02, "{half:?}");
    }
    // the written device file loads and re-optimizes to the same point
    let again: serde_json::Value = serde_json::from_str(&stdout(&qmem(&["optimize", "--config", s(&out)]))).unwrap();
    let before = report["final_objective"].as_f64().unwrap();
    let after = again["final_objective"].as_f64().unwrap();
    assert!(before - after <= 1e-10, "{before} -> {after}");
    assert_eq!(again["converged"], true);
}

#[test]
fn band_error_objective_reaches_the_target_level() {
    let dir = TempDir::new().unwrap();
    let (_, report) = optimized(&dir, &["--objective", "band_error"]);
    let b = report["band_error"].as_f64().unwrap();
    assert!(b <= 2e-3, "band error {b}");
    assert!(b < report["initial_band_error"].as_f64().unwrap());
}

#[test]
fn spectrum_of_optimized_comb_sits_near_minus_thirty_db() {
    let dir = TempDir::new().unwrap();
    let (out, _) = optimized(&dir, &["--form", "with_cavity"]);
    let text = stdout(&qmem(&["spectrum", "--config", s(&out), "--band", "-1:1", "--points", "2001"]));
    let (header, rows) = table(&text);
    assert_eq!(header, ["nu", "re_S", "im_S", "eta", "delay", "delta_S2", "dbs"]);
    assert_eq!(rows.len(), 2001);
    let nu = column(&text, "nu");
    let dbs = column(&text, "dbs");
    let mut inner: Vec<f64> = nu.iter().zip(&dbs).filter(|(v, _)| v.abs() <= 0.5).map(|(_, d)| *d).collect();
    inner.sort_by(f64::total_cmp);
    let median = inner[inner.len() / 2];
    assert!((-40.0..-25.0).contains(&median), "median dbs {median}");
    let eta = column(&text, "eta");
    assert!(eta.iter().all(|&e| e <= 1.0 + 1e-12));
}

#[test]
fn empty_comb_is_a_bare_cavity() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "empty.json", r#"{"kappa": 20, "absorbers": []}"#);
    let text = stdout(&qmem(&["spectrum", "--config", s(&c), "--points", "51"]));
    assert!(column(&text, "eta").iter().all(|&e| (e - 1.0).abs() < 1e-12));
    // the cavity alone delays by 4/κ near the center
    let delay = column(&text, "delay");
    assert!((delay[25] - 0.2).abs() < 1e-12);
}

#[test]
fn outputs_are_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", PAPER_INITIAL);
    let args = ["spectrum", "--config", s(&c), "--points", "101", "--gamma", "1e-3"];
    let env = [("SOURCE_DATE_EPOCH", "1700000000")];
    let a = stdout(&qmem_env(&args, &env));
    let b = stdout(&qmem_env(&args, &env));
    assert_eq!(a, b);
    assert!(a.contains("# timestamp: 1700000000\n"));
    assert!(a.contains("# overrides: gamma=0.001\n"));
    assert!(stdout(&qmem(&args)).contains("# timestamp: unset\n"));
}

#[test]
fn topology_sweeps_show_one_merge() {
    let dir = TempDir::new().unwrap();
    for (n, before, after) in [(2, 4, 3), (3, 6, 5)] {
        let c = dir.path().join(format!("comb{n}.json"));
        stdout(&qmem(&["gen-comb", "--n", &n.to_string(), "--out", s(&c)]));
        let text = stdout(&qmem(&["topology", "--config", s(&c), "--g-range", "0.05:0.8", "--steps", "200"]));
        let (header, rows) = table(&text);
        assert_eq!(header.len(), 1 + 2 * before + 2);
        assert_eq!(rows.len(), 200);
        let sum = summary(&text);
        assert!(sum.contains("merges=1 "), "{sum}");
        assert!(sum.contains(&format!("lines={before}->{after}")), "{sum}");
        let counts = column(&text, "n_distinct_lines");
        assert_eq!(counts[0] as usize, before);
        assert_eq!(*counts.last().unwrap() as usize, after);
    }
}

#[test]
fn zero_length_sweep_has_one_row() {
    let dir = TempDir::new().unwrap();
    let c = dir.path().join("comb.json");
    stdout(&qmem(&["gen-comb", "--n", "2", "--out", s(&c)]));
    let text = stdout(&qmem(&["topology", "--config", s(&c), "--g-range", "0.3:0.3"]));
    assert_eq!(table(&text).1.len(), 1);
    assert!(summary(&text).contains("merges=0"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let c = dir.path().join("comb.json");
    stdout(&qmem(&["gen-comb", "--n", "2", "--out", s(&c)]));
    let args = ["topology", "--config", s(&c), "--steps", "40"];
    let one = stdout(&qmem_env(&args, &[("QMEM_MATCH_THREADS", "1")]));
    let four = stdout(&qmem_env(&args, &[("QMEM_MATCH_THREADS", "4")]));
    assert_eq!(one, four);
    assert_eq!(qmem_env(&args, &[("QMEM_MATCH_THREADS", "zero")]).status.code(), Some(2));
}

#[test]
fn validate_passes_on_the_optimized_comb() {
    let dir = TempDir::new().unwrap();
    let (out, _) = optimized(&dir, &[]);
    let text = stdout(&qmem(&["validate", "--config", s(&out)]));
    let (_, rows) = table(&text);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        ["unimodularity", "symmetry", "delay_identity", "time_frequency_equivalence", "energy_balance"]
    );
    assert!(rows.iter().all(|r| r[1] == "PASS"), "{text}");
}

#[test]
fn validate_reports_a_false_symmetry_flag() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "asym.json",
        r#"{"kappa": 100, "symmetric": true, "absorbers": [{"detuning": -0.5, "g": 0.3}, {"detuning": 0.6, "g": 0.3}]}"#,
    );
    let o = qmem(&["validate", "--config", s(&c)]);
    assert_eq!(o.status.code(), Some(4));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("symmetry,FAIL"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let neg = write(
        &dir,
        "neg.json",
        r#"{"kappa": 100, "absorbers": [{"detuning": -0.5, "g": -0.3}, {"detuning": 0.5, "g": 0.3}]}"#,
    );
    let o = qmem(&["validate", "--config", s(&neg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absorbers[0].g"));

    let typo = write(&dir, "typo.json", "{\"kappa\": 100,\n \"absorber\": []}");
    let o = qmem(&["spectrum", "--config", s(&typo)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let ok = write(&dir, "ok.json", PAPER_INITIAL);
    assert_eq!(qmem(&["spectrum", "--config", s(&ok), "--band", "1:-1"]).status.code(), Some(2));
    assert_eq!(qmem(&["spectrum", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn optimizer_budget_exhaustion_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", PAPER_INITIAL);
    let o = qmem(&["optimize", "--config", s(&c), "--max-evaluations", "50"]);
    assert_eq!(o.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["converged"], false);
}

#[test]
fn simulate_agrees_with_the_transfer_function() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", PAPER_INITIAL);
    let text = stdout(&qmem(&["simulate", "--config", s(&c), "--oracle", "--points", "401"]));
    let line = text.lines().find(|l| l.starts_with("# oracle_relative_l2=")).unwrap();
    let l2: f64 = line.trim_start_matches("# oracle_relative_l2=").parse().unwrap();
    assert!(l2 < 1e-6, "{l2}");
    assert_eq!(table(&text).1.len(), 401);
}

#[test]
fn echo_sweep_peaks_near_the_center_delay() {
    let dir = TempDir::new().unwrap();
    let (out, report) = optimized(&dir, &["--form", "with_cavity"]);
    let t0 = report["final_t0"].as_f64().unwrap();
    let range = format!("{}:{}", t0 - 1.5, t0 + 1.5);
    let text = stdout(&qmem(&["echo", "--config", s(&out), "--recall-range", &range, "--points", "61"]));
    let t = column(&text, "recall_time");
    let i = column(&text, "I_echo");
    let k = (0..i.len()).max_by(|&a, &b| i[a].total_cmp(&i[b])).unwrap();
    assert!((t[k] - t0).abs() < 0.2, "peak at {} against t0 {t0}", t[k]);
    assert!(i[k] > 0.9 && i[k] <= 1.0 + 1e-9);
}

#[test]
fn gen_comb_defaults_and_units() {
    let text = stdout(&qmem(&["gen-comb", "--n", "2", "--delta", "2"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["delta_unit"], 2.0);
    assert_eq!(v["kappa"], 100.0);
    assert_eq!(v["absorbers"][3]["detuning"], 1.5);
    assert_eq!(v["absorbers"][0]["gamma"], 5e-5);
    assert!((v["absorbers"][0]["g"].as_f64().unwrap() - 0.371_987_903_029_117_4).abs() < 1e-12);
    assert_eq!(v["manifest"]["command"], "gen-comb");
}
