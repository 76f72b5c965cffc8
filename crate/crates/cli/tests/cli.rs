use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn metastable(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metastable"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Data rows of a results CSV as maps from column name to cell.
fn rows(csv: &str) -> Vec<std::collections::BTreeMap<String, String>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            header
                .iter()
                .map(|h| h.to_string())
                .zip(l.split(',').map(str::to_string))
                .collect()
        })
        .collect()
}

fn num(row: &std::collections::BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn determinant_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("det");
    let o = metastable(&[
        "determinant",
        "--d",
        "1",
        "--L",
        "3.1415926535",
        "--N",
        "4096",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out, "results.csv");
    assert!(csv.starts_with("# manifest_sha256="));
    let r = &rows(&csv)[0];
    let closed = -(std::f64::consts::PI / 2f64.sqrt()).sinh().powi(2);
    assert!((num(r, "closed_form") / closed - 1.0).abs() < 1e-9);
    assert!(num(r, "relative_error") < 1e-3);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), csv);
}

#[test]
fn kramers_predict_quartic() {
    let tmp = TempDir::new().unwrap();
    let o = metastable(&[
        "kramers-predict",
        "--system",
        "quartic",
        "--epsilon",
        "0.2,0.25",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rs = rows(&read(tmp.path(), "results.csv"));
    assert_eq!(rs.len(), 2);
    assert!((num(&rs[0], "prefactor") - 4.4429).abs() < 1e-4);
    assert_eq!(num(&rs[0], "barrier"), 0.25);
    let expected = 4.442882938158366 * (0.25f64 / 0.25).exp();
    assert!((num(&rs[1], "prediction") / expected - 1.0).abs() < 1e-12);
}

#[test]
fn missing_key_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("none");
    let o = metastable(&[
        "determinant",
        "--d",
        "1",
        "--L",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("`N`"));
}

#[test]
fn invalid_values_and_unknown_keys_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    for args in [
        vec!["determinant", "--d", "1", "--L", "7", "--N", "8"],
        vec!["sde-hitting", "--epsilon", "-0.1", "--n", "3"],
        vec![
            "ou-check",
            "--epsilon",
            "0.1",
            "--t",
            "1",
            "--n",
            "10",
            "--bogus",
            "1",
        ],
        vec!["no-such-experiment"],
        vec![],
    ] {
        let mut a = args.clone();
        a.extend(["--out", out]);
        let o = metastable(&a);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        serde_json::from_slice::<Value>(&o.stderr).expect("JSON error on stderr");
    }
}

#[test]
fn all_censored_exits_3() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let o = metastable(&[
        "sde-hitting",
        "--epsilon",
        "0.05",
        "--n",
        "4",
        "--t_max",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "all_censored");
}

#[test]
fn config_file_with_flag_override() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "ou-check", "parameters": {"epsilon": 0.1, "t": 1.0, "n": 2000, "seed": 5, "threads": 2}}"#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = metastable(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n",
        "3000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["parameters"]["n"], 3000);
    assert_eq!(m["parameters"]["threads"], 2);
    assert_eq!(m["parameters"]["dt"], 0.001);
    assert_eq!(m["seed"], 5);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let rs = rows(&read(&out, "results.csv"));
    assert_eq!(rs[0]["quantity"], "mean");
    assert!((num(&rs[0], "exact") - (-1f64).exp()).abs() < 1e-15);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(threads);
        let o = metastable(&[
            "spde-hitting",
            "--epsilon",
            "0.6",
            "--L",
            "2",
            "--N",
            "4",
            "--n",
            "6",
            "--dt",
            "0.002",
            "--t_max",
            "50",
            "--seed",
            "9",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((read(&out, "results.csv"), read(&out, "results.json")));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn spde_snapshots_are_written() {
    let tmp = TempDir::new().unwrap();
    let o = metastable(&[
        "spde-hitting",
        "--epsilon",
        "0.6",
        "--L",
        "2",
        "--N",
        "4",
        "--n",
        "2",
        "--dt",
        "0.002",
        "--t_max",
        "50",
        "--snapshots",
        "4",
        "--snapshot_t",
        "0.1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let snap = read(&tmp.path().join("snapshots"), "snapshot_0000.csv");
    assert!(snap.starts_with("# d=1,L=2,N=4,t=0\nx,phi\n"));
    assert_eq!(
        std::fs::read_dir(tmp.path().join("snapshots"))
            .unwrap()
            .count(),
        5
    );
}

#[test]
fn unrenormalized_d2_run_warns() {
    let tmp = TempDir::new().unwrap();
    let o = metastable(&[
        "spde-hitting",
        "--d",
        "2",
        "--epsilon",
        "0.5",
        "--L",
        "2",
        "--N",
        "2",
        "--n",
        "2",
        "--delta",
        "5",
        "--norm",
        "hs",
        "--renormalize",
        "false",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w: Value = serde_json::from_slice(o.stderr.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert!(w["warning"].as_str().unwrap().contains("renormalization"));
}

#[test]
fn rate_functional_uphill_costs() {
    let tmp = TempDir::new().unwrap();
    let o = metastable(&[
        "rate-functional",
        "--system",
        "quartic",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rs = rows(&read(tmp.path(), "results.csv"));
    assert!(num(&rs[0], "rate") < 1e-4);
    assert!((num(&rs[1], "rate") - 0.5).abs() < 0.01);

    let path_file = tmp.path().join("p.csv");
    std::fs::write(&path_file, "t,x0\n0,-1\n0.5,-1\n1,-1\n").unwrap();
    let out = tmp.path().join("f");
    let o = metastable(&[
        "rate-functional",
        "--system",
        "quartic",
        "--path",
        path_file.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(num(&rows(&read(&out, "results.csv"))[0], "rate"), 0.0);

    let out = tmp.path().join("ac");
    let o = metastable(&[
        "rate-functional",
        "--system",
        "allen-cahn-1d",
        "--L",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rs = rows(&read(&out, "results.csv"));
    assert!((num(&rs[1], "rate") - 1.0).abs() < 0.02);
}

#[test]
fn randomwalk_and_potential_theory_rows() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("rw");
    let o = metastable(&[
        "randomwalk",
        "--n",
        "400",
        "--walks",
        "2000",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r = &rows(&read(&out, "results.csv"))[0];
    assert_eq!(num(r, "expected_variance"), 0.75);
    assert!((num(r, "increment_variance") - 0.75).abs() < 4.0 * num(r, "variance_stderr"));

    let out = tmp.path().join("pt");
    let o = metastable(&[
        "potential-theory",
        "--epsilon",
        "0.2",
        "--m",
        "3999",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r = &rows(&read(&out, "results.csv"))[0];
    assert!(num(r, "relative_residual") <= 0.1);
    assert_eq!(num(r, "start"), -1.0);
}

#[test]
fn arrhenius_sweep_reports_a_fit() {
    let tmp = TempDir::new().unwrap();
    let o = metastable(&[
        "arrhenius-sweep",
        "--epsilon",
        "0.5,0.6,0.7",
        "--n",
        "100",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(tmp.path(), "results.csv").contains("# fit slope="));
    let j: Value = serde_json::from_str(&read(tmp.path(), "results.json")).unwrap();
    let fit = &j["summary"]["fit"];
    assert!(fit["slope"].as_f64().unwrap() > 0.0);
    assert_eq!(fit["points"].as_array().unwrap().len(), 3);

    let o = metastable(&[
        "arrhenius-sweep",
        "--epsilon",
        "0.5,0.6",
        "--n",
        "10",
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_and_version() {
    let o = metastable(&["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("arrhenius-sweep"));
    assert!(metastable(&["--version"]).status.success());
}
