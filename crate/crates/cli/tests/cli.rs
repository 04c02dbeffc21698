use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swpv_cli::snapshots::read_snapshots;
use swpv_cli::table::read_energy_csv;

fn swpv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swpv")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const LINEAR: &str = r#"
[run]
name = "linear"
T_end = 2.0
[grid]
J = 96
L_max = 2
[nonlinear]
p = 2.5
b = 0.0
[data]
epsilon = 0.001
[diagnostics]
stride = 4
"#;

#[test]
fn linear_solve_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", LINEAR);
    let out_dir = dir.path().join("out");
    let out = swpv(&["solve", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = out_dir.join("linear");
    let report = json(&run.join("report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["results"]["status"], "completed");
    assert_eq!(report["results"]["monitor"]["state"], "quiet");
    for f in ["config-echo.toml", "energy.csv", "snapshots.bin", "summary.txt"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    for f in ["energy.svg", "l2p_norm.svg", "triple_norm.svg"] {
        assert!(run.join("plots").join(f).is_file(), "{f}");
    }

    let rows = read_energy_csv(&run.join("energy.csv")).unwrap();
    assert_eq!(rows.first().unwrap().t, 0.0);
    assert!((rows.last().unwrap().t - 2.0).abs() < 1e-12);
    let snaps = read_snapshots(&run.join("snapshots.bin")).unwrap();
    assert_eq!((snaps.j, snaps.l_max, snaps.n_modes), (96, 2, 9));
    assert_eq!(snaps.r_max, 3.0);
    assert!(snaps.snapshots.len() >= 2 && snaps.snapshots.len() <= 12);
    assert_eq!(snaps.snapshots[0].t, 0.0);
    assert!((snaps.snapshots.last().unwrap().t - 2.0).abs() < 1e-12);
    // The monopole of the data is the only nonzero mode.
    assert!(snaps.snapshots[0].u.mode(1, 0).iter().all(|&v| v == 0.0));
    assert!(snaps.snapshots[0].u.mode(0, 0).iter().any(|&v| v != 0.0));
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", LINEAR);
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    assert!(swpv(&["solve", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]).status.success());
    // The echo names its own output directory; --out redirects the rerun.
    let echo = first.join("linear/config-echo.toml");
    let out = swpv(&["run", "--config", echo.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "energy.csv", "snapshots.bin", "plots/energy.svg"] {
        assert_eq!(std::fs::read(first.join("linear").join(f)).unwrap(), std::fs::read(second.join("linear").join(f)).unwrap(), "{f}");
    }
    let echo_text = std::fs::read_to_string(&echo).unwrap();
    assert!(echo_text.contains("scenario = \"solve\"") && echo_text.contains("r_max = 3.0"));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &LINEAR.replace("b = 0.0", "b = 1.0"));
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out_dir = dir.path().join(threads);
        let out = swpv(&["solve", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--threads", threads]);
        assert!(out.status.success());
        let run = out_dir.join("linear");
        outputs.push((std::fs::read(run.join("report.json")).unwrap(), std::fs::read(run.join("snapshots.bin")).unwrap()));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn missing_exponent_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &LINEAR.replace("p = 2.5\n", ""));
    let out = swpv(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonlinear.p"));
    assert!(!dir.path().join("linear").exists());

    let cfg = write_config(dir.path(), "bad.toml", &format!("{LINEAR}\n[grid2]\nJ = 3\n"));
    let out = swpv(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid2"));
}

#[test]
fn blowup_is_a_numerical_failure_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = LINEAR
        .replace("p = 2.5\nb = 0.0", "p = 2.0\nb = 1.0")
        .replace("epsilon = 0.001", "epsilon = 12.0")
        .replace("T_end = 2.0", "T_end = 6.0")
        + "[monitor]\nthreshold_factor = 2.0\n";
    let cfg = write_config(dir.path(), "run.toml", &text);
    let out = swpv(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("linear/report.json"));
    assert_eq!(report["passed"], false);
    assert_eq!(report["results"]["status"], "blowup");
    let t = report["results"]["last_valid_t"].as_f64().unwrap();
    assert!(t > 0.0 && t < 6.0);
    assert!(dir.path().join("linear/energy.csv").is_file());
}

#[test]
fn picard_converges_on_small_data() {
    let dir = tempfile::tempdir().unwrap();
    let text = LINEAR.replace("b = 0.0", "b = 1.0");
    let cfg = write_config(dir.path(), "run.toml", &text);
    let out = swpv(&[
        "picard", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--m-max", "12", "--tol", "1e-10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("linear/report.json"));
    assert_eq!(report["results"]["iteration"]["status"], "converged");
    assert_eq!(report["results"]["geometric"], true);
    assert_eq!(report["results"]["parameter_selection"]["params"]["s"], 1.8);
    assert!(dir.path().join("linear/snapshots.bin").is_file());
}

#[test]
fn verify_inequalities_lists_six_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = swpv(&[
        "verify-inequalities", "--samples", "8", "--seed", "3", "--k-list", "1,2,4,8", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("verify-inequalities/report.json"));
    let families = report["results"]["families"].as_array().unwrap();
    assert_eq!(families.len(), 6);
    assert!(families.iter().all(|f| f["passed"] == true));
    assert_eq!(report["results"]["sup_trace"]["k_list"], serde_json::json!([1.0, 2.0, 4.0, 8.0]));
    let echo = std::fs::read_to_string(dir.path().join("verify-inequalities/config-echo.toml")).unwrap();
    assert!(echo.contains("seed = 3") && echo.contains("samples = 8"));
    assert!(!dir.path().join("verify-inequalities/energy.csv").exists());
}

#[test]
fn identity_hexagon_and_sweep_scenarios_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let cfg = write_config(
        dir.path(),
        "id.toml",
        "[identity]\ns_list = [1.5]\nlambda_list = [2.0]\nJ_list = [256, 512, 1024]\nsweep_points = 500\n",
    );
    let out = swpv(&["verify-identity", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("verify-identity/report.json"));
    assert_eq!(report["results"]["cases"].as_array().unwrap().len(), 1);
    assert_eq!(report["results"]["remainder"]["points"], 500);

    let cfg = write_config(dir.path(), "hex.toml", "[hexagon]\nl = 2\nJ_list = [64, 128, 256]\n");
    let out = swpv(&["hexagon", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("hexagon/report.json"));
    assert_eq!(report["results"]["reports"].as_array().unwrap().len(), 3);

    let cfg = write_config(
        dir.path(),
        "sweep.toml",
        "[run]\nT_end = 1.0\n[grid]\nJ = 32\nL_max = 1\n[sweep]\np_list = [2.0, 2.5]\nepsilon_list = [0.001, 0.1]\n",
    );
    let out = swpv(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("sweep/report.json"));
    assert_eq!(report["results"]["runs"].as_array().unwrap().len(), 4);
    // p = 2 has no parameter selection, so only p = 2.5 gets a J(t) table.
    assert_eq!(report["results"]["weight_integrals"].as_array().unwrap().len(), 1);
}

#[test]
fn emit_report_regenerates_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", LINEAR);
    assert!(swpv(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]).status.success());
    let run = dir.path().join("linear");
    let plots = ["plots/energy.svg", "plots/l2p_norm.svg", "plots/triple_norm.svg", "summary.txt"];
    let before: Vec<Vec<u8>> = plots.iter().map(|p| std::fs::read(run.join(p)).unwrap()).collect();
    for _ in 0..2 {
        let out = swpv(&["emit-report", run.to_str().unwrap()]);
        assert!(out.status.success());
        let after: Vec<Vec<u8>> = plots.iter().map(|p| std::fs::read(run.join(p)).unwrap()).collect();
        assert!(before == after);
    }

    let csv = std::fs::read_to_string(run.join("energy.csv")).unwrap();
    let mut lines: Vec<&str> = csv.lines().collect();
    let tampered = format!("{},1", lines[3]);
    lines[3] = &tampered;
    std::fs::write(run.join("energy.csv"), lines.join("\n")).unwrap();
    let out = swpv(&["emit-report", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));

    std::fs::write(run.join("energy.csv"), format!("{}\n", csv.lines().next().unwrap())).unwrap();
    assert!(swpv(&["emit-report", run.to_str().unwrap()]).status.success());
    assert!(std::fs::read_to_string(run.join("plots/energy.svg")).unwrap().contains("no data"));

    std::fs::remove_file(run.join("energy.csv")).unwrap();
    let out = swpv(&["emit-report", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("energy.csv"));
}
