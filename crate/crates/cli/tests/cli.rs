use std::path::Path;
use std::process::{Command, Output};

fn shrinklab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinklab")).args(args).current_dir(cwd).output().expect("spawn shrinklab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_list_names_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let out = shrinklab(&["run", "--list"], dir.path());
    assert!(out.status.success());
    let names: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(names.len(), 7);
    assert!(names.iter().any(|n| n == "avoidance-demo"));
}

#[test]
fn circle_collapse_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = shrinklab(&["run", "circle-collapse", "--out-dir", "cc"], dir.path());
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS singular-time")));
    assert!(!text.contains("FAIL"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cc/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["pass"], true);
    for name in manifest["artifacts"].as_array().unwrap() {
        assert!(dir.path().join("cc").join(name.as_str().unwrap()).is_file(), "{name}");
    }
}

#[test]
fn failing_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shrinklab(&["run", "circle-expand", "--print-config"], dir.path());
    let text = stdout(&cfg).replace("termination = \"reached_t_max\"", "termination = \"blow_up\"");
    let text = text.replace("t_max = 10.0", "t_max = 0.5");
    std::fs::write(dir.path().join("bad.toml"), text).unwrap();
    let out = shrinklab(&["run", "--config", "bad.toml", "--out-dir", "bad"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL termination"));
}

#[test]
fn make_shrinker_eigens_flow_diagnose_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = shrinklab(&["make-shrinker", "--kind", "round", "--vertices", "128", "-o", "circle.json"], d);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(d.join("circle.provenance.json").is_file());

    let out = shrinklab(&["eigens", "-g", "circle.json", "-o", "eigen.json"], d);
    assert!(out.status.success(), "{}", stdout(&out));

    // a circle of radius 1.2 inside the shrinker: collapses under the rescaled flow
    let mut rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("circle.json")).unwrap()).unwrap();
    let scale = 1.2 / 2f64.sqrt();
    for p in rec["vertices"].as_array_mut().unwrap() {
        for c in p.as_array_mut().unwrap() {
            *c = serde_json::json!(c.as_f64().unwrap() * scale);
        }
    }
    std::fs::write(d.join("small.json"), rec.to_string()).unwrap();
    std::fs::write(d.join("flow.toml"), "t_max = 0.5\noutput_interval = 0.1\n").unwrap();
    let out = shrinklab(&["flow", "-c", "flow.toml", "-i", "small.json", "-o", "run"], d);
    assert!(out.status.success(), "{}", stdout(&out));
    for f in ["trajectory.jsonl", "trajectory.csv", "trajectory.meta.json"] {
        assert!(d.join("run").join(f).is_file());
    }

    std::fs::write(d.join("diag.toml"), "[diagnostics]\nclassify = false\nmcf_cross_check = false\n").unwrap();
    let out = shrinklab(&["diagnose", "-t", "run/trajectory.jsonl", "-c", "diag.toml", "-o", "diag"], d);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS sign-preservation"));
    assert!(d.join("diag/report.json").is_file());
    assert!(d.join("diag/diagnostics.csv").is_file());
}

#[test]
fn verify_identities_on_a_circle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(shrinklab(&["make-shrinker", "--kind", "round", "--vertices", "256", "-o", "c.json"], d).status.success());
    std::fs::write(d.join("id.toml"), "modes = 4\nlevels = [64, 128, 256]\ntemporal_n = 256\n").unwrap();
    let out = shrinklab(&["verify-identities", "-g", "c.json", "-c", "id.toml", "-o", "id.csv"], d);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = std::fs::read_to_string(d.join("id.csv")).unwrap();
    assert!(csv.starts_with("identity,study,step,error,order,exact\n"));
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = shrinklab(&["run", "no-such-experiment"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = shrinklab(&["eigens", "-g", "missing.json", "-o", "e.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn registry_list_reads_the_bundled_copy() {
    let dir = tempfile::tempdir().unwrap();
    let out = shrinklab(&["registry", "list"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("angenent-torus.r-out"));
}
