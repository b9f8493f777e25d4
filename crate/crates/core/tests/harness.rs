use shrinklab_core::harness::registry::{self, Convention, Registry};
use shrinklab_core::harness::{canned, emit_svg, execute, run_experiment, ExperimentConfig, SvgOptions};
use shrinklab_core::Error;
use std::collections::BTreeMap;
use std::path::Path;

fn small_circle(dir: &Path) -> ExperimentConfig {
    let mut cfg = canned("circle-collapse").unwrap();
    cfg.shrinker.n_vertices = 96;
    cfg.flow.output_interval = 0.1;
    cfg.diagnostics.mcf_cross_check = false;
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_experiment(&small_circle(dir.path())).unwrap();
    assert!(first.pass, "{:?}", first.checks);
    let before = files(dir.path());
    let second = run_experiment(&small_circle(dir.path())).unwrap();
    assert_eq!(first.config_hash, second.config_hash);
    let after = files(dir.path());
    assert_eq!(before.keys().collect::<Vec<_>>(), after.keys().collect::<Vec<_>>());
    for (name, bytes) in &before {
        assert!(bytes == &after[name], "{name} differs between runs");
    }
    assert!(before.contains_key("manifest.json"));
}

#[test]
fn config_hash_tracks_content() {
    let a = small_circle(Path::new("x"));
    let mut b = small_circle(Path::new("y"));
    assert_eq!(a.hash(), b.hash());
    b.flow.cfl = 0.3;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn bundled_registry_matches_a_fresh_measurement() {
    let reg = Registry::bundled().unwrap();
    let report = registry::check(&reg, Convention::Standard).unwrap();
    assert!(report.missing.is_empty());
    assert_eq!(report.rows.len(), reg.entries.len());
}

#[test]
fn flipped_convention_is_a_regression() {
    let reg = Registry::bundled().unwrap();
    match registry::check(&reg, Convention::Flipped) {
        Err(Error::RegressionFailure(msg)) => assert!(msg.contains("round-circle.residual"), "{msg}"),
        other => panic!("expected a regression failure, got {other:?}"),
    }
}

#[test]
fn sign_changing_perturbation_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let f: Vec<f64> = (0..n).map(|k| (4.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
    let path = dir.path().join("f.json");
    std::fs::write(&path, serde_json::to_string(&f).unwrap()).unwrap();
    let text = format!(
        "name = \"wobble\"\nseed = 1\n[shrinker]\nkind = \"round\"\nn = 1\nn_vertices = {n}\n\
         [perturbation]\nsource = \"file\"\nfile = {:?}\ns = 0.01\n[flow]\nt_max = 0.1\n",
        path.to_str().unwrap()
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert!(matches!(execute(&cfg), Err(Error::AbortNotGeneric)));
}

#[test]
fn trajectory_figure_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(&small_circle(dir.path())).unwrap();
    let opts = SvgOptions { every: 2, ..SvgOptions::default() };
    let a = emit_svg(&outcome.trajectory.snapshots, &opts).unwrap();
    assert_eq!(a, emit_svg(&outcome.trajectory.snapshots, &opts).unwrap());
    let slices = outcome.trajectory.snapshots.len();
    assert_eq!(a.matches("<path").count(), (slices - 1) / 2 + 1 + usize::from((slices - 1) % 2 != 0));
}
