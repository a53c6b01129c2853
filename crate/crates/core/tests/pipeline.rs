use std::fs;
use std::path::Path;

use slownav::kernel::SupportVectorSet;
use slownav::pipeline::{gen_data, run_experiment, select_sv, Artifacts, ExperimentConfig};
use slownav::rl::QWeights;
use slownav::sfa::SfaModel;

fn smoke() -> ExperimentConfig {
    ExperimentConfig::preset("smoke").unwrap()
}

fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn smoke_run_learns_something() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&smoke(), dir.path()).unwrap();
    assert!(s.c > 0.0);
    assert!(s.success_rate > 0.5);
    assert_eq!(s.n_filters, 30);
    assert!(s.n_support_vectors <= 100);
    for name in [
        "config.txt",
        "walk.jsonl",
        "transitions.jsonl",
        "svs.json",
        "sfa_model.json",
        "slowness.csv",
        "repr.json",
        "qweights.json",
        "lspi_trace.csv",
        "quality.json",
        "quality.csv",
        "summary.json",
    ] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
}

#[test]
fn same_seed_reproduces_every_result_file() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&smoke(), a.path()).unwrap();
    run_experiment(&smoke(), b.path()).unwrap();
    let names = file_names(a.path());
    assert_eq!(names, file_names(b.path()));
    for name in names.iter().filter(|n| *n != "lspi_trace.csv") {
        let fa = fs::read(a.path().join(name)).unwrap();
        let fb = fs::read(b.path().join(name)).unwrap();
        assert!(fa == fb, "{name} differs between runs");
    }
}

#[test]
fn different_seed_changes_data() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut other = smoke();
    other.seed += 1;
    gen_data(&smoke(), &Artifacts::new(a.path()).unwrap()).unwrap();
    gen_data(&other, &Artifacts::new(b.path()).unwrap()).unwrap();
    assert_ne!(fs::read(a.path().join("walk.jsonl")).unwrap(), fs::read(b.path().join("walk.jsonl")).unwrap());
}

#[test]
fn artifacts_roundtrip_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&smoke(), dir.path()).unwrap();
    let art = Artifacts::new(dir.path()).unwrap();
    let text = |p: std::path::PathBuf| fs::read_to_string(p).unwrap();

    let svs = text(art.svs());
    assert_eq!(SupportVectorSet::from_json(&svs).unwrap().to_json().unwrap(), svs);
    let model = text(art.sfa_model());
    assert_eq!(SfaModel::from_json(&model).unwrap().to_json().unwrap(), model);
    let w = text(art.qweights());
    assert_eq!(QWeights::from_json(&w).unwrap().to_json().unwrap(), w);
    let cfg = text(art.config());
    assert_eq!(ExperimentConfig::from_kv(&cfg).unwrap().to_kv(), cfg);
}

#[test]
fn too_many_filters_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke();
    cfg.n_filters = cfg.sv_budget + 1;
    let err = run_experiment(&cfg, dir.path()).unwrap_err();
    assert!(err.to_string().contains("config"), "{err}");
    assert!(!dir.path().join("walk.jsonl").exists());
}

#[test]
fn missing_upstream_artifact_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = select_sv(&smoke(), &Artifacts::new(dir.path()).unwrap()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("walk.jsonl"), "{msg}");
    assert!(!err.is_numerical());
}
