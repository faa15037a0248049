use kuramoto_runner::output::{Output, Series};
use kuramoto_runner::{RunConfig, RunError, Status};

fn config() -> RunConfig {
    RunConfig::from_toml("experiment = \"gci_validate\"\n").unwrap()
}

#[test]
fn duplicate_series_get_suffixes() {
    let d = tempfile::tempdir().unwrap();
    let mut o = Output::open(d.path(), true).unwrap();
    let s = Series::new("err", "t", &["x", "y"], vec![vec![1.0, 2.0]]);
    let names = o.emit_plotdata(&[s.clone(), s.clone(), s]).unwrap();
    assert_eq!(names, ["err", "err-2", "err-3"]);
    let m = o.finish(&config(), None).unwrap();
    assert_eq!(m.renamed_series.len(), 2);
    assert_eq!(m.renamed_series[1].written, "err-3");
    // a single point is a valid one-row file
    assert_eq!(std::fs::read_to_string(d.path().join("err-2.csv")).unwrap().lines().count(), 2);
}

#[test]
fn empty_series_rejected() {
    let d = tempfile::tempdir().unwrap();
    let mut o = Output::open(d.path(), true).unwrap();
    let r = o.emit_plotdata(&[Series::new("e", "t", &["x", "y"], vec![])]);
    assert!(matches!(r, Err(RunError::Series(_))));
    let r = o.emit_plotdata(&[Series::new("r", "t", &["x", "y"], vec![vec![1.0]])]);
    assert!(matches!(r, Err(RunError::Series(_))));
}

#[test]
fn failing_stage_still_writes_manifest() {
    let d = tempfile::tempdir().unwrap();
    let mut o = Output::open(d.path(), true).unwrap();
    o.stage("ok", |_| Ok(())).unwrap();
    let err = o
        .stage("grids", |o| o.core(kuramoto_core::model::VelocityGrid::new(1.0, 0.0, 3)).map(|_| ()))
        .unwrap_err();
    let m = o.finish(&config(), Some(&err)).unwrap();
    assert_eq!(m.status, Status::Error);
    assert_eq!(m.failed_stage.as_deref(), Some("grids"));
    assert!(m.error.unwrap().contains("grids"));
    assert_eq!(m.timings.len(), 1);
    assert!(d.path().join("manifest.json").exists());
}

#[test]
fn output_directory_has_one_writer() {
    let d = tempfile::tempdir().unwrap();
    let first = Output::open(d.path(), true).unwrap();
    assert!(matches!(Output::open(d.path(), true), Err(RunError::Locked(_))));
    drop(first);
    assert!(Output::open(d.path(), true).is_ok());
}
