use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use specfilter::cli::{compute_spectra, parse_state_csv, RunReport};
use specfilter::config::RunConfig;
use specfilter::spectrum::parse_csv;
use tempfile::TempDir;

const SMALL: &str = "\
# small harmonic run
length = 30
points = 128
final_time = 20
steps = 512
target_energy = 0.5
window = hann   # filter window
levels = 8
trials = 4
";

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specfilter"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn filter_writes_round_trippable_report_and_state() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let out = dir.path().join("out");
    let o = run(&["filter"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let report: RunReport = serde_json::from_str(&text).unwrap();
    let printed: RunReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report, printed);
    assert_eq!(report.points, 128);
    assert!(report.equivalence_residual <= 1e-10);

    let parsed = RunConfig::load(&cfg).unwrap();
    let state = parse_state_csv(&fs::read_to_string(out.join("state.csv")).unwrap(), parsed.grid().unwrap()).unwrap();
    assert!((state.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_csv_matches_in_memory_computation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let out = dir.path().join("out");
    let o = run(&["spectrum"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let text = fs::read_to_string(out.join("spectrum_trial.csv")).unwrap();
    assert!(text.starts_with("E,re_C,im_C,abs_C\n"));
    let parsed_cfg = RunConfig::load(&cfg).unwrap();
    let (trial, filtered) = compute_spectra(&parsed_cfg, &parsed_cfg.plan().unwrap()).unwrap();
    let from_file = parse_csv(&text).unwrap();
    assert_eq!(from_file.energies, trial.energies);
    assert_eq!(from_file.values, trial.values);
    let from_file = parse_csv(&fs::read_to_string(out.join("spectrum_filtered.csv")).unwrap()).unwrap();
    assert_eq!(from_file.values, filtered.values);

    let peaks = fs::read_to_string(out.join("peaks.csv")).unwrap();
    assert!(peaks.starts_with("series,E,height\n"));
    assert_eq!(peaks.lines().count(), 1 + trial.peaks.len() + filtered.peaks.len());
}

#[test]
fn montecarlo_is_reproducible_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let read = |sub: &str, jobs: &str| {
        let out = dir.path().join(sub);
        let o = run(&["montecarlo", "--seed", "11", "--jobs", jobs], &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            fs::read(out.join("montecarlo_trials.csv")).unwrap(),
            fs::read(out.join("montecarlo.json")).unwrap(),
        )
    };
    let a = read("a", "1");
    assert_eq!(a, read("b", "1"));
    assert_eq!(a, read("c", "3"));
}

#[test]
fn plan_writes_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let out = dir.path().join("out");
    let o = run(&["plan"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    assert!((plan["gap"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert!(plan["recommended_steps"].as_u64().unwrap() > 0);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");

    let missing = write_config(dir.path(), "missing.cfg", &SMALL.replace("window = hann   # filter window\n", ""));
    let o = run(&["filter"], &missing, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("window"), "{}", stderr(&o));

    let unknown = write_config(dir.path(), "unknown.cfg", &format!("{SMALL}bogus = 3\n"));
    let o = run(&["filter"], &unknown, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 10"), "{}", stderr(&o));

    let o = run(&["filter"], &dir.path().join("absent.cfg"), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn single_populated_level_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "one.cfg", &SMALL.replace("levels = 8", "levels = 1"));
    let o = run(&["plan"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}

#[test]
fn exhausted_restart_budget_is_numerical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", &format!("{SMALL}mode = sampled\nmax_restarts = 0\n"));
    let o = run(&["filter", "--seed", "1"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
