use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use goat_cli::{exit, run_gradcheck};
use goat_core::config::ProblemConfig;
use goat_core::controls::{ControlAnsatz, Interval, SlotDescriptor};
use goat_core::gradcheck::FD_STEP;
use serde_json::Value;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn goat(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goat"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove(goat_cli::ENV_OUTPUT_DIR)
        .output()
        .expect("spawn goat")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn run_dirs(base: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(base)
        .map(|rd| rd.map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect())
        .unwrap_or_default();
    dirs.sort();
    dirs
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn config(name: &str) -> String {
    manifest_dir().join("configs").join(name).display().to_string()
}

fn spec(name: &str) -> String {
    manifest_dir().join("specs").join(name).display().to_string()
}

#[test]
fn version_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_goat")).arg("--version").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains(goat_core::VERSION));
}

#[test]
fn shipped_configs_and_specs_parse() {
    for entry in fs::read_dir(manifest_dir().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let c = ProblemConfig::from_path(&path).unwrap();
        c.resolve().unwrap().problem().unwrap();
    }
    let read = |n: &str| fs::read_to_string(spec(n)).unwrap();
    toml::from_str::<goat_core::studies::PwcStudySpec>(&read("pwc.toml")).unwrap();
    for n in ["dims_state.toml", "dims_gate.toml", "dims_smoke.toml"] {
        toml::from_str::<goat_core::studies::DimStudySpec>(&read(n)).unwrap().validate().unwrap();
    }
    toml::from_str::<goat_core::studies::GoatVsNmSpec>(&read("goat_vs_nm.toml")).unwrap();
    toml::from_str::<goat_core::studies::HighAccuracySpec>(&read("cnot_hi.toml")).unwrap();
}

#[test]
fn optimize_ising_cnot_converges() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["optimize", &config("ising_cnot.toml")], out_dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let dirs = run_dirs(out_dir.path());
    assert_eq!(dirs.len(), 1);
    let m = manifest(&dirs[0]);
    assert_eq!(m["status"], "converged");
    assert_eq!(m["exit_code"], 0);
    let g = m["summary"]["final_g"].as_f64().unwrap();
    assert!(g <= 1e-10, "{g}");
    for f in ["config.toml", "trace.csv", "params.json", "manifest.json"] {
        assert!(dirs[0].join(f).is_file(), "{f}");
    }
    let trace = fs::read_to_string(dirs[0].join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,g,best_g,"));
}

#[test]
fn reruns_are_identical_and_never_overwrite() {
    let out_dir = tempfile::tempdir().unwrap();
    for _ in 0..2 {
        let out = goat(&["optimize", &config("state_transfer.toml")], out_dir.path());
        assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let dirs = run_dirs(out_dir.path());
    assert_eq!(dirs.len(), 2);
    for d in &dirs {
        let manifests = fs::read_dir(d)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name() == "manifest.json")
            .count();
        assert_eq!(manifests, 1);
    }
    let params = |d: &Path| fs::read_to_string(d.join("params.json")).unwrap();
    assert_eq!(params(&dirs[0]), params(&dirs[1]));
    let strip_time = |d: &Path| {
        fs::read_to_string(d.join("trace.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip_time(&dirs[0]), strip_time(&dirs[1]));
}

#[test]
fn max_iterations_zero_hits_cap() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["optimize", &config("ising_cnot.toml"), "--max-iterations", "0"], out_dir.path());
    assert_eq!(code(&out), exit::CAP);
    let m = manifest(&run_dirs(out_dir.path())[0]);
    assert_eq!(m["status"], "iteration-cap");
    assert_eq!(m["summary"]["iterations"], 0);
}

#[test]
fn mismatched_dimension_is_a_config_error() {
    let out_dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("ising_cnot.toml"))
        .unwrap()
        .replace(r#""I⊗X", "I⊗Y""#, r#""I⊗X", "Y""#);
    let path = out_dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let out = goat(&["optimize", path.to_str().unwrap()], &out_dir.path().join("runs"));
    assert_eq!(code(&out), exit::USAGE);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hamiltonian.controls[3]"), "{err}");
    assert!(run_dirs(&out_dir.path().join("runs")).is_empty());
}

#[test]
fn unknown_study_lists_valid_names() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["study", "sweep"], out_dir.path());
    assert_eq!(code(&out), exit::USAGE);
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["pwc", "dims", "goat-vs-nm", "cnot-hi"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn env_var_sets_default_output_dir() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_goat"))
        .args(["gradcheck", &config("state_transfer.toml")])
        .env(goat_cli::ENV_OUTPUT_DIR, out_dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run_dirs(out_dir.path()).len(), 1);
}

#[test]
fn pwc_study_default_spec_schema() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["study", "pwc"], out_dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = &run_dirs(out_dir.path())[0];
    let csv = fs::read_to_string(dir.join("pwc.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "slices,sampling,g_pwc,g_reference,relative_error,seconds");
    let rows: Vec<&str> = lines.collect();
    let grid = goat_core::studies::PwcStudySpec::default().slice_counts.len();
    assert_eq!(rows.len(), 2 * grid);
    assert_eq!(rows.iter().filter(|r| r.contains(",start,")).count(), grid);
    assert_eq!(rows.iter().filter(|r| r.contains(",midpoint,")).count(), grid);
    assert_eq!(manifest(dir)["status"], "completed");
}

#[test]
fn dims_smallest_spec() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["study", "dims", &spec("dims_smoke.toml")], out_dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = &run_dirs(out_dir.path())[0];
    let csv = fs::read_to_string(dir.join("dims.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let successes: usize = r[col("successes")].parse().unwrap();
        assert_eq!(r[col("trials")], "5");
        assert!(successes <= 5);
    }
    assert!(dir.join("dims_trials.csv").is_file());
}

#[test]
fn cnot_hi_reaches_target() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["study", "cnot-hi", &spec("cnot_hi.toml")], out_dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = &run_dirs(out_dir.path())[0];
    let m = manifest(dir);
    assert!(m["summary"]["final_g"].as_f64().unwrap() <= 1e-12);
    assert!(m["summary"]["g_reference"].as_f64().unwrap() <= 1e-12);
    let pulses = fs::read_to_string(dir.join("cnot_hi.csv")).unwrap();
    assert!(pulses.starts_with("t,control_0,control_1\n"));
    assert_eq!(pulses.lines().count(), 1002);
}

#[test]
fn gradcheck_ising_config() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = goat(&["gradcheck", &config("ising_cnot.toml")], out_dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = &run_dirs(out_dir.path())[0];
    let csv = fs::read_to_string(dir.join("gradcheck.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 48);
    for r in rows {
        let err: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!(err <= 1e-6, "{r}");
    }
}

#[test]
fn gradcheck_frozen_config_reports_no_slots() {
    let out_dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("ising_cnot.toml"))
        .unwrap()
        .replace("terms = 4", &format!("terms = 4\nfrozen = {:?}", (0..48).collect::<Vec<_>>()));
    let path = out_dir.path().join("frozen.toml");
    fs::write(&path, text).unwrap();
    let runs = out_dir.path().join("runs");
    let out = goat(&["gradcheck", path.to_str().unwrap()], &runs);
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&run_dirs(&runs)[0]);
    assert_eq!(m["summary"]["slots"], 0);
}

/// Wraps an ansatz and perturbs its parameter derivatives.
#[derive(Debug)]
struct CorruptedDerivative(Arc<dyn ControlAnsatz>);

impl ControlAnsatz for CorruptedDerivative {
    fn n_controls(&self) -> usize {
        self.0.n_controls()
    }
    fn duration(&self) -> f64 {
        self.0.duration()
    }
    fn layout(&self) -> &[SlotDescriptor] {
        self.0.layout()
    }
    fn pieces(&self) -> Vec<Interval> {
        self.0.pieces()
    }
    fn piece_time_derivative(&self, params: &[f64], piece: usize, k: usize, t: f64, n: usize) -> f64 {
        self.0.piece_time_derivative(params, piece, k, t, n)
    }
    fn piece_param_derivative(&self, params: &[f64], piece: usize, k: usize, t: f64, slot: usize, n: usize) -> f64 {
        1.001 * self.0.piece_param_derivative(params, piece, k, t, slot, n)
    }
}

#[test]
fn corrupted_parameter_derivative_fails_gradcheck() {
    let text = fs::read_to_string(config("ising_cnot.toml")).unwrap();
    let resolved = ProblemConfig::from_toml_str(&text).unwrap().resolve().unwrap();
    let mut problem = resolved.problem().unwrap();
    let (ok, _) = run_gradcheck(&problem, &resolved.initial, FD_STEP);
    assert_eq!(ok, exit::OK);
    problem.ansatz = Arc::new(CorruptedDerivative(problem.ansatz.clone()));
    let (bad, report) = run_gradcheck(&problem, &resolved.initial, FD_STEP);
    assert_ne!(bad, exit::OK);
    assert!(report.unwrap().max_relative_error() > 1e-4);
}
