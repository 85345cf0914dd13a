use std::path::Path;
use std::process::{Command, Output};

fn lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compo-approx-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("COMPO_APPROX_OUT")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn empty_architecture_list_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["cos4", "--archs", ""]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("architecture list is empty"));
}

#[test]
fn unknown_setting_and_bad_usage_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["boolean", "--set", "bogus=1"]).status.code(), Some(1));
    assert_eq!(lab(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(lab(dir.path(), &["boolean", "--n", "21"]).status.code(), Some(1));
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.conf");
    std::fs::write(&cfg, "# demo\nfunction = majority\nn = 5\nseed = 9\n").unwrap();
    let out = lab(dir.path(), &["boolean", "--config", cfg.to_str().unwrap(), "--n", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("boolean/boolean_errors.csv"));
    assert!(csv.starts_with("# compo-approx-lab v0.1.0 schema=1\n"));
    assert!(csv.contains("# function=majority\n"));
    assert!(csv.contains("# n=7\n"));
    assert!(csv.contains("# seed=9\n"));
    let manifest = read(&dir.path().join("boolean/manifest.txt"));
    assert!(manifest.contains("file boolean_errors.csv sha256="));
    assert!(manifest.contains("file boolean_coefficients.csv sha256="));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_compo-approx-lab"))
        .args(["gauss-fit", "--m", "2"])
        .env("COMPO_APPROX_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("gauss-fit/gauss_fit.csv").exists());
}

#[test]
fn identical_configs_give_identical_data_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "cos4",
        "--archs",
        "1x6,2x3",
        "--epochs",
        "4",
        "--restarts",
        "2",
        "--set",
        "train_samples=600",
        "--set",
        "test_samples=600",
        "--set",
        "batch_size=100",
        "--traces",
    ];
    for dir in [&a, &b] {
        let out = lab(dir.path(), &args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv = read(&a.path().join("cos4/cos4.csv"));
    assert_eq!(csv, read(&b.path().join("cos4/cos4.csv")));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
    let trace = "cos4/traces/cos4_2x3_seed1.jsonl";
    assert_eq!(read(&a.path().join(trace)), read(&b.path().join(trace)));
}

#[test]
fn vc_prints_both_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["vc", "--d", "8", "--n", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("shallow,8,10,1000\n"));
    assert!(text.contains("tree,8,10,19600\n"));
}

#[test]
fn failing_verify_exits_with_acceptance_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["verify", "--only", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL] criterion  3"));
    let out = lab(dir.path(), &["verify", "--only", "6,8"]);
    assert!(out.status.success());
}
