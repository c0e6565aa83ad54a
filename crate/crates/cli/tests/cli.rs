use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "cli-small"
observables = ["x_mean", "power"]

[system]
system = "pt_static"
k1 = 1.1
k2 = 1.2
alpha = 0.2

[z_grid]
end = 4.0
samples = 9

[tb.parameters]
x0 = 1.65786
k = 1.14677
alpha_tilde = 0.2

[potential]
half_width = 6.0
nx = 7
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_susy-tb")).args(args).output().unwrap()
}

fn scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn preset_list_names_all_presets() {
    let o = bin(&["preset", "list"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    for name in ["hermitian-fig2", "pt-static-fig3-4", "pt-dynamic-fig1-5-6"] {
        assert!(s.contains(name));
    }
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = scenario(dir.path(), SMALL);
    assert_eq!(code(&bin(&["validate", "--config", &good])), 0);

    let bad = scenario(dir.path(), &SMALL.replace("k2 = 1.2", "k2 = 0.5"));
    let o = bin(&["validate", "--config", &bad]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stderr).unwrap().contains("system"));

    let missing = dir.path().join("nope.toml").display().to_string();
    assert_eq!(code(&bin(&["validate", "--config", &missing])), 2);
}

#[test]
fn usage_errors_are_validation_errors() {
    assert_eq!(code(&bin(&["frobnicate"])), 1);
    assert_eq!(code(&bin(&["preset", "run", "no-such-preset"])), 1);
    assert_eq!(code(&bin(&["--help"])), 0);
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SMALL);
    let out = dir.path().join("o").display().to_string();
    let o = bin(&["compare", "--config", &cfg, "--out", &out, "--quad-half-width", "2.0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stderr).unwrap().contains("exact-series"));
}

#[test]
fn compare_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o = bin(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["x_mean.csv", "x_mean.csv.meta.json", "power.csv", "potential.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["comparisons"].as_array().unwrap().len(), 2);
}

#[test]
fn stage_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o_str = out.to_str().unwrap();
    for (cmd, file) in [
        ("potential", "potential.csv"),
        ("modes", "modes.csv"),
        ("calibrate", "calibration.json"),
        ("spectrum", "spectrum.json"),
        ("propagate", "x_mean.csv"),
    ] {
        let o = bin(&[cmd, "--config", &cfg, "--out", o_str]);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).exists(), "{cmd}");
    }
    let potential = std::fs::read_to_string(out.join("potential.csv")).unwrap();
    assert_eq!(potential.lines().count(), 8);
    let modes = std::fs::read_to_string(out.join("modes.csv")).unwrap();
    assert!(modes.starts_with("z,x,ground_re,ground_im,excited_re"));
}

#[test]
fn overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o = bin(&[
        "propagate", "--config", &cfg, "--out", out.to_str().unwrap(),
        "--z-samples", "5", "--quad-nodes", "8192", "--tb-dz", "0.005",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("x_mean.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 5);
}

#[test]
fn bad_override_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SMALL);
    assert_eq!(code(&bin(&["validate", "--config", &cfg, "--z-samples", "1"])), 1);
    assert_eq!(code(&bin(&["validate", "--config", &cfg, "--bpm-nx", "16"])), 1);
}
