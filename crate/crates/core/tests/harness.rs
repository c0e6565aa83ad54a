use proptest::prelude::*;
use susy_tb::harness::csv::{format_value, series_table, sidecar_path, Sidecar};
use susy_tb::harness::presets::{preset, PRESETS};
use susy_tb::harness::{emit_csv, read_csv, run, validate_config};
use susy_tb::observables::{Engine, Normalization, Observable, ObservableSeries};
use susy_tb::{Metric, C64};

fn series(engine: Engine, z: &[f64], v: &[f64]) -> ObservableSeries {
    ObservableSeries {
        observable: Observable::XMean,
        metric: Metric::Dirac,
        normalization: Normalization::InstantaneousPower,
        engine,
        z: z.to_vec(),
        values: v.iter().map(|&x| C64::new(x, 0.5 * x)).collect(),
    }
}

const SMALL: &str = r#"
name = "small"
observables = ["x_mean", "power", "h_mean_pt"]

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
nx = 5
"#;

#[test]
fn empty_series_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    emit_csv("x_mean", false, &[], &path, "h").unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "z,x_mean,engine\n");
    let t = read_csv(&path).unwrap();
    assert!(t.rows.is_empty());
}

#[test]
fn three_points_give_four_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    emit_csv("x_mean", false, &[series(Engine::Exact, &[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0])], &path, "h").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().nth(1).unwrap(), "0.0000000000000000e0,1.0000000000000000e0,exact");
}

#[test]
fn rows_sorted_by_z_then_engine() {
    let z = [0.0, 0.5];
    let t = series_table(
        "x_mean",
        true,
        &[
            series(Engine::Bpm, &z, &[3.0, 3.0]),
            series(Engine::Tb, &z, &[2.0, 2.0]),
            series(Engine::Exact, &z, &[1.0, 1.0]),
        ],
    );
    assert_eq!(t.header, ["z", "x_mean_re", "x_mean_im", "engine"]);
    let order: Vec<(f64, Engine)> = t.rows.iter().map(|r| (r.values[0], r.engine)).collect();
    assert_eq!(
        order,
        [
            (0.0, Engine::Exact),
            (0.0, Engine::Tb),
            (0.0, Engine::Bpm),
            (0.5, Engine::Exact),
            (0.5, Engine::Tb),
            (0.5, Engine::Bpm),
        ]
    );
}

#[test]
fn sidecar_records_engines_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let z = [0.0];
    emit_csv(
        "x_mean",
        false,
        &[series(Engine::Tb, &z, &[1.0]), series(Engine::Exact, &z, &[1.0])],
        &path,
        "abc",
    )
    .unwrap();
    let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(meta.engines, [Engine::Exact, Engine::Tb]);
    assert_eq!(meta.config_hash, "abc");
    assert_eq!(meta.file, "x.csv");
}

#[test]
fn io_errors_name_the_path() {
    let err = emit_csv("x", false, &[], std::path::Path::new("/nonexistent/dir/x.csv"), "h").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
}

#[test]
fn hermitian_ordering_is_rejected() {
    let text = r#"
observables = ["x_mean"]
[system]
system = "hermitian_static"
k1 = 0.9
k2 = 0.6
[z_grid]
periods = 1.0
samples = 10
"#;
    let errs = validate_config(text).unwrap_err();
    assert!(errs.0.iter().any(|i| i.field == "system" && i.message.contains("k2")), "{errs}");
}

#[test]
fn missing_z_grid_is_rejected() {
    let text = r#"
[system]
system = "hermitian_static"
k1 = 0.645
k2 = 0.865
"#;
    let errs = validate_config(text).unwrap_err();
    assert!(errs.0.iter().any(|i| i.field == "z_grid"));
}

#[test]
fn errors_are_aggregated() {
    let text = r#"
observables = ["x_mean", "bogus", "x_mean"]
[system]
system = "hermitian_static"
k1 = 0.645
k2 = 0.865
[z_grid]
periods = -1.0
samples = 1
"#;
    let errs = validate_config(text).unwrap_err();
    let fields: Vec<&str> = errs.0.iter().map(|i| i.field.as_str()).collect();
    for f in ["z_grid.samples", "z_grid.periods", "observables[1]", "observables[2]"] {
        assert!(fields.contains(&f), "{fields:?}");
    }
}

#[test]
fn syntax_errors_carry_a_line() {
    let errs = validate_config("[system]\nsystem = \"pt_static\"\nk1 = = 1\n").unwrap_err();
    assert_eq!(errs.0[0].field, "line 3");
}

#[test]
fn uncertified_dynamic_system_warns() {
    let text = r#"
[system]
system = "pt_dynamic"
k1 = 1.0
k2 = 1.1
k3 = 0.95
alpha = 0.5
[z_grid]
periods = 1.0
samples = 10
"#;
    let v = validate_config(text).unwrap();
    assert!(v.warnings.iter().any(|w| w.contains("certified=false")));
}

#[test]
fn presets_validate() {
    assert_eq!(PRESETS.len(), 3);
    for p in &PRESETS {
        let v = validate_config(p.toml).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        assert_eq!(v.config.name, p.name);
    }
    assert!(preset("hermitian-fig2").is_some());
    assert!(preset("nope").is_none());
}

#[test]
fn small_run_writes_every_file() {
    let v = validate_config(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(&v, dir.path()).unwrap();
    assert_eq!(report.files, ["x_mean.csv", "power.csv", "h_mean_pt.csv", "potential.csv", "report.json"]);
    assert_eq!(report.comparisons.len(), 3);
    assert!(report.tb.calibration.is_none());
    assert!(report.tb.spectrum.as_ref().unwrap().total_deviation < 1e-2);
    let x = read_csv(&dir.path().join("x_mean.csv")).unwrap();
    assert_eq!(x.header, ["z", "x_mean", "engine"]);
    assert_eq!(x.rows.len(), 18);
    let h = read_csv(&dir.path().join("h_mean_pt.csv")).unwrap();
    assert_eq!(h.header, ["z", "h_mean_pt_re", "h_mean_pt_im", "engine"]);
    let p = read_csv(&dir.path().join("potential.csv")).unwrap();
    assert_eq!(p.rows.len(), 5);
    for name in ["x_mean.csv", "power.csv", "potential.csv"] {
        let meta: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(&dir.path().join(name))).unwrap()).unwrap();
        assert_eq!(meta.config_hash, v.config_hash());
    }
}

#[test]
fn small_run_is_bit_reproducible() {
    let v = validate_config(SMALL).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let report = run(&v, a.path()).unwrap();
    run(&v, b.path()).unwrap();
    for f in &report.files {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn csv_round_trip_is_bit_exact(vals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40)) {
        let z: Vec<f64> = (0..vals.len()).map(|i| i as f64 * 0.1).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let s = series(Engine::Tb, &z, &vals);
        emit_csv("x_mean", true, std::slice::from_ref(&s), &path, "h").unwrap();
        let t = read_csv(&path).unwrap();
        for (row, (zv, v)) in t.rows.iter().zip(z.iter().zip(&s.values)) {
            prop_assert_eq!(row.values[0].to_bits(), zv.to_bits());
            prop_assert_eq!(row.values[1].to_bits(), v.re.to_bits());
            prop_assert_eq!(row.values[2].to_bits(), v.im.to_bits());
        }
    }

    #[test]
    fn formatted_values_have_17_digits(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = format_value(v);
        let mantissa = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        prop_assert_eq!(mantissa.len(), 17);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
