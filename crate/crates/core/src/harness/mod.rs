//! Scenario orchestration: regularity, calibration, TB analysis, observable
//! series of every engine, comparison metrics and file emission.

pub mod config;
pub mod csv;
pub mod presets;

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use config::{
    bpm_grid, config_hash, parse_config, parse_request, validate, validate_config, BpmSection, CalibrationSection,
    Issue, PotentialSection, ScenarioConfig, TbSection, Validated, ValidationErrors, ZGrid,
};
pub use csv::{emit_csv, read_csv, Row, Sidecar, Table};

use crate::bpm::{mode_residual, propagate_mode, BpmSource, PropagationGrid};
use crate::calibrate::{calibrate, CalibrationProblem, CalibrationResult, TbParameters};
use crate::darboux::{regularity_scan, RegularityScan, SamplingGrid, NODE_THRESHOLD};
use crate::error::{Error, Result};
use crate::exact::{ModeKind, Periods, SystemConfig, WaveguideSystem};
use crate::observables::{
    comparison_metrics, moment_series_multi, ComparisonEntry, Engine, ExactSource, Observable,
    ObservableSeries, ObservableSettings, SeriesRequest, TbSource,
};
use crate::quadrature::{Metric, QuadratureSpec};
use crate::tb::{
    floquet_monodromy, mode_coefficients, overlap_kappa, propagate_coefficients, solve_spectrum,
    BindingKind, PotentialBinding, TbModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    /// Whether the sufficient parameter bound holds.
    pub certified: bool,
    pub scan: RegularityScan,
}

/// Grid scan of the Wronskian over ±10 decay lengths (and one period for
/// z-periodic systems).
pub fn regularity(system: &WaveguideSystem) -> Result<Regularity> {
    let cfg = system.config();
    let (u1, u2) = cfg.seeds();
    let half = 10.0 / cfg.decay_rate();
    let grid = if cfg.is_static() {
        SamplingGrid::stationary(-half, half, 801)
    } else {
        SamplingGrid {
            x_min: -half,
            x_max: half,
            nx: 801,
            z_min: 0.0,
            z_max: cfg.periods()?.base(),
            nz: 257,
        }
    };
    Ok(Regularity {
        certified: system.certified(),
        scan: regularity_scan(&u1, &u2, &grid, NODE_THRESHOLD),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub tb_energies: Vec<C64>,
    /// `{−k2², −k1²}`.
    pub exact_energies: Vec<f64>,
    pub total_deviation: f64,
    pub path_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetSummary {
    pub period: f64,
    pub quasi_energies: Vec<C64>,
    pub multipliers: Vec<C64>,
    /// `e^{i k² T}` of the exact Floquet modes.
    pub exact_multipliers: Vec<C64>,
    /// Distance on the unit circle between each TB phase factor and its nearest exact one.
    pub phase_errors: Vec<f64>,
    pub determinant_modulus: f64,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbSummary {
    pub parameters: TbParameters,
    pub calibration: Option<CalibrationResult>,
    pub metric: Metric,
    pub binding: BindingKind,
    pub kappa: C64,
    pub spectrum: Option<SpectrumSummary>,
    pub floquet: Option<FloquetSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResidual {
    pub mode: ModeKind,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub system: SystemConfig,
    pub periods: Periods,
    pub regularity: Regularity,
    pub tb: TbSummary,
    pub initial_mode: ModeKind,
    pub engines: Vec<Engine>,
    pub comparisons: Vec<ComparisonEntry>,
    pub oracle_residuals: Vec<OracleResidual>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

fn default_metric(cfg: &SystemConfig) -> Metric {
    match cfg {
        SystemConfig::PtStatic(_) => Metric::Pt,
        _ => Metric::Dirac,
    }
}

fn default_binding(cfg: &SystemConfig) -> BindingKind {
    if cfg.is_static() {
        BindingKind::Superposition
    } else {
        BindingKind::Exact
    }
}

/// Explicit TB parameters, or the calibrated ones.
pub fn tb_parameters(v: &Validated) -> Result<(TbParameters, Option<CalibrationResult>)> {
    let tb = &v.config.tb;
    if let Some(p) = tb.parameters {
        return Ok((p, None));
    }
    let mut problem = CalibrationProblem::for_target(v.system.clone());
    let c = &tb.calibration;
    if let Some(b) = c.search_box {
        problem.search_box = b;
    }
    if let Some(m) = c.multistart {
        problem.multistart = m;
    }
    if let Some(p) = c.profile {
        problem.profile = p;
    }
    if let Some(a) = c.alpha_anchor {
        problem.alpha_anchor = a;
    }
    if let Some(m) = tb.metric {
        problem.tb.metric = m;
    }
    problem.tb.quadrature = tb.quadrature;
    let r = calibrate(&problem).map_err(|e| e.in_stage("calibration"))?;
    Ok((r.parameters, Some(r)))
}

pub fn tb_model(v: &Validated, params: &TbParameters) -> Result<TbModel> {
    let cfg = v.system.config();
    let metric = v.config.tb.metric.unwrap_or_else(|| default_metric(cfg));
    let binding = match v.config.tb.binding.unwrap_or_else(|| default_binding(cfg)) {
        BindingKind::Superposition => PotentialBinding::Superposition,
        BindingKind::Exact => PotentialBinding::Exact(Box::new(v.system.clone())),
    };
    params
        .model(metric, binding, v.config.tb.quadrature)
        .map_err(|e| e.in_stage("tb-model"))
}

fn exact_levels(cfg: &SystemConfig) -> (f64, f64) {
    let (k1, k2) = match *cfg {
        SystemConfig::HermitianStatic(p) => (p.k1, p.k2),
        SystemConfig::PtStatic(p) => (p.k1, p.k2),
        SystemConfig::PtDynamic(p) => (p.k1, p.k2),
    };
    (-k2 * k2, -k1 * k1)
}

/// Static spectrum or, for z-dependent models, the Floquet analysis over one period.
pub fn tb_analysis(
    v: &Validated,
    model: &TbModel,
) -> Result<(Option<SpectrumSummary>, Option<FloquetSummary>)> {
    let (eg, ee) = exact_levels(v.system.config());
    if !model.is_z_dependent() {
        let sp = solve_spectrum(model).map_err(|e| e.in_stage("spectrum"))?;
        let exact = vec![eg, ee];
        let total_deviation = sp
            .energies
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm())
            .sum();
        return Ok((
            Some(SpectrumSummary {
                path_discrepancy: sp.path_discrepancy(),
                tb_energies: sp.energies,
                exact_energies: exact,
                total_deviation,
            }),
            None,
        ));
    }
    let period = v.system.periods()?.base();
    let f = floquet_monodromy(model, period, &v.config.tb.step, &[eg, ee])
        .map_err(|e| e.in_stage("floquet"))?;
    let exact: Vec<C64> = [eg, ee]
        .iter()
        .map(|e| C64::from_polar(1.0, -e * period))
        .collect();
    let phase_errors = f
        .multipliers
        .iter()
        .map(|l| {
            let u = l / l.norm();
            exact.iter().map(|x| (u - x).norm()).fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok((
        None,
        Some(FloquetSummary {
            period,
            quasi_energies: f.quasi_energies,
            multipliers: f.multipliers,
            exact_multipliers: exact,
            phase_errors,
            determinant_modulus: f.determinant_modulus,
            reconstruction_error: f.reconstruction_error,
        }),
    ))
}

/// z-samples of a validated scenario.
pub fn z_points(v: &Validated) -> Result<Vec<f64>> {
    let base = v.system.periods()?.base();
    let z = v
        .config
        .z_grid
        .ok_or_else(|| Error::Config("z_grid: missing".into()))?;
    Ok(z.points(base))
}

pub fn observable_settings(v: &Validated) -> ObservableSettings {
    let q = v
        .config
        .quadrature
        .unwrap_or_else(|| QuadratureSpec::for_decay(v.system.config().decay_rate()));
    ObservableSettings::new(q)
}

/// Whether a series needs separate real and imaginary columns.
pub fn is_complex(request: &SeriesRequest, system: &SystemConfig) -> bool {
    let hermitian = matches!(system, SystemConfig::HermitianStatic(_));
    match (request.metric, request.observable) {
        (Metric::Pt, _) => true,
        (Metric::Dirac, Observable::HMean | Observable::HStd) => !hermitian,
        (Metric::Dirac, _) => false,
    }
}

/// All requested series for the exact, TB and (when enabled) BPM fields,
/// ordered by request and then engine.
pub fn series(v: &Validated, model: &TbModel) -> Result<Vec<ObservableSeries>> {
    let zs = z_points(v)?;
    let settings = observable_settings(v);
    let kind = v.config.initial_mode;
    let requests = &v.requests;

    let exact_src = ExactSource {
        system: &v.system,
        kind,
    };
    let exact = moment_series_multi(&exact_src, requests, &zs, &settings)
        .map_err(|e| e.in_stage("exact-series"))?;

    let c0 = mode_coefficients(model, kind, Some(&v.system)).map_err(|e| e.in_stage("tb-initial"))?;
    let prepend = zs[0] > 0.0;
    let tz: Vec<f64> = if prepend {
        std::iter::once(0.0).chain(zs.iter().copied()).collect()
    } else {
        zs.clone()
    };
    let mut trajectory = propagate_coefficients(model, &c0, &tz, &v.config.tb.step)
        .map_err(|e| e.in_stage("tb-propagation"))?;
    if prepend {
        trajectory.z.remove(0);
        trajectory.c.remove(0);
    }
    let tb_src = TbSource {
        model,
        trajectory: &trajectory,
    };
    let tb = moment_series_multi(&tb_src, requests, &zs, &settings).map_err(|e| e.in_stage("tb-series"))?;

    let bpm = match v.config.bpm {
        Some(section) if section.enabled => {
            let z_end = *zs.last().expect("non-empty z-grid");
            let grid = bpm_grid(&section, &v.system, z_end);
            let snapshots = propagate_mode(&v.system, kind, &grid, &zs).map_err(|e| e.in_stage("bpm"))?;
            let src = BpmSource {
                grid: &grid,
                snapshots: &snapshots,
                system: &v.system,
            };
            Some(moment_series_multi(&src, requests, &zs, &settings).map_err(|e| e.in_stage("bpm-series"))?)
        }
        _ => None,
    };

    let mut out = Vec::new();
    for i in 0..requests.len() {
        out.push(exact[i].clone());
        out.push(tb[i].clone());
        if let Some(b) = &bpm {
            out.push(b[i].clone());
        }
    }
    Ok(out)
}

/// Metrics of every non-exact series against the exact one of the same request.
pub fn comparisons(series: &[ObservableSeries]) -> Result<Vec<ComparisonEntry>> {
    let mut out = Vec::new();
    for reference in series.iter().filter(|s| s.engine == Engine::Exact) {
        for approx in series.iter().filter(|s| {
            s.engine != Engine::Exact
                && s.observable == reference.observable
                && s.metric == reference.metric
        }) {
            out.push(comparison_metrics(reference, approx).map_err(|e| e.in_stage("metrics"))?);
        }
    }
    Ok(out)
}

/// Closed-form residuals of the system's mode families and the initial mode.
pub fn oracle_residuals(v: &Validated) -> Result<Vec<OracleResidual>> {
    let span = v.system.periods()?.base();
    let grid = PropagationGrid::for_system(&v.system, span);
    let mut kinds = if v.system.config().is_static() {
        vec![ModeKind::Ground, ModeKind::Excited]
    } else {
        vec![ModeKind::Floquet1, ModeKind::Floquet2]
    };
    if !kinds.contains(&v.config.initial_mode) {
        kinds.push(v.config.initial_mode);
    }
    kinds
        .into_iter()
        .map(|mode| {
            mode_residual(&v.system, mode, &grid, span, 8)
                .map(|residual| OracleResidual { mode, residual })
                .map_err(|e| e.in_stage("residuals"))
        })
        .collect()
}

/// `V(x, z)` on a rectangular grid; static systems give the single row `z = 0`.
pub fn potential_table(system: &WaveguideSystem, section: &PotentialSection) -> Result<Table> {
    let mut table = Table::new(&["z", "x", "potential_re", "potential_im"]);
    let nx = section.nx.max(2);
    let xs: Vec<f64> = (0..nx)
        .map(|i| -section.half_width + 2.0 * section.half_width * i as f64 / (nx - 1) as f64)
        .collect();
    let zs: Vec<f64> = if system.config().is_static() || section.nz <= 1 {
        vec![0.0]
    } else {
        let end = section.periods * system.periods()?.base();
        (0..section.nz)
            .map(|j| end * j as f64 / (section.nz - 1) as f64)
            .collect()
    };
    let sampler = system.sampler(&xs).map_err(|e| e.in_stage("potential"))?;
    for &z in &zs {
        let v = sampler.at(z).map_err(|e| e.in_stage("potential"))?;
        for (x, v) in xs.iter().zip(v) {
            table.rows.push(Row {
                values: vec![z, *x, v.re, v.im],
                engine: Engine::Exact,
            });
        }
    }
    table.sort();
    Ok(table)
}

/// Profiles of the given exact modes at one z.
pub fn mode_table(system: &WaveguideSystem, kinds: &[ModeKind], xs: &[f64], z: f64) -> Result<Table> {
    let mut names = vec!["z".to_string(), "x".to_string()];
    for k in kinds {
        names.push(format!("{}_re", k.name()));
        names.push(format!("{}_im", k.name()));
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(&refs);
    let columns = kinds
        .iter()
        .map(|&k| system.mode_on(k, xs, z))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("modes"))?;
    for (i, &x) in xs.iter().enumerate() {
        let mut values = vec![z, x];
        for c in &columns {
            values.push(c[i].re);
            values.push(c[i].im);
        }
        table.rows.push(Row {
            values,
            engine: Engine::Exact,
        });
    }
    table.sort();
    Ok(table)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Writes one CSV per request (all engines) into `dir`; returns the file names.
pub fn write_series(v: &Validated, series: &[ObservableSeries], dir: &Path) -> Result<Vec<String>> {
    create_dir(dir)?;
    let hash = v.config_hash();
    let mut files = Vec::new();
    for r in &v.requests {
        let group: Vec<ObservableSeries> = series
            .iter()
            .filter(|s| s.observable == r.observable && s.metric == r.metric)
            .cloned()
            .collect();
        let name = format!("{}.csv", r.label());
        emit_csv(&r.label(), is_complex(r, v.system.config()), &group, &dir.join(&name), &hash)?;
        files.push(name);
    }
    Ok(files)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs every stage in order and writes the series, potential table and
/// `report.json` into `out_dir`.
pub fn run(v: &Validated, out_dir: &Path) -> Result<ComparisonReport> {
    let regularity = regularity(&v.system).map_err(|e| e.in_stage("regularity"))?;
    if !regularity.scan.nodeless {
        return Err(Error::NotRegular(format!(
            "Wronskian node near (x, z) = ({:.4}, {:.4})",
            regularity.scan.argmin.0, regularity.scan.argmin.1
        ))
        .in_stage("regularity"));
    }
    let periods = v.system.periods().map_err(|e| e.in_stage("periods"))?;
    let (parameters, calibration) = tb_parameters(v)?;
    let model = tb_model(v, &parameters)?;
    let kappa = overlap_kappa(&model.wells()[0], parameters.x0, model.quadrature())
        .map_err(|e| e.in_stage("kappa"))?;
    let (spectrum, floquet) = tb_analysis(v, &model)?;
    let all = series(v, &model)?;
    let comparisons = comparisons(&all)?;
    let oracle_residuals = oracle_residuals(v)?;

    let mut files = write_series(v, &all, out_dir)?;
    if let Some(section) = &v.config.potential {
        let table = potential_table(&v.system, section)?;
        let name = "potential.csv".to_string();
        csv::write_table(&table, &out_dir.join(&name), &v.config_hash(), vec![])?;
        files.push(name);
    }
    files.push("report.json".into());

    let mut engines: Vec<Engine> = all.iter().map(|s| s.engine).collect();
    engines.sort();
    engines.dedup();
    let report = ComparisonReport {
        name: v.config.name.clone(),
        seed: v.config.seed,
        config_hash: v.config_hash(),
        system: *v.system.config(),
        periods,
        regularity,
        tb: TbSummary {
            parameters,
            calibration,
            metric: model.metric(),
            binding: model.binding_kind(),
            kappa,
            spectrum,
            floquet,
        },
        initial_mode: v.config.initial_mode,
        engines,
        comparisons,
        oracle_residuals,
        warnings: v.warnings.clone(),
        files,
    };
    write_json(&report, &out_dir.join("report.json"))?;
    Ok(report)
}
