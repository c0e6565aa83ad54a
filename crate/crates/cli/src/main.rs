use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use susy_tb::harness::presets::{preset, PRESETS};
use susy_tb::harness::{
    self, csv, parse_config, validate, ComparisonReport, ScenarioConfig, Validated, ValidationErrors,
};
use susy_tb::{Error, ModeKind, QuadratureSpec};

#[derive(Parser)]
#[command(name = "susy-tb", version, about = "Exact SUSY coupled waveguides against tight-binding and BPM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Scenario {
    /// Scenario file (TOML).
    #[arg(short, long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone)]
struct Output {
    /// Directory for emitted files; created if missing.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Observable quadrature intervals.
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Observable quadrature half-width.
    #[arg(long)]
    quad_half_width: Option<f64>,
    /// Number of z samples.
    #[arg(long)]
    z_samples: Option<usize>,
    /// Fixed RK4 step of the TB integrator.
    #[arg(long)]
    tb_dz: Option<f64>,
    /// BPM transverse nodes.
    #[arg(long)]
    bpm_nx: Option<usize>,
    /// BPM propagation step.
    #[arg(long)]
    bpm_dz: Option<f64>,
    /// BPM half-width.
    #[arg(long)]
    bpm_half_width: Option<f64>,
}

impl Overrides {
    fn apply(&self, c: &mut ScenarioConfig) {
        if self.quad_nodes.is_some() || self.quad_half_width.is_some() {
            let mut q = c
                .quadrature
                .unwrap_or_else(|| QuadratureSpec::for_decay(c.system.decay_rate()));
            q.nodes = self.quad_nodes.unwrap_or(q.nodes);
            q.half_width = self.quad_half_width.unwrap_or(q.half_width);
            c.quadrature = Some(q);
        }
        if let (Some(n), Some(z)) = (self.z_samples, c.z_grid.as_mut()) {
            z.samples = n;
        }
        if let Some(dz) = self.tb_dz {
            c.tb.step = susy_tb::tb::StepControl::Fixed { dz };
        }
        if self.bpm_nx.is_some() || self.bpm_dz.is_some() || self.bpm_half_width.is_some() {
            let b = c.bpm.get_or_insert(harness::BpmSection {
                enabled: true,
                half_width: None,
                nx: None,
                dz: None,
                boundary: None,
            });
            b.nx = self.bpm_nx.or(b.nx);
            b.dz = self.bpm_dz.or(b.dz);
            b.half_width = self.bpm_half_width.or(b.half_width);
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print warnings.
    Validate(Scenario),
    /// Tabulate V(x, z) of the exact system.
    Potential {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate the exact mode profiles at one z.
    Modes {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
        #[arg(long, default_value_t = 0.0)]
        z: f64,
    },
    /// Fit (or accept) the TB well parameters.
    Calibrate {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
    },
    /// TB spectrum, or Floquet quasi-energies for z-periodic systems.
    Spectrum {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
    },
    /// Observable series of every engine, without comparison.
    Propagate {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
    },
    /// Full pipeline with comparison report.
    Compare {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
    },
    /// Bundled scenarios.
    #[command(subcommand)]
    Preset(PresetCommand),
}

#[derive(Subcommand)]
enum PresetCommand {
    List,
    Run {
        name: String,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        overrides: Overrides,
    },
}

enum Failure {
    Invalid(ValidationErrors),
    Runtime(Error),
}

impl From<ValidationErrors> for Failure {
    fn from(e: ValidationErrors) -> Self {
        Failure::Invalid(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_text(text: &str, overrides: &Overrides) -> Result<Validated, Failure> {
    let mut config = parse_config(text)?;
    overrides.apply(&mut config);
    let v = validate(config)?;
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
    Ok(v)
}

fn load(s: &Scenario) -> Result<Validated, Failure> {
    let text = std::fs::read_to_string(&s.config).map_err(|source| Error::Io {
        path: s.config.display().to_string(),
        source,
    })?;
    load_text(&text, &s.overrides)
}

fn mkdir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn summarize(r: &ComparisonReport, dir: &Path) {
    for f in &r.files {
        wrote(&dir.join(f));
    }
    for c in &r.comparisons {
        let phase = c.phase_shift.map_or("-".to_string(), |p| format!("{p:.4}"));
        println!(
            "{:<12} {:>5} rmse {:.3e}  amplitude {:.4}  phase {phase}",
            c.observable,
            c.engine.name(),
            c.rmse,
            c.amplitude_ratio
        );
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate(s) => {
            let v = load(&s)?;
            println!("ok: {} ({}), config hash {}", v.config.name, v.system.config().name(), v.config_hash());
        }
        Command::Potential { scenario, output } => {
            let v = load(&scenario)?;
            let section = v.config.potential.unwrap_or(harness::PotentialSection {
                half_width: 12.0 / v.system.config().decay_rate(),
                nx: 481,
                periods: 2.0,
                nz: 129,
            });
            let table = harness::potential_table(&v.system, &section)?;
            mkdir(&output.out)?;
            let path = output.out.join("potential.csv");
            csv::write_table(&table, &path, &v.config_hash(), vec![])?;
            wrote(&path);
        }
        Command::Modes { scenario, output, z } => {
            let v = load(&scenario)?;
            let kinds: &[ModeKind] = if v.system.config().is_static() {
                &[ModeKind::Ground, ModeKind::Excited, ModeKind::Left, ModeKind::Right]
            } else {
                &[ModeKind::Floquet1, ModeKind::Floquet2, ModeKind::Left, ModeKind::Right]
            };
            let (half, nx) = match v.config.potential {
                Some(p) => (p.half_width, p.nx.max(2)),
                None => (12.0 / v.system.config().decay_rate(), 481),
            };
            let xs: Vec<f64> = (0..nx)
                .map(|i| -half + 2.0 * half * i as f64 / (nx - 1) as f64)
                .collect();
            let table = harness::mode_table(&v.system, kinds, &xs, z)?;
            mkdir(&output.out)?;
            let path = output.out.join("modes.csv");
            csv::write_table(&table, &path, &v.config_hash(), vec![])?;
            wrote(&path);
        }
        Command::Calibrate { scenario, output } => {
            let v = load(&scenario)?;
            let (params, result) = harness::tb_parameters(&v)?;
            mkdir(&output.out)?;
            let path = output.out.join("calibration.json");
            harness::write_json(&serde_json::json!({ "parameters": params, "calibration": result }), &path)?;
            match params.alpha_tilde {
                Some(a) => println!("x0 = {:.6}, k = {:.6}, alpha_tilde = {a:.6}", params.x0, params.k),
                None => println!("x0 = {:.6}, k = {:.6}", params.x0, params.k),
            }
            wrote(&path);
        }
        Command::Spectrum { scenario, output } => {
            let v = load(&scenario)?;
            let (params, _) = harness::tb_parameters(&v)?;
            let model = harness::tb_model(&v, &params)?;
            let (spectrum, floquet) = harness::tb_analysis(&v, &model)?;
            if let Some(s) = &spectrum {
                println!("energies {:?}, total deviation {:.3e}", s.tb_energies, s.total_deviation);
            }
            if let Some(f) = &floquet {
                println!("quasi-energies {:?}, phase errors {:?}", f.quasi_energies, f.phase_errors);
            }
            mkdir(&output.out)?;
            let path = output.out.join("spectrum.json");
            harness::write_json(
                &serde_json::json!({ "parameters": params, "spectrum": spectrum, "floquet": floquet }),
                &path,
            )?;
            wrote(&path);
        }
        Command::Propagate { scenario, output } => {
            let v = load(&scenario)?;
            let (params, _) = harness::tb_parameters(&v)?;
            let model = harness::tb_model(&v, &params)?;
            let series = harness::series(&v, &model)?;
            for f in harness::write_series(&v, &series, &output.out)? {
                wrote(&output.out.join(f));
            }
        }
        Command::Compare { scenario, output } => {
            let v = load(&scenario)?;
            let r = harness::run(&v, &output.out)?;
            summarize(&r, &output.out);
        }
        Command::Preset(PresetCommand::List) => {
            for p in &PRESETS {
                println!("{:<22} {}", p.name, p.description);
            }
        }
        Command::Preset(PresetCommand::Run { name, output, overrides }) => {
            let p = preset(&name).ok_or_else(|| {
                ValidationErrors(vec![harness::Issue {
                    field: "preset".into(),
                    message: format!("unknown preset `{name}`"),
                }])
            })?;
            let v = load_text(p.toml, &overrides)?;
            let r = harness::run(&v, &output.out)?;
            summarize(&r, &output.out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            for issue in &e.0 {
                eprintln!("error: {issue}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
