//! Scenario files: TOML in natural units (ħ = 1, lengths in inverse
//! wavenumbers), parsed and validated into a run plan.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bpm::{Boundary, PropagationGrid};
use crate::calibrate::{Multistart, ProfileOptions, SearchBox, TbParameters};
use crate::error::Error;
use crate::exact::{ModeKind, SystemConfig, WaveguideSystem};
use crate::observables::{Observable, SeriesRequest};
use crate::quadrature::{Metric, QuadratureSpec};
use crate::tb::{BindingKind, StepControl};

/// Propagation distance, either absolute or in units of the system's base period
/// (beat length for static systems, modulation period otherwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGrid {
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub end: Option<f64>,
    #[serde(default)]
    pub periods: Option<f64>,
    pub samples: usize,
}

impl ZGrid {
    /// `samples` points from `start` to the resolved end, both included.
    pub fn points(&self, base_period: f64) -> Vec<f64> {
        let end = self.resolved_end(base_period);
        let n = self.samples.max(1);
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|i| self.start + (end - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn resolved_end(&self, base_period: f64) -> f64 {
        match (self.end, self.periods) {
            (Some(e), _) => e,
            (None, Some(p)) => self.start + p * base_period,
            (None, None) => self.start,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default)]
    pub search_box: Option<SearchBox>,
    #[serde(default)]
    pub multistart: Option<Multistart>,
    #[serde(default)]
    pub profile: Option<ProfileOptions>,
    #[serde(default)]
    pub alpha_anchor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbSection {
    /// Explicit well parameters; calibration runs when absent.
    #[serde(default)]
    pub parameters: Option<TbParameters>,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub step: StepControl,
    #[serde(default)]
    pub metric: Option<Metric>,
    #[serde(default)]
    pub binding: Option<BindingKind>,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpmSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub dz: Option<f64>,
    #[serde(default)]
    pub boundary: Option<Boundary>,
}

fn yes() -> bool {
    true
}

/// Sampling of `V(x, z)` for the potential table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub half_width: f64,
    pub nx: usize,
    /// z-extent in base periods; static systems use a single z = 0 row.
    #[serde(default = "two")]
    pub periods: f64,
    #[serde(default = "nz_default")]
    pub nz: usize,
}

fn two() -> f64 {
    2.0
}

fn nz_default() -> usize {
    129
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Recorded in the report; every stage is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub system: SystemConfig,
    #[serde(default)]
    pub z_grid: Option<ZGrid>,
    /// Observable names, `_pt` suffix for the PT metric (e.g. `h_mean_pt`).
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default = "default_mode")]
    pub initial_mode: ModeKind,
    #[serde(default)]
    pub tb: TbSection,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub bpm: Option<BpmSection>,
    #[serde(default)]
    pub potential: Option<PotentialSection>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_mode() -> ModeKind {
    ModeKind::Left
}

/// One problem found while validating, addressed by its field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<Issue>);

impl std::fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl From<ValidationErrors> for Error {
    fn from(v: ValidationErrors) -> Self {
        Error::Config(v.to_string())
    }
}

/// A configuration that passed validation, with its constructed system.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ScenarioConfig,
    pub system: WaveguideSystem,
    pub requests: Vec<SeriesRequest>,
    pub warnings: Vec<String>,
}

impl Validated {
    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn config_hash(&self) -> String {
        config_hash(&self.config)
    }
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("configuration serializes");
    hex::encode(Sha256::digest(&canonical))
}

/// Parses an observable label such as `x_mean` or `h_std_pt`.
pub fn parse_request(label: &str) -> Option<SeriesRequest> {
    let (name, metric) = match label.strip_suffix("_pt") {
        Some(n) => (n, Metric::Pt),
        None => (label, Metric::Dirac),
    };
    Observable::parse(name).map(|o| SeriesRequest::new(o, metric))
}

fn issue(field: &str, message: impl Into<String>) -> Issue {
    Issue {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses without validating; syntax errors are addressed by line.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ValidationErrors> {
    toml::from_str(text).map_err(|e| {
        let field = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            }
            None => "config".into(),
        };
        ValidationErrors(vec![issue(&field, e.message().to_string())])
    })
}

/// Parses and fully validates a scenario, aggregating every problem found.
pub fn validate_config(text: &str) -> Result<Validated, ValidationErrors> {
    validate(parse_config(text)?)
}

pub fn validate(config: ScenarioConfig) -> Result<Validated, ValidationErrors> {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();

    let system = match config.system.validate() {
        Err(e) => {
            issues.push(issue("system", strip(e)));
            None
        }
        Ok(()) => match WaveguideSystem::new(config.system) {
            Ok(s) => {
                if !s.certified() {
                    warnings.push(
                        "system: certified=false; the sufficient regularity bound fails, \
                         regularity established by grid scan"
                            .into(),
                    );
                }
                Some(s)
            }
            Err(e) => {
                issues.push(issue("system", strip(e)));
                None
            }
        },
    };

    match &config.z_grid {
        None => issues.push(issue("z_grid", "missing; give samples and end or periods")),
        Some(z) => {
            if z.samples < 2 {
                issues.push(issue("z_grid.samples", "need at least 2 samples"));
            }
            match (z.end, z.periods) {
                (None, None) => issues.push(issue("z_grid", "give either end or periods")),
                (Some(_), Some(_)) => issues.push(issue("z_grid", "give end or periods, not both")),
                (Some(e), None) if !(e > z.start) => {
                    issues.push(issue("z_grid.end", "must exceed start"))
                }
                (None, Some(p)) if !(p > 0.0) => {
                    issues.push(issue("z_grid.periods", "must be positive"))
                }
                _ => {}
            }
            if !z.start.is_finite() || z.start < 0.0 {
                issues.push(issue("z_grid.start", "must be finite and non-negative"));
            }
        }
    }

    let mut requests = Vec::new();
    for (i, label) in config.observables.iter().enumerate() {
        match parse_request(label) {
            Some(r) if requests.contains(&r) => {
                issues.push(issue(&format!("observables[{i}]"), format!("duplicate `{label}`")))
            }
            Some(r) => requests.push(r),
            None => issues.push(issue(
                &format!("observables[{i}]"),
                format!("unknown observable `{label}`"),
            )),
        }
    }

    if let Some(sys) = &system {
        if let Err(e) = sys.mode(config.initial_mode, 0.0, 0.0) {
            issues.push(issue("initial_mode", strip(e)));
        }
    }
    if let Some(b) = config.tb.calibration.search_box {
        if let Err(e) = b.validate() {
            issues.push(issue("tb.calibration.search_box", strip(e)));
        }
    }
    if let Some(p) = config.tb.parameters {
        if !(p.x0 > 0.0) || !(p.k > 0.0) {
            issues.push(issue("tb.parameters", "x0 and k must be positive"));
        }
    }
    if let Some(m) = config.tb.calibration.multistart {
        if m.per_axis < 2 || m.refine == 0 {
            issues.push(issue("tb.calibration.multistart", "need per_axis ≥ 2 and refine ≥ 1"));
        }
    }
    if let Err(e) = config.tb.step.validate() {
        issues.push(issue("tb.step", strip(e)));
    }
    if let Some(q) = config.tb.quadrature {
        if let Err(e) = q.validate() {
            issues.push(issue("tb.quadrature", strip(e)));
        }
    }
    if let Some(q) = config.quadrature {
        if let Err(e) = q.validate() {
            issues.push(issue("quadrature", strip(e)));
        }
    }
    if let (Some(b), Some(sys)) = (&config.bpm, &system) {
        let g = bpm_grid(b, sys, 1.0);
        if let Err(e) = g.validate() {
            issues.push(issue("bpm", strip(e)));
        }
        warnings.extend(g.warnings().into_iter().map(|w| format!("bpm: {w}")));
    }
    if let Some(p) = config.potential {
        if !(p.half_width > 0.0) || p.nx < 2 || p.nz < 1 || !(p.periods >= 0.0) {
            issues.push(issue(
                "potential",
                "need half_width > 0, nx ≥ 2, nz ≥ 1 and periods ≥ 0",
            ));
        }
    }

    match (issues.is_empty(), system) {
        (true, Some(system)) => Ok(Validated {
            config,
            system,
            requests,
            warnings,
        }),
        _ => Err(ValidationErrors(issues)),
    }
}

/// Resolved propagation grid of a BPM section.
pub fn bpm_grid(section: &BpmSection, system: &WaveguideSystem, z_end: f64) -> PropagationGrid {
    let d = PropagationGrid::for_system(system, z_end);
    PropagationGrid {
        half_width: section.half_width.unwrap_or(d.half_width),
        nx: section.nx.unwrap_or(d.nx),
        dz: section.dz.unwrap_or(d.dz),
        z_end,
        boundary: section.boundary.unwrap_or(d.boundary),
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidParameters(m) => m,
        other => other.to_string(),
    }
}
