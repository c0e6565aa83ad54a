//! Quadrature-based z-series of moments, power and Hamiltonian moments under
//! the Dirac and PT metrics, and exact-vs-approximate comparison metrics.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ModeKind, WaveguideSystem};
use crate::quadrature::{Metric, QuadratureRule, QuadratureSpec, UniformGrid};
use crate::tb::{CoefficientTrajectory, TbModel};

/// Ghost nodes on each side of the quadrature grid; the stride-2 derivative
/// of the resolution check reaches eight.
pub const GHOST: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Tb,
    Bpm,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Tb => "tb",
            Engine::Bpm => "bpm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    XMean,
    PMean,
    XStd,
    PStd,
    Power,
    HMean,
    HStd,
}

impl Observable {
    pub const ALL: [Observable; 7] = [
        Observable::XMean,
        Observable::PMean,
        Observable::XStd,
        Observable::PStd,
        Observable::Power,
        Observable::HMean,
        Observable::HStd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::XMean => "x_mean",
            Observable::PMean => "p_mean",
            Observable::XStd => "x_std",
            Observable::PStd => "p_std",
            Observable::Power => "power",
            Observable::HMean => "h_mean",
            Observable::HStd => "h_std",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }

    fn needs_h(self) -> bool {
        matches!(self, Observable::HMean | Observable::HStd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the Dirac power `P(z)` of the same sample.
    InstantaneousPower,
    /// Divide by the Dirac power at the first z-sample.
    InitialPower,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeriesRequest {
    pub observable: Observable,
    pub metric: Metric,
    pub normalization: Normalization,
}

impl SeriesRequest {
    /// Defaults: Dirac power unnormalized, moments instantaneous, PT
    /// Hamiltonian moments by initial power.
    pub fn new(observable: Observable, metric: Metric) -> Self {
        let normalization = match (observable, metric) {
            (Observable::Power, _) => Normalization::None,
            (Observable::HMean | Observable::HStd, Metric::Pt) => Normalization::InitialPower,
            _ => Normalization::InstantaneousPower,
        };
        Self {
            observable,
            metric,
            normalization,
        }
    }

    /// Column label, e.g. `h_mean_pt`.
    pub fn label(&self) -> String {
        match self.metric {
            Metric::Dirac => self.observable.name().to_string(),
            Metric::Pt => format!("{}_pt", self.observable.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub observable: Observable,
    pub metric: Metric,
    pub normalization: Normalization,
    pub engine: Engine,
    pub z: Vec<f64>,
    pub values: Vec<C64>,
}

impl ObservableSeries {
    pub fn label(&self) -> String {
        SeriesRequest {
            observable: self.observable,
            metric: self.metric,
            normalization: self.normalization,
        }
        .label()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }
}

/// A field `ψ(x, z)` that can be sampled at the z-grid positions of a series.
pub trait FieldSource: Sync {
    fn engine(&self) -> Engine;
    /// Field at `z = z_grid[index]`.
    fn sample(&self, xs: &[f64], z: f64, index: usize) -> Result<Vec<C64>>;
    /// Potential of the Hamiltonian used for H-moments.
    fn potential(&self, xs: &[f64], z: f64) -> Result<Vec<C64>>;
    /// Grid on which the field is natively known; moments then use it instead
    /// of the requested quadrature (points outside are taken as zero).
    fn native_grid(&self) -> Option<UniformGrid> {
        None
    }
}

/// Closed-form mode of an exact system.
pub struct ExactSource<'a> {
    pub system: &'a WaveguideSystem,
    pub kind: ModeKind,
}

impl FieldSource for ExactSource<'_> {
    fn engine(&self) -> Engine {
        Engine::Exact
    }

    fn sample(&self, xs: &[f64], z: f64, _index: usize) -> Result<Vec<C64>> {
        self.system.mode_on(self.kind, xs, z)
    }

    fn potential(&self, xs: &[f64], z: f64) -> Result<Vec<C64>> {
        xs.iter().map(|&x| self.system.potential(x, z)).collect()
    }
}

/// TB state `Σ c_j(z) φ_j(x)` along a precomputed trajectory; H-moments use
/// the potential the model binds.
pub struct TbSource<'a> {
    pub model: &'a TbModel,
    pub trajectory: &'a CoefficientTrajectory,
}

impl FieldSource for TbSource<'_> {
    fn engine(&self) -> Engine {
        Engine::Tb
    }

    fn sample(&self, xs: &[f64], z: f64, index: usize) -> Result<Vec<C64>> {
        let c = self
            .trajectory
            .c
            .get(index)
            .ok_or_else(|| Error::invalid("trajectory shorter than the z-grid"))?;
        if (self.trajectory.z[index] - z).abs() > 1e-12 * z.abs().max(1.0) {
            return Err(Error::invalid("trajectory z-grid differs from the series z-grid"));
        }
        Ok(self.model.state_on(c, xs))
    }

    fn potential(&self, xs: &[f64], z: f64) -> Result<Vec<C64>> {
        match self.model.binding() {
            crate::tb::PotentialBinding::Superposition => {
                Ok(xs.iter().map(|&x| self.model.tb_potential(x)).collect())
            }
            crate::tb::PotentialBinding::Exact(sys) => {
                xs.iter().map(|&x| sys.potential(x, z)).collect()
            }
        }
    }
}

const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
const ORDER: i32 = 8;

/// Eighth-order central first derivative at index `i` with node stride `s`.
#[inline]
fn d1s(f: &[C64], i: usize, s: usize, inv_h: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (j, c) in D1.iter().enumerate() {
        let o = (j + 1) * s;
        acc += (f[i + o] - f[i - o]) * *c;
    }
    acc * inv_h
}

#[inline]
fn d1(f: &[C64], i: usize, inv_h: f64) -> C64 {
    d1s(f, i, 1, inv_h)
}

/// Eighth-order central second derivative.
#[inline]
fn d2(f: &[C64], i: usize, inv_h2: f64) -> C64 {
    let mut acc = f[i] * D2[0];
    for (j, c) in D2.iter().enumerate().skip(1) {
        acc += (f[i + j] + f[i - j]) * *c;
    }
    acc * inv_h2
}

/// Raw metric integrals of one field sample.
#[derive(Debug, Clone, Copy, Default)]
struct Integrals {
    dirac_power: f64,
    norm: C64,
    x: C64,
    x2: C64,
    p: C64,
    p2: C64,
    h: C64,
    h2: C64,
}

struct Workspace {
    grid: UniformGrid,
    weights: Vec<f64>,
    padded: Vec<f64>,
}

impl Workspace {
    fn new(grid: UniformGrid, rule: QuadratureRule) -> Self {
        let spec = QuadratureSpec {
            half_width: grid.half_width,
            nodes: grid.intervals,
            rule: if rule == QuadratureRule::Simpson && grid.intervals % 2 == 0 {
                QuadratureRule::Simpson
            } else {
                QuadratureRule::Trapezoid
            },
            tail_tolerance: 0.0,
        };
        Self {
            grid,
            weights: spec.weights(),
            padded: grid.padded_points(GHOST),
        }
    }

    /// `psi` and `v` on the padded grid.
    fn integrals(&self, psi: &[C64], v: Option<&[C64]>, metric: Metric) -> Integrals {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let (inv_h, inv_h2) = (1.0 / h, 1.0 / (h * h));
        let g = GHOST;
        let core = &psi[g..g + n];
        // Hψ on the interior; ⟨H²⟩ uses ∫ψ*·(−g'')∘j = ∫(−ψ'')*·g∘j, which
        // avoids differencing Hψ a second time
        let hpsi: Option<Vec<C64>> = v.map(|v| {
            let mut out = vec![C64::new(0.0, 0.0); psi.len()];
            for i in g..g + n {
                out[i] = -d2(psi, i, inv_h2) + v[i] * psi[i];
            }
            out
        });
        let pair = |i: usize| match metric {
            Metric::Dirac => i,
            Metric::Pt => n - 1 - i,
        };
        let mut acc = Integrals::default();
        for i in 0..n {
            let w = self.weights[i];
            let a = core[i].conj() * w;
            let j = pair(i);
            let jj = j + g;
            let x = self.padded[jj];
            let b = psi[jj];
            acc.dirac_power += core[i].norm_sqr() * w;
            acc.norm += a * b;
            acc.x += a * b * x;
            acc.x2 += a * b * (x * x);
            acc.p += a * C64::new(0.0, -1.0) * d1(psi, jj, inv_h);
            acc.p2 += a * -d2(psi, jj, inv_h2);
            if let (Some(hp), Some(v)) = (&hpsi, v) {
                acc.h += a * hp[jj];
                let lap = -d2(psi, i + g, inv_h2);
                acc.h2 += (lap.conj() * w + a * v[jj]) * hp[jj];
            }
        }
        acc
    }
}

fn evaluate(req: &SeriesRequest, i: &Integrals, initial_power: f64) -> C64 {
    let denom = match req.normalization {
        Normalization::InstantaneousPower => i.dirac_power,
        Normalization::InitialPower => initial_power,
        Normalization::None => 1.0,
    };
    let var = |m2: C64, m1: C64| (m2 / denom - (m1 / denom) * (m1 / denom)).sqrt();
    match req.observable {
        Observable::Power => i.norm / denom,
        Observable::XMean => i.x / denom,
        Observable::PMean => i.p / denom,
        Observable::HMean => i.h / denom,
        Observable::XStd => var(i.x2, i.x),
        Observable::PStd => var(i.p2, i.p),
        Observable::HStd => var(i.h2, i.h),
    }
}

/// Settings shared by all series of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSettings {
    pub quadrature: QuadratureSpec,
    /// Allowed relative change of the kinetic integral between spacing h and 2h.
    pub derivative_tolerance: f64,
}

impl ObservableSettings {
    pub fn new(quadrature: QuadratureSpec) -> Self {
        Self {
            quadrature,
            derivative_tolerance: 1e-6,
        }
    }
}

fn padded_field(src: &dyn FieldSource, ws: &Workspace, z: f64, index: usize) -> Result<Vec<C64>> {
    if src.native_grid().is_some() {
        let core = src.sample(&ws.grid.points(), z, index)?;
        let mut out = vec![C64::new(0.0, 0.0); core.len() + 2 * GHOST];
        out[GHOST..GHOST + core.len()].copy_from_slice(&core);
        Ok(out)
    } else {
        src.sample(&ws.padded, z, index)
    }
}

fn padded_potential(src: &dyn FieldSource, ws: &Workspace, z: f64) -> Result<Vec<C64>> {
    if src.native_grid().is_some() {
        let core = src.potential(&ws.grid.points(), z)?;
        let mut out = vec![C64::new(0.0, 0.0); core.len() + 2 * GHOST];
        out[GHOST..GHOST + core.len()].copy_from_slice(&core);
        for i in 0..GHOST {
            out[i] = core[0];
            out[GHOST + core.len() + i] = core[core.len() - 1];
        }
        Ok(out)
    } else {
        src.potential(&ws.padded, z)
    }
}

/// Kinetic integral `∫|ψ'|²` with spacing `h` and `2h`; their disagreement
/// estimates the differentiation error.
fn check_resolution(src: &dyn FieldSource, ws: &Workspace, z: f64, tol: f64) -> Result<()> {
    let psi = padded_field(src, ws, z, 0)?;
    let n = ws.grid.len();
    let h = ws.grid.spacing();
    let fine: f64 = (0..n)
        .map(|i| ws.weights[i] * d1(&psi, i + GHOST, 1.0 / h).norm_sqr())
        .sum();
    // every other node with doubled spacing; the stride-2 stencil reaches GHOST nodes
    let coarse: f64 = (0..n)
        .step_by(2)
        .map(|i| 2.0 * h * d1s(&psi, i + GHOST, 2, 0.5 / h).norm_sqr())
        .sum();
    let error = (fine - coarse).abs() / (2f64.powi(ORDER) - 1.0);
    let rel = error / fine.abs().max(1e-300);
    if rel > tol {
        return Err(Error::DerivativeResolution(format!(
            "estimated relative derivative error {rel:e} at spacing {h}"
        )));
    }
    Ok(())
}

fn check_tail(src: &dyn FieldSource, spec: &QuadratureSpec, z: f64) -> Result<()> {
    if src.native_grid().is_some() || spec.tail_tolerance <= 0.0 {
        return Ok(());
    }
    let power = |s: &QuadratureSpec| -> Result<f64> {
        let xs = s.grid().points();
        let f = src.sample(&xs, z, 0)?;
        Ok(f.iter().zip(s.weights()).map(|(v, w)| v.norm_sqr() * w).sum())
    };
    let base = power(spec)?;
    let wide = power(&QuadratureSpec {
        half_width: 2.0 * spec.half_width,
        nodes: 2 * spec.nodes,
        ..*spec
    })?;
    if (wide - base).abs() > spec.tail_tolerance * base.max(1e-300) {
        return Err(Error::QuadratureNotConverged(format!(
            "power changes by {:e} when the domain is doubled (L = {})",
            (wide - base).abs(),
            spec.half_width
        )));
    }
    Ok(())
}

/// Several series of one field over a z-grid; z-samples are evaluated in
/// parallel and assembled in order.
pub fn moment_series_multi(
    src: &dyn FieldSource,
    requests: &[SeriesRequest],
    z_grid: &[f64],
    settings: &ObservableSettings,
) -> Result<Vec<ObservableSeries>> {
    settings.quadrature.validate()?;
    if z_grid.is_empty() {
        return Ok(requests
            .iter()
            .map(|r| ObservableSeries {
                observable: r.observable,
                metric: r.metric,
                normalization: r.normalization,
                engine: src.engine(),
                z: vec![],
                values: vec![],
            })
            .collect());
    }
    let grid = src.native_grid().unwrap_or_else(|| settings.quadrature.grid());
    let ws = Workspace::new(grid, settings.quadrature.rule);
    check_tail(src, &settings.quadrature, z_grid[0])?;
    check_resolution(src, &ws, z_grid[0], settings.derivative_tolerance)?;
    let need_h = requests.iter().any(|r| r.observable.needs_h());
    let metrics: Vec<Metric> = {
        let mut m: Vec<Metric> = requests.iter().map(|r| r.metric).collect();
        m.dedup();
        if m.contains(&Metric::Dirac) && m.contains(&Metric::Pt) {
            vec![Metric::Dirac, Metric::Pt]
        } else {
            m
        }
    };
    let per_z: Vec<Vec<(Metric, Integrals)>> = z_grid
        .par_iter()
        .enumerate()
        .map(|(idx, &z)| -> Result<Vec<(Metric, Integrals)>> {
            let psi = padded_field(src, &ws, z, idx)?;
            let v = if need_h {
                Some(padded_potential(src, &ws, z)?)
            } else {
                None
            };
            Ok(metrics
                .iter()
                .map(|&m| (m, ws.integrals(&psi, v.as_deref(), m)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let initial_power = per_z[0][0].1.dirac_power;
    Ok(requests
        .iter()
        .map(|r| {
            let values = per_z
                .iter()
                .map(|row| {
                    let ints = row.iter().find(|(m, _)| *m == r.metric).expect("metric computed");
                    evaluate(r, &ints.1, initial_power)
                })
                .collect();
            ObservableSeries {
                observable: r.observable,
                metric: r.metric,
                normalization: r.normalization,
                engine: src.engine(),
                z: z_grid.to_vec(),
                values,
            }
        })
        .collect())
}

pub fn moment_series(
    src: &dyn FieldSource,
    observable: Observable,
    metric: Metric,
    z_grid: &[f64],
    settings: &ObservableSettings,
) -> Result<ObservableSeries> {
    let mut v = moment_series_multi(src, &[SeriesRequest::new(observable, metric)], z_grid, settings)?;
    Ok(v.remove(0))
}

/// Dirac power `∫|ψ|²` at a single z.
pub fn power(src: &dyn FieldSource, z: f64, settings: &ObservableSettings) -> Result<f64> {
    let s = moment_series(src, Observable::Power, Metric::Dirac, &[z], settings)?;
    Ok(s.values[0].re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub observable: String,
    pub reference_engine: Engine,
    pub engine: Engine,
    pub rmse: f64,
    pub amplitude_ratio: f64,
    /// Radians of the dominant oscillation, in `(−π, π]`; absent for flat series.
    pub phase_shift: Option<f64>,
    pub dominant_period: Option<f64>,
}

/// Linear interpolation of `(zs, vs)` at `z` (clamped at the ends).
fn interpolate(zs: &[f64], vs: &[f64], z: f64) -> f64 {
    if z <= zs[0] {
        return vs[0];
    }
    if z >= zs[zs.len() - 1] {
        return vs[vs.len() - 1];
    }
    let j = zs.partition_point(|&t| t <= z);
    let (z0, z1) = (zs[j - 1], zs[j]);
    let t = (z - z0) / (z1 - z0);
    vs[j - 1] * (1.0 - t) + vs[j] * t
}

fn peak_to_peak(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Period of the strongest Fourier component of a uniformly sampled series.
pub fn dominant_period(z: &[f64], v: &[f64]) -> Result<f64> {
    let n = v.len();
    if n < 4 {
        return Err(Error::FlatSeries);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let a: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    if peak_to_peak(&a) <= 1e-12 * scale {
        return Err(Error::FlatSeries);
    }
    let span = z[n - 1] - z[0];
    let dz = span / (n - 1) as f64;
    // frequencies from one cycle per span up to Nyquist, oversampled 8×
    let f_min = 1.0 / span;
    let f_max = 0.5 / dz;
    let m = 8 * n;
    let mut best = (f_min, 0.0);
    for i in 0..=m {
        let f = f_min + (f_max - f_min) * i as f64 / m as f64;
        let w = 2.0 * std::f64::consts::PI * f;
        let (mut re, mut im) = (0.0, 0.0);
        for (zi, ai) in z.iter().zip(&a) {
            let (s, c) = (w * (zi - z[0])).sin_cos();
            re += ai * c;
            im += ai * s;
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (f, p);
        }
    }
    Ok(1.0 / best.0)
}

/// Phase by which `b` lags `a` at the dominant frequency: the argument of the
/// cross-spectrum of the Hann-windowed, mean-removed series.
pub fn phase_shift(z: &[f64], a: &[f64], b: &[f64], period: f64) -> Result<f64> {
    let n = a.len();
    if n < 4 || b.len() != n {
        return Err(Error::FlatSeries);
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let w = 2.0 * std::f64::consts::PI / period;
    let mut fa = C64::new(0.0, 0.0);
    let mut fb = C64::new(0.0, 0.0);
    for i in 0..n {
        let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
        let e = C64::from_polar(hann, -w * (z[i] - z[0]));
        fa += e * (a[i] - ma);
        fb += e * (b[i] - mb);
    }
    let cross = fa * fb.conj();
    if cross.norm() == 0.0 {
        return Err(Error::FlatSeries);
    }
    Ok(cross.arg())
}

/// RMSE, peak-to-peak ratio and phase shift of the real parts of `approx`
/// against `exact`; `approx` is resampled onto the exact z-grid when needed.
pub fn comparison_metrics(exact: &ObservableSeries, approx: &ObservableSeries) -> Result<ComparisonEntry> {
    if exact.z.len() < 2 || approx.z.len() < 2 {
        return Err(Error::invalid("comparison needs at least two samples per series"));
    }
    let a = exact.real();
    let b: Vec<f64> = if exact.z == approx.z {
        approx.real()
    } else {
        let br = approx.real();
        exact.z.iter().map(|&z| interpolate(&approx.z, &br, z)).collect()
    };
    let n = a.len();
    let rmse = (a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64).sqrt();
    let pa = peak_to_peak(&a);
    let pb = peak_to_peak(&b);
    let amplitude_ratio = if pa > 0.0 { pb / pa } else if pb == 0.0 { 1.0 } else { f64::INFINITY };
    let (phase_shift, dominant) = match dominant_period(&exact.z, &a) {
        Ok(t) => (phase_shift(&exact.z, &a, &b, t).ok(), Some(t)),
        Err(_) => (None, None),
    };
    Ok(ComparisonEntry {
        observable: exact.label(),
        reference_engine: exact.engine,
        engine: approx.engine,
        rmse,
        amplitude_ratio,
        phase_shift,
        dominant_period: dominant,
    })
}
