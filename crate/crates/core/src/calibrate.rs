//! Derivative-free fitting of two-well TB models to the exact systems.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{SystemConfig, WaveguideSystem};
use crate::quadrature::{Metric, QuadratureSpec};
use crate::tb::{solve_spectrum, PotentialBinding, TbModel, WellBasis, WellKind};

/// Nelder–Mead coefficients and stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when the simplex diameter falls below this.
    pub diameter_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            diameter_tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn clamp_into(p: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in p.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for a in simplex {
        for b in simplex {
            let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            d = d.max(s.sqrt());
        }
    }
    d
}

/// Box-constrained Nelder–Mead: trial points are clamped into `bounds`;
/// non-finite objective values count as +∞.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = start.len();
    let eval = |p: &[f64]| {
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut evaluations = 0usize;
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut p0 = start.to_vec();
    clamp_into(&mut p0, bounds);
    simplex.push(p0.clone());
    for i in 0..n {
        let mut p = p0.clone();
        p[i] += steps[i];
        if p[i] > bounds[i].1 {
            p[i] = p0[i] - steps[i];
        }
        clamp_into(&mut p, bounds);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    evaluations += n + 1;

    let mut iterations = 0;
    while iterations < opts.max_iterations && diameter(&simplex) >= opts.diameter_tolerance {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_into(&mut p, bounds);
            p
        };

        let xr = along(opts.reflection);
        let fr = eval(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = along(opts.reflection * opts.expansion);
            let fe = eval(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(opts.reflection * opts.contraction);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-opts.contraction);
            let fc = eval(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + opts.shrink * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i]);
        }
        evaluations += n;
    }
    let (mut bi, mut bv) = (0, values[0]);
    for (i, v) in values.iter().enumerate() {
        if *v < bv {
            bi = i;
            bv = *v;
        }
    }
    Minimum {
        point: simplex[bi].clone(),
        value: bv,
        iterations,
        evaluations,
    }
}

/// Nelder–Mead restarted from its own result with fresh steps until a restart
/// no longer improves the value (at most five restarts). Restarts let the
/// simplex recover directions it collapsed early, which matters for the kinked
/// absolute-value objectives used here.
pub fn restarted_nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> Minimum {
    let mut best = nelder_mead(f, start, steps, bounds, opts);
    for _ in 0..5 {
        let next = nelder_mead(f, &best.point, steps, bounds, opts);
        let improved = next.value < best.value;
        let total = best.iterations + next.iterations;
        let evals = best.evaluations + next.evaluations;
        if improved {
            best = next;
        }
        best.iterations = total;
        best.evaluations = evals;
        if !improved {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    SpectralHermitian,
    SpectralPt,
    ProfileDynamic,
}

/// Closed search intervals; `alpha_tilde` only for the PT spectral fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub x0: (f64, f64),
    pub k: (f64, f64),
    #[serde(default)]
    pub alpha_tilde: Option<(f64, f64)>,
}

impl SearchBox {
    /// Default box for a target system.
    pub fn for_system(config: &SystemConfig) -> Self {
        match *config {
            SystemConfig::HermitianStatic(p) => Self {
                x0: (0.3, 4.0 / p.k1.abs()),
                k: (0.5 * p.k1.abs(), 1.5 * p.k2.abs()),
                alpha_tilde: None,
            },
            SystemConfig::PtStatic(p) => Self {
                x0: (0.3, 4.0 / p.k1.abs()),
                k: (0.5 * p.k1.abs(), 1.5 * p.k2.abs()),
                alpha_tilde: Some((0.0, (2.0 * p.alpha.abs()).max(0.2))),
            },
            SystemConfig::PtDynamic(p) => Self {
                x0: (0.3, 4.0 / p.k1.abs()),
                k: (0.5 * p.k3.abs().max(0.1 * p.k1.abs()), 1.5 * p.k2.abs()),
                alpha_tilde: None,
            },
        }
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![self.x0, self.k];
        if let Some(a) = self.alpha_tilde {
            b.push(a);
        }
        b
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in self.bounds() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("search interval [{lo}, {hi}] is not a finite closed interval")));
            }
        }
        if self.x0.0 <= 0.0 || self.k.0 <= 0.0 {
            return Err(Error::invalid("search box must keep x0 and k positive"));
        }
        Ok(())
    }
}

/// Multistart grid density and how many of the best grid points to refine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multistart {
    pub per_axis: usize,
    pub alpha_points: usize,
    pub refine: usize,
}

impl Default for Multistart {
    fn default() -> Self {
        Self {
            per_axis: 9,
            alpha_points: 5,
            refine: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Half-window `(−d, 0)`; defaults to `x_d + 3/|k1|` with `x_d` the left-well minimum.
    pub d: Option<f64>,
    pub samples: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            d: None,
            samples: 2001,
        }
    }
}

/// TB model settings used while fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TbSettings {
    pub metric: Metric,
    /// Quadrature; `None` derives one from the trial wells.
    pub quadrature: Option<QuadratureSpec>,
}

#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub target: WaveguideSystem,
    pub mode: CalibrationMode,
    pub search_box: SearchBox,
    pub multistart: Multistart,
    pub optimizer: NelderMeadOptions,
    pub profile: ProfileOptions,
    pub tb: TbSettings,
    /// Weight of `(α̃ − α)²` added to the PT spectral objective, which is
    /// otherwise flat in α̃.
    pub alpha_anchor: f64,
}

impl CalibrationProblem {
    /// Defaults for a target: mode by system kind, Dirac metric for Hermitian
    /// targets and PT metric for the static PT one.
    pub fn for_target(target: WaveguideSystem) -> Self {
        let cfg = *target.config();
        let (mode, metric) = match cfg {
            SystemConfig::HermitianStatic(_) => (CalibrationMode::SpectralHermitian, Metric::Dirac),
            SystemConfig::PtStatic(_) => (CalibrationMode::SpectralPt, Metric::Pt),
            SystemConfig::PtDynamic(_) => (CalibrationMode::ProfileDynamic, Metric::Dirac),
        };
        Self {
            target,
            mode,
            search_box: SearchBox::for_system(&cfg),
            multistart: Multistart::default(),
            optimizer: NelderMeadOptions::default(),
            profile: ProfileOptions::default(),
            tb: TbSettings {
                metric,
                quadrature: None,
            },
            alpha_anchor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TbParameters {
    pub x0: f64,
    pub k: f64,
    #[serde(default)]
    pub alpha_tilde: Option<f64>,
}

impl TbParameters {
    pub fn wells(&self) -> Vec<WellBasis> {
        match self.alpha_tilde {
            Some(a) => vec![WellBasis::pt(self.k, a, -self.x0), WellBasis::pt(self.k, a, self.x0)],
            None => vec![
                WellBasis::hermitian(self.k, -self.x0),
                WellBasis::hermitian(self.k, self.x0),
            ],
        }
    }

    pub fn kind(&self) -> WellKind {
        if self.alpha_tilde.is_some() {
            WellKind::Pt
        } else {
            WellKind::Hermitian
        }
    }

    pub fn model(
        &self,
        metric: Metric,
        binding: PotentialBinding,
        quadrature: Option<QuadratureSpec>,
    ) -> Result<TbModel> {
        let wells = self.wells();
        let q = quadrature.unwrap_or_else(|| TbModel::default_quadrature(&wells));
        TbModel::new(wells, metric, binding, q)
    }

    fn from_point(p: &[f64]) -> Self {
        Self {
            x0: p[0],
            k: p[1],
            alpha_tilde: p.get(2).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub start: Vec<f64>,
    pub start_value: f64,
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mode: CalibrationMode,
    pub parameters: TbParameters,
    pub objective_value: f64,
    /// Smallest objective found on the coarse multistart grid.
    pub grid_best: f64,
    pub trace: Vec<TraceEntry>,
    #[serde(default)]
    pub achieved_energies: Option<Vec<C64>>,
    #[serde(default)]
    pub profile_error: Option<f64>,
    #[serde(default)]
    pub profile_window: Option<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Coarse grid scan then Nelder–Mead from the best `refine` grid points.
fn multistart(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    bounds: &[(f64, f64)],
    ms: &Multistart,
    opts: &NelderMeadOptions,
) -> Result<(Minimum, f64, Vec<TraceEntry>)> {
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| linspace(lo, hi, if i < 2 { ms.per_axis } else { ms.alpha_points }))
        .collect();
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let values: Vec<f64> = points.par_iter().map(|p| f(p)).collect();
    let mut ranked: Vec<usize> = (0..points.len()).filter(|&i| values[i].is_finite()).collect();
    if ranked.is_empty() {
        return Err(Error::CalibrationFailed(
            "objective could not be evaluated at any multistart point".into(),
        ));
    }
    ranked.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let grid_best = values[ranked[0]];
    let steps: Vec<f64> = bounds
        .iter()
        .zip(&axes)
        .map(|(&(lo, hi), axis)| {
            if axis.len() > 1 {
                0.5 * (hi - lo) / (axis.len() - 1) as f64
            } else {
                0.1 * (hi - lo).max(1e-3)
            }
        })
        .collect();
    let starts: Vec<usize> = ranked.into_iter().take(ms.refine.max(1)).collect();
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|&i| restarted_nelder_mead(f, &points[i], &steps, bounds, opts))
        .collect();
    let trace: Vec<TraceEntry> = starts
        .iter()
        .zip(&runs)
        .map(|(&i, m)| TraceEntry {
            start: points[i].clone(),
            start_value: values[i],
            point: m.point.clone(),
            value: m.value,
            iterations: m.iterations,
        })
        .collect();
    let mut best = runs[0].clone();
    for r in &runs[1..] {
        if r.value < best.value {
            best = r.clone();
        }
    }
    if !(best.value <= grid_best) {
        // cannot happen with a start on the best grid point; kept as a guard
        return Err(Error::CalibrationFailed("refinement regressed past the grid scan".into()));
    }
    Ok((best, grid_best, trace))
}

/// Static target energies `(E_g, E_e)`.
fn targets(system: &WaveguideSystem) -> (f64, f64) {
    system.energies()
}

fn spectral_objective(problem: &CalibrationProblem, p: &[f64]) -> f64 {
    let params = TbParameters::from_point(p);
    let model = match params.model(problem.tb.metric, PotentialBinding::Superposition, problem.tb.quadrature) {
        Ok(m) => m,
        Err(_) => return f64::INFINITY,
    };
    let Ok(sp) = solve_spectrum(&model) else {
        return f64::INFINITY;
    };
    let (eg, ee) = targets(&problem.target);
    let mut v = (sp.energies[0] - eg).norm() + (sp.energies[1] - ee).norm();
    if let (Some(a), SystemConfig::PtStatic(t)) = (params.alpha_tilde, problem.target.config()) {
        v += problem.alpha_anchor * (a - t.alpha).powi(2);
    }
    v
}

/// Minimizes `|E_g − E_1| + |E_e − E_2|` over `(x0, k)` or `(x0, k, α̃)`.
pub fn spectral_match(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    if !problem.target.config().is_static() {
        return Err(Error::invalid("spectral matching needs a static target"));
    }
    problem.search_box.validate()?;
    let mut sb = problem.search_box;
    match problem.mode {
        CalibrationMode::SpectralHermitian => sb.alpha_tilde = None,
        CalibrationMode::SpectralPt => {
            if sb.alpha_tilde.is_none() {
                return Err(Error::invalid("PT spectral matching needs an alpha_tilde interval"));
            }
        }
        CalibrationMode::ProfileDynamic => {
            return Err(Error::invalid("profile mode given to spectral matching"))
        }
    }
    let f = |p: &[f64]| spectral_objective(problem, p);
    let (best, grid_best, trace) = multistart(&f, &sb.bounds(), &problem.multistart, &problem.optimizer)?;
    let parameters = TbParameters::from_point(&best.point);
    let model = parameters.model(problem.tb.metric, PotentialBinding::Superposition, problem.tb.quadrature)?;
    let sp = solve_spectrum(&model)?;
    Ok(CalibrationResult {
        mode: problem.mode,
        parameters,
        objective_value: best.value,
        grid_best,
        trace,
        achieved_energies: Some(sp.energies),
        profile_error: None,
        profile_window: None,
    })
}

/// Two-well Hermitian sech² sum.
pub fn two_well_potential(x0: f64, k: f64, x: f64) -> f64 {
    WellBasis::hermitian(k, -x0).potential(x).re + WellBasis::hermitian(k, x0).potential(x).re
}

/// Abscissae of `(−d, 0)`, endpoints excluded.
pub fn profile_samples(d: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -d + d * (i + 1) as f64 / (n + 1) as f64).collect()
}

/// `max_i |target_i − V_TB(x_i; x0, k)|`.
pub fn profile_objective(xs: &[f64], target: &[f64], x0: f64, k: f64) -> f64 {
    xs.iter()
        .zip(target)
        .map(|(&x, t)| (t - two_well_potential(x0, k, x)).abs())
        .fold(0.0, f64::max)
}

/// Location of the left-well minimum of `Re V(x, 0)`.
pub fn left_well_minimum(system: &WaveguideSystem) -> Result<f64> {
    let reach = 10.0 / system.config().decay_rate();
    let n = 20_000;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=n {
        let x = -reach * i as f64 / n as f64;
        let v = system.potential(x, 0.0)?.re;
        if v < best.1 {
            best = (x, v);
        }
    }
    // golden-section polish around the sampled minimum
    let h = reach / n as f64;
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if system.potential(c, 0.0)?.re < system.potential(d, 0.0)?.re {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fits a Hermitian two-well sum to `target` on `(−d, 0)` in the minimax sense.
pub fn profile_fit(
    target: &(dyn Fn(f64) -> f64 + Sync),
    d: f64,
    samples: usize,
    search_box: &SearchBox,
    ms: &Multistart,
    opts: &NelderMeadOptions,
) -> Result<(Minimum, f64, Vec<TraceEntry>)> {
    if !(d > 0.0) || samples < 2 {
        return Err(Error::invalid("profile window needs d > 0 and at least two samples"));
    }
    search_box.validate()?;
    let xs = profile_samples(d, samples);
    let t: Vec<f64> = xs.iter().map(|&x| target(x)).collect();
    let f = |p: &[f64]| profile_objective(&xs, &t, p[0], p[1]);
    let sb = SearchBox {
        alpha_tilde: None,
        ..*search_box
    };
    multistart(&f, &sb.bounds(), ms, opts)
}

/// Minimax fit of `Re V_S(x, 0)` on `(−d, 0)` by a Hermitian two-well sum.
pub fn profile_match(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    if problem.target.config().is_static() {
        return Err(Error::invalid("profile matching needs the z-periodic target"));
    }
    let d = match problem.profile.d {
        Some(d) => d,
        None => {
            let k1 = match problem.target.config() {
                SystemConfig::PtDynamic(p) => p.k1.abs(),
                _ => unreachable!(),
            };
            -left_well_minimum(&problem.target)? + 3.0 / k1
        }
    };
    let xs = profile_samples(d, problem.profile.samples);
    for &x in &xs {
        problem.target.potential(x, 0.0)?;
    }
    let target = |x: f64| problem.target.potential(x, 0.0).map(|v| v.re).unwrap_or(f64::NAN);
    let (best, grid_best, trace) = profile_fit(
        &target,
        d,
        problem.profile.samples,
        &problem.search_box,
        &problem.multistart,
        &problem.optimizer,
    )?;
    Ok(CalibrationResult {
        mode: CalibrationMode::ProfileDynamic,
        parameters: TbParameters::from_point(&best.point[..2]),
        objective_value: best.value,
        grid_best,
        trace,
        achieved_energies: None,
        profile_error: Some(best.value),
        profile_window: Some(d),
    })
}

/// Dispatches on the problem mode.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    match problem.mode {
        CalibrationMode::ProfileDynamic => profile_match(problem),
        _ => spectral_match(problem),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let opts = NelderMeadOptions {
            max_iterations: 5000,
            diameter_tolerance: 1e-10,
            ..Default::default()
        };
        let m = nelder_mead(&f, &[-1.2, 1.0], &[0.1, 0.1], &[(-5.0, 5.0), (-5.0, 5.0)], &opts);
        assert!((m.point[0] - 1.0).abs() < 1e-6 && (m.point[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn box_is_respected() {
        let f = |p: &[f64]| (p[0] - 3.0).powi(2) + (p[1] + 2.0).powi(2);
        let m = nelder_mead(&f, &[0.5, 0.5], &[0.1, 0.1], &[(0.0, 1.0), (0.0, 1.0)], &Default::default());
        assert!((m.point[0] - 1.0).abs() < 1e-6 && m.point[1].abs() < 1e-6);
    }

    #[test]
    fn profile_self_match() {
        let target = |x: f64| two_well_potential(1.6, 0.9, x);
        let sb = SearchBox {
            x0: (0.5, 4.0),
            k: (0.4, 1.6),
            alpha_tilde: None,
        };
        let (m, _, _) = profile_fit(&target, 5.0, 2001, &sb, &Multistart::default(), &Default::default()).unwrap();
        assert!(m.value < 1e-6, "{}", m.value);
        assert!((m.point[0] - 1.6).abs() < 1e-5 && (m.point[1] - 0.9).abs() < 1e-5);
    }
}
