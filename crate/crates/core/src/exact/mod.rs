//! Closed-form benchmark systems: potentials, guided modes and periods of the
//! Hermitian, static PT and z-periodic PT double wells.

mod formulas;
pub mod params;
pub mod periods;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::darboux::{regularity_scan, SamplingGrid, NODE_THRESHOLD};
use crate::error::{Error, Result};
use crate::seed::{SeedSuperposition, SeedTerm};
pub use formulas::HTerms;
pub use params::{HermitianStaticParams, PtDynamicParams, PtStaticParams};
pub use periods::{Periods, Repetition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemConfig {
    HermitianStatic(HermitianStaticParams),
    PtStatic(PtStaticParams),
    PtDynamic(PtDynamicParams),
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            SystemConfig::HermitianStatic(p) => p.validate(),
            SystemConfig::PtStatic(p) => p.validate(),
            SystemConfig::PtDynamic(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemConfig::HermitianStatic(_) => "hermitian-static",
            SystemConfig::PtStatic(_) => "pt-static",
            SystemConfig::PtDynamic(_) => "pt-dynamic",
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, SystemConfig::PtDynamic(_))
    }

    /// Slowest exponential decay rate of the guided modes.
    pub fn decay_rate(&self) -> f64 {
        match *self {
            SystemConfig::HermitianStatic(p) => p.k1.abs(),
            SystemConfig::PtStatic(p) => p.k1.abs(),
            SystemConfig::PtDynamic(p) if p.alpha != 0.0 => p.k1.abs().min(p.k3.abs()),
            SystemConfig::PtDynamic(p) => p.k1.abs(),
        }
    }

    /// Transformation seeds `(u1, u2)` of the generic second-order construction.
    pub fn seeds(&self) -> (SeedSuperposition, SeedSuperposition) {
        let single = |t| SeedSuperposition::single(t);
        match *self {
            SystemConfig::HermitianStatic(p) => (
                single(SeedTerm::even(1.0, p.k1)),
                single(SeedTerm::odd(1.0, p.k2)),
            ),
            SystemConfig::PtStatic(p) => (
                SeedSuperposition::new(vec![SeedTerm::even(1.0, p.k1), SeedTerm::odd(p.alpha, p.k1)])
                    .expect("finite seed"),
                single(SeedTerm::odd(1.0, p.k2)),
            ),
            SystemConfig::PtDynamic(p) => (
                SeedSuperposition::new(vec![SeedTerm::even(1.0, p.k1), SeedTerm::odd(p.alpha, p.k3)])
                    .expect("finite seed"),
                single(SeedTerm::odd(1.0, p.k2)),
            ),
        }
    }

    pub fn periods(&self) -> Result<Periods> {
        match *self {
            SystemConfig::HermitianStatic(p) => Ok(Periods::Beat {
                t: periods::beat_length(p.k1, p.k2)?,
            }),
            SystemConfig::PtStatic(p) => Ok(Periods::Beat {
                t: periods::beat_length(p.k1, p.k2)?,
            }),
            SystemConfig::PtDynamic(p) => periods::modulation_periods(p.k1, p.k2, p.k3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Ground,
    Excited,
    Floquet1,
    Floquet2,
    Left,
    Right,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Ground => "ground",
            ModeKind::Excited => "excited",
            ModeKind::Floquet1 => "floquet1",
            ModeKind::Floquet2 => "floquet2",
            ModeKind::Left => "left",
            ModeKind::Right => "right",
        }
    }
}

/// Intervals and half-width (in decay lengths) of the normalization quadrature.
const NORM_INTERVALS: usize = 1 << 14;
const NORM_DECAY_LENGTHS: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeNorms {
    /// Multiplies the raw ground (or first Floquet) profile.
    pub first: f64,
    /// Multiplies the raw excited (or second Floquet) profile.
    pub second: f64,
    /// Dynamic case: normalizers of `ψ1 ± ψ2`, and whether `+` is the right well.
    pub plus: f64,
    pub minus: f64,
    pub plus_is_left: bool,
}

/// One of the three benchmark systems with its normalization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSystem {
    config: SystemConfig,
    norms: ModeNorms,
    certified: bool,
}

impl WaveguideSystem {
    /// Validates the parameters, establishes regularity (certificate or scan)
    /// and fixes all normalization constants by unit input power.
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let certified = match config {
            SystemConfig::PtDynamic(p) => {
                let c = p.certified();
                if !c {
                    scan_dynamic(&config, &p)?;
                }
                c
            }
            _ => true,
        };
        let mut sys = Self {
            config,
            norms: ModeNorms {
                first: 1.0,
                second: 1.0,
                plus: 1.0,
                minus: 1.0,
                plus_is_left: true,
            },
            certified,
        };
        sys.norms = sys.compute_norms()?;
        Ok(sys)
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn norms(&self) -> &ModeNorms {
        &self.norms
    }

    /// Whether regularity follows from the analytic bound rather than a scan.
    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn periods(&self) -> Result<Periods> {
        self.config.periods()
    }

    /// `(E_g, E_e)` for static systems, quasi-energies `(ε1, ε2)` for the
    /// z-periodic one. Both are `(−k2², −k1²)`.
    pub fn energies(&self) -> (f64, f64) {
        let (k1, k2) = match self.config {
            SystemConfig::HermitianStatic(p) => (p.k1, p.k2),
            SystemConfig::PtStatic(p) => (p.k1, p.k2),
            SystemConfig::PtDynamic(p) => (p.k1, p.k2),
        };
        (-k2 * k2, -k1 * k1)
    }

    pub fn potential(&self, x: f64, z: f64) -> Result<C64> {
        match self.config {
            SystemConfig::HermitianStatic(p) => {
                Ok(C64::new(formulas::hermitian_potential(&p, x), 0.0))
            }
            SystemConfig::PtStatic(p) => Ok(formulas::pt_static_potential(&p, x)),
            SystemConfig::PtDynamic(p) => dynamic_potential(&p, &HTerms::at(&p, x), x, z),
        }
    }

    /// Cached evaluator of `V(·, z)` on fixed abscissae.
    pub fn sampler(&self, xs: &[f64]) -> Result<PotentialSampler> {
        match self.config {
            SystemConfig::PtDynamic(p) => Ok(PotentialSampler::Dynamic {
                params: p,
                xs: xs.to_vec(),
                terms: xs.iter().map(|&x| HTerms::at(&p, x)).collect(),
            }),
            _ => Ok(PotentialSampler::Static(
                xs.iter()
                    .map(|&x| self.potential(x, 0.0))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    /// Raw first/second profiles at `(x, z)` including their z-phase.
    fn raw_pair(&self, x: f64, z: f64) -> (C64, C64) {
        match self.config {
            SystemConfig::HermitianStatic(p) => (
                C64::from_polar(formulas::hermitian_ground(&p, x), p.k2 * p.k2 * z),
                C64::from_polar(formulas::hermitian_excited(&p, x), p.k1 * p.k1 * z),
            ),
            SystemConfig::PtStatic(p) => (
                formulas::pt_static_ground(&p, x) * C64::from_polar(1.0, p.k2 * p.k2 * z),
                formulas::pt_static_excited(&p, x) * C64::from_polar(1.0, p.k1 * p.k1 * z),
            ),
            SystemConfig::PtDynamic(p) => (
                formulas::dynamic_floquet1(&p, x, z),
                formulas::dynamic_floquet2(&p, x, z),
            ),
        }
    }

    fn unsupported(&self, kind: ModeKind) -> Error {
        Error::UnsupportedMode {
            mode: kind.name().to_string(),
            system: self.config.name(),
        }
    }

    /// Normalized guided mode at `(x, z)`.
    pub fn mode(&self, kind: ModeKind, x: f64, z: f64) -> Result<C64> {
        let (a, b) = self.raw_pair(x, z);
        let (g, e) = (a * self.norms.first, b * self.norms.second);
        let stat = self.config.is_static();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match kind {
            ModeKind::Ground | ModeKind::Excited if !stat => Err(self.unsupported(kind)),
            ModeKind::Floquet1 | ModeKind::Floquet2 if stat => Err(self.unsupported(kind)),
            ModeKind::Ground | ModeKind::Floquet1 => Ok(g),
            ModeKind::Excited | ModeKind::Floquet2 => Ok(e),
            ModeKind::Left if stat => Ok((g - e) * s),
            ModeKind::Right if stat => Ok((g + e) * s),
            ModeKind::Left | ModeKind::Right => {
                let want_plus = (kind == ModeKind::Left) == self.norms.plus_is_left;
                Ok(if want_plus {
                    (g + e) * self.norms.plus
                } else {
                    (g - e) * self.norms.minus
                })
            }
        }
    }

    /// Mode sampled on a set of abscissae.
    pub fn mode_on(&self, kind: ModeKind, xs: &[f64], z: f64) -> Result<Vec<C64>> {
        xs.iter().map(|&x| self.mode(kind, x, z)).collect()
    }

    /// Half-width and intervals of the grid used for normalization.
    pub fn normalization_grid(&self) -> (f64, usize) {
        let (k_max, decay) = match self.config {
            SystemConfig::HermitianStatic(p) => (p.k1.abs() + p.k2.abs(), p.k1.abs()),
            SystemConfig::PtStatic(p) => (p.k1.abs() + p.k2.abs(), p.k1.abs()),
            SystemConfig::PtDynamic(p) => (
                p.k1.abs() + p.k2.abs(),
                self.config.decay_rate(),
            ),
        };
        // keep cosh² products of the closed forms inside f64 range
        let half = (NORM_DECAY_LENGTHS / decay).min(300.0 / k_max);
        (half, NORM_INTERVALS)
    }

    fn compute_norms(&self) -> Result<ModeNorms> {
        let (half, n) = self.normalization_grid();
        let spec = crate::quadrature::QuadratureSpec {
            half_width: half,
            nodes: n,
            rule: crate::quadrature::QuadratureRule::Simpson,
            tail_tolerance: 0.0,
        };
        let xs = spec.grid().points();
        let w = spec.weights();
        let pairs: Vec<(C64, C64)> = xs.iter().map(|&x| self.raw_pair(x, 0.0)).collect();
        let power = |f: &dyn Fn(&(C64, C64)) -> C64| -> f64 {
            pairs.iter().zip(&w).map(|(p, w)| f(p).norm_sqr() * w).sum()
        };
        let pa = power(&|p| p.0);
        let pb = power(&|p| p.1);
        if !(pa > 0.0 && pb > 0.0) || !pa.is_finite() || !pb.is_finite() {
            return Err(Error::QuadratureNotConverged(
                "mode power is not finite and positive".into(),
            ));
        }
        let (first, second) = (pa.sqrt().recip(), pb.sqrt().recip());
        let mut norms = ModeNorms {
            first,
            second,
            plus: 1.0,
            minus: 1.0,
            plus_is_left: true,
        };
        if !self.config.is_static() {
            let plus = |p: &(C64, C64)| p.0 * first + p.1 * second;
            let minus = |p: &(C64, C64)| p.0 * first - p.1 * second;
            norms.plus = power(&plus).sqrt().recip();
            norms.minus = power(&minus).sqrt().recip();
            let centroid: f64 = pairs
                .iter()
                .zip(xs.iter().zip(&w))
                .map(|(p, (x, w))| plus(p).norm_sqr() * x * w)
                .sum();
            norms.plus_is_left = centroid < 0.0;
        }
        Ok(norms)
    }
}

fn dynamic_potential(p: &PtDynamicParams, h: &HTerms, x: f64, z: f64) -> Result<C64> {
    let e = C64::from_polar(1.0, (p.k1 * p.k1 - p.k3 * p.k3) * z);
    h.potential(p.alpha, e, NODE_THRESHOLD)
        .map_err(|magnitude| Error::Singular {
            what: "Wronskian",
            x,
            z,
            magnitude,
        })
}

fn scan_dynamic(config: &SystemConfig, p: &PtDynamicParams) -> Result<()> {
    let (u1, u2) = config.seeds();
    let half = 10.0 / p.k1.abs();
    let grid = SamplingGrid {
        x_min: -half,
        x_max: half,
        nx: 801,
        z_min: 0.0,
        z_max: p.modulation_period(),
        nz: 257,
    };
    let scan = regularity_scan(&u1, &u2, &grid, NODE_THRESHOLD);
    if scan.nodeless {
        Ok(())
    } else {
        Err(Error::NotRegular(format!(
            "Wronskian has a node near (x, z) = ({:.4}, {:.4}); min |W| = {:e}",
            scan.argmin.0, scan.argmin.1, scan.min_abs_w
        )))
    }
}

/// Potential on fixed abscissae, cached for static systems and reduced to a
/// few x-only terms for the z-periodic one.
#[derive(Debug, Clone)]
pub enum PotentialSampler {
    Static(Vec<C64>),
    Dynamic {
        params: PtDynamicParams,
        xs: Vec<f64>,
        terms: Vec<HTerms>,
    },
}

impl PotentialSampler {
    pub fn len(&self) -> usize {
        match self {
            PotentialSampler::Static(v) => v.len(),
            PotentialSampler::Dynamic { xs, .. } => xs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_static(&self) -> bool {
        matches!(self, PotentialSampler::Static(_))
    }

    pub fn fill(&self, z: f64, out: &mut [C64]) -> Result<()> {
        match self {
            PotentialSampler::Static(v) => {
                out.copy_from_slice(v);
                Ok(())
            }
            PotentialSampler::Dynamic { params, xs, terms } => {
                for ((o, h), &x) in out.iter_mut().zip(terms).zip(xs) {
                    *o = dynamic_potential(params, h, x, z)?;
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, z: f64) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        self.fill(z, &mut out)?;
        Ok(out)
    }
}
