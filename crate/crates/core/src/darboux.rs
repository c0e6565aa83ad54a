//! First- and second-order Darboux transformations of the free paraxial
//! equation, with the factor functions ℓ₁ = ℓ₂ = 1.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{DerivativeBundle, SeedSuperposition};

/// Relative magnitude below which a seed or Wronskian counts as vanishing.
pub const NODE_THRESHOLD: f64 = 1e-10;

/// `W(u1,u2) = u1 ∂x u2 − ∂x u1 u2` with its partials up to `∂x³` and `∂z`.
pub fn wronskian_bundle(
    u1: &SeedSuperposition,
    u2: &SeedSuperposition,
    x: f64,
    z: f64,
) -> DerivativeBundle {
    let a: [C64; 5] = std::array::from_fn(|n| u1.partial(n as u32, 0, x, z));
    let b: [C64; 5] = std::array::from_fn(|n| u2.partial(n as u32, 0, x, z));
    let az = [u1.partial(0, 1, x, z), u1.partial(1, 1, x, z)];
    let bz = [u2.partial(0, 1, x, z), u2.partial(1, 1, x, z)];
    DerivativeBundle {
        value: a[0] * b[1] - a[1] * b[0],
        d1x: a[0] * b[2] - a[2] * b[0],
        d2x: a[1] * b[2] + a[0] * b[3] - a[3] * b[0] - a[2] * b[1],
        d3x: a[2] * b[2] + 2.0 * a[1] * b[3] + a[0] * b[4]
            - a[4] * b[0]
            - 2.0 * a[3] * b[1]
            - a[2] * b[2],
        d1z: az[0] * b[1] + a[0] * bz[1] - az[1] * b[0] - a[1] * bz[0],
    }
}

/// Scale of the two products forming the Wronskian; nodes are judged against it.
fn wronskian_scale(u1: &SeedSuperposition, u2: &SeedSuperposition, x: f64, z: f64) -> f64 {
    let a0 = u1.value(x, z).norm();
    let a1 = u1.partial(1, 0, x, z).norm();
    let b0 = u2.value(x, z).norm();
    let b1 = u2.partial(1, 0, x, z).norm();
    (a0 * b1 + a1 * b0).max(f64::MIN_POSITIVE)
}

fn check_node(value: C64, scale: f64, what: &'static str, x: f64, z: f64) -> Result<()> {
    if value.norm() < NODE_THRESHOLD * scale || !value.is_finite() {
        return Err(Error::Singular {
            what,
            x,
            z,
            magnitude: value.norm(),
        });
    }
    Ok(())
}

/// `−2 ∂x² ln u` at `(x, z)`; the time-dependent first-order potential over `V₀ = 0`.
pub fn first_order_potential_at(u: &SeedSuperposition, x: f64, z: f64) -> Result<C64> {
    let b = u.bundle(x, z);
    check_node(b.value, u.scale(x), "seed", x, z)?;
    let r1 = b.d1x / b.value;
    Ok(-2.0 * (b.d2x / b.value - r1 * r1))
}

/// Stationary first-order potential `V₁ = −2 ∂x² ln v` (seed evaluated at z = 0).
pub fn first_order_potential(v: &SeedSuperposition, x: f64) -> Result<C64> {
    first_order_potential_at(v, x, 0.0)
}

/// `V₂ = −2 ∂x² ln W(u1,u2)`.
pub fn second_order_potential(
    u1: &SeedSuperposition,
    u2: &SeedSuperposition,
    x: f64,
    z: f64,
) -> Result<C64> {
    let w = wronskian_bundle(u1, u2, x, z);
    check_node(w.value, wronskian_scale(u1, u2, x, z), "Wronskian", x, z)?;
    let r1 = w.d1x / w.value;
    Ok(-2.0 * (w.d2x / w.value - r1 * r1))
}

/// First-order stationary intertwiner `A₁ f = f' − (v'/v) f`.
pub fn apply_a1(v: &SeedSuperposition, f: &SeedSuperposition, x: f64) -> Result<C64> {
    let vb = v.bundle(x, 0.0);
    check_node(vb.value, v.scale(x), "seed", x, 0.0)?;
    let fb = f.bundle(x, 0.0);
    Ok(fb.d1x - vb.d1x / vb.value * fb.value)
}

/// Second-order intertwiner
/// `L₁₂ f = [W f'' − W' f' + W(u1', u2') f] / W`.
pub fn apply_l12(
    u1: &SeedSuperposition,
    u2: &SeedSuperposition,
    f: &SeedSuperposition,
    x: f64,
    z: f64,
) -> Result<C64> {
    let w = wronskian_bundle(u1, u2, x, z);
    check_node(w.value, wronskian_scale(u1, u2, x, z), "Wronskian", x, z)?;
    let a1 = u1.partial(1, 0, x, z);
    let a2 = u1.partial(2, 0, x, z);
    let b1 = u2.partial(1, 0, x, z);
    let b2 = u2.partial(2, 0, x, z);
    let w_primes = a1 * b2 - a2 * b1;
    let fb = f.bundle(x, z);
    Ok((w.value * fb.d2x - w.d1x * fb.d1x + w_primes * fb.value) / w.value)
}

/// The seeds defining a transformation.
#[derive(Debug, Clone, Copy)]
pub enum TransformSeeds<'a> {
    First(&'a SeedSuperposition),
    Second(&'a SeedSuperposition, &'a SeedSuperposition),
}

impl TransformSeeds<'_> {
    pub fn potential(&self, x: f64, z: f64) -> Result<C64> {
        match *self {
            TransformSeeds::First(u) => first_order_potential_at(u, x, z),
            TransformSeeds::Second(u1, u2) => second_order_potential(u1, u2, x, z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    Hermitian1st,
    PxT1st,
    P2T1st,
    Hermitian2nd,
    P2T2nd,
    StationaryHermitian,
    StationaryPxT,
}

impl SymmetryKind {
    fn stationary(self) -> bool {
        matches!(self, SymmetryKind::StationaryHermitian | SymmetryKind::StationaryPxT)
    }
}

/// Rectangular `(x, z)` sampling; `nz = 1` samples only `z_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
}

impl SamplingGrid {
    pub fn stationary(x_min: f64, x_max: f64, nx: usize) -> Self {
        Self {
            x_min,
            x_max,
            nx,
            z_min: 0.0,
            z_max: 0.0,
            nz: 1,
        }
    }

    fn axis(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n <= 1 {
            min
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        Self::axis(self.x_min, self.x_max, self.nx, i)
    }

    pub fn z(&self, j: usize) -> f64 {
        Self::axis(self.z_min, self.z_max, self.nz, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResidual {
    pub kind: SymmetryKind,
    pub max_abs_residual: f64,
    pub grid: SamplingGrid,
}

/// Checks a Hermiticity or PT condition through the induced potential:
/// Hermitian → `|Im V|`, PxT → `|V(x,z) − V*(−x,z)|`, P₂T → `|V(x,z) − V*(−x,−z)|`.
pub fn symmetry_residual(
    kind: SymmetryKind,
    seeds: TransformSeeds<'_>,
    grid: &SamplingGrid,
) -> Result<SymmetryResidual> {
    let nz = if kind.stationary() { 1 } else { grid.nz };
    let node = |e: Error| match e {
        Error::Singular { what, x, z, .. } => Error::NodeOnGrid { what, x, z },
        other => other,
    };
    let mut worst = 0.0f64;
    for j in 0..nz {
        let z = if kind.stationary() { 0.0 } else { grid.z(j) };
        for i in 0..grid.nx {
            let x = grid.x(i);
            let v = seeds.potential(x, z).map_err(node)?;
            let r = match kind {
                SymmetryKind::Hermitian1st
                | SymmetryKind::Hermitian2nd
                | SymmetryKind::StationaryHermitian => v.im.abs(),
                SymmetryKind::PxT1st | SymmetryKind::StationaryPxT => {
                    (v - seeds.potential(-x, z).map_err(node)?.conj()).norm()
                }
                SymmetryKind::P2T1st | SymmetryKind::P2T2nd => {
                    (v - seeds.potential(-x, -z).map_err(node)?.conj()).norm()
                }
            };
            worst = worst.max(r);
        }
    }
    Ok(SymmetryResidual {
        kind,
        max_abs_residual: worst,
        grid: *grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityScan {
    pub min_abs_w: f64,
    pub max_abs_w: f64,
    pub argmin: (f64, f64),
    /// Grid cells across which W passes through (or next to) zero.
    pub crossings: usize,
    pub nodeless: bool,
}

/// Scans `|W(u1,u2)|` over a grid.
///
/// A node is declared when `|W|` drops below `floor × max|W|` anywhere, or when
/// W sweeps through the origin between neighbouring samples (sign change along
/// x, or nonzero winding around a grid cell).
pub fn regularity_scan(
    u1: &SeedSuperposition,
    u2: &SeedSuperposition,
    grid: &SamplingGrid,
    floor: f64,
) -> RegularityScan {
    let nx = grid.nx.max(2);
    let nz = grid.nz.max(1);
    let mut values = vec![C64::new(0.0, 0.0); nx * nz];
    let mut min_abs = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut argmin = (grid.x(0), grid.z(0));
    for j in 0..nz {
        let z = grid.z(j);
        for i in 0..nx {
            let x = SamplingGrid::axis(grid.x_min, grid.x_max, nx, i);
            let w = wronskian_bundle(u1, u2, x, z).value;
            values[j * nx + i] = w;
            let a = w.norm();
            if a < min_abs {
                min_abs = a;
                argmin = (x, z);
            }
            max_abs = max_abs.max(a);
        }
    }
    let mut crossings = 0;
    // along x: an angle above 90° between neighbours means W passed the origin
    for j in 0..nz {
        for i in 0..nx - 1 {
            let a = values[j * nx + i];
            let b = values[j * nx + i + 1];
            if (a * b.conj()).re < 0.0 {
                crossings += 1;
            }
        }
    }
    // winding around cells catches complex zeros missed by the x-sweep
    if nz > 1 {
        for j in 0..nz - 1 {
            for i in 0..nx - 1 {
                let corners = [
                    values[j * nx + i],
                    values[j * nx + i + 1],
                    values[(j + 1) * nx + i + 1],
                    values[(j + 1) * nx + i],
                ];
                let mut winding = 0.0;
                for c in 0..4 {
                    winding += (corners[(c + 1) % 4] / corners[c]).arg();
                }
                if winding.abs() > std::f64::consts::PI {
                    crossings += 1;
                }
            }
        }
    }
    let nodeless = crossings == 0 && min_abs >= floor * max_abs && min_abs > 0.0;
    RegularityScan {
        min_abs_w: min_abs,
        max_abs_w: max_abs,
        argmin,
        crossings,
        nodeless,
    }
}
