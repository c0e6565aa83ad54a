//! Crank–Nicolson propagation of `iψ_z = (−∂x² + V)ψ` and finite-difference
//! residual checks for closed-form solutions.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ModeKind, WaveguideSystem};
use crate::observables::{Engine, FieldSource};
use crate::quadrature::UniformGrid;

/// Power growth relative to the input that aborts a propagation.
pub const MAX_POWER_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// `ψ = 0` one node beyond each end of the grid.
    DirichletZero,
    /// Quartic-ramp loss `−i·strength·s⁴` over the outer `width` of each side.
    AbsorbingLayer { width: f64, strength: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationGrid {
    pub half_width: f64,
    /// Number of x nodes, ends included.
    pub nx: usize,
    pub dz: f64,
    pub z_end: f64,
    pub boundary: Boundary,
}

impl PropagationGrid {
    /// 4096 nodes over `±20/decay`, `dz = 0.01`, reflecting walls.
    pub fn for_system(system: &WaveguideSystem, z_end: f64) -> Self {
        Self {
            half_width: 20.0 / system.config().decay_rate(),
            nx: 4096,
            dz: 0.01,
            z_end,
            boundary: Boundary::DirichletZero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 256 {
            return Err(Error::invalid("propagation grid needs at least 256 nodes"));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::invalid("propagation half-width must be positive"));
        }
        if !(self.dz > 0.0) || !self.dz.is_finite() {
            return Err(Error::invalid("propagation step dz must be positive"));
        }
        if !(self.z_end >= 0.0) || !self.z_end.is_finite() {
            return Err(Error::invalid("propagation length must be non-negative"));
        }
        if let Boundary::AbsorbingLayer { width, strength } = self.boundary {
            if !(width > 0.0 && width < self.half_width) || !(strength >= 0.0) {
                return Err(Error::invalid(
                    "absorbing layer needs 0 < width < half-width and strength ≥ 0",
                ));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }

    pub fn uniform(&self) -> UniformGrid {
        UniformGrid::new(self.half_width, self.nx - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        self.uniform().points()
    }

    /// Diagnostic for `dz > dx`; the scheme stays stable but loses accuracy.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.dz > self.dx() {
            w.push(format!("dz = {} exceeds dx = {}", self.dz, self.dx()));
        }
        w
    }

    /// Loss rate of the absorbing layer at each node (zero for Dirichlet).
    pub fn absorption(&self) -> Vec<f64> {
        let xs = self.points();
        match self.boundary {
            Boundary::DirichletZero => vec![0.0; xs.len()],
            Boundary::AbsorbingLayer { width, strength } => xs
                .iter()
                .map(|x| {
                    let s = (x.abs() - (self.half_width - width)) / width;
                    if s > 0.0 {
                        strength * s.powi(4)
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub z: f64,
    pub samples: Vec<C64>,
}

impl FieldSnapshot {
    /// `Σ |ψ_i|² dx`.
    pub fn power(&self, dx: f64) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
    }
}

/// Solves `a_i y_{i−1} + b_i y_i + c_i y_{i+1} = d_i` in place of `d`.
fn thomas(a: C64, b: &mut [C64], c: C64, d: &mut [C64]) -> Result<()> {
    let n = b.len();
    const TINY: f64 = 1e-300;
    if b[0].norm() < TINY {
        return Err(Error::ZeroPivot(0));
    }
    for i in 1..n {
        let m = a / b[i - 1];
        b[i] -= m * c;
        if b[i].norm() < TINY {
            return Err(Error::ZeroPivot(i));
        }
        let prev = d[i - 1];
        d[i] -= m * prev;
    }
    d[n - 1] /= b[n - 1];
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] = (d[i] - c * next) / b[i];
    }
    Ok(())
}

/// One Crank–Nicolson step of length `dz` with `V` averaged over the step;
/// `loss` is added as `−i·loss` to the potential.
pub fn step(
    field: &[C64],
    v_now: &[C64],
    v_next: &[C64],
    loss: &[f64],
    dx: f64,
    dz: f64,
) -> Result<Vec<C64>> {
    let n = field.len();
    if v_now.len() != n || v_next.len() != n || loss.len() != n {
        return Err(Error::invalid("field and potential lengths differ"));
    }
    let r = C64::new(0.0, 0.5 * dz);
    let off = -1.0 / (dx * dx);
    let diag0 = 2.0 / (dx * dx);
    let h_diag = |i: usize| C64::new(diag0, 0.0) + 0.5 * (v_now[i] + v_next[i]) - C64::new(0.0, loss[i]);
    // right-hand side (1 − i dz/2 H) ψ
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut hpsi = h_diag(i) * field[i];
        if i > 0 {
            hpsi += field[i - 1] * off;
        }
        if i + 1 < n {
            hpsi += field[i + 1] * off;
        }
        rhs[i] = field[i] - r * hpsi;
    }
    let mut b: Vec<C64> = (0..n).map(|i| C64::new(1.0, 0.0) + r * h_diag(i)).collect();
    let side = r * off;
    thomas(side, &mut b, side, &mut rhs)?;
    Ok(rhs)
}

/// Fills `out` with `V(x_i, z)`.
pub type PotentialFn<'a> = dyn Fn(f64, &mut [C64]) -> Result<()> + 'a;

/// Propagates `initial` and returns snapshots at each requested `z` (sorted,
/// within `[0, z_end]`); steps are shortened to land on them exactly.
pub fn propagate(
    initial: &[C64],
    potential: &PotentialFn<'_>,
    grid: &PropagationGrid,
    z_out: &[f64],
) -> Result<Vec<FieldSnapshot>> {
    grid.validate()?;
    if initial.len() != grid.nx {
        return Err(Error::invalid(format!(
            "initial field has {} samples, grid has {}",
            initial.len(),
            grid.nx
        )));
    }
    if z_out.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("output z values must be sorted"));
    }
    if z_out.iter().any(|&z| z < 0.0 || z > grid.z_end * (1.0 + 1e-12)) {
        return Err(Error::invalid("output z outside [0, z_end]"));
    }
    let dx = grid.dx();
    let loss = grid.absorption();
    let p0 = initial.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
    let mut psi = initial.to_vec();
    let mut z = 0.0;
    let mut v_now = vec![C64::new(0.0, 0.0); grid.nx];
    let mut v_next = v_now.clone();
    potential(z, &mut v_now)?;
    let mut out = Vec::with_capacity(z_out.len());
    for &target in z_out {
        while target - z > 1e-12 * target.max(1.0) {
            let h = grid.dz.min(target - z);
            let z_next = if target - z - h <= 1e-12 * target.max(1.0) { target } else { z + h };
            potential(z_next, &mut v_next)?;
            psi = step(&psi, &v_now, &v_next, &loss, dx, z_next - z)?;
            std::mem::swap(&mut v_now, &mut v_next);
            z = z_next;
            let p = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
            if !p.is_finite() || p > MAX_POWER_GROWTH * p0.max(1e-300) {
                return Err(Error::Unstable { z, growth: p / p0.max(1e-300) });
            }
        }
        out.push(FieldSnapshot {
            z: target,
            samples: psi.clone(),
        });
    }
    Ok(out)
}

/// Propagates an exact mode from its `z = 0` profile under the system potential.
pub fn propagate_mode(
    system: &WaveguideSystem,
    kind: ModeKind,
    grid: &PropagationGrid,
    z_out: &[f64],
) -> Result<Vec<FieldSnapshot>> {
    grid.validate()?;
    let xs = grid.points();
    let initial = system.mode_on(kind, &xs, 0.0)?;
    let sampler = system.sampler(&xs)?;
    propagate(&initial, &|z, out| sampler.fill(z, out), grid, z_out)
}

/// Propagated snapshots exposed to the observable pipeline on their own grid.
pub struct BpmSource<'a> {
    pub grid: &'a PropagationGrid,
    pub snapshots: &'a [FieldSnapshot],
    pub system: &'a WaveguideSystem,
}

impl FieldSource for BpmSource<'_> {
    fn engine(&self) -> Engine {
        Engine::Bpm
    }

    fn sample(&self, xs: &[f64], z: f64, index: usize) -> Result<Vec<C64>> {
        let snap = self
            .snapshots
            .get(index)
            .ok_or_else(|| Error::invalid("fewer snapshots than z-samples"))?;
        if (snap.z - z).abs() > 1e-12 * z.abs().max(1.0) || xs.len() != snap.samples.len() {
            return Err(Error::invalid("snapshot does not match the requested sample"));
        }
        Ok(snap.samples.clone())
    }

    fn potential(&self, xs: &[f64], z: f64) -> Result<Vec<C64>> {
        xs.iter().map(|&x| self.system.potential(x, z)).collect()
    }

    fn native_grid(&self) -> Option<UniformGrid> {
        Some(self.grid.uniform())
    }
}

/// `‖a − b‖ / ‖b‖` on the grid.
pub fn relative_l2_error(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

/// `‖|a| − |b|‖ / ‖b‖` on the grid.
pub fn modulus_l2_error(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

const S1: [f64; 2] = [2.0 / 3.0, -1.0 / 12.0];
const S2: [f64; 3] = [-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];

/// Field evaluated at `(x, z)`.
pub type FieldFn<'a> = dyn Fn(f64, f64) -> Result<C64> + Sync + 'a;

/// `max |iψ_z + ψ_xx − Vψ|` over the interior nodes of `xs` × `zs`, with
/// fourth-order central stencils of spacing `hx` and `hz`.
pub fn pde_residual(
    psi: &FieldFn<'_>,
    potential: &FieldFn<'_>,
    xs: &[f64],
    zs: &[f64],
    hx: f64,
    hz: f64,
) -> Result<f64> {
    let worst: Vec<f64> = zs
        .par_iter()
        .map(|&z| -> Result<f64> {
            let mut m = 0.0f64;
            for &x in xs {
                let c = psi(x, z)?;
                let mut dxx = c * S2[0];
                let mut dz = C64::new(0.0, 0.0);
                for j in 1..=2 {
                    let o = j as f64;
                    dxx += (psi(x + o * hx, z)? + psi(x - o * hx, z)?) * S2[j];
                    dz += (psi(x, z + o * hz)? - psi(x, z - o * hz)?) * S1[j - 1];
                }
                let r = C64::i() * dz / hz + dxx / (hx * hx) - potential(x, z)? * c;
                m = m.max(r.norm());
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// `max |−ψ'' + Vψ − Eψ|` of a stationary profile, fourth-order in `hx`.
pub fn eigen_residual(
    psi: &(dyn Fn(f64) -> Result<C64> + Sync),
    potential: &(dyn Fn(f64) -> Result<C64> + Sync),
    energy: C64,
    xs: &[f64],
    hx: f64,
) -> Result<f64> {
    let r: Vec<f64> = xs
        .par_iter()
        .map(|&x| -> Result<f64> {
            let c = psi(x)?;
            let mut dxx = c * S2[0];
            for j in 1..=2 {
                let o = j as f64;
                dxx += (psi(x + o * hx)? + psi(x - o * hx)?) * S2[j];
            }
            Ok((-dxx / (hx * hx) + (potential(x)? - energy) * c).norm())
        })
        .collect::<Result<_>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

/// Residuals of an exact mode on the interior `xs` of `grid` at `nz` z-samples
/// over `[0, z_span]`; static modes use the eigen-residual.
pub fn mode_residual(
    system: &WaveguideSystem,
    kind: ModeKind,
    grid: &PropagationGrid,
    z_span: f64,
    nz: usize,
) -> Result<f64> {
    let xs: Vec<f64> = {
        let p = grid.points();
        p[2..p.len() - 2].to_vec()
    };
    let hx = grid.dx();
    if system.config().is_static() {
        let (eg, ee) = system.energies();
        let energy = match kind {
            ModeKind::Ground => eg,
            ModeKind::Excited => ee,
            _ => {
                let zs: Vec<f64> = (0..nz).map(|i| z_span * i as f64 / nz.max(1) as f64).collect();
                return pde_residual(
                    &|x, z| system.mode(kind, x, z),
                    &|x, z| system.potential(x, z),
                    &xs,
                    &zs,
                    hx,
                    grid.dz,
                );
            }
        };
        return eigen_residual(
            &|x| system.mode(kind, x, 0.0),
            &|x| system.potential(x, 0.0),
            C64::new(energy, 0.0),
            &xs,
            hx,
        );
    }
    let zs: Vec<f64> = (0..nz).map(|i| z_span * i as f64 / nz.max(1) as f64).collect();
    pde_residual(
        &|x, z| system.mode(kind, x, z),
        &|x, z| system.potential(x, z),
        &xs,
        &zs,
        hx,
        grid.dz,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solve() {
        let n = 6;
        let a = C64::new(-0.3, 0.1);
        let c = C64::new(-0.2, -0.4);
        let diag: Vec<C64> = (0..n).map(|i| C64::new(2.0 + i as f64, 0.5)).collect();
        let rhs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut b = diag.clone();
        let mut d = rhs.clone();
        thomas(a, &mut b, c, &mut d).unwrap();
        for i in 0..n {
            let mut s = diag[i] * d[i];
            if i > 0 {
                s += a * d[i - 1];
            }
            if i + 1 < n {
                s += c * d[i + 1];
            }
            assert!((s - rhs[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut b = vec![C64::new(0.0, 0.0); 3];
        let mut d = vec![C64::new(1.0, 0.0); 3];
        assert!(matches!(
            thomas(C64::new(1.0, 0.0), &mut b, C64::new(1.0, 0.0), &mut d),
            Err(Error::ZeroPivot(0))
        ));
    }

    #[test]
    fn layer_profile() {
        let g = PropagationGrid {
            half_width: 10.0,
            nx: 257,
            dz: 0.01,
            z_end: 1.0,
            boundary: Boundary::AbsorbingLayer { width: 2.0, strength: 3.0 },
        };
        let a = g.absorption();
        assert_eq!(a[128], 0.0);
        assert!((a[0] - 3.0).abs() < 1e-12 && (a[256] - 3.0).abs() < 1e-12);
        assert!(g.warnings().is_empty());
    }
}
