use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::model::TbModel;
use super::spectrum::{condition_number, null_vector};
use crate::error::{Error, Result};

/// Overlap matrices above this condition number are rejected.
pub const MAX_OVERLAP_CONDITION: f64 = 1e12;
/// Monodromy eigenvector matrices above this condition number count as defective.
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepControl {
    /// Classic RK4 with at most `dz` per step (steps are evenly split between outputs).
    Fixed { dz: f64 },
    /// RK4 with step-doubling error control.
    Adaptive {
        tolerance: f64,
        initial: f64,
        min_step: f64,
    },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Fixed { dz: 0.01 }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepControl::Fixed { dz } if dz > 0.0 && dz.is_finite() => Ok(()),
            StepControl::Adaptive {
                tolerance,
                initial,
                min_step,
            } if tolerance > 0.0 && initial > 0.0 && min_step > 0.0 && min_step <= initial => {
                Ok(())
            }
            _ => Err(Error::invalid("step control needs positive step sizes and tolerance")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrajectory {
    pub z: Vec<f64>,
    pub c: Vec<Vec<C64>>,
}

/// `dY/dz = −i S⁻¹ H(z) Y` for a fixed model.
struct CoupledModes<'a> {
    model: &'a TbModel,
    s_inv: DMatrix<C64>,
    fixed: Option<DMatrix<C64>>,
}

impl<'a> CoupledModes<'a> {
    fn new(model: &'a TbModel) -> Result<Self> {
        let s = model.overlap();
        let cond = condition_number(s);
        if !(cond <= MAX_OVERLAP_CONDITION) {
            return Err(Error::IllConditioned(cond));
        }
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditioned(f64::INFINITY))?;
        let minus_i = C64::new(0.0, -1.0);
        let fixed = if model.is_z_dependent() {
            None
        } else {
            Some(&s_inv * model.hamiltonian(0.0)? * minus_i)
        };
        Ok(Self {
            model,
            s_inv: s_inv * minus_i,
            fixed,
        })
    }

    fn generator(&self, z: f64) -> Result<DMatrix<C64>> {
        match &self.fixed {
            Some(a) => Ok(a.clone()),
            None => Ok(&self.s_inv * self.model.hamiltonian(z)?),
        }
    }

    fn rk4(&self, z: f64, h: f64, y: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let a0 = self.generator(z)?;
        let am = self.generator(z + 0.5 * h)?;
        let a1 = self.generator(z + h)?;
        let hc = C64::new(h, 0.0);
        let k1 = &a0 * y;
        let k2 = &am * (y + &k1 * (hc * 0.5));
        let k3 = &am * (y + &k2 * (hc * 0.5));
        let k4 = &a1 * (y + &k3 * hc);
        let two = C64::new(2.0, 0.0);
        Ok(y + (k1 + k2 * two + k3 * two + k4) * (hc / 6.0))
    }

    /// Advances `y` from `z0` to `z1`.
    fn advance(&self, z0: f64, z1: f64, y: DMatrix<C64>, control: &StepControl) -> Result<DMatrix<C64>> {
        let span = z1 - z0;
        if span == 0.0 {
            return Ok(y);
        }
        match *control {
            StepControl::Fixed { dz } => {
                let steps = (span.abs() / dz).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                let mut y = y;
                for s in 0..steps {
                    y = self.rk4(z0 + s as f64 * h, h, &y)?;
                }
                Ok(y)
            }
            StepControl::Adaptive {
                tolerance,
                initial,
                min_step,
            } => {
                let dir = span.signum();
                let mut h = initial.min(span.abs());
                let mut z = z0;
                let mut y = y;
                while (z1 - z) * dir > 0.0 {
                    h = h.min((z1 - z).abs());
                    let full = self.rk4(z, dir * h, &y)?;
                    let half = self.rk4(z, 0.5 * dir * h, &y)?;
                    let two = self.rk4(z + 0.5 * dir * h, 0.5 * dir * h, &half)?;
                    let err = (&two - &full).norm() / 15.0;
                    let scale = two.norm().max(1.0);
                    if err <= tolerance * scale {
                        z += dir * h;
                        y = two;
                        let grow = if err == 0.0 {
                            2.0
                        } else {
                            (0.9 * (tolerance * scale / err).powf(0.2)).clamp(0.2, 2.0)
                        };
                        h *= grow;
                    } else {
                        h *= (0.9 * (tolerance * scale / err).powf(0.2)).clamp(0.1, 0.9);
                        if h < min_step {
                            return Err(Error::StepUnderflow { z, step: h });
                        }
                    }
                }
                Ok(y)
            }
        }
    }
}

/// Integrates `i S ċ = H(z) c` from `c0` at `z_grid[0]` and samples on `z_grid`.
pub fn propagate_coefficients(
    model: &TbModel,
    c0: &[C64],
    z_grid: &[f64],
    control: &StepControl,
) -> Result<CoefficientTrajectory> {
    control.validate()?;
    if c0.len() != model.dimension() {
        return Err(Error::invalid(format!(
            "initial coefficient vector has length {}, model has {} wells",
            c0.len(),
            model.dimension()
        )));
    }
    if z_grid.is_empty() || z_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("z-grid must be non-empty and strictly increasing"));
    }
    let sys = CoupledModes::new(model)?;
    let mut y = DMatrix::from_column_slice(c0.len(), 1, c0);
    let mut out = Vec::with_capacity(z_grid.len());
    out.push(c0.to_vec());
    for w in z_grid.windows(2) {
        y = sys.advance(w[0], w[1], y, control)?;
        out.push(y.iter().copied().collect());
    }
    Ok(CoefficientTrajectory {
        z: z_grid.to_vec(),
        c: out,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetResult {
    pub period: f64,
    pub monodromy: Vec<Vec<C64>>,
    /// Eigenvalues `λ_j = e^{−iε_j T}`.
    pub multipliers: Vec<C64>,
    /// `ε_j = i ln λ_j / T` moved by whole multiples of `2π/T` towards the references.
    pub quasi_energies: Vec<C64>,
    /// The multiple of `2π/T` added to each principal-branch value.
    pub branch_shifts: Vec<i64>,
    pub vectors: Vec<Vec<C64>>,
    pub eigenvector_condition: f64,
    pub reconstruction_error: f64,
    /// `|Π λ_j|`, one for a power-neutral cycle.
    pub determinant_modulus: f64,
}

/// One-period propagator of the coefficient equations and its eigen-decomposition.
///
/// `references` are real estimates of the quasi-energies (for example the
/// static spectrum); each multiplier is matched to the nearest unused one.
pub fn floquet_monodromy(
    model: &TbModel,
    period: f64,
    control: &StepControl,
    references: &[f64],
) -> Result<FloquetResult> {
    control.validate()?;
    if !(period > 0.0) {
        return Err(Error::invalid("Floquet period must be positive"));
    }
    let n = model.dimension();
    let sys = CoupledModes::new(model)?;
    let m = sys.advance(0.0, period, DMatrix::identity(n, n), control)?;
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let lambdas: Vec<C64> = schur
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("Schur form is not triangular".into()))?
        .iter()
        .copied()
        .collect();

    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (j, l) in lambdas.iter().enumerate() {
        let v = null_vector(&(&m - DMatrix::<C64>::identity(n, n) * *l))?;
        vecs.set_column(j, &v);
    }
    let cond = condition_number(&vecs);
    if !(cond <= MAX_EIGENVECTOR_CONDITION) {
        return Err(Error::DefectiveMonodromy(cond));
    }
    let inv = vecs
        .clone()
        .try_inverse()
        .ok_or(Error::DefectiveMonodromy(f64::INFINITY))?;
    let recon = &vecs * DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone())) * inv;
    let reconstruction_error = (&recon - &m).norm();

    let omega = 2.0 * std::f64::consts::PI / period;
    let i = C64::new(0.0, 1.0);
    let principal: Vec<C64> = lambdas.iter().map(|l| i * l.ln() / period).collect();
    let mut used = vec![false; references.len()];
    let mut quasi = Vec::with_capacity(n);
    let mut shifts = Vec::with_capacity(n);
    for e in &principal {
        let mut best: Option<(usize, i64, f64)> = None;
        for (r, &target) in references.iter().enumerate() {
            if used[r] {
                continue;
            }
            let s = ((target - e.re) / omega).round() as i64;
            let d = (e.re + s as f64 * omega - target).abs();
            if best.is_none_or(|b| d < b.2) {
                best = Some((r, s, d));
            }
        }
        let s = match best {
            Some((r, s, _)) => {
                used[r] = true;
                s
            }
            None => 0,
        };
        shifts.push(s);
        quasi.push(e + s as f64 * omega);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| quasi[a].re.total_cmp(&quasi[b].re));
    let det: C64 = lambdas.iter().product();
    Ok(FloquetResult {
        period,
        monodromy: (0..n).map(|r| m.row(r).iter().copied().collect()).collect(),
        multipliers: order.iter().map(|&j| lambdas[j]).collect(),
        quasi_energies: order.iter().map(|&j| quasi[j]).collect(),
        branch_shifts: order.iter().map(|&j| shifts[j]).collect(),
        vectors: order
            .iter()
            .map(|&j| vecs.column(j).iter().copied().collect())
            .collect(),
        eigenvector_condition: cond,
        reconstruction_error,
        determinant_modulus: det.norm(),
    })
}
