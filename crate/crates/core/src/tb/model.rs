use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::basis::{WellBasis, WellKind};
use crate::error::{Error, Result};
use crate::exact::{PotentialSampler, WaveguideSystem};
use crate::quadrature::{Metric, QuadratureSpec};

/// Potential entering the TB Hamiltonian `H = −∂x² + V`.
#[derive(Debug, Clone)]
pub enum PotentialBinding {
    /// `V_TB = Σ_j V0_j`; matrix elements follow analytically from the
    /// single-well eigen-equations.
    Superposition,
    /// The exact system potential `V_S(x, z)`, z-dependent for modulated systems.
    Exact(Box<WaveguideSystem>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingKind {
    Superposition,
    Exact,
}

/// Tight-binding model over a fixed set of localized wells.
///
/// Matrix elements are quadratures on the symmetric grid of `quad`; under the
/// PT metric the second argument of every product is read at `−x`.
#[derive(Debug, Clone)]
pub struct TbModel {
    wells: Vec<WellBasis>,
    metric: Metric,
    binding: PotentialBinding,
    quad: QuadratureSpec,
    xs: Vec<f64>,
    s: DMatrix<C64>,
    /// Full H for z-independent models; the potential-free part otherwise.
    h_fixed: DMatrix<C64>,
    /// Pair kernels `w_m φ_i*(x_m) φ_j(x_m')` for the z-dependent part.
    kernels: Vec<Vec<C64>>,
    sampler: Option<PotentialSampler>,
}

fn weighted(metric: Metric, f: &[C64], g: &[C64], w: &[f64]) -> C64 {
    crate::quadrature::weighted_inner(f, g, w, metric)
}

impl TbModel {
    pub fn new(
        wells: Vec<WellBasis>,
        metric: Metric,
        binding: PotentialBinding,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        if wells.is_empty() {
            return Err(Error::invalid("a TB model needs at least one well"));
        }
        for w in &wells {
            w.validate()?;
        }
        quad.validate()?;
        let n = wells.len();
        let grid = quad.grid();
        let xs = grid.points();
        let w = quad.weights();
        let phi: Vec<Vec<C64>> = wells
            .iter()
            .map(|b| xs.iter().map(|&x| b.mode(x)).collect())
            .collect();
        let v_tb: Vec<C64> = xs
            .iter()
            .map(|&x| wells.iter().map(|b| b.potential(x)).sum())
            .collect();

        let s = DMatrix::from_fn(n, n, |i, j| weighted(metric, &phi[i], &phi[j], &w));

        // H φ_j = (β_j + V − V0_j) φ_j; the V part is either V_TB or V_S.
        let own: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                xs.iter()
                    .zip(&phi[j])
                    .map(|(&x, &p)| (wells[j].beta() - wells[j].potential(x)) * p)
                    .collect()
            })
            .collect();

        let mut sampler = None;
        let mut kernels = Vec::new();
        let h_fixed = match &binding {
            PotentialBinding::Superposition => DMatrix::from_fn(n, n, |i, j| {
                let hphi: Vec<C64> = own[j]
                    .iter()
                    .zip(&phi[j])
                    .zip(&v_tb)
                    .map(|((o, p), v)| o + v * p)
                    .collect();
                weighted(metric, &phi[i], &hphi, &w)
            }),
            PotentialBinding::Exact(system) => {
                let base = DMatrix::from_fn(n, n, |i, j| weighted(metric, &phi[i], &own[j], &w));
                let smp = system.sampler(&xs)?;
                let len = xs.len();
                kernels = (0..n * n)
                    .map(|ij| {
                        let (i, j) = (ij / n, ij % n);
                        (0..len)
                            .map(|m| {
                                let mm = match metric {
                                    Metric::Dirac => m,
                                    Metric::Pt => len - 1 - m,
                                };
                                phi[i][m].conj() * phi[j][mm] * w[m]
                            })
                            .collect()
                    })
                    .collect();
                if smp.is_static() {
                    let v = smp.at(0.0)?;
                    let h = base + Self::potential_block(&kernels, n, metric, &v);
                    kernels.clear();
                    h
                } else {
                    sampler = Some(smp);
                    base
                }
            }
        };

        let model = Self {
            wells,
            metric,
            binding,
            quad,
            xs,
            s,
            h_fixed,
            kernels,
            sampler,
        };
        model.check_tail()?;
        Ok(model)
    }

    /// Two wells at `∓x0` (index 0 is the left well).
    pub fn two_well(
        kind: WellKind,
        x0: f64,
        k: f64,
        alpha_tilde: f64,
        metric: Metric,
        binding: PotentialBinding,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        let make = |c| match kind {
            WellKind::Hermitian => WellBasis::hermitian(k, c),
            WellKind::Pt => WellBasis::pt(k, alpha_tilde, c),
        };
        Self::new(vec![make(-x0), make(x0)], metric, binding, quad)
    }

    /// Default quadrature covering all wells: `L = max|x_j| + 12/min|k|`.
    pub fn default_quadrature(wells: &[WellBasis]) -> QuadratureSpec {
        let reach = wells.iter().map(|w| w.center.abs()).fold(0.0, f64::max);
        let k_min = wells.iter().map(|w| w.k.abs()).fold(f64::INFINITY, f64::min);
        QuadratureSpec {
            half_width: reach + 12.0 / k_min,
            ..QuadratureSpec::for_decay(k_min)
        }
    }

    fn potential_block(kernels: &[Vec<C64>], n: usize, metric: Metric, v: &[C64]) -> DMatrix<C64> {
        let len = v.len();
        DMatrix::from_fn(n, n, |i, j| {
            let k = &kernels[i * n + j];
            match metric {
                Metric::Dirac => k.iter().zip(v).map(|(a, b)| a * b).sum(),
                Metric::Pt => (0..len).map(|m| k[m] * v[len - 1 - m]).sum(),
            }
        })
    }

    fn check_tail(&self) -> Result<()> {
        let wide = QuadratureSpec {
            half_width: 2.0 * self.quad.half_width,
            nodes: 2 * self.quad.nodes,
            ..self.quad
        };
        let xs = wide.grid().points();
        let w = wide.weights();
        let n = self.wells.len();
        let phi: Vec<Vec<C64>> = self
            .wells
            .iter()
            .map(|b| xs.iter().map(|&x| b.mode(x)).collect())
            .collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = weighted(self.metric, &phi[i], &phi[j], &w) - self.s[(i, j)];
                worst = worst.max(d.norm());
            }
        }
        if worst > self.quad.tail_tolerance {
            return Err(Error::QuadratureNotConverged(format!(
                "overlap matrix changed by {worst:e} when the domain was doubled (L = {})",
                self.quad.half_width
            )));
        }
        Ok(())
    }

    pub fn wells(&self) -> &[WellBasis] {
        &self.wells
    }

    pub fn dimension(&self) -> usize {
        self.wells.len()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn binding(&self) -> &PotentialBinding {
        &self.binding
    }

    pub fn binding_kind(&self) -> BindingKind {
        match self.binding {
            PotentialBinding::Superposition => BindingKind::Superposition,
            PotentialBinding::Exact(_) => BindingKind::Exact,
        }
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn grid_points(&self) -> &[f64] {
        &self.xs
    }

    pub fn is_z_dependent(&self) -> bool {
        self.sampler.is_some()
    }

    pub fn overlap(&self) -> &DMatrix<C64> {
        &self.s
    }

    /// Hamiltonian matrix at `z` (ignored for z-independent models).
    pub fn hamiltonian(&self, z: f64) -> Result<DMatrix<C64>> {
        match &self.sampler {
            None => Ok(self.h_fixed.clone()),
            Some(smp) => {
                let v = smp.at(z)?;
                Ok(&self.h_fixed
                    + Self::potential_block(&self.kernels, self.wells.len(), self.metric, &v))
            }
        }
    }

    /// `V_TB(x) = Σ_j V0_j(x)`.
    pub fn tb_potential(&self, x: f64) -> C64 {
        self.wells.iter().map(|b| b.potential(x)).sum()
    }

    /// `Σ_j c_j φ_j(x)`.
    pub fn state(&self, c: &[C64], x: f64) -> C64 {
        debug_assert_eq!(c.len(), self.wells.len());
        self.wells.iter().zip(c).map(|(b, cj)| cj * b.mode(x)).sum()
    }

    pub fn state_on(&self, c: &[C64], xs: &[f64]) -> Vec<C64> {
        xs.iter().map(|&x| self.state(c, x)).collect()
    }

    /// Dirac power `∫|Σ c_j φ_j|²` on the model grid.
    pub fn dirac_power(&self, c: &[C64]) -> f64 {
        let f = self.state_on(c, &self.xs);
        weighted(Metric::Dirac, &f, &f, &self.quad.weights()).re
    }

    /// Coefficients of the Dirac least-squares fit of `f` by the basis,
    /// `G c = b` with `G_ij = (φ_i, φ_j)` and `b_i = (φ_i, f)`.
    pub fn project(&self, f: &dyn Fn(f64) -> C64) -> Result<Vec<C64>> {
        let w = self.quad.weights();
        let target: Vec<C64> = self.xs.iter().map(|&x| f(x)).collect();
        let phi: Vec<Vec<C64>> = self
            .wells
            .iter()
            .map(|b| self.xs.iter().map(|&x| b.mode(x)).collect())
            .collect();
        let n = self.wells.len();
        let g = DMatrix::from_fn(n, n, |i, j| weighted(Metric::Dirac, &phi[i], &phi[j], &w));
        let b = nalgebra::DVector::from_iterator(
            n,
            phi.iter().map(|p| weighted(Metric::Dirac, p, &target, &w)),
        );
        let c = g
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Eigen("singular Dirac Gram matrix in projection".into()))?;
        Ok(c.iter().copied().collect())
    }
}
