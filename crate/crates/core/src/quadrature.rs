//! Uniform symmetric grids, composite quadrature, and the Dirac / PT inner
//! products over them.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `(f, g) = ∫ f*(x) g(x) dx`
    Dirac,
    /// `(f, g) = ∫ f*(x) g(−x) dx`
    Pt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

/// Quadrature over `[−L, L]` split into `nodes` equal intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub half_width: f64,
    pub nodes: usize,
    pub rule: QuadratureRule,
    /// Allowed change of an integral when the domain is doubled.
    pub tail_tolerance: f64,
}

impl QuadratureSpec {
    /// Default for fields decaying like `sech(k x)`: `L = 12 / k_min`, 4096 intervals, Simpson.
    pub fn for_decay(k_min: f64) -> Self {
        Self {
            half_width: 12.0 / k_min.abs(),
            nodes: 4096,
            rule: QuadratureRule::Simpson,
            tail_tolerance: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::invalid("quadrature half-width must be positive"));
        }
        if self.nodes < 64 {
            return Err(Error::invalid("quadrature needs at least 64 nodes"));
        }
        if self.rule == QuadratureRule::Simpson && self.nodes % 2 != 0 {
            return Err(Error::invalid("Simpson quadrature needs an even interval count"));
        }
        Ok(())
    }

    pub fn grid(&self) -> UniformGrid {
        UniformGrid::new(self.half_width, self.nodes)
    }

    pub fn weights(&self) -> Vec<f64> {
        let grid = self.grid();
        let h = grid.spacing();
        let n = self.nodes;
        (0..=n)
            .map(|i| match self.rule {
                QuadratureRule::Trapezoid => {
                    if i == 0 || i == n {
                        0.5 * h
                    } else {
                        h
                    }
                }
                QuadratureRule::Simpson => {
                    if i == 0 || i == n {
                        h / 3.0
                    } else if i % 2 == 1 {
                        4.0 * h / 3.0
                    } else {
                        2.0 * h / 3.0
                    }
                }
            })
            .collect()
    }

    fn doubled(&self) -> Self {
        Self {
            half_width: 2.0 * self.half_width,
            nodes: 2 * self.nodes,
            ..*self
        }
    }
}

/// Points `x_i = −L + i·2L/n`, `i = 0..=n`; symmetric about the origin so that
/// `x ↦ −x` is the index reversal `i ↦ n − i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub half_width: f64,
    pub intervals: usize,
}

impl UniformGrid {
    pub fn new(half_width: f64, intervals: usize) -> Self {
        Self {
            half_width,
            intervals,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i`; negative and out-of-range indices extend the grid.
    pub fn x(&self, i: isize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i as isize)).collect()
    }

    /// Points padded with `ghost` extra nodes on each side.
    pub fn padded_points(&self, ghost: usize) -> Vec<f64> {
        let g = ghost as isize;
        (-g..self.len() as isize + g).map(|i| self.x(i)).collect()
    }
}

/// `Σ w_i f_i* g_j` with `j = i` (Dirac) or `j = n − i` (PT).
pub fn weighted_inner(f: &[C64], g: &[C64], weights: &[f64], metric: Metric) -> C64 {
    let n = f.len();
    debug_assert_eq!(g.len(), n);
    debug_assert_eq!(weights.len(), n);
    match metric {
        Metric::Dirac => f
            .iter()
            .zip(g)
            .zip(weights)
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum(),
        Metric::Pt => f
            .iter()
            .zip(g.iter().rev())
            .zip(weights)
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum(),
    }
}

fn inner_on(
    f: &dyn Fn(f64) -> C64,
    g: &dyn Fn(f64) -> C64,
    metric: Metric,
    spec: &QuadratureSpec,
) -> C64 {
    let xs = spec.grid().points();
    let fs: Vec<C64> = xs.iter().map(|&x| f(x)).collect();
    let gs: Vec<C64> = xs.iter().map(|&x| g(x)).collect();
    weighted_inner(&fs, &gs, &spec.weights(), metric)
}

/// Inner product of two functions; fails when doubling the domain changes the
/// result by more than the tail tolerance.
pub fn inner_product(
    f: &dyn Fn(f64) -> C64,
    g: &dyn Fn(f64) -> C64,
    metric: Metric,
    spec: &QuadratureSpec,
) -> Result<C64> {
    spec.validate()?;
    let value = inner_on(f, g, metric, spec);
    let wide = inner_on(f, g, metric, &spec.doubled());
    let tail = (wide - value).norm();
    if tail > spec.tail_tolerance * value.norm().max(1.0) {
        return Err(Error::QuadratureNotConverged(format!(
            "domain doubling changed the integral by {tail:e} (L = {})",
            spec.half_width
        )));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: f64) -> QuadratureSpec {
        QuadratureSpec {
            half_width: l,
            nodes: 2048,
            rule: QuadratureRule::Simpson,
            tail_tolerance: 1e-10,
        }
    }

    #[test]
    fn grid_is_symmetric() {
        let g = UniformGrid::new(3.0, 64);
        let p = g.points();
        for i in 0..p.len() {
            assert!((p[i] + p[p.len() - 1 - i]).abs() < 1e-14);
        }
        assert_eq!(g.padded_points(4).len(), 65 + 8);
    }

    #[test]
    fn normalized_sech_has_unit_norm() {
        let k: f64 = 0.7454;
        let c = 1.0 / (2.0 * k).sqrt();
        let phi = |x: f64| C64::new(c * k / (k * x).cosh(), 0.0);
        let n = inner_product(&phi, &phi, Metric::Dirac, &spec(40.0)).unwrap();
        assert!((n - 1.0).norm() < 1e-10);
    }

    #[test]
    fn parity_orthogonality() {
        let even = |x: f64| C64::new((-x * x).exp() * (1.0 + x * x), 0.0);
        let odd = |x: f64| C64::new(x * (-x * x / 2.0).exp(), 0.0);
        let v = inner_product(&even, &odd, Metric::Dirac, &spec(15.0)).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn pt_equals_dirac_for_even_second_argument() {
        let f = |x: f64| C64::new((-(x - 0.5) * (x - 0.5)).exp(), 0.3 * x * (-x * x).exp());
        let g = |x: f64| C64::new(1.0 / (x.cosh()), 0.2 / (2.0 * x).cosh());
        let d = inner_product(&f, &g, Metric::Dirac, &spec(25.0)).unwrap();
        let p = inner_product(&f, &g, Metric::Pt, &spec(25.0)).unwrap();
        assert!((d - p).norm() < 1e-12);
    }

    #[test]
    fn truncated_domain_is_detected() {
        let slow = |x: f64| C64::new(1.0 / (0.2 * x).cosh(), 0.0);
        assert!(matches!(
            inner_product(&slow, &slow, Metric::Dirac, &spec(10.0)),
            Err(Error::QuadratureNotConverged(_))
        ));
    }

    #[test]
    fn simpson_needs_even_intervals() {
        let mut s = spec(5.0);
        s.nodes = 65;
        assert!(s.validate().is_err());
        s.nodes = 32;
        assert!(s.validate().is_err());
    }
}
