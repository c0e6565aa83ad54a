//! Free-particle seed functions built from hyperbolic even/odd terms.
//!
//! Every term solves `i ∂z u + ∂x² u = 0` and the family is closed under
//! differentiation, so all partials are evaluated exactly term by term.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// `A cosh(kx) e^{ik²z}` (even) or `i B sinh(kx) e^{ik²z}` (odd).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedTerm {
    pub parity: Parity,
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl SeedTerm {
    pub fn even(amplitude: f64, wavenumber: f64) -> Self {
        Self {
            parity: Parity::Even,
            amplitude,
            wavenumber,
        }
    }

    pub fn odd(amplitude: f64, wavenumber: f64) -> Self {
        Self {
            parity: Parity::Odd,
            amplitude,
            wavenumber,
        }
    }

    /// `∂x^nx ∂z^nz` of the term at `(x, z)`.
    pub fn partial(&self, nx: u32, nz: u32, x: f64, z: f64) -> C64 {
        let k = self.wavenumber;
        let k2 = k * k;
        let phase = C64::from_polar(1.0, k2 * z);
        let time_factor = C64::new(0.0, k2).powu(nz);
        let kn = k.powi(nx as i32);
        // cosh and sinh swap on every x-derivative
        let use_cosh = match self.parity {
            Parity::Even => nx % 2 == 0,
            Parity::Odd => nx % 2 == 1,
        };
        let hyper = if use_cosh { (k * x).cosh() } else { (k * x).sinh() };
        let prefactor = match self.parity {
            Parity::Even => C64::new(self.amplitude, 0.0),
            Parity::Odd => C64::new(0.0, self.amplitude),
        };
        prefactor * kn * hyper * phase * time_factor
    }

    /// Magnitude bound `|amplitude| cosh(kx)` used as a local scale.
    fn scale(&self, x: f64) -> f64 {
        self.amplitude.abs() * (self.wavenumber * x).cosh()
    }
}

/// Value and exact partials of a function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivativeBundle {
    pub value: C64,
    pub d1x: C64,
    pub d2x: C64,
    pub d3x: C64,
    pub d1z: C64,
}

/// A non-empty linear combination of seed terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSuperposition {
    terms: Vec<SeedTerm>,
}

impl SeedSuperposition {
    pub fn new(terms: Vec<SeedTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("seed superposition needs at least one term"));
        }
        if let Some(t) = terms
            .iter()
            .find(|t| !t.amplitude.is_finite() || !t.wavenumber.is_finite())
        {
            return Err(Error::invalid(format!("non-finite seed term {t:?}")));
        }
        Ok(Self { terms })
    }

    pub fn single(term: SeedTerm) -> Self {
        Self { terms: vec![term] }
    }

    pub fn terms(&self) -> &[SeedTerm] {
        &self.terms
    }

    pub fn partial(&self, nx: u32, nz: u32, x: f64, z: f64) -> C64 {
        self.terms.iter().map(|t| t.partial(nx, nz, x, z)).sum()
    }

    pub fn value(&self, x: f64, z: f64) -> C64 {
        self.partial(0, 0, x, z)
    }

    /// Sum of term magnitudes; the reference against which nodes are declared.
    pub fn scale(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.scale(x)).sum()
    }

    pub fn bundle(&self, x: f64, z: f64) -> DerivativeBundle {
        DerivativeBundle {
            value: self.partial(0, 0, x, z),
            d1x: self.partial(1, 0, x, z),
            d2x: self.partial(2, 0, x, z),
            d3x: self.partial(3, 0, x, z),
            d1z: self.partial(0, 1, x, z),
        }
    }
}

/// Evaluates a seed and its exact partials.
pub fn eval_seed(u: &SeedSuperposition, x: f64, z: f64) -> DerivativeBundle {
    u.bundle(x, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_term_at_origin() {
        let u = SeedSuperposition::single(SeedTerm::even(1.0, 1.0));
        let b = eval_seed(&u, 0.0, 0.0);
        assert!((b.value - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(b.d1x.norm() < 1e-15);
        assert!((b.d1z - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn odd_term_at_origin() {
        let u = SeedSuperposition::single(SeedTerm::odd(1.0, 2.0));
        let b = eval_seed(&u, 0.0, 0.0);
        assert!(b.value.norm() < 1e-15);
        assert!((b.d1x - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_superposition_rejected() {
        assert!(SeedSuperposition::new(vec![]).is_err());
        assert!(SeedSuperposition::new(vec![SeedTerm::even(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let u = SeedSuperposition::new(vec![
            SeedTerm::even(1.0, 1.0),
            SeedTerm::odd(0.5, 0.95),
            SeedTerm::odd(-0.3, 1.3),
        ])
        .unwrap();
        let h = 1e-4;
        for &(x, z) in &[(0.3, 0.7), (-1.1, 2.0), (2.2, -0.4)] {
            let b = u.bundle(x, z);
            let fd = |f: &dyn Fn(f64) -> C64, p: f64| (f(p + h) - f(p - h)) / (2.0 * h);
            let dx = fd(&|p| u.value(p, z), x);
            let d2 = fd(&|p| u.partial(1, 0, p, z), x);
            let d3 = fd(&|p| u.partial(2, 0, p, z), x);
            let dz = fd(&|p| u.value(x, p), z);
            for (a, n) in [(b.d1x, dx), (b.d2x, d2), (b.d3x, d3), (b.d1z, dz)] {
                assert!((a - n).norm() / a.norm().max(1e-3) < 1e-6, "{a} vs {n}");
            }
        }
    }

    proptest! {
        #[test]
        fn free_equation_holds(
            a in -2.0f64..2.0, b in -2.0f64..2.0,
            ka in 0.1f64..1.5, kb in 0.1f64..1.5,
            x in -5.0f64..5.0, z in -10.0f64..10.0,
        ) {
            let u = SeedSuperposition::new(vec![SeedTerm::even(a, ka), SeedTerm::odd(b, kb)]).unwrap();
            let bd = u.bundle(x, z);
            let residual = C64::i() * bd.d1z + bd.d2x;
            let scale = u.scale(x).max(1.0) * (ka * ka + kb * kb);
            prop_assert!(residual.norm() / scale < 1e-12);
        }
    }
}
