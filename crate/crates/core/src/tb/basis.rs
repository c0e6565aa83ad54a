use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellKind {
    Hermitian,
    Pt,
}

/// Isolated single-well mode `φ0 = C k / (cosh ks + iα̃ sinh ks)`, `s = x − center`,
/// bound with propagation constant `β = −k²` in
/// `V0 = −2k²(1 + α̃²) / (cosh ks + iα̃ sinh ks)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellBasis {
    pub kind: WellKind,
    pub k: f64,
    pub alpha_tilde: f64,
    pub center: f64,
}

impl WellBasis {
    pub fn hermitian(k: f64, center: f64) -> Self {
        Self {
            kind: WellKind::Hermitian,
            k,
            alpha_tilde: 0.0,
            center,
        }
    }

    pub fn pt(k: f64, alpha_tilde: f64, center: f64) -> Self {
        Self {
            kind: WellKind::Pt,
            k,
            alpha_tilde,
            center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.alpha_tilde.is_finite() && self.center.is_finite()) {
            return Err(Error::invalid("well parameters must be finite"));
        }
        if self.k == 0.0 {
            return Err(Error::invalid("well wavenumber k must be nonzero"));
        }
        if self.kind == WellKind::Hermitian && self.alpha_tilde != 0.0 {
            return Err(Error::invalid("hermitian wells carry no gain/loss parameter"));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        -self.k * self.k
    }

    /// `C` giving unit Dirac norm (Hermitian) or unit PT pseudo-norm of the
    /// well centred at the origin (PT).
    pub fn normalization(&self) -> f64 {
        let a = self.alpha_tilde;
        match self.kind {
            WellKind::Hermitian => (2.0 * self.k.abs()).sqrt().recip(),
            WellKind::Pt => ((1.0 + a * a) / (2.0 * self.k.abs())).sqrt(),
        }
    }

    /// `(cosh ks + iα̃ sinh ks) e^{−|ks|}` and `e^{−|ks|}`, overflow-free.
    fn scaled_denominator(&self, x: f64) -> (C64, f64) {
        let ks = self.k * (x - self.center);
        let t = ks.abs();
        let e = (-t).exp();
        let e2 = e * e;
        let sign = ks.signum();
        (
            C64::new(0.5 * (1.0 + e2), 0.5 * self.alpha_tilde * sign * (1.0 - e2)),
            e,
        )
    }

    pub fn potential(&self, x: f64) -> C64 {
        let (d, e) = self.scaled_denominator(x);
        let a = self.alpha_tilde;
        -2.0 * self.k * self.k * (1.0 + a * a) * e * e / (d * d)
    }

    pub fn mode(&self, x: f64) -> C64 {
        let (d, e) = self.scaled_denominator(x);
        self.normalization() * self.k * e / d
    }
}

/// Overlap `∫ φ*(x + x0) φ(x − x0) dx` of two copies of the well (centre
/// ignored) displaced to `∓x0`, each normalized as in [`WellBasis::normalization`].
pub fn overlap_kappa(b: &WellBasis, x0: f64, spec: &crate::quadrature::QuadratureSpec) -> Result<C64> {
    if !(x0 > 0.0) {
        return Err(Error::invalid("well separation x0 must be positive"));
    }
    let left = WellBasis { center: -x0, ..*b };
    let right = WellBasis { center: x0, ..*b };
    crate::quadrature::inner_product(
        &|x| left.mode(x),
        &|x| right.mode(x),
        crate::quadrature::Metric::Dirac,
        spec,
    )
}

/// Closed-form Hermitian overlap `2a / sinh 2a`, `a = k x0`.
pub fn hermitian_kappa(k: f64, x0: f64) -> f64 {
    let a = 2.0 * k.abs() * x0;
    if a == 0.0 {
        1.0
    } else {
        a / a.sinh()
    }
}
