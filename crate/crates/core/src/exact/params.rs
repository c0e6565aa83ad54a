use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric Hermitian double well from `v1 = cosh k1x`, `v2 = i sinh k2x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianStaticParams {
    pub k1: f64,
    pub k2: f64,
}

impl HermitianStaticParams {
    pub fn validate(&self) -> Result<()> {
        finite(&[self.k1, self.k2])?;
        if self.k1 == 0.0 {
            return Err(Error::invalid("k1 must be nonzero"));
        }
        if self.k2.abs() <= self.k1.abs() {
            return Err(Error::invalid(format!(
                "regularity requires |k2| > |k1| (k1 = {}, k2 = {})",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

/// Static PT double well from `v1 = cosh k1x + iα sinh k1x`, `v2 = i sinh k2x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtStaticParams {
    pub k1: f64,
    pub k2: f64,
    pub alpha: f64,
}

impl PtStaticParams {
    pub fn validate(&self) -> Result<()> {
        finite(&[self.k1, self.k2, self.alpha])?;
        if self.k1 == 0.0 {
            return Err(Error::invalid("k1 must be nonzero"));
        }
        if self.k2.abs() <= self.k1.abs() {
            return Err(Error::invalid(format!(
                "regularity requires |k2| > |k1| (k1 = {}, k2 = {})",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

/// z-periodic PT double well from
/// `u1 = cosh k1x e^{ik1²z} + iα sinh k3x e^{ik3²z}`, `u2 = sinh k2x e^{ik2²z}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtDynamicParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub alpha: f64,
}

impl PtDynamicParams {
    pub fn validate(&self) -> Result<()> {
        finite(&[self.k1, self.k2, self.k3, self.alpha])?;
        let (a1, a2, a3) = (self.k1.abs(), self.k2.abs(), self.k3.abs());
        if !(a3 < a1 && a1 < a2) {
            return Err(Error::invalid(format!(
                "regularity requires |k3| < |k1| < |k2| (k1 = {}, k2 = {}, k3 = {})",
                self.k1, self.k2, self.k3
            )));
        }
        if self.alpha != 0.0 && self.k3 == 0.0 {
            return Err(Error::invalid(
                "k3 must be nonzero when alpha != 0 (guided modes would not decay)",
            ));
        }
        Ok(())
    }

    /// Sufficient nodeless bound `(1 − |k1|/|k2|) > |α| (1 + |k3|/|k2|)`.
    pub fn certified(&self) -> bool {
        let (a1, a2, a3) = (self.k1.abs(), self.k2.abs(), self.k3.abs());
        (1.0 - a1 / a2) > self.alpha.abs() * (1.0 + a3 / a2)
    }

    pub fn modulation_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.k1 * self.k1 - self.k3 * self.k3)
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("parameters must be finite"))
    }
}
