//! Closed-form potentials and raw (unnormalized) guided modes.

use num_complex::Complex64 as C64;

use super::params::{HermitianStaticParams, PtDynamicParams, PtStaticParams};

const I: C64 = C64::new(0.0, 1.0);

fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

pub(crate) fn hermitian_w(p: &HermitianStaticParams, x: f64) -> f64 {
    let (k1, k2) = (p.k1, p.k2);
    k2 * (k1 * x).cosh() * (k2 * x).cosh() - k1 * (k1 * x).sinh() * (k2 * x).sinh()
}

pub(crate) fn hermitian_potential(p: &HermitianStaticParams, x: f64) -> f64 {
    let (k1, k2) = (p.k1, p.k2);
    let w = hermitian_w(p, x);
    (k1 * k1 - k2 * k2)
        * (k2 * k2 * (1.0 + (2.0 * k1 * x).cosh()) - k1 * k1 * (1.0 - (2.0 * k2 * x).cosh()))
        / (w * w)
}

pub(crate) fn hermitian_ground(p: &HermitianStaticParams, x: f64) -> f64 {
    let (k1, k2) = (p.k1, p.k2);
    k2 * (k2 * k2 - k1 * k1) * (k1 * x).cosh() / hermitian_w(p, x)
}

pub(crate) fn hermitian_excited(p: &HermitianStaticParams, x: f64) -> f64 {
    let (k1, k2) = (p.k1, p.k2);
    k1 * (k2 * k2 - k1 * k1) * (k2 * x).sinh() / hermitian_w(p, x)
}

fn pt_v1(p: &PtStaticParams, x: f64) -> C64 {
    C64::new((p.k1 * x).cosh(), p.alpha * (p.k1 * x).sinh())
}

pub(crate) fn pt_static_w(p: &PtStaticParams, x: f64) -> C64 {
    let (k1, k2) = (p.k1, p.k2);
    let v1 = pt_v1(p, x);
    let v1p = C64::new((k1 * x).sinh(), p.alpha * (k1 * x).cosh());
    k2 * (k2 * x).cosh() * v1 - k1 * (k2 * x).sinh() * v1p
}

pub(crate) fn pt_static_potential(p: &PtStaticParams, x: f64) -> C64 {
    let (k1, k2, a) = (p.k1, p.k2, p.alpha);
    let w = pt_static_w(p, x);
    let v1 = pt_v1(p, x);
    let s2 = (k2 * x).sinh();
    2.0 * (k1 * k1 - k2 * k2) / (w * w) * (k2 * k2 * v1 * v1 + re(k1 * k1 * (1.0 + a * a) * s2 * s2))
}

pub(crate) fn pt_static_ground(p: &PtStaticParams, x: f64) -> C64 {
    let (k1, k2) = (p.k1, p.k2);
    k2 * (k2 * k2 - k1 * k1) * pt_v1(p, x) / pt_static_w(p, x)
}

pub(crate) fn pt_static_excited(p: &PtStaticParams, x: f64) -> C64 {
    let (k1, k2) = (p.k1, p.k2);
    re(k1 * (k2 * k2 - k1 * k1) * (k2 * x).sinh()) / pt_static_w(p, x)
}

/// x-only building blocks of the z-periodic potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HTerms {
    pub(crate) h1: f64,
    pub(crate) h2: f64,
    pub(crate) h3: f64,
    pub(crate) h4: f64,
    pub(crate) h8: f64,
}

impl HTerms {
    pub(crate) fn at(p: &PtDynamicParams, x: f64) -> Self {
        let (k1, k2, k3) = (p.k1, p.k2, p.k3);
        let (c1, s1) = ((k1 * x).cosh(), (k1 * x).sinh());
        let (c2, s2) = ((k2 * x).cosh(), (k2 * x).sinh());
        let (c3, s3) = ((k3 * x).cosh(), (k3 * x).sinh());
        let (k1s, k2s, k3s) = (k1 * k1, k2 * k2, k3 * k3);
        let h1 = k2 * c1 * c2 - k1 * s1 * s2;
        let h2 = k2 * c2 * s3 - k3 * c3 * s2;
        let h3 = (k1s - k2s) * (2.0 * k1s * s2 * s2 + k2s * (1.0 + (2.0 * k1 * x).cosh()));
        let h4 = 2.0 * (k2s - k3s) * (k2s * s3 * s3 - k3s * s2 * s2);
        let h5 = 2.0 * k1 * k3 * (k1s - 2.0 * k2s + k3s) * c3 * s1 * s2 * s2;
        let h6 = (4.0 * k2s * k2s - 4.0 * k1s * k3s * s2 * s2
            + k2s * (k1s + k3s) * ((2.0 * k2 * x).cosh() - 3.0))
            * c1
            * s3;
        let h7 = k2 * (k1s - k3s) * (k3 * c1 * c3 - k1 * s1 * s3) * (2.0 * k2 * x).sinh();
        Self {
            h1,
            h2,
            h3,
            h4,
            h8: h5 + h6 + h7,
        }
    }

    /// Potential at phase `e = e^{i(k1²−k3²)z}`; `None` when the denominator
    /// falls below `threshold` relative to its scale.
    pub(crate) fn potential(&self, alpha: f64, e: C64, threshold: f64) -> Result<C64, f64> {
        let a2 = alpha * alpha;
        let einv = e.conj();
        let num = self.h3 * e + a2 * self.h4 * einv - I * alpha * self.h8;
        let den = self.h1 * self.h1 * e - a2 * self.h2 * self.h2 * einv
            + 2.0 * I * alpha * self.h1 * self.h2;
        let scale = self.h1 * self.h1 + a2 * self.h2 * self.h2 + 2.0 * (alpha * self.h1 * self.h2).abs();
        let mag = den.norm();
        if mag <= threshold * scale {
            Err(mag / scale)
        } else {
            Ok(num / den)
        }
    }
}

/// `W(u1, u2)` with `u2 = sinh k2x e^{ik2²z}`.
pub(crate) fn dynamic_w(p: &PtDynamicParams, x: f64, z: f64) -> C64 {
    let h = HTerms::at(p, x);
    let e1 = C64::from_polar(1.0, p.k1 * p.k1 * z);
    let e2 = C64::from_polar(1.0, p.k2 * p.k2 * z);
    let e3 = C64::from_polar(1.0, p.k3 * p.k3 * z);
    e2 * (e1 * h.h1 + I * p.alpha * e3 * h.h2)
}

/// Floquet mode with quasi-energy `−k2²`.
pub(crate) fn dynamic_floquet1(p: &PtDynamicParams, x: f64, z: f64) -> C64 {
    let (k1, k2, k3, a) = (p.k1, p.k2, p.k3, p.alpha);
    let e1 = C64::from_polar(1.0, k1 * k1 * z);
    let e3 = C64::from_polar(1.0, k3 * k3 * z);
    let lead = C64::from_polar(k2, 2.0 * k2 * k2 * z);
    let bracket = e1 * ((k2 * k2 - k1 * k1) * (k1 * x).cosh())
        + I * a * e3 * ((k2 * k2 - k3 * k3) * (k3 * x).sinh());
    lead * bracket / dynamic_w(p, x, z)
}

/// Floquet mode with quasi-energy `−k1²`.
pub(crate) fn dynamic_floquet2(p: &PtDynamicParams, x: f64, z: f64) -> C64 {
    let (k1, k2, k3, a) = (p.k1, p.k2, p.k3, p.alpha);
    let (k1s, k2s, k3s) = (k1 * k1, k2 * k2, k3 * k3);
    let d = C64::from_polar(1.0, (k1s - k3s) * z);
    let s2 = (k2 * x).sinh();
    let q = k1 - k3;
    let big_k = k2 * (k1s - k3s) * (k2 * x).cosh() * (q * x).cosh()
        + (k1 + k3) * (k1 * k3 - k2s) * s2 * (q * x).sinh();
    let bracket = d * (k1 * (k1s - k2s) * s2) + d.conj() * (a * a * k3 * (k3s - k2s) * s2)
        - I * a * big_k;
    C64::from_polar(1.0, (k1s + k2s + k3s) * z) * bracket / dynamic_w(p, x, z)
}
