//! Beat lengths, modulation periods and rational repetition lengths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RATIONAL_TOLERANCE: f64 = 1e-9;
pub const MAX_DENOMINATOR: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    /// `k2²/(k1²−k3²) ≈ n/q`
    pub n: u64,
    /// `k1²/(k1²−k3²) ≈ m/q`
    pub m: u64,
    pub q: u64,
    /// `lcm(n, m)·T_V`
    pub t_rep: f64,
    /// Smallest multiple of `T_V` after which both Floquet phases return (up to a common phase).
    pub t_revival: f64,
    /// Smallest multiple of `T_V` after which the relative Floquet phase returns,
    /// i.e. the intensity pattern repeats.
    pub t_intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Periods {
    /// Static systems: `T = 2π/(k2²−k1²)`.
    Beat { t: f64 },
    /// z-periodic systems: `T_V = 2π/(k1²−k3²)`.
    Modulated {
        t_v: f64,
        repetition: Option<Repetition>,
    },
}

impl Periods {
    pub fn base(&self) -> f64 {
        match *self {
            Periods::Beat { t } => t,
            Periods::Modulated { t_v, .. } => t_v,
        }
    }
}

pub fn beat_length(k1: f64, k2: f64) -> Result<f64> {
    let d = k2 * k2 - k1 * k1;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::invalid("beat length undefined for |k1| = |k2|"));
    }
    Ok(2.0 * PI / d.abs())
}

pub fn modulation_periods(k1: f64, k2: f64, k3: f64) -> Result<Periods> {
    let d = k1 * k1 - k3 * k3;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::invalid("modulation period undefined for |k1| = |k3|"));
    }
    let t_v = 2.0 * PI / d.abs();
    let repetition = common_rational(k2 * k2 / d, k1 * k1 / d, RATIONAL_TOLERANCE, MAX_DENOMINATOR)
        .ok()
        .map(|(n, m, q)| {
            let n_rev = lcm(q / gcd(n, q), q / gcd(m, q));
            let diff = n.abs_diff(m);
            let n_int = if diff == 0 { 1 } else { q / gcd(diff, q) };
            Repetition {
                n,
                m,
                q,
                t_rep: lcm(n, m) as f64 * t_v,
                t_revival: n_rev as f64 * t_v,
                t_intensity: n_int as f64 * t_v,
            }
        });
    Ok(Periods::Modulated { t_v, repetition })
}

/// Continued-fraction convergents of `r`; returns the first `(p, q)` with
/// `|r − p/q| < tol` and `q ≤ max_q`.
pub fn rational_approx(r: f64, tol: f64, max_q: u64) -> Result<(i64, u64)> {
    if !r.is_finite() {
        return Err(Error::Irrational);
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_q as i128 {
            break;
        }
        if (r - p2 as f64 / q2 as f64).abs() < tol {
            return Ok((p2 as i64, q2 as u64));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = x - a;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    Err(Error::Irrational)
}

/// Smallest common denominator `q` with `r1 ≈ n/q`, `r2 ≈ m/q` (both within `tol`).
pub fn common_rational(r1: f64, r2: f64, tol: f64, max_q: u64) -> Result<(u64, u64, u64)> {
    let (p1, q1) = rational_approx(r1, tol, max_q)?;
    let (p2, q2) = rational_approx(r2, tol, max_q)?;
    let q = lcm(q1, q2);
    if q > max_q || p1 < 0 || p2 < 0 {
        return Err(Error::Irrational);
    }
    let n = p1 as u64 * (q / q1);
    let m = p2 as u64 * (q / q2);
    Ok((n, m, q))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_beat_length() {
        let t = beat_length(0.645, 0.865).unwrap();
        assert!((t - 2.0 * PI / (0.865f64.powi(2) - 0.645f64.powi(2))).abs() < 1e-12);
        assert!((t - 18.913).abs() < 1e-3);
    }

    #[test]
    fn dynamic_repetition() {
        let p = modulation_periods(1.0, 1.1, 0.95).unwrap();
        let Periods::Modulated { t_v, repetition } = p else {
            panic!("expected modulated periods")
        };
        assert!((t_v - 2.0 * PI / 0.0975).abs() < 1e-9);
        let r = repetition.unwrap();
        assert_eq!((r.n, r.m, r.q), (484, 400, 39));
        assert!((r.t_rep - 48400.0 * t_v).abs() < 1e-6);
        assert!((r.t_revival - 39.0 * t_v).abs() < 1e-9);
        assert!((r.t_intensity - 13.0 * t_v).abs() < 1e-9);
    }

    #[test]
    fn degenerate_modulation() {
        assert!(modulation_periods(1.0, 1.1, 1.0).is_err());
        assert!(modulation_periods(1.0, 1.1, -1.0).is_err());
    }

    #[test]
    fn irrational_ratio() {
        assert!(matches!(
            rational_approx(std::f64::consts::E, 1e-15, 1000),
            Err(Error::Irrational)
        ));
        assert_eq!(rational_approx(0.75, 1e-9, 100).unwrap(), (3, 4));
    }
}
