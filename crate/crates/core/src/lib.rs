//! Supersymmetric coupled-waveguide models: Darboux-transformed exact
//! potentials and modes, a tight-binding reduction calibrated against them,
//! beam-propagation validation, and the run harness around all three.

pub mod bpm;
pub mod calibrate;
pub mod darboux;
pub mod error;
pub mod exact;
pub mod harness;
pub mod observables;
pub mod quadrature;
pub mod seed;
pub mod tb;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use exact::{ModeKind, Periods, SystemConfig, WaveguideSystem};
pub use quadrature::{Metric, QuadratureRule, QuadratureSpec, UniformGrid};
pub use seed::{Parity, SeedSuperposition, SeedTerm};
