//! Tight-binding reduction: localized single-well bases, overlap and
//! Hamiltonian matrices, spectra, coupled-mode dynamics and Floquet analysis.

mod basis;
mod dynamics;
mod model;
mod spectrum;

pub use basis::{hermitian_kappa, overlap_kappa, WellBasis, WellKind};
pub use dynamics::{
    floquet_monodromy, propagate_coefficients, CoefficientTrajectory, FloquetResult, StepControl,
    MAX_EIGENVECTOR_CONDITION, MAX_OVERLAP_CONDITION,
};
pub use model::{BindingKind, PotentialBinding, TbModel};
pub use spectrum::{
    generalized_eigenvalues, gram_schmidt, mode_coefficients, quadratic_eigenvalues, solve_matrices,
    solve_spectrum,
    Spectrum, GS_BREAKDOWN,
};
