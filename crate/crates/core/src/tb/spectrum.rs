use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::model::TbModel;
use crate::exact::{ModeKind, WaveguideSystem};
use crate::error::{Error, Result};

/// Pseudo-norm magnitude below which Gram–Schmidt reports a breakdown.
pub const GS_BREAKDOWN: f64 = 1e-10;

/// Metric-aware Gram–Schmidt on the basis with overlap matrix `s`.
///
/// Returns the upper-triangular coefficient matrix `Q` (orthogonalized basis
/// `φ̃ = Φ Q`) and the pseudo-norms `σ_n = (φ̃_n, φ̃_n)`, which are `±1` for a
/// Hermitian overlap matrix (`σ = +1` under the Dirac metric).
pub fn gram_schmidt(s: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<C64>)> {
    let n = s.nrows();
    let mut q = DMatrix::<C64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let form = |a: &DVector<C64>, b: &DVector<C64>| (a.adjoint() * s * b)[(0, 0)];
    for j in 0..n {
        let mut chi = DVector::<C64>::zeros(n);
        chi[j] = C64::new(1.0, 0.0);
        let phi_j = chi.clone();
        for mu in 0..j {
            let t = q.column(mu).into_owned();
            let proj = form(&t, &phi_j) / sigma[mu];
            chi -= t * proj;
        }
        let nn = form(&chi, &chi);
        if nn.norm() < GS_BREAKDOWN {
            return Err(Error::GramSchmidtBreakdown {
                index: j,
                magnitude: nn.norm(),
            });
        }
        let root = nn.sqrt();
        let col = chi / root;
        sigma.push(form(&col, &col));
        q.set_column(j, &col);
    }
    Ok((q, sigma))
}

fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("Schur form is not triangular".into()))?;
    Ok(ev.iter().copied().collect())
}

/// Right null vector of `a` (smallest singular direction).
pub(crate) fn null_vector(a: &DMatrix<C64>) -> Result<DVector<C64>> {
    let svd = SVD::try_new(a.clone(), false, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen("SVD did not converge".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Eigen("SVD returned no V".into()))?;
    let last = v_t.nrows() - 1;
    Ok(v_t.row(last).adjoint())
}

pub(crate) fn condition_number(a: &DMatrix<C64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn sort_by_real(pairs: &mut [(C64, DVector<C64>)]) {
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
}

/// Eigenvalues of `H c = E S c` via `S⁻¹H`, sorted by real part.
pub fn generalized_eigenvalues(h: &DMatrix<C64>, s: &DMatrix<C64>) -> Result<Vec<C64>> {
    let lu = s.clone().lu();
    let m = lu
        .solve(h)
        .ok_or_else(|| Error::Eigen("overlap matrix is singular".into()))?;
    let mut ev = eigenvalues(&m)?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Roots of `det(H − E S) = 0` for 2×2 matrices, sorted by real part.
pub fn quadratic_eigenvalues(h: &DMatrix<C64>, s: &DMatrix<C64>) -> [C64; 2] {
    let a = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let b = -(h[(0, 0)] * s[(1, 1)] + h[(1, 1)] * s[(0, 0)]
        - h[(0, 1)] * s[(1, 0)]
        - h[(1, 0)] * s[(0, 1)]);
    let c = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
    let disc = (b * b - 4.0 * a * c).sqrt();
    // avoid cancellation between −b and the root
    let q = if (b.conj() * disc).re >= 0.0 {
        -0.5 * (b + disc)
    } else {
        -0.5 * (b - disc)
    };
    let (r1, r2) = if q.norm() == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (q / a, c / q)
    };
    if r1.re < r2.re || (r1.re == r2.re && r1.im <= r2.im) {
        [r1, r2]
    } else {
        [r2, r1]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    /// Eigenvalues from the orthogonalized standard problem, ascending real part.
    pub energies: Vec<C64>,
    /// Coefficient vectors in the original (non-orthogonal) basis.
    pub vectors: Vec<Vec<C64>>,
    /// Eigenvalues of the generalized problem solved directly.
    pub generalized: Vec<C64>,
    /// Closed-form roots, two-well models only.
    pub quadratic: Option<[C64; 2]>,
    /// Pseudo-norm signs recorded by Gram–Schmidt.
    pub pseudo_norms: Vec<C64>,
}

impl Spectrum {
    /// Largest disagreement between the solution paths.
    pub fn path_discrepancy(&self) -> f64 {
        let mut d = 0.0f64;
        for (a, b) in self.energies.iter().zip(&self.generalized) {
            d = d.max((a - b).norm());
        }
        if let Some(q) = self.quadratic {
            for (a, b) in self.energies.iter().zip(q.iter()) {
                d = d.max((a - b).norm());
            }
        }
        d
    }
}

/// Spectrum of a z-independent model: Gram–Schmidt, then a standard
/// eigensolve of `G⁻¹ Q†HQ`, cross-checked against the direct generalized solve.
pub fn solve_spectrum(model: &TbModel) -> Result<Spectrum> {
    if model.is_z_dependent() {
        return Err(Error::invalid("spectrum requires a z-independent model"));
    }
    let h = model.hamiltonian(0.0)?;
    let s = model.overlap();
    solve_matrices(&h, s)
}

pub fn solve_matrices(h: &DMatrix<C64>, s: &DMatrix<C64>) -> Result<Spectrum> {
    let n = h.nrows();
    let (q, sigma) = gram_schmidt(s)?;
    let mut m = q.adjoint() * h * &q;
    for (i, sg) in sigma.iter().enumerate() {
        let inv = sg.inv();
        for j in 0..n {
            m[(i, j)] *= inv;
        }
    }
    let ev = eigenvalues(&m)?;
    let mut pairs = Vec::with_capacity(n);
    for e in ev {
        let shifted = &m - DMatrix::<C64>::identity(n, n) * e;
        let d = null_vector(&shifted)?;
        let mut c = &q * d;
        let nrm = (c.adjoint() * s * &c)[(0, 0)].norm().sqrt();
        if nrm > 0.0 {
            c /= C64::new(nrm, 0.0);
        }
        // fix the global phase: largest component real and positive
        let big = c.iter().copied().fold(C64::new(0.0, 0.0), |acc, v| {
            if v.norm() > acc.norm() {
                v
            } else {
                acc
            }
        });
        if big.norm() > 0.0 {
            c *= big.conj() / big.norm();
        }
        pairs.push((e, c));
    }
    sort_by_real(&mut pairs);
    let generalized = generalized_eigenvalues(h, s)?;
    let quadratic = (n == 2).then(|| quadratic_eigenvalues(h, s));
    Ok(Spectrum {
        energies: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.iter().map(|p| p.1.iter().copied().collect()).collect(),
        generalized,
        quadratic,
        pseudo_norms: sigma,
    })
}

/// TB counterpart of an exact mode at `z = 0`, with unit Dirac power.
///
/// For z-independent models the ground and excited states are the TB
/// eigenvectors and `Left`/`Right` their normalized sum and difference, the
/// label following the dominant well. For z-dependent models the exact mode
/// of `reference` is projected onto the basis.
pub fn mode_coefficients(
    model: &TbModel,
    kind: ModeKind,
    reference: Option<&WaveguideSystem>,
) -> Result<Vec<C64>> {
    let unit = |c: Vec<C64>| -> Vec<C64> {
        let p = model.dirac_power(&c).sqrt();
        c.into_iter().map(|v| v / p).collect()
    };
    if model.is_z_dependent() {
        let sys = reference
            .ok_or_else(|| Error::invalid("a z-dependent model needs the exact system to project"))?;
        sys.mode(kind, 0.0, 0.0)?;
        let c = model.project(&|x| sys.mode(kind, x, 0.0).unwrap_or_default())?;
        return Ok(unit(c));
    }
    let sp = solve_spectrum(model)?;
    if sp.vectors.len() < 2 && kind != ModeKind::Ground {
        return Err(Error::UnsupportedMode {
            mode: kind.name().into(),
            system: "single-well",
        });
    }
    let g = unit(sp.vectors[0].clone());
    let pair = |sign: f64| -> Vec<C64> {
        let e = unit(sp.vectors[1].clone());
        unit(g.iter().zip(&e).map(|(a, b)| a + b * sign).collect())
    };
    let left_heavy = |c: &[C64]| {
        let wells = model.wells();
        let mut order: Vec<usize> = (0..wells.len()).collect();
        order.sort_by(|&i, &j| wells[i].center.total_cmp(&wells[j].center));
        c[order[0]].norm() >= c[order[order.len() - 1]].norm()
    };
    match kind {
        ModeKind::Ground => Ok(g),
        ModeKind::Excited => Ok(unit(sp.vectors[1].clone())),
        ModeKind::Left | ModeKind::Right => {
            let (a, b) = (pair(-1.0), pair(1.0));
            let a_left = left_heavy(&a);
            Ok(match (kind, a_left) {
                (ModeKind::Left, true) | (ModeKind::Right, false) => a,
                _ => b,
            })
        }
        ModeKind::Floquet1 | ModeKind::Floquet2 => Err(Error::UnsupportedMode {
            mode: kind.name().into(),
            system: "static tight-binding",
        }),
    }
}
