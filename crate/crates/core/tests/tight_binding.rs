use nalgebra::DMatrix;
use proptest::prelude::*;
use susy_tb::exact::{HermitianStaticParams, PtDynamicParams};
use susy_tb::quadrature::{inner_product, Metric, QuadratureRule, QuadratureSpec};
use susy_tb::tb::{
    floquet_monodromy, gram_schmidt, hermitian_kappa, overlap_kappa, propagate_coefficients,
    solve_matrices, solve_spectrum, PotentialBinding, StepControl, TbModel, WellBasis, WellKind,
};
use susy_tb::{Error, SystemConfig, WaveguideSystem, C64};

fn quad(l: f64) -> QuadratureSpec {
    QuadratureSpec {
        half_width: l,
        nodes: 4096,
        rule: QuadratureRule::Simpson,
        tail_tolerance: 1e-9,
    }
}

fn hermitian_pair(x0: f64, k: f64) -> TbModel {
    TbModel::two_well(
        WellKind::Hermitian,
        x0,
        k,
        0.0,
        Metric::Dirac,
        PotentialBinding::Superposition,
        quad(x0 + 12.0 / k),
    )
    .unwrap()
}

fn d2(f: &dyn Fn(f64) -> C64, x: f64, h: f64) -> C64 {
    let c = [-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0];
    let mut s = f(x) * c[0];
    for (j, cj) in c.iter().enumerate().skip(1) {
        let o = j as f64 * h;
        s += (f(x + o) + f(x - o)) * *cj;
    }
    s / (h * h)
}

#[test]
fn single_well_values() {
    let b = WellBasis::hermitian(0.7454, 0.4);
    let v = b.potential(0.4);
    assert!((v.re + 2.0 * 0.7454f64.powi(2)).abs() < 1e-12 && v.im == 0.0);
    assert!((v.re + 1.11124).abs() < 1e-5);
    let p = WellBasis::pt(0.7454, 0.0, 0.4);
    for i in -50..=50 {
        let x = 0.2 * i as f64;
        assert!((p.potential(x) - b.potential(x)).norm() < 1e-15);
        assert!((p.mode(x) - b.mode(x)).norm() < 1e-15);
    }
}

#[test]
fn two_pt_wells_are_jointly_pxt_symmetric() {
    let m = TbModel::two_well(
        WellKind::Pt,
        1.65,
        1.14,
        0.21,
        Metric::Pt,
        PotentialBinding::Superposition,
        quad(15.0),
    )
    .unwrap();
    for i in -200..=200 {
        let x = 0.05 * i as f64;
        assert!((m.tb_potential(x) - m.tb_potential(-x).conj()).norm() < 1e-12);
    }
}

#[test]
fn single_well_modes() {
    let b = WellBasis::hermitian(0.7454, 0.0);
    let f = |x: f64| b.mode(x);
    let n = inner_product(&f, &f, Metric::Dirac, &quad(30.0)).unwrap();
    assert!((n - 1.0).norm() < 1e-10);
    for kind in [WellBasis::hermitian(0.9, 0.3), WellBasis::pt(1.14, 0.21, -0.5)] {
        let g = |x: f64| kind.mode(x);
        for i in -40..=40 {
            let x = 0.25 * i as f64;
            let r = -d2(&g, x, 0.01) + (kind.potential(x) - kind.beta()) * g(x);
            assert!(r.norm() < 1e-8, "{kind:?} at {x}: {}", r.norm());
        }
    }
    let p = WellBasis::pt(1.14, 0.21, 0.0);
    let g = |x: f64| p.mode(x);
    let pn = inner_product(&g, &g, Metric::Pt, &quad(20.0)).unwrap();
    assert!((pn - 1.0).norm() < 1e-10, "PT pseudo-norm {pn}");
    assert!(pn.re > 0.0);
}

#[test]
fn kappa_values() {
    let spec = quad(30.0);
    let k = overlap_kappa(&WellBasis::hermitian(0.7454, 0.0), 1.66214, &spec).unwrap();
    assert!((k.re - hermitian_kappa(0.7454, 1.66214)).abs() < 1e-10 && k.im.abs() < 1e-14);
    assert!((k.re - 0.41).abs() < 0.02);
    let kd = hermitian_kappa(1.045, 1.77114);
    assert!((kd - 0.18).abs() < 0.01);
    let kp = overlap_kappa(&WellBasis::pt(1.14, 0.21, 0.0), 1.65, &spec).unwrap();
    assert!((kp.re - 0.16).abs() < 0.02, "{kp}");
    let mut prev = 1.0;
    for i in 1..40 {
        let x0 = 0.1 * i as f64;
        let v = hermitian_kappa(0.8, x0);
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn hermitian_matrices_are_symmetric() {
    let m = hermitian_pair(1.66214, 0.7454);
    let s = m.overlap();
    let h = m.hamiltonian(0.0).unwrap();
    assert!((s[(0, 1)].re - hermitian_kappa(0.7454, 1.66214)).abs() < 1e-10);
    assert!((s[(0, 0)] - 1.0).norm() < 1e-10 && (s[(1, 1)] - 1.0).norm() < 1e-10);
    assert!((h[(0, 0)] - h[(1, 1)]).norm() < 1e-10);
    assert!((h[(0, 1)] - h[(1, 0)]).norm() < 1e-10);
    for v in s.iter().chain(h.iter()) {
        assert!(v.im.abs() < 1e-14);
    }
}

#[test]
fn isolated_well_energy() {
    let b = WellBasis::hermitian(0.9, 0.0);
    let m = TbModel::new(vec![b], Metric::Dirac, PotentialBinding::Superposition, quad(20.0)).unwrap();
    let h = m.hamiltonian(0.0).unwrap();
    assert!((h[(0, 0)] + 0.81).norm() < 1e-8);
}

#[test]
fn decoupled_limit() {
    let mut gap_prev = f64::INFINITY;
    for x0 in [3.0, 5.0, 8.0, 12.0] {
        let sp = solve_spectrum(&hermitian_pair(x0, 0.8)).unwrap();
        let gap = (sp.energies[1] - sp.energies[0]).norm();
        let kappa = hermitian_kappa(0.8, x0);
        for e in &sp.energies {
            assert!((e.re + 0.64).abs() < 5.0 * kappa + 1e-9);
        }
        assert!(gap < gap_prev);
        gap_prev = gap;
    }
    assert!(gap_prev < 1e-6);
}

#[test]
fn calibrated_hermitian_spectrum() {
    let sp = solve_spectrum(&hermitian_pair(1.66214, 0.7454)).unwrap();
    assert!(sp.path_discrepancy() < 1e-10);
    assert!((sp.energies[0].re + 0.865f64.powi(2)).abs() < 1e-3);
    assert!((sp.energies[1].re + 0.645f64.powi(2)).abs() < 1e-3);
    // symmetric / antisymmetric eigenvectors
    let c = &sp.vectors[0];
    assert!((c[0] - c[1]).norm() < 1e-10);
    for s in &sp.pseudo_norms {
        assert!((s - 1.0).norm() < 1e-12);
    }
}

#[test]
fn calibrated_pt_spectrum_is_real() {
    let m = TbModel::two_well(
        WellKind::Pt,
        1.65,
        1.14,
        0.21,
        Metric::Pt,
        PotentialBinding::Superposition,
        quad(15.0),
    )
    .unwrap();
    let sp = solve_spectrum(&m).unwrap();
    assert!(sp.path_discrepancy() < 1e-10);
    for e in &sp.energies {
        assert!(e.im.abs() < 1e-8, "{e}");
    }
    assert!((sp.energies[0].re + 1.44).abs() < 0.05);
    assert!((sp.energies[1].re + 1.21).abs() < 0.05);
}

#[test]
fn gram_schmidt_pseudo_orthonormality() {
    let m = TbModel::two_well(
        WellKind::Pt,
        1.65,
        1.14,
        0.21,
        Metric::Pt,
        PotentialBinding::Superposition,
        quad(15.0),
    )
    .unwrap();
    let s = m.overlap();
    let (q, sigma) = gram_schmidt(s).unwrap();
    let g = q.adjoint() * s * &q;
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { sigma[i] } else { C64::new(0.0, 0.0) };
            assert!((g[(i, j)] - want).norm() < 1e-10);
        }
        assert!((sigma[i].norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gram_schmidt_breakdown() {
    let s = DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    );
    assert!(matches!(
        gram_schmidt(&s),
        Err(Error::GramSchmidtBreakdown { index: 0, .. })
    ));
}

#[test]
fn scalar_propagation() {
    let b = WellBasis::hermitian(0.9, 0.0);
    let m = TbModel::new(vec![b], Metric::Dirac, PotentialBinding::Superposition, quad(20.0)).unwrap();
    let h = m.hamiltonian(0.0).unwrap()[(0, 0)];
    let s = m.overlap()[(0, 0)];
    let c0 = C64::new(0.6, -0.2);
    let zs: Vec<f64> = (0..=50).map(|i| i as f64).collect();
    let tr = propagate_coefficients(&m, &[c0], &zs, &StepControl::Fixed { dz: 0.01 }).unwrap();
    for (z, c) in tr.z.iter().zip(&tr.c) {
        let exact = c0 * (C64::new(0.0, -1.0) * h / s * *z).exp();
        assert!((c[0] - exact).norm() < 1e-9);
    }
}

#[test]
fn hermitian_power_conservation() {
    let m = hermitian_pair(1.66214, 0.7454);
    let s = m.overlap().clone();
    let zs: Vec<f64> = (0..=80).map(|i| 0.5 * i as f64).collect();
    let c0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    for control in [
        StepControl::Fixed { dz: 0.01 },
        StepControl::Adaptive {
            tolerance: 1e-12,
            initial: 0.1,
            min_step: 1e-8,
        },
    ] {
        let tr = propagate_coefficients(&m, &c0, &zs, &control).unwrap();
        let p = |c: &[C64]| {
            c[0].norm_sqr() + c[1].norm_sqr() + 2.0 * (c[0].conj() * c[1] * s[(0, 1)]).re
        };
        let p0 = p(&tr.c[0]);
        for c in &tr.c {
            assert!((p(c) - p0).abs() < 1e-8);
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let m = hermitian_pair(1.2, 0.8);
    let zs = [0.0, 30.0];
    let c0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let run = |dz| propagate_coefficients(&m, &c0, &zs, &StepControl::Fixed { dz }).unwrap().c[1].clone();
    let reference = run(0.005);
    let err = |c: &Vec<C64>| (c[0] - reference[0]).norm() + (c[1] - reference[1]).norm();
    let e1 = err(&run(0.2));
    let e2 = err(&run(0.1));
    assert!(e1 / e2 >= 15.0, "ratio {}", e1 / e2);
}

#[test]
fn monodromy_of_static_model_recovers_spectrum() {
    let m = hermitian_pair(1.66214, 0.7454);
    let sp = solve_spectrum(&m).unwrap();
    let refs: Vec<f64> = sp.energies.iter().map(|e| e.re).collect();
    let f = floquet_monodromy(&m, 7.0, &StepControl::Fixed { dz: 0.001 }, &refs).unwrap();
    for (a, b) in f.quasi_energies.iter().zip(&sp.energies) {
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    }
    assert!(f.reconstruction_error < 1e-9);
    assert!((f.determinant_modulus - 1.0).abs() < 1e-9);
}

fn dynamic_model() -> TbModel {
    let sys = WaveguideSystem::new(SystemConfig::PtDynamic(PtDynamicParams {
        k1: 1.0,
        k2: 1.1,
        k3: 0.95,
        alpha: 0.1,
    }))
    .unwrap();
    TbModel::two_well(
        WellKind::Hermitian,
        1.77114,
        1.045,
        0.0,
        Metric::Dirac,
        PotentialBinding::Exact(Box::new(sys)),
        quad(1.77114 + 12.0 / 1.045),
    )
    .unwrap()
}

#[test]
fn dynamic_hamiltonian_is_periodic() {
    let m = dynamic_model();
    assert!(m.is_z_dependent());
    let t_v = 2.0 * std::f64::consts::PI / 0.0975;
    for z in [0.0, 5.0, 31.0] {
        let a = m.hamiltonian(z).unwrap();
        let b = m.hamiltonian(z + t_v).unwrap();
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn exact_static_binding_matches_direct_quadrature() {
    let sys = WaveguideSystem::new(SystemConfig::HermitianStatic(HermitianStaticParams {
        k1: 0.645,
        k2: 0.865,
    }))
    .unwrap();
    let m = TbModel::two_well(
        WellKind::Hermitian,
        1.66214,
        0.7454,
        0.0,
        Metric::Dirac,
        PotentialBinding::Exact(Box::new(sys.clone())),
        quad(20.0),
    )
    .unwrap();
    assert!(!m.is_z_dependent());
    let h = m.hamiltonian(0.0).unwrap();
    let w = m.wells().to_vec();
    let f = |x: f64| w[0].mode(x);
    let hg = |x: f64| {
        let g = |y: f64| w[1].mode(y);
        -d2(&g, x, 1e-3) + sys.potential(x, 0.0).unwrap() * g(x)
    };
    let direct = inner_product(&f, &hg, Metric::Dirac, &QuadratureSpec { nodes: 8192, ..quad(20.0) }).unwrap();
    assert!((direct - h[(0, 1)]).norm() < 1e-7, "{direct} vs {}", h[(0, 1)]);
}

#[test]
fn floquet_phases_of_calibrated_dynamic_model() {
    let m = dynamic_model();
    let t_v = 2.0 * std::f64::consts::PI / 0.0975;
    let f = floquet_monodromy(&m, t_v, &StepControl::Fixed { dz: 0.01 }, &[-1.21, -1.0]).unwrap();
    assert!(f.reconstruction_error < 1e-9);
    println!("quasi-energies {:?}, |det| {}", f.quasi_energies, f.determinant_modulus);
    for e in &f.quasi_energies {
        assert!(e.re.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn two_paths_agree(x0 in 0.8f64..3.0, k in 0.5f64..1.5, a in 0.0f64..0.4) {
        let m = TbModel::two_well(
            WellKind::Pt, x0, k, a, Metric::Dirac, PotentialBinding::Superposition,
            quad(x0 + 14.0 / k),
        ).unwrap();
        let sp = solve_spectrum(&m).unwrap();
        prop_assert!(sp.path_discrepancy() < 1e-10);
    }

    #[test]
    fn hermitian_states_have_parity(x0 in 0.8f64..3.0, k in 0.5f64..1.5, x in -6.0f64..6.0) {
        let m = hermitian_pair(x0, k);
        let n = (2.0 * (1.0 + hermitian_kappa(k, x0))).sqrt();
        let even = [C64::new(1.0 / n, 0.0); 2];
        let odd = [C64::new(1.0 / n, 0.0), C64::new(-1.0 / n, 0.0)];
        prop_assert!((m.state(&even, x) - m.state(&even, -x)).norm() < 1e-12);
        prop_assert!((m.state(&odd, x) + m.state(&odd, -x)).norm() < 1e-12);
        let single = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        prop_assert!((m.state(&single, x) - m.wells()[0].mode(x)).norm() < 1e-15);
    }
}

#[test]
fn solve_matrices_handles_identity_overlap() {
    let h = DMatrix::from_row_slice(2, 2, &[
        C64::new(-1.0, 0.0), C64::new(0.2, 0.0), C64::new(0.2, 0.0), C64::new(-0.5, 0.0),
    ]);
    let s = DMatrix::identity(2, 2);
    let sp = solve_matrices(&h, &s).unwrap();
    let tr = -1.5;
    let det = 0.5 - 0.04;
    let r = ((tr * tr) / 4.0 - det as f64).sqrt();
    assert!((sp.energies[0].re - (tr / 2.0 - r)).abs() < 1e-12);
    assert!((sp.energies[1].re - (tr / 2.0 + r)).abs() < 1e-12);
}
