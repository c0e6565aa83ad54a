use susy_tb::bpm::{
    mode_residual, modulus_l2_error, pde_residual, propagate, propagate_mode, relative_l2_error,
    step, Boundary, PropagationGrid,
};
use susy_tb::exact::{HermitianStaticParams, PtDynamicParams, PtStaticParams};
use susy_tb::{Error, ModeKind, SystemConfig, WaveguideSystem, C64};

fn grid(half_width: f64, nx: usize, dz: f64, z_end: f64) -> PropagationGrid {
    PropagationGrid {
        half_width,
        nx,
        dz,
        z_end,
        boundary: Boundary::DirichletZero,
    }
}

/// Free solution `(σ0²/s)^{1/2} exp(−x²/(2s))`, `s = σ0² + 2iz`.
fn free_gaussian(sigma0: f64, x: f64, z: f64) -> C64 {
    let s = C64::new(sigma0 * sigma0, 2.0 * z);
    (C64::new(sigma0 * sigma0, 0.0) / s).sqrt() * (-(x * x) / (2.0 * s)).exp()
}

fn free(_z: f64, out: &mut [C64]) -> susy_tb::Result<()> {
    out.fill(C64::new(0.0, 0.0));
    Ok(())
}

fn hermitian() -> WaveguideSystem {
    WaveguideSystem::new(SystemConfig::HermitianStatic(HermitianStaticParams { k1: 0.645, k2: 0.865 }))
        .unwrap()
}

fn pt_static() -> WaveguideSystem {
    WaveguideSystem::new(SystemConfig::PtStatic(PtStaticParams { k1: 1.1, k2: 1.2, alpha: 0.2 })).unwrap()
}

fn dynamic() -> WaveguideSystem {
    WaveguideSystem::new(SystemConfig::PtDynamic(PtDynamicParams {
        k1: 1.0,
        k2: 1.1,
        k3: 0.95,
        alpha: 0.1,
    }))
    .unwrap()
}

#[test]
fn free_gaussian_spreading() {
    let g = grid(20.0, 4096, 0.002, 1.0);
    let xs = g.points();
    let init: Vec<C64> = xs.iter().map(|&x| free_gaussian(1.0, x, 0.0)).collect();
    let snaps = propagate(&init, &free, &g, &[0.5, 1.0]).unwrap();
    for s in &snaps {
        let p: f64 = s.samples.iter().map(|v| v.norm_sqr()).sum();
        let x2: f64 = s.samples.iter().zip(&xs).map(|(v, x)| v.norm_sqr() * x * x).sum::<f64>() / p;
        let width = 1.0 + 4.0 * s.z * s.z;
        assert!((2.0 * x2 - width).abs() < 1e-4 * width, "{} vs {width}", 2.0 * x2);
    }
}

#[test]
fn spatial_order_is_two() {
    let err = |nx: usize| {
        let g = grid(16.0, nx, 0.0005, 0.5);
        let xs = g.points();
        let init: Vec<C64> = xs.iter().map(|&x| free_gaussian(0.7, x, 0.0)).collect();
        let s = propagate(&init, &free, &g, &[0.5]).unwrap().remove(0);
        let exact: Vec<C64> = xs.iter().map(|&x| free_gaussian(0.7, x, 0.5)).collect();
        relative_l2_error(&s.samples, &exact)
    };
    let (a, b) = (err(513), err(1025));
    assert!((a / b - 4.0).abs() < 0.4, "{a} {b}");
}

#[test]
fn halving_dz_quarters_the_error() {
    let sys = pt_static();
    let base = |dz| {
        let g = PropagationGrid { dz, ..PropagationGrid::for_system(&sys, 2.0) };
        propagate_mode(&sys, ModeKind::Left, &g, &[2.0]).unwrap().remove(0).samples
    };
    let reference = base(0.0125);
    let e1 = relative_l2_error(&base(0.2), &reference);
    let e2 = relative_l2_error(&base(0.1), &reference);
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
}

#[test]
fn real_potential_conserves_power() {
    let sys = hermitian();
    let g = PropagationGrid::for_system(&sys, 0.0);
    let xs = g.points();
    let v: Vec<C64> = xs.iter().map(|&x| sys.potential(x, 0.0).unwrap()).collect();
    let loss = vec![0.0; xs.len()];
    let mut psi = sys.mode_on(ModeKind::Left, &xs, 0.0).unwrap();
    let power = |p: &[C64]| p.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let p0 = power(&psi);
    for _ in 0..200 {
        let next = step(&psi, &v, &v, &loss, g.dx(), g.dz).unwrap();
        assert!((power(&next) - power(&psi)).abs() < 1e-12 * p0);
        psi = next;
    }
}

#[test]
fn hermitian_beat_period() {
    let sys = hermitian();
    let t = sys.periods().unwrap().base();
    let g = PropagationGrid::for_system(&sys, t);
    let snap = propagate_mode(&sys, ModeKind::Left, &g, &[t]).unwrap().remove(0);
    let exact = sys.mode_on(ModeKind::Left, &g.points(), t).unwrap();
    let e = modulus_l2_error(&snap.samples, &exact);
    println!("hermitian |ψ| error over T: {e:e}");
    assert!(e < 1e-3);
}

#[test]
fn pt_ground_state_is_stationary() {
    let sys = pt_static();
    let g = PropagationGrid::for_system(&sys, 10.0);
    let init = sys.mode_on(ModeKind::Ground, &g.points(), 0.0).unwrap();
    let snaps = propagate_mode(&sys, ModeKind::Ground, &g, &[5.0, 10.0]).unwrap();
    for s in snaps {
        let e = modulus_l2_error(&s.samples, &init);
        assert!(e < 1e-3, "{e}");
    }
}

fn dynamic_error(sys: &WaveguideSystem, kind: ModeKind, nx: usize, dz: f64) -> (f64, f64) {
    let t = sys.periods().unwrap().base();
    let g = PropagationGrid { nx, dz, ..PropagationGrid::for_system(sys, t) };
    let snap = propagate_mode(sys, kind, &g, &[t]).unwrap().remove(0);
    let exact = sys.mode_on(kind, &g.points(), t).unwrap();
    (relative_l2_error(&snap.samples, &exact), modulus_l2_error(&snap.samples, &exact))
}

#[test]
fn dynamic_modes_track_the_closed_form() {
    let sys = dynamic();
    for kind in [ModeKind::Floquet1, ModeKind::Left] {
        let (coarse, coarse_mod) = dynamic_error(&sys, kind, 4096, 0.01);
        let (fine, fine_mod) = dynamic_error(&sys, kind, 8192, 0.005);
        println!("{kind:?}: field {coarse:e} -> {fine:e}, intensity {coarse_mod:e} -> {fine_mod:e}");
        assert!(coarse < 5e-3 && fine < coarse);
        assert!(coarse_mod < 5e-3);
    }
}

#[test]
fn residual_suite() {
    let cases = [
        (hermitian(), vec![ModeKind::Ground, ModeKind::Excited, ModeKind::Left]),
        (pt_static(), vec![ModeKind::Ground, ModeKind::Excited, ModeKind::Left]),
        (dynamic(), vec![ModeKind::Floquet1, ModeKind::Floquet2, ModeKind::Left]),
    ];
    for (sys, kinds) in &cases {
        let span = sys.periods().unwrap().base();
        let fine = PropagationGrid::for_system(sys, span);
        let coarse = PropagationGrid { nx: fine.nx / 2, dz: 2.0 * fine.dz, ..fine };
        for &kind in kinds {
            let stationary = sys.config().is_static() && matches!(kind, ModeKind::Ground | ModeKind::Excited);
            let limit = if stationary { 1e-7 } else { 1e-6 };
            let rf = mode_residual(sys, kind, &fine, span, 8).unwrap();
            let rc = mode_residual(sys, kind, &coarse, span, 8).unwrap();
            println!("{} {kind:?}: {rc:e} -> {rf:e}", sys.config().name());
            assert!(rf < limit);
            assert!(rc > 10.0 * rf);
        }
    }
}

#[test]
fn wrong_mode_has_large_residual() {
    let sys = hermitian();
    let wrong = WaveguideSystem::new(SystemConfig::HermitianStatic(HermitianStaticParams { k1: 0.645, k2: 0.9 }))
        .unwrap();
    let g = PropagationGrid::for_system(&sys, 1.0);
    let xs: Vec<f64> = g.points()[2..g.nx - 2].to_vec();
    let r = pde_residual(
        &|x, z| wrong.mode(ModeKind::Ground, x, z),
        &|x, z| sys.potential(x, z),
        &xs,
        &[0.0, 0.5],
        g.dx(),
        g.dz,
    )
    .unwrap();
    assert!(r > 1e-2, "{r}");
}

#[test]
fn runaway_gain_aborts() {
    let g = grid(10.0, 257, 0.1, 100.0);
    let init: Vec<C64> = g.points().iter().map(|&x| free_gaussian(1.0, x, 0.0)).collect();
    let gain = |_z: f64, out: &mut [C64]| -> susy_tb::Result<()> {
        out.fill(C64::new(0.0, 1.0));
        Ok(())
    };
    assert!(matches!(propagate(&init, &gain, &g, &[100.0]), Err(Error::Unstable { .. })));
}

#[test]
fn absorbing_layer_removes_outgoing_light() {
    let make = |boundary| PropagationGrid { boundary, ..grid(10.0, 1025, 0.005, 6.0) };
    let xs = make(Boundary::DirichletZero).points();
    let init: Vec<C64> = xs
        .iter()
        .map(|&x| C64::from_polar((-(x - 2.0) * (x - 2.0)).exp(), 3.0 * x))
        .collect();
    let power = |b| {
        let g = make(b);
        propagate(&init, &free, &g, &[6.0]).unwrap()[0].power(g.dx())
    };
    let p0: f64 = init.iter().map(|v| v.norm_sqr()).sum::<f64>() * (20.0 / 1024.0);
    let reflecting = power(Boundary::DirichletZero);
    let absorbing = power(Boundary::AbsorbingLayer { width: 4.0, strength: 20.0 });
    assert!((reflecting - p0).abs() < 1e-10 * p0);
    assert!(absorbing < 0.05 * p0, "{absorbing}");
}

#[test]
fn grid_validation() {
    assert!(grid(10.0, 128, 0.01, 1.0).validate().is_err());
    assert!(grid(10.0, 256, 0.0, 1.0).validate().is_err());
    assert!(!grid(1.0, 256, 0.5, 1.0).warnings().is_empty());
    let g = grid(10.0, 256, 0.01, 1.0);
    let init = vec![C64::new(0.0, 0.0); 255];
    assert!(propagate(&init, &free, &g, &[1.0]).is_err());
}
