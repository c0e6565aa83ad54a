//! Shared fixtures for the criterion benchmarks.

use susy_tb::exact::{HermitianStaticParams, PtDynamicParams, PtStaticParams};
use susy_tb::quadrature::QuadratureSpec;
use susy_tb::tb::{PotentialBinding, TbModel, WellKind};
use susy_tb::{Metric, SystemConfig, WaveguideSystem};

pub fn hermitian() -> WaveguideSystem {
    WaveguideSystem::new(SystemConfig::HermitianStatic(HermitianStaticParams { k1: 0.645, k2: 0.865 }))
        .expect("regular system")
}

pub fn pt_static() -> WaveguideSystem {
    WaveguideSystem::new(SystemConfig::PtStatic(PtStaticParams { k1: 1.1, k2: 1.2, alpha: 0.2 }))
        .expect("regular system")
}

pub fn pt_dynamic() -> WaveguideSystem {
    WaveguideSystem::new(SystemConfig::PtDynamic(PtDynamicParams {
        k1: 1.0,
        k2: 1.1,
        k3: 0.95,
        alpha: 0.1,
    }))
    .expect("regular system")
}

/// Calibrated two-well PT model under the PT metric.
pub fn pt_model() -> TbModel {
    let (x0, k, a) = (1.65786, 1.14677, 0.2);
    TbModel::two_well(
        WellKind::Pt,
        x0,
        k,
        a,
        Metric::Pt,
        PotentialBinding::Superposition,
        QuadratureSpec { half_width: x0 + 12.0 / k, ..QuadratureSpec::for_decay(k) },
    )
    .expect("well-conditioned model")
}

/// Calibrated two-well model bound to the z-periodic potential.
pub fn dynamic_model() -> TbModel {
    let (x0, k) = (1.77092, 1.04608);
    TbModel::two_well(
        WellKind::Hermitian,
        x0,
        k,
        0.0,
        Metric::Dirac,
        PotentialBinding::Exact(Box::new(pt_dynamic())),
        QuadratureSpec { half_width: x0 + 12.0 / k, ..QuadratureSpec::for_decay(k) },
    )
    .expect("well-conditioned model")
}
