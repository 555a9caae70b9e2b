//! Full-plant vs slow-subsystem gap as the link is stiffened.

use flexlink::dynamics::{build_single_link, ArmParams, ModalModel};
use flexlink::fastctl::LqrWeights;
use flexlink::sim::{epsilon_sweep, loglog_slope, ControllerMode, Controllers, Reference, SimConfig};
use flexlink::slowctl::{SingleLinkRegressor, SlidingConfig};
use nalgebra::DVector;

#[test]
fn gap_shrinks_with_epsilon() {
    let p = ArmParams::laboratory();
    let plant = build_single_link(p, ModalModel::reference(&p).unwrap()).unwrap();
    let ctl = Controllers {
        mode: ControllerMode::Composite,
        sliding: SlidingConfig::uniform(1, 2, 10.0, 1.3, 1e-4, 0.01).unwrap(),
        a_hat0: DVector::zeros(2),
        regressor: &SingleLinkRegressor,
        lqr: LqrWeights::diagonal(&[150.0, 500.0, 1.0, 0.0], &[2.0]).unwrap(),
        probe: None,
    };
    let cfg = SimConfig { horizon: 2.0, ..SimConfig::default() };
    let pts = epsilon_sweep(&plant.with_friction(cfg.friction), &[1.0, 4.0, 10_000.0], &Reference::default_square(), &ctl, &cfg)
        .unwrap();
    let g1: f64 = pts[0].gap;
    assert!(g1 > 0.0);
    // ε halved: O(ε) with 50% slack
    assert!(pts[1].gap <= 0.5 * g1 * 1.5, "{} vs {g1}", pts[1].gap);
    // near-rigid limit
    assert!(pts[2].gap < 1e-2 * g1, "{} vs {g1}", pts[2].gap);
    assert!((pts[2].epsilon - pts[0].epsilon / 100.0_f64).abs() < 1e-12);
    assert!(loglog_slope(&pts).is_some_and(|s: f64| (s - 1.0).abs() <= 0.5));
}
