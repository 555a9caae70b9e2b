//! Lyapunov decrease of the adaptive sliding law on the rigid two-link arm
//! with its exact regressor (the arm is its own slow subsystem).

use flexlink::dynamics::{eval_partitioned, FullState, TwoLinkArm, TwoLinkParams};
use flexlink::fastctl::LqrWeights;
use flexlink::sim::{run_from, ControllerMode, Controllers, LyapunovProbe, MultiSine, SimConfig, TraceLog, Trajectory};
use flexlink::slowctl::{SlidingConfig, TwoLinkRegressor};
use nalgebra::DVector;

const BETA: f64 = 1.3;
const ETA: f64 = 0.05;

fn fixture() -> TwoLinkArm<f64> {
    TwoLinkArm::rigid(TwoLinkParams { gravity: 9.81, ..TwoLinkParams::default() })
}

fn reference() -> MultiSine<f64> {
    MultiSine {
        amplitude: DVector::from_vec(vec![0.6, 0.4]),
        omega: DVector::from_vec(vec![1.5, 2.3]),
        phase: DVector::from_vec(vec![0.0, 0.7]),
    }
}

fn simulate(arm: &TwoLinkArm<f64>, lambda: f64, offset: f64, probe: Option<LyapunovProbe<f64>>) -> TraceLog<f64> {
    let ctl = Controllers {
        mode: ControllerMode::SlowOnly,
        sliding: SlidingConfig::uniform(2, 9, lambda, BETA, 1e-4, ETA).unwrap(),
        a_hat0: arm.regressor_parameters(),
        regressor: &TwoLinkRegressor,
        lqr: LqrWeights::diagonal(&[1.0], &[1.0]).unwrap(),
        probe,
    };
    let cfg = SimConfig { horizon: 6.0, ..SimConfig::default() };
    let mut start = FullState::zeros(2, 0);
    start.q_r = DVector::from_vec(vec![offset, -offset]);
    run_from(arm, &reference(), &ctl, &cfg, start).unwrap()
}

/// `max ‖V_rr‖∞ β + η` along a recorded trajectory.
fn switching_bound(arm: &TwoLinkArm<f64>, tr: &TraceLog<f64>, lambda: f64) -> f64 {
    let r = reference();
    let mut worst: f64 = 0.0;
    for row in &tr.rows {
        let mut s = FullState::zeros(2, 0);
        s.q_r = row.q_r.clone();
        s.dq_r = r.desired(row.t).dq + &row.s - &row.e * lambda;
        let v = eval_partitioned(arm, &s).unwrap().v_rr;
        worst = worst.max((0..2).map(|i| v.row(i).abs().sum()).fold(0.0, f64::max));
    }
    worst * BETA + ETA
}

/// Samples outside the layer, and how many of them meet
/// `ΔV/Δt ≤ −ηᵀ|S0| + 5 dt max|S0|`.
fn decrease_count(tr: &TraceLog<f64>) -> (usize, usize) {
    let dt = tr.dt().unwrap();
    let (mut outside, mut ok) = (0, 0);
    for w in tr.rows.windows(2) {
        let s0 = &w[0].s0;
        if s0.iter().all(|v| *v == 0.0) {
            continue;
        }
        outside += 1;
        if (w[1].v_lyap - w[0].v_lyap) / dt <= -ETA * s0.abs().sum() + 5.0 * dt * s0.amax() {
            ok += 1;
        }
    }
    (outside, ok)
}

#[test]
fn lyapunov_function_decreases_outside_the_layer() {
    let arm = fixture();
    for lambda in [2.0, 5.0, 10.0] {
        for offset in [0.2, 0.8] {
            let rho = switching_bound(&arm, &simulate(&arm, lambda, offset, None), lambda);
            let probe = LyapunovProbe {
                true_a: arm.regressor_parameters(),
                true_rho: DVector::from_element(2, rho),
            };
            let tr = simulate(&arm, lambda, offset, Some(probe));
            let (outside, ok) = decrease_count(&tr);
            assert!(outside > 100, "λ {lambda}: only {outside} samples outside the layer");
            assert!(ok as f64 >= 0.99 * outside as f64, "λ {lambda}, offset {offset}: {ok}/{outside}");
            assert!(tr.rows.iter().all(|r| r.v_lyap >= 0.0));
        }
    }
}
