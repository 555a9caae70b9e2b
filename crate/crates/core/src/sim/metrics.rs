use nalgebra::DVector;

use super::TraceLog;
use crate::fastctl::{cost, LqrWeights};
use crate::perturbation::Decomposition;
use crate::{Error, Real, Result};

/// Summary of one run. Steady-interval figures are `None` when the reference
/// never dwells long enough.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics<T: Real> {
    pub tracking_rms: T,
    pub max_abs_error: T,
    pub steady_deflection_rms: Option<T>,
    pub steady_max_abs_error: Option<T>,
    /// Largest deflection norm outside the steady intervals.
    pub transient_peak: T,
    /// `∫ τᵀτ dt`.
    pub effort: T,
    /// `Σ |τ_{k+1} − τ_k|`.
    pub control_variation: T,
    /// Fast-subsystem LQR cost, when a [`CostContext`] was supplied and the
    /// manifold does not depend on the hub rate.
    pub cost: Option<T>,
}

/// What is needed to rebuild the fast state from trace columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CostContext<T: Real> {
    pub decomposition: Decomposition<T>,
    pub weights: LqrWeights<T>,
    pub input_scale: T,
}

const MIN_DWELL: f64 = 0.5;
const TRIM: f64 = 0.2;

/// Samples inside steady intervals: stretches where `q_d` stays exactly
/// constant for more than 0.5 s, trimmed by 0.2 s at both ends.
pub fn steady_mask<T: Real>(trace: &TraceLog<T>) -> Vec<bool> {
    let rows = &trace.rows;
    let mut mask = vec![false; rows.len()];
    let mut start = 0;
    for i in 1..=rows.len() {
        if i < rows.len() && rows[i].q_d == rows[start].q_d {
            continue;
        }
        let (t0, t1) = (rows[start].t.to_f64_lossy(), rows[i - 1].t.to_f64_lossy());
        if t1 - t0 > MIN_DWELL {
            for (k, flag) in mask.iter_mut().enumerate().take(i).skip(start) {
                let t = rows[k].t.to_f64_lossy();
                *flag = t >= t0 + TRIM && t <= t1 - TRIM;
            }
        }
        start = i;
    }
    mask
}

fn rms<T: Real>(vals: impl Iterator<Item = T>) -> Option<T> {
    let (mut sum, mut n) = (T::zero(), 0usize);
    for v in vals {
        sum += v * v;
        n += 1;
    }
    (n > 0).then(|| (sum / T::from_usize(n).unwrap()).sqrt())
}

pub fn metrics<T: Real>(trace: &TraceLog<T>, ctx: Option<&CostContext<T>>) -> Result<Metrics<T>> {
    if trace.is_empty() {
        return Err(Error::Trace("empty trace".into()));
    }
    let rows = &trace.rows;
    let dt = trace.dt().unwrap_or_else(T::zero);
    let steady = steady_mask(trace);
    let err_norm = |k: usize| rows[k].e.norm();
    let defl = |k: usize| rows[k].q_f.norm();

    let tracking_rms = rms((0..rows.len()).map(err_norm)).unwrap_or_else(T::zero);
    let max_abs_error = rows.iter().map(|r| r.e.amax()).fold(T::zero(), |a, b| a.max(b));
    let steady_idx: Vec<usize> = (0..rows.len()).filter(|k| steady[*k]).collect();
    let steady_deflection_rms = rms(steady_idx.iter().map(|k| defl(*k)));
    let steady_max_abs_error = (!steady_idx.is_empty()).then(|| steady_idx.iter().map(|k| rows[*k].e.amax()).fold(T::zero(), |a, b| a.max(b)));
    let transient_peak = (0..rows.len()).filter(|k| !steady[*k]).map(defl).fold(T::zero(), |a, b| a.max(b));
    let effort = rows.iter().map(|r| r.tau.norm_squared()).fold(T::zero(), |a, b| a + b) * dt;
    let control_variation = rows.windows(2).map(|w| (&w[1].tau - &w[0].tau).amax()).fold(T::zero(), |a, b| a + b);
    let cost = match ctx {
        Some(c) if dt > T::zero() => fast_cost(trace, c, dt)?,
        _ => None,
    };
    Ok(Metrics {
        tracking_rms,
        max_abs_error,
        steady_deflection_rms,
        steady_max_abs_error,
        transient_peak,
        effort,
        control_variation,
        cost,
    })
}

fn fast_cost<T: Real>(trace: &TraceLog<T>, ctx: &CostContext<T>, dt: T) -> Result<Option<T>> {
    let d = &ctx.decomposition;
    // the trace has no hub rate, so the manifold must not need it
    let rate_free = d.rm.v1_fr.iter().all(|v| *v == T::zero()) && d.h.h_fr.iter().all(|v| *v == T::zero());
    if !rate_free {
        return Ok(None);
    }
    let eps = d.epsilon();
    let n = d.pd.n();
    let mut phis = Vec::with_capacity(trace.len());
    let mut taus = Vec::with_capacity(trace.len());
    for r in &trace.rows {
        let psi_bar = d.manifold(&(&r.tau_slow * ctx.input_scale), &DVector::zeros(n))?;
        let phi = d.fast_state_from(&r.q_f, &r.dq_f, &psi_bar)?;
        phis.push(phi.stacked());
        taus.push(&r.tau_fast * ctx.input_scale);
    }
    cost(&phis, &taus, &ctx.weights, dt / eps).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TraceRow;

    fn synthetic(samples: usize, dt: f64, f: impl Fn(f64) -> (f64, f64, f64)) -> TraceLog<f64> {
        let rows = (0..samples)
            .map(|k| {
                let t = k as f64 * dt;
                let (q_d, e, qf) = f(t);
                let one = |x: f64| DVector::from_element(1, x);
                TraceRow {
                    t,
                    q_r: one(q_d + e),
                    q_d: one(q_d),
                    e: one(e),
                    q_f: DVector::from_vec(vec![qf, 0.0]),
                    dq_f: DVector::zeros(2),
                    tau_slow: one(0.0),
                    tau_fast: one(0.0),
                    tau: one(0.0),
                    s: one(0.0),
                    s0: one(0.0),
                    rho_hat: one(0.0),
                    a_hat: DVector::zeros(2),
                    v_lyap: 0.0,
                }
            })
            .collect();
        TraceLog { rows }
    }

    #[test]
    fn zero_trace_gives_zero_metrics() {
        let m = metrics(&synthetic(2000, 1e-3, |_| (0.0, 0.0, 0.0)), None).unwrap();
        assert_eq!(m.tracking_rms, 0.0);
        assert_eq!(m.max_abs_error, 0.0);
        assert_eq!(m.steady_deflection_rms, Some(0.0));
        assert_eq!(m.transient_peak, 0.0);
        assert_eq!(m.effort, 0.0);
        assert_eq!(m.cost, None);
    }

    #[test]
    fn constant_error_rms() {
        let m = metrics(&synthetic(500, 1e-3, |_| (0.0, 0.1, 0.0)), None).unwrap();
        assert!((m.tracking_rms - 0.1).abs() < 1e-15);
    }

    #[test]
    fn steady_windows_are_detected_and_trimmed() {
        // q_d: ramp for 1 s, hold for 1 s, ramp, hold ...
        let tr = synthetic(4000, 1e-3, |t| {
            let phase = t % 2.0;
            (if phase < 1.0 { phase } else { 1.0 }, 0.0, if phase < 1.0 { 0.5 } else { 0.01 })
        });
        let mask = steady_mask(&tr);
        assert!(!mask[1100] && mask[1300] && mask[1700] && !mask[1900] && !mask[500]);
        let m = metrics(&tr, None).unwrap();
        assert!((m.steady_deflection_rms.unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(m.transient_peak, 0.5);
    }

    #[test]
    fn short_dwells_are_absent_not_zero() {
        let tr = synthetic(1000, 1e-3, |t| (t, 0.0, 0.0));
        let m = metrics(&tr, None).unwrap();
        assert_eq!(m.steady_deflection_rms, None);
        assert_eq!(m.steady_max_abs_error, None);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(metrics(&TraceLog::<f64>::default(), None).is_err());
    }
}
