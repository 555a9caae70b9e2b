use nalgebra::DVector;

use super::{rk4_step, run, Controllers, SimConfig, TraceLog, Trajectory};
use crate::dynamics::{eval_partitioned, stack, ArmModel, FullState, SingleLinkPlant};
use crate::perturbation::{scale_factor, slow_dynamics};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<T: Real> {
    pub factor: T,
    pub epsilon: T,
    /// `max_t ‖q_r(t) − q̄_r(t)‖∞`
    pub gap: T,
}

/// Integrates the slow subsystem (flexible coordinates frozen on the manifold)
/// under the slow torques recorded in `trace`, held over each sample, and
/// returns `q̄_r` at every sample time.
pub fn replay_slow<T: Real>(model: &dyn ArmModel<T>, trace: &TraceLog<T>, cfg: &SimConfig<T>) -> Result<Vec<DVector<T>>> {
    let n = model.n_rigid();
    let m = model.n_flex();
    let scale = model.input_scale();
    let substeps = cfg.substeps()?;
    let mut x = DVector::zeros(2 * n);
    let mut out = Vec::with_capacity(trace.len());
    for row in &trace.rows {
        out.push(x.rows(0, n).into_owned());
        let u = &row.tau_slow * scale;
        for j in 0..substeps {
            let tj = row.t + cfg.dt_plant * T::from_usize(j).unwrap();
            x = rk4_step(
                |_, xv| {
                    let mut s = FullState::zeros(n, m);
                    s.q_r = xv.rows(0, n).into_owned();
                    s.dq_r = xv.rows(n, n).into_owned();
                    let pd = eval_partitioned(model, &s)?;
                    let qdd = slow_dynamics(&pd, &u, &s.dq_r)?;
                    Ok(stack(&s.dq_r, &qdd))
                },
                tj,
                &x,
                cfg.dt_plant,
            )?;
        }
    }
    Ok(out)
}

/// Full-plant vs slow-subsystem gap for stiffness factors `factors` (`K_ff`
/// scaled by the factor, so `ε` by its inverse square root). Both time steps
/// are divided by `⌈√factor⌉` so the stiffer plants stay resolved. Factors run
/// in parallel.
pub fn epsilon_sweep<T: Real>(
    base: &SingleLinkPlant<T>,
    factors: &[T],
    reference: &dyn Trajectory<T>,
    ctl: &Controllers<'_, T>,
    cfg: &SimConfig<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if factors.is_empty() {
        return Err(Error::param("factors", "at least one stiffness factor is required"));
    }
    if let Some(f) = factors.iter().find(|f| !(**f >= T::one())) {
        return Err(Error::param("factors", format!("stiffness factors must be ≥ 1, got {f}")));
    }
    let one = |factor: T| -> Result<SweepPoint<T>> {
        let plant = base.with_stiffness_factor(factor);
        let refine = T::from_f64(factor.sqrt().to_f64_lossy().ceil()).unwrap();
        let sub_cfg = SimConfig {
            dt_plant: cfg.dt_plant / refine,
            dt_ctrl: cfg.dt_ctrl / refine,
            ..cfg.clone()
        };
        let trace = run(&plant, reference, ctl, &sub_cfg)?;
        let slow = replay_slow(&plant, &trace, &sub_cfg)?;
        let gap = trace
            .rows
            .iter()
            .zip(&slow)
            .map(|(r, q)| (&r.q_r - q).amax())
            .fold(T::zero(), |a, b| a.max(b));
        Ok(SweepPoint {
            factor,
            epsilon: scale_factor(&plant.k_ff())?.epsilon,
            gap,
        })
    };
    std::thread::scope(|scope| {
        let handles: Vec<_> = factors.iter().map(|f| scope.spawn(move || one(*f))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

/// Least-squares slope of `ln gap` against `ln ε`.
pub fn loglog_slope<T: Real>(points: &[SweepPoint<T>]) -> Option<T> {
    if points.len() < 2 || points.iter().any(|p| !(p.gap > T::zero()) || !(p.epsilon > T::zero())) {
        return None;
    }
    let xs: Vec<T> = points.iter().map(|p| p.epsilon.ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.gap.ln()).collect();
    let k = T::from_usize(points.len()).unwrap();
    let mx = xs.iter().copied().fold(T::zero(), |a, b| a + b) / k;
    let my = ys.iter().copied().fold(T::zero(), |a, b| a + b) / k;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (*x - mx) * (*y - my);
        sxx += (*x - mx) * (*x - mx);
    }
    (sxx > T::zero()).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<SweepPoint<f64>> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|e| SweepPoint { factor: 1.0 / (e * e), epsilon: *e, gap: 3.0 * e * e })
            .collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }
}
