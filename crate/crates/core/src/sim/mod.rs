//! Closed-loop simulation of the composite controller around the full plant.
//!
//! The plant is integrated with fixed-step RK4 at `dt_plant`; the controller
//! runs every `dt_ctrl` and its torque is held in between. Position
//! measurements (hub angle and deflection) can carry seeded Gaussian noise.

mod metrics;
mod reference;
mod sweep;
mod trace;

pub use metrics::{metrics, steady_mask, CostContext, Metrics};
pub use reference::{Desired, MultiSine, Reference, ReferenceKind, Trajectory};
pub use sweep::{epsilon_sweep, loglog_slope, replay_slow, SweepPoint};
pub use trace::{TraceLog, TraceRow, TRACE_HEADER};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{eval_partitioned, state_derivative, ArmModel, Friction, FullState};
use crate::fastctl::{fast_control, solve_care, LqrGains, LqrWeights};
use crate::perturbation::Decomposition;
use crate::slowctl::{adapt, control, lyapunov, surfaces, Regressor, SlidingConfig, SlidingState};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T: Real> {
    /// Integration step, s.
    pub dt_plant: T,
    /// Controller sample period, an integer multiple of `dt_plant`, s.
    pub dt_ctrl: T,
    /// s
    pub horizon: T,
    /// Standard deviations of the angle (rad) and deflection (modal units)
    /// measurement noise.
    pub noise_std: [T; 2],
    /// Hub friction of the plant, applied when the plant is built from this
    /// configuration.
    pub friction: Friction<T>,
    /// Constant torque added to the applied input, N·m.
    pub disturbance: Option<T>,
    pub seed: u64,
    /// `|q_r|` above this aborts the run, rad.
    pub divergence_bound: T,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt_plant: T::lit(1e-4),
            dt_ctrl: T::lit(1e-3),
            horizon: T::lit(16.0),
            noise_std: [T::zero(), T::zero()],
            friction: Friction {
                viscous: T::lit(0.004),
                coulomb: T::lit(0.002),
            },
            disturbance: None,
            seed: 0,
            divergence_bound: T::lit(100.0),
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_plant > T::zero()) {
            return Err(Error::param("dt_plant", "must be positive"));
        }
        if !(self.dt_ctrl >= self.dt_plant) {
            return Err(Error::param("dt_ctrl", "must be at least dt_plant"));
        }
        self.substeps()?;
        if !(self.horizon > T::zero()) || !self.horizon.finite() {
            return Err(Error::param("horizon", "must be positive"));
        }
        if !self.noise_std.iter().all(|s| *s >= T::zero() && s.finite()) {
            return Err(Error::param("noise_std", "must be non-negative"));
        }
        if !(self.friction.viscous >= T::zero() && self.friction.coulomb >= T::zero()) {
            return Err(Error::param("friction", "coefficients must be non-negative"));
        }
        if !(self.divergence_bound > T::zero()) {
            return Err(Error::param("divergence_bound", "must be positive"));
        }
        Ok(())
    }

    /// Plant steps per controller sample.
    pub fn substeps(&self) -> Result<usize> {
        let ratio = (self.dt_ctrl / self.dt_plant).to_f64_lossy();
        let k = ratio.round();
        let tol = (64.0 * T::default_epsilon().to_f64_lossy()).max(1e-9);
        if k < 1.0 || (ratio - k).abs() > tol * k {
            return Err(Error::param("dt_ctrl", "must be an integer multiple of dt_plant"));
        }
        Ok(k as usize)
    }

    /// Number of controller samples.
    pub fn samples(&self) -> usize {
        (self.horizon / self.dt_ctrl).to_f64_lossy().round() as usize
    }
}

/// Classical RK4 step of `ẋ = f(t, x)`.
pub fn rk4_step<T: Real, F>(mut f: F, t: T, x: &DVector<T>, dt: T) -> Result<DVector<T>>
where
    F: FnMut(T, &DVector<T>) -> Result<DVector<T>>,
{
    let half = dt * T::lit(0.5);
    let checked = |v: DVector<T>| {
        if v.iter().all(|c| c.finite()) {
            Ok(v)
        } else {
            Err(Error::Integration { t: t.to_f64_lossy() })
        }
    };
    let k1 = checked(f(t, x)?)?;
    let k2 = checked(f(t + half, &(x + &k1 * half))?)?;
    let k3 = checked(f(t + half, &(x + &k2 * half))?)?;
    let k4 = checked(f(t + dt, &(x + &k3 * dt))?)?;
    Ok(x + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (dt / T::lit(6.0)))
}

/// `τ = τ̄ + τ̃`.
pub fn composite_torque<T: Real>(tau_slow: &DVector<T>, tau_fast: &DVector<T>) -> Result<DVector<T>> {
    if tau_slow.len() != tau_fast.len() {
        return Err(Error::dim("composite torque", tau_slow.len(), tau_fast.len()));
    }
    Ok(tau_slow + tau_fast)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    /// Sliding-mode slow law plus LQR fast law.
    Composite,
    /// Sliding-mode law alone (`τ̃ = 0`).
    SlowOnly,
}

/// Reference values for the Lyapunov diagnostic column.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovProbe<T: Real> {
    pub true_a: DVector<T>,
    pub true_rho: DVector<T>,
}

/// Controller design inputs for one run.
pub struct Controllers<'a, T: Real> {
    pub mode: ControllerMode,
    pub sliding: SlidingConfig<T>,
    pub a_hat0: DVector<T>,
    pub regressor: &'a dyn Regressor<T>,
    pub lqr: LqrWeights<T>,
    pub probe: Option<LyapunovProbe<T>>,
}

/// Fast-law design for a model whose blocks do not depend on the state, or
/// `None` for configuration-dependent models (redesigned every sample).
fn fixed_design<T: Real>(model: &dyn ArmModel<T>, weights: &LqrWeights<T>) -> Result<Option<(Decomposition<T>, LqrGains<T>)>> {
    if model.configuration_dependent() {
        return Ok(None);
    }
    let pd = eval_partitioned(model, &FullState::zeros(model.n_rigid(), model.n_flex()))?;
    let d = Decomposition::new(pd)?;
    let g = solve_care(&d.fast_model()?, weights)?;
    Ok(Some((d, g)))
}

/// Fast torque (physical units) for the measured state.
fn fast_torque<T: Real>(
    d: &Decomposition<T>,
    gains: &LqrGains<T>,
    scale: T,
    tau_slow: &DVector<T>,
    meas: &FullState<T>,
) -> Result<DVector<T>> {
    let psi_bar = d.manifold(&(tau_slow * scale), &meas.dq_r)?;
    let phi = d.fast_state_from(&meas.q_f, &meas.dq_f, &psi_bar)?;
    Ok(fast_control(gains, &phi)? / scale)
}

/// Runs the closed loop from rest.
pub fn run<T: Real>(
    model: &dyn ArmModel<T>,
    reference: &dyn Trajectory<T>,
    ctl: &Controllers<'_, T>,
    cfg: &SimConfig<T>,
) -> Result<TraceLog<T>> {
    run_from(model, reference, ctl, cfg, FullState::zeros(model.n_rigid(), model.n_flex()))
}

pub fn run_from<T: Real>(
    model: &dyn ArmModel<T>,
    reference: &dyn Trajectory<T>,
    ctl: &Controllers<'_, T>,
    cfg: &SimConfig<T>,
    initial: FullState<T>,
) -> Result<TraceLog<T>> {
    cfg.validate()?;
    ctl.sliding.validate()?;
    let (n, m) = (model.n_rigid(), model.n_flex());
    if reference.joints() != n || ctl.sliding.joints() != n || ctl.regressor.joints() != n {
        return Err(Error::dim("joints", n, reference.joints()));
    }
    if ctl.a_hat0.len() != ctl.regressor.params() {
        return Err(Error::dim("a_hat0", ctl.regressor.params(), ctl.a_hat0.len()));
    }
    crate::dynamics::check_state(model, &initial)?;

    let scale = model.input_scale();
    let composite = ctl.mode == ControllerMode::Composite;
    let fixed = if composite { fixed_design(model, &ctl.lqr)? } else { None };
    let substeps = cfg.substeps()?;
    let samples = cfg.samples();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise = |std: T| -> T {
        let z: f64 = StandardNormal.sample(&mut rng);
        std * T::lit(z)
    };
    let disturbance = cfg.disturbance.unwrap_or_else(T::zero);

    let mut state = initial;
    let mut est = SlidingState::new(ctl.a_hat0.clone(), n);
    let mut rows = Vec::with_capacity(samples);
    let mut x = state.to_vector();

    for k in 0..samples {
        let t = cfg.dt_ctrl * T::from_usize(k).unwrap();
        let mut meas = state.clone();
        for v in meas.q_r.iter_mut() {
            *v += noise(cfg.noise_std[0]);
        }
        for v in meas.q_f.iter_mut() {
            *v += noise(cfg.noise_std[1]);
        }

        let want = reference.desired(t);
        let sample = surfaces(&meas.q_r, &meas.dq_r, &want.q, &want.dq, &want.ddq, &ctl.sliding)?;
        let y = ctl.regressor.evaluate(&meas.q_r, &meas.dq_r, &sample);
        let tau_slow = control(&y, &est, &sample, &ctl.sliding)?;

        let pd_meas = if composite || ctl.probe.is_some() { Some(eval_partitioned(model, &meas)?) } else { None };
        let tau_fast = match (&fixed, composite) {
            (Some((d, g)), true) => fast_torque(d, g, scale, &tau_slow, &meas)?,
            (None, true) => {
                let d = Decomposition::new(pd_meas.clone().expect("evaluated for composite mode"))?;
                let g = solve_care(&d.fast_model()?, &ctl.lqr)?;
                fast_torque(&d, &g, scale, &tau_slow, &meas)?
            }
            _ => DVector::zeros(n),
        };
        let tau = composite_torque(&tau_slow, &tau_fast)?;

        let v_lyap = match (&ctl.probe, &pd_meas) {
            (Some(p), Some(pd)) => {
                let m_rr = &pd.m_rr / scale;
                lyapunov(&sample, &est, &m_rr, &p.true_a, &p.true_rho, &ctl.sliding)?
            }
            _ => T::lit(f64::NAN),
        };

        rows.push(TraceRow {
            t,
            q_r: state.q_r.clone(),
            q_d: want.q.clone(),
            e: sample.e.clone(),
            q_f: state.q_f.clone(),
            dq_f: state.dq_f.clone(),
            tau_slow: tau_slow.clone(),
            tau_fast,
            tau: tau.clone(),
            s: sample.s.clone(),
            s0: sample.s0.clone(),
            rho_hat: est.rho_hat.clone(),
            a_hat: est.a_hat.clone(),
            v_lyap,
        });

        est = adapt(&est, &y, &sample, &ctl.sliding, cfg.dt_ctrl)?;

        let applied = tau.add_scalar(disturbance);
        for j in 0..substeps {
            let tj = t + cfg.dt_plant * T::from_usize(j).unwrap();
            x = rk4_step(
                |_, xv| {
                    let s = FullState::from_vector(xv, n, m)?;
                    state_derivative(model, &s, &applied)
                },
                tj,
                &x,
                cfg.dt_plant,
            )?;
        }
        state = FullState::from_vector(&x, n, m)?;
        let worst = state.q_r.amax();
        if !(worst <= cfg.divergence_bound) {
            return Err(Error::Divergence {
                t: (t + cfg.dt_ctrl).to_f64_lossy(),
                magnitude: worst.to_f64_lossy(),
                bound: cfg.divergence_bound.to_f64_lossy(),
            });
        }
    }
    Ok(TraceLog { rows })
}
