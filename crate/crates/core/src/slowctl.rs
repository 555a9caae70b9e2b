//! Adaptive sliding-mode tracking controller for the slow subsystem.
//!
//! ```text
//! E = q̄_r − q_d        Ė_f = q̇_d − λE        S = Ė + λE = q̇̄_r − Ė_f
//! τ̄ = Y(q̄_r, q̇̄_r, Ė_f, Ë_f) Â − diag(ρ̂) sat(S/β)
//! Â ← Â − Γ Yᵀ S₀ dt        ρ̂ ← ρ̂ + |S₀| dt        S₀ = S − β sat(S/β)
//! ```
//!
//! Inside the boundary layer `|S_i| ≤ β_i` the switching term is a
//! proportional law and adaptation stops.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// `sgn(s)` outside `[−β, β]`, `s/β` inside.
pub fn sat<T: Real>(s: T, beta: T) -> T {
    if s.abs() > beta {
        s.sgn()
    } else {
        s / beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingConfig<T: Real> {
    /// Surface slope per joint, 1/s.
    pub lambda: DVector<T>,
    /// Boundary-layer thickness per joint.
    pub beta: DVector<T>,
    /// Adaptation gain Γ, one row/column per parameter.
    pub gamma: DMatrix<T>,
    /// Decrease margin used by the Lyapunov diagnostics only.
    pub eta: DVector<T>,
    /// Optional upper bound on ρ̂; `None` follows the unbounded law.
    pub rho_clamp: Option<T>,
}

impl<T: Real> SlidingConfig<T> {
    pub fn new(lambda: DVector<T>, beta: DVector<T>, gamma: DMatrix<T>, eta: DVector<T>) -> Result<Self> {
        let cfg = Self {
            lambda,
            beta,
            gamma,
            eta,
            rho_clamp: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Scalar λ, β and η broadcast over `joints`, Γ = `gamma`·I over `params`.
    pub fn uniform(joints: usize, params: usize, lambda: T, beta: T, gamma: T, eta: T) -> Result<Self> {
        Self::new(
            DVector::from_element(joints, lambda),
            DVector::from_element(joints, beta),
            DMatrix::identity(params, params) * gamma,
            DVector::from_element(joints, eta),
        )
    }

    pub fn joints(&self) -> usize {
        self.lambda.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lambda.len();
        if n == 0 {
            return Err(Error::param("lambda", "at least one joint is required"));
        }
        if self.beta.len() != n {
            return Err(Error::dim("beta", n, self.beta.len()));
        }
        if self.eta.len() != n {
            return Err(Error::dim("eta", n, self.eta.len()));
        }
        if !self.lambda.iter().all(|v| *v > T::zero() && v.finite()) {
            return Err(Error::param("lambda", "must be positive"));
        }
        if !self.beta.iter().all(|v| *v > T::zero() && v.finite()) {
            return Err(Error::param("beta", "must be positive"));
        }
        if !self.eta.iter().all(|v| *v > T::zero() && v.finite()) {
            return Err(Error::param("eta", "must be positive"));
        }
        let g = &self.gamma;
        if !g.is_square() || g.is_empty() {
            return Err(Error::param("gamma", "must be a non-empty square matrix"));
        }
        let asym = (g - g.transpose()).amax();
        if asym > T::default_epsilon() * T::lit(16.0) * (T::one() + g.amax()) || !crate::dynamics::is_spd(g) {
            return Err(Error::param("gamma", "must be symmetric positive definite"));
        }
        if let Some(c) = self.rho_clamp {
            if !(c > T::zero()) {
                return Err(Error::param("rho_clamp", "must be positive when set"));
            }
        }
        Ok(())
    }
}

/// Adaptive estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingState<T: Real> {
    pub a_hat: DVector<T>,
    pub rho_hat: DVector<T>,
}

impl<T: Real> SlidingState<T> {
    /// ρ̂ starts at zero.
    pub fn new(a_hat0: DVector<T>, joints: usize) -> Self {
        Self {
            a_hat: a_hat0,
            rho_hat: DVector::zeros(joints),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample<T: Real> {
    pub e: DVector<T>,
    pub e_dot: DVector<T>,
    pub s: DVector<T>,
    pub s0: DVector<T>,
    pub ef_dot: DVector<T>,
    pub ef_ddot: DVector<T>,
}

impl<T: Real> SurfaceSample<T> {
    pub fn inside_layer(&self) -> bool {
        self.s0.iter().all(|v| *v == T::zero())
    }
}

pub fn surfaces<T: Real>(
    q_r: &DVector<T>,
    dq_r: &DVector<T>,
    q_d: &DVector<T>,
    dq_d: &DVector<T>,
    ddq_d: &DVector<T>,
    cfg: &SlidingConfig<T>,
) -> Result<SurfaceSample<T>> {
    let n = cfg.joints();
    for (what, v) in [("q_r", q_r), ("dq_r", dq_r), ("q_d", q_d), ("dq_d", dq_d), ("ddq_d", ddq_d)] {
        if v.len() != n {
            return Err(Error::dim(what, n, v.len()));
        }
    }
    let e = q_r - q_d;
    let e_dot = dq_r - dq_d;
    let s = &e_dot + e.component_mul(&cfg.lambda);
    let s0 = DVector::from_fn(n, |i, _| if s[i].abs() > cfg.beta[i] { s[i] - cfg.beta[i] * s[i].sgn() } else { T::zero() });
    let ef_dot = dq_d - e.component_mul(&cfg.lambda);
    let ef_ddot = ddq_d - e_dot.component_mul(&cfg.lambda);
    Ok(SurfaceSample {
        e,
        e_dot,
        s,
        s0,
        ef_dot,
        ef_ddot,
    })
}

/// Linear-in-parameters factorization `Y A = M̂ Ë_f + V̂ Ė_f + Ĝ + F̂`.
pub trait Regressor<T: Real>: Send + Sync {
    fn joints(&self) -> usize;
    fn params(&self) -> usize;
    fn evaluate(&self, q_r: &DVector<T>, dq_r: &DVector<T>, sample: &SurfaceSample<T>) -> DMatrix<T>;
}

/// `Y = [Ë_f, q̇_r]` for `A = [rigid inertia, viscous coefficient]`. Coulomb
/// friction is left to the switching term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SingleLinkRegressor;

impl<T: Real> Regressor<T> for SingleLinkRegressor {
    fn joints(&self) -> usize {
        1
    }

    fn params(&self) -> usize {
        2
    }

    fn evaluate(&self, _q_r: &DVector<T>, dq_r: &DVector<T>, sample: &SurfaceSample<T>) -> DMatrix<T> {
        DMatrix::from_row_slice(1, 2, &[sample.ef_ddot[0], dq_r[0]])
    }
}

/// Exact regressor of [`crate::dynamics::TwoLinkArm`] for the parameters
/// `[a1, a2, a3, a4, a5, b1, b2, c1, c2]` (lumped inertia, gravity, viscous
/// and Coulomb terms).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TwoLinkRegressor;

impl<T: Real> Regressor<T> for TwoLinkRegressor {
    fn joints(&self) -> usize {
        2
    }

    fn params(&self) -> usize {
        9
    }

    fn evaluate(&self, q: &DVector<T>, dq: &DVector<T>, sample: &SurfaceSample<T>) -> DMatrix<T> {
        let (x, v) = (&sample.ef_ddot, &sample.ef_dot);
        let (c2, s2) = (q[1].cos(), q[1].sin());
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        let two = T::lit(2.0);
        let z = T::zero();
        let y3_1 = two * c2 * x[0] + c2 * x[1] - s2 * dq[1] * v[0] - s2 * (dq[0] + dq[1]) * v[1];
        let y3_2 = c2 * x[0] + s2 * dq[0] * v[0];
        #[rustfmt::skip]
        let y = DMatrix::from_row_slice(2, 9, &[
            x[0], x[1],        y3_1, c1, c12, dq[0], z,     dq[0].sgn(), z,
            z,    x[0] + x[1], y3_2, z,  c12, z,     dq[1], z,           dq[1].sgn(),
        ]);
        y
    }
}

/// `τ̄ = Y Â − diag(ρ̂) sat(S/β)`, in physical torque units.
pub fn control<T: Real>(y: &DMatrix<T>, state: &SlidingState<T>, sample: &SurfaceSample<T>, cfg: &SlidingConfig<T>) -> Result<DVector<T>> {
    let n = cfg.joints();
    if y.ncols() != state.a_hat.len() || y.nrows() != n {
        return Err(Error::dim("regressor", n * state.a_hat.len(), y.nrows() * y.ncols()));
    }
    if state.rho_hat.len() != n || sample.s.len() != n {
        return Err(Error::dim("switching gain", n, state.rho_hat.len()));
    }
    let slide = DVector::from_fn(n, |i, _| state.rho_hat[i] * sat(sample.s[i], cfg.beta[i]));
    Ok(y * &state.a_hat - slide)
}

/// One explicit-Euler step of the adaptation laws.
pub fn adapt<T: Real>(
    state: &SlidingState<T>,
    y: &DMatrix<T>,
    sample: &SurfaceSample<T>,
    cfg: &SlidingConfig<T>,
    dt: T,
) -> Result<SlidingState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::param("dt", "must be positive"));
    }
    if cfg.gamma.nrows() != state.a_hat.len() || y.ncols() != state.a_hat.len() {
        return Err(Error::dim("gamma", state.a_hat.len(), cfg.gamma.nrows()));
    }
    if sample.inside_layer() {
        return Ok(state.clone());
    }
    let a_hat = &state.a_hat - &cfg.gamma * (y.transpose() * &sample.s0) * dt;
    let mut rho_hat = &state.rho_hat + sample.s0.abs() * dt;
    if let Some(c) = cfg.rho_clamp {
        rho_hat.apply(|r| *r = r.min(c));
    }
    Ok(SlidingState { a_hat, rho_hat })
}

/// `V = ½[S₀ᵀ M_rr S₀ + Ãᵀ Γ⁻¹ Ã + ρ̃ᵀ ρ̃]` with `Ã = Â − A`, `ρ̃ = ρ̂ − ρ`.
pub fn lyapunov<T: Real>(
    sample: &SurfaceSample<T>,
    state: &SlidingState<T>,
    m_rr: &DMatrix<T>,
    true_a: &DVector<T>,
    true_rho: &DVector<T>,
    cfg: &SlidingConfig<T>,
) -> Result<T> {
    let a_err = &state.a_hat - true_a;
    let rho_err = &state.rho_hat - true_rho;
    let gamma_inv = cfg.gamma.clone().cholesky().ok_or(Error::Singular { what: "Γ" })?;
    let kinetic = sample.s0.dot(&(m_rr * &sample.s0));
    let param = a_err.dot(&gamma_inv.solve(&a_err));
    Ok((kinetic + param + rho_err.dot(&rho_err)) * T::lit(0.5))
}
