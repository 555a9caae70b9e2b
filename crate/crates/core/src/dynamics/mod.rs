//! Plant models in rigid/flexible partitioned Lagrangian form.
//!
//! Every model is evaluated into a [`PartitionedDynamics`] value holding the
//! blocks of
//!
//! ```text
//! [M_rr M_rf] [q̈_r]   [V_rr V_rf] [q̇_r]   [0   0  ] [q_r]   [F_r]   [G_r]   [B_r]
//! [M_fr M_ff] [q̈_f] + [V_fr V_ff] [q̇_f] + [0 K_ff] [q_f] + [ 0 ] + [G_f] = [B_f] u
//! ```
//!
//! where `u` is the model's generalized input. For most models `u` is the
//! joint torque; the single-link reference plant normalizes it by the hub
//! inertia (see [`ArmModel::input_scale`]).

mod beam;
mod params;
mod single_link;
mod two_link;

pub use beam::{beam_modes, BeamModes};
pub use params::{ArmParams, Friction, ModalModel};
pub use single_link::{build_single_link, SingleLinkPlant};
pub use two_link::{TwoLinkArm, TwoLinkParams};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// Generalized coordinates and velocities, split into rigid and flexible parts.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState<T: Real> {
    pub q_r: DVector<T>,
    pub q_f: DVector<T>,
    pub dq_r: DVector<T>,
    pub dq_f: DVector<T>,
}

impl<T: Real> FullState<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            q_r: DVector::zeros(n),
            q_f: DVector::zeros(m),
            dq_r: DVector::zeros(n),
            dq_f: DVector::zeros(m),
        }
    }

    pub fn n(&self) -> usize {
        self.q_r.len()
    }

    pub fn m(&self) -> usize {
        self.q_f.len()
    }

    /// Stacks the state as `[q_r; q_f; q̇_r; q̇_f]`.
    pub fn to_vector(&self) -> DVector<T> {
        let (n, m) = (self.n(), self.m());
        let mut x = DVector::zeros(2 * (n + m));
        x.rows_mut(0, n).copy_from(&self.q_r);
        x.rows_mut(n, m).copy_from(&self.q_f);
        x.rows_mut(n + m, n).copy_from(&self.dq_r);
        x.rows_mut(2 * n + m, m).copy_from(&self.dq_f);
        x
    }

    pub fn from_vector(x: &DVector<T>, n: usize, m: usize) -> Result<Self> {
        if x.len() != 2 * (n + m) {
            return Err(Error::dim("state vector", 2 * (n + m), x.len()));
        }
        Ok(Self {
            q_r: x.rows(0, n).into_owned(),
            q_f: x.rows(n, m).into_owned(),
            dq_r: x.rows(n + m, n).into_owned(),
            dq_f: x.rows(2 * n + m, m).into_owned(),
        })
    }

    pub fn q(&self) -> DVector<T> {
        stack(&self.q_r, &self.q_f)
    }

    pub fn dq(&self) -> DVector<T> {
        stack(&self.dq_r, &self.dq_f)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.finite())
    }
}

/// Blocks of the partitioned equations of motion at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedDynamics<T: Real> {
    pub m_rr: DMatrix<T>,
    pub m_rf: DMatrix<T>,
    pub m_fr: DMatrix<T>,
    pub m_ff: DMatrix<T>,
    pub v_rr: DMatrix<T>,
    pub v_rf: DMatrix<T>,
    pub v_fr: DMatrix<T>,
    pub v_ff: DMatrix<T>,
    pub k_ff: DMatrix<T>,
    pub f_r: DVector<T>,
    pub g_r: DVector<T>,
    pub g_f: DVector<T>,
    pub b_r: DMatrix<T>,
    pub b_f: DMatrix<T>,
}

impl<T: Real> PartitionedDynamics<T> {
    pub fn n(&self) -> usize {
        self.m_rr.nrows()
    }

    pub fn m(&self) -> usize {
        self.m_ff.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b_r.ncols()
    }

    pub fn mass(&self) -> DMatrix<T> {
        blocks(&self.m_rr, &self.m_rf, &self.m_fr, &self.m_ff)
    }

    /// Matrix `V_m` of the factorization `V(q, q̇) = V_m q̇`.
    pub fn coriolis(&self) -> DMatrix<T> {
        blocks(&self.v_rr, &self.v_rf, &self.v_fr, &self.v_ff)
    }

    pub fn stiffness(&self) -> DMatrix<T> {
        let (n, m) = (self.n(), self.m());
        let mut k = DMatrix::zeros(n + m, n + m);
        k.view_mut((n, n), (m, m)).copy_from(&self.k_ff);
        k
    }

    pub fn input(&self) -> DMatrix<T> {
        let (n, m) = (self.n(), self.m());
        let mut b = DMatrix::zeros(n + m, self.inputs());
        b.rows_mut(0, n).copy_from(&self.b_r);
        b.rows_mut(n, m).copy_from(&self.b_f);
        b
    }

    /// Friction plus gravity, `[F_r + G_r; G_f]`.
    pub fn generalized_loads(&self) -> DVector<T> {
        stack(&(&self.f_r + &self.g_r), &self.g_f)
    }

    fn check(&self) -> Result<()> {
        let (n, m, p) = (self.n(), self.m(), self.inputs());
        let shapes = [
            ("M_rf", self.m_rf.shape(), (n, m)),
            ("M_fr", self.m_fr.shape(), (m, n)),
            ("M_ff", self.m_ff.shape(), (m, m)),
            ("V_rr", self.v_rr.shape(), (n, n)),
            ("V_rf", self.v_rf.shape(), (n, m)),
            ("V_fr", self.v_fr.shape(), (m, n)),
            ("V_ff", self.v_ff.shape(), (m, m)),
            ("K_ff", self.k_ff.shape(), (m, m)),
            ("B_f", self.b_f.shape(), (m, p)),
        ];
        for (what, got, want) in shapes {
            if got != want {
                return Err(Error::dim(what, want.0 * want.1, got.0 * got.1));
            }
        }
        for (what, v, len) in [("F_r", &self.f_r, n), ("G_r", &self.g_r, n), ("G_f", &self.g_f, m)] {
            if v.len() != len {
                return Err(Error::dim(what, len, v.len()));
            }
        }
        Ok(())
    }
}

/// A flexible-arm plant that can be evaluated in partitioned form.
///
/// Implementations are immutable and evaluation is a pure function of the
/// state, so models can be shared across threads.
pub trait ArmModel<T: Real>: Send + Sync {
    /// Number of rigid coordinates (joints), which is also the number of inputs.
    fn n_rigid(&self) -> usize;

    /// Total number of flexible modal coordinates.
    fn n_flex(&self) -> usize;

    /// Blocks at `state`. Callers go through [`eval_partitioned`], which checks
    /// the state dimensions first.
    fn partitioned(&self, state: &FullState<T>) -> PartitionedDynamics<T>;

    /// Time derivative of the full inertia matrix along the motion.
    fn mass_rate(&self, state: &FullState<T>) -> DMatrix<T>;

    /// Factor mapping physical joint torque to the generalized input `u`.
    fn input_scale(&self) -> T {
        T::one()
    }

    /// Whether the blocks vary with the configuration.
    fn configuration_dependent(&self) -> bool;
}

pub fn eval_partitioned<T: Real, A: ArmModel<T> + ?Sized>(
    model: &A,
    state: &FullState<T>,
) -> Result<PartitionedDynamics<T>> {
    check_state(model, state)?;
    let pd = model.partitioned(state);
    pd.check()?;
    Ok(pd)
}

pub(crate) fn check_state<T: Real, A: ArmModel<T> + ?Sized>(model: &A, state: &FullState<T>) -> Result<()> {
    let (n, m) = (model.n_rigid(), model.n_flex());
    for (what, len, want) in [
        ("q_r", state.q_r.len(), n),
        ("dq_r", state.dq_r.len(), n),
        ("q_f", state.q_f.len(), m),
        ("dq_f", state.dq_f.len(), m),
    ] {
        if len != want {
            return Err(Error::dim(what, want, len));
        }
    }
    Ok(())
}

/// Generalized acceleration `q̈ = M⁻¹(B u − V_m q̇ − K q − F − G)` for the
/// physical joint torque `tau`, stacked as `[q̈_r; q̈_f]`.
pub fn accel<T: Real, A: ArmModel<T> + ?Sized>(model: &A, state: &FullState<T>, tau: &DVector<T>) -> Result<DVector<T>> {
    let pd = eval_partitioned(model, state)?;
    if tau.len() != pd.inputs() {
        return Err(Error::dim("torque", pd.inputs(), tau.len()));
    }
    let u = tau * model.input_scale();
    let rhs = pd.input() * u - pd.coriolis() * state.dq() - pd.stiffness() * state.q() - pd.generalized_loads();
    let chol = pd.mass().cholesky().ok_or(Error::Singular { what: "inertia matrix M" })?;
    Ok(chol.solve(&rhs))
}

/// First-order state derivative `[q̇; q̈]` as a flat vector, for the integrator.
pub fn state_derivative<T: Real, A: ArmModel<T> + ?Sized>(
    model: &A,
    state: &FullState<T>,
    tau: &DVector<T>,
) -> Result<DVector<T>> {
    let qdd = accel(model, state, tau)?;
    Ok(stack(&state.dq(), &qdd))
}

/// Smallest eigenvalue of the symmetric part of `m`; positive iff SPD.
pub fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    let sym = (m + m.transpose()) * T::lit(0.5);
    sym.symmetric_eigenvalues().iter().copied().fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
}

pub fn is_spd<T: Real>(m: &DMatrix<T>) -> bool {
    m.is_square() && min_eigenvalue(m) > T::zero()
}

/// `N = Ṁ − 2V_m` at `state`.
pub fn skew_matrix<T: Real, A: ArmModel<T> + ?Sized>(model: &A, state: &FullState<T>) -> Result<DMatrix<T>> {
    let pd = eval_partitioned(model, state)?;
    Ok(model.mass_rate(state) - pd.coriolis() * T::lit(2.0))
}

pub(crate) fn stack<T: Real>(a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

pub(crate) fn blocks<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>, d: &DMatrix<T>) -> DMatrix<T> {
    let (n, m) = (a.nrows(), d.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, m)).copy_from(b);
    out.view_mut((n, 0), (m, n)).copy_from(c);
    out.view_mut((n, n), (m, m)).copy_from(d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_vector_round_trip() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = FullState::<f64>::from_vector(&x, 1, 2).unwrap();
        assert_eq!(s.q_r[0], 1.0);
        assert_eq!(s.q_f[1], 3.0);
        assert_eq!(s.dq_r[0], 4.0);
        assert_eq!(s.to_vector(), x);
        assert!(FullState::<f64>::from_vector(&x, 2, 2).is_err());
    }

    #[test]
    fn spd_check() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!(is_spd(&m));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!is_spd(&bad));
        assert!((min_eigenvalue(&m) - 1.0f64).abs() < 1e-12);
    }
}
