use nalgebra::{DMatrix, DVector};

use super::{ArmModel, ArmParams, Friction, FullState, ModalModel, PartitionedDynamics};
use crate::{Real, Result};

/// One flexible link on a hub motor, rigid mode plus truncated elastic modes,
/// moving in the horizontal plane.
///
/// The measured model is linear:
///
/// ```text
/// θ̈     = τ / I_r
/// q̈_fi = −ω_i² q_fi − 2δω_i q̇_fi + φ′_i(0) τ
/// ```
///
/// In partitioned form the modal coordinates are mass-normalized and the rigid
/// row is divided by `I_r`, so `M = I`, `B_r = 1`, `B_f = I_r φ′(0)` and the
/// generalized input is `u = τ / I_r`. Damping sits in `V_ff` and hub friction,
/// which is not part of the measured model, enters `F_r` in the same normalized
/// units.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleLinkPlant<T: Real> {
    pub params: ArmParams<T>,
    pub modal: ModalModel<T>,
    pub friction: Friction<T>,
}

pub fn build_single_link<T: Real>(params: ArmParams<T>, modal: ModalModel<T>) -> Result<SingleLinkPlant<T>> {
    params.validate()?;
    modal.validate()?;
    Ok(SingleLinkPlant {
        params,
        modal,
        friction: Friction::none(),
    })
}

impl<T: Real> SingleLinkPlant<T> {
    pub fn with_friction(mut self, friction: Friction<T>) -> Self {
        self.friction = friction;
        self
    }

    /// Copy with the stiffness scaled by `factor` (frequencies by `√factor`).
    pub fn with_stiffness_factor(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.modal.omega *= factor.sqrt();
        out
    }

    pub fn hub_inertia(&self) -> T {
        self.modal.hub_inertia
    }

    pub fn k_ff(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.modal.omega.map(|w| w * w))
    }

    /// First-order model `ẋ = A x + B τ` with `x = [θ, q_f, θ̇, q̇_f]`, friction
    /// excluded.
    pub fn state_space(&self) -> (DMatrix<T>, DMatrix<T>) {
        let m = self.modal.n_modes();
        let dim = 2 * (1 + m);
        let mut a = DMatrix::zeros(dim, dim);
        for i in 0..(1 + m) {
            a[(i, 1 + m + i)] = T::one();
        }
        let two = T::lit(2.0);
        for i in 0..m {
            let w = self.modal.omega[i];
            a[(2 + m + i, 1 + i)] = -w * w;
            a[(2 + m + i, 2 + m + i)] = -two * self.modal.delta * w;
        }
        let mut b = DMatrix::zeros(dim, 1);
        b[(1 + m, 0)] = T::one() / self.modal.hub_inertia;
        for i in 0..m {
            b[(2 + m + i, 0)] = self.modal.phi_prime0[i];
        }
        (a, b)
    }
}

impl<T: Real> ArmModel<T> for SingleLinkPlant<T> {
    fn n_rigid(&self) -> usize {
        1
    }

    fn n_flex(&self) -> usize {
        self.modal.n_modes()
    }

    fn partitioned(&self, state: &FullState<T>) -> PartitionedDynamics<T> {
        let m = self.modal.n_modes();
        let ir = self.modal.hub_inertia;
        let two = T::lit(2.0);
        let damping = self.modal.omega.map(|w| two * self.modal.delta * w);
        PartitionedDynamics {
            m_rr: DMatrix::identity(1, 1),
            m_rf: DMatrix::zeros(1, m),
            m_fr: DMatrix::zeros(m, 1),
            m_ff: DMatrix::identity(m, m),
            v_rr: DMatrix::zeros(1, 1),
            v_rf: DMatrix::zeros(1, m),
            v_fr: DMatrix::zeros(m, 1),
            v_ff: DMatrix::from_diagonal(&damping),
            k_ff: self.k_ff(),
            f_r: DVector::from_element(1, self.friction.torque(state.dq_r[0]) / ir),
            g_r: DVector::zeros(1),
            g_f: DVector::zeros(m),
            b_r: DMatrix::identity(1, 1),
            b_f: DMatrix::from_column_slice(m, 1, (&self.modal.phi_prime0 * ir).as_slice()),
        }
    }

    fn mass_rate(&self, _state: &FullState<T>) -> DMatrix<T> {
        let d = 1 + self.modal.n_modes();
        DMatrix::zeros(d, d)
    }

    fn input_scale(&self) -> T {
        T::one() / self.modal.hub_inertia
    }

    fn configuration_dependent(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{accel, eval_partitioned, state_derivative};

    fn plant(delta: f64) -> SingleLinkPlant<f64> {
        let modal = ModalModel::new(
            DVector::from_vec(vec![21.80, 128.80]),
            delta,
            DVector::from_vec(vec![17.0, 5.0]),
            0.00605,
        )
        .unwrap();
        build_single_link(ArmParams::laboratory(), modal).unwrap()
    }

    #[test]
    fn stiffness_is_squared_frequencies() {
        let k = plant(0.01).k_ff();
        assert!((k[(0, 0)] - 475.24).abs() < 1e-9);
        assert!((k[(1, 1)] - 16589.44).abs() < 1e-9);
        assert_eq!(k[(0, 1)], 0.0);
    }

    #[test]
    fn undamped_matrix_has_no_damping_entries() {
        let (a, _) = plant(0.0).state_space();
        assert_eq!(a[(4, 4)], 0.0);
        assert_eq!(a[(5, 5)], 0.0);
        assert_eq!(a[(4, 1)], -475.24);
    }

    #[test]
    fn printed_state_space_layout() {
        let p = plant(0.01);
        let (a, b) = p.state_space();
        for i in 0..3 {
            assert_eq!(a[(i, i + 3)], 1.0);
        }
        assert_eq!(a.row(3).iter().filter(|v| **v != 0.0).count(), 0);
        assert!((a[(5, 5)] + 2.0 * 0.01 * 128.8).abs() < 1e-12);
        assert_eq!(b.as_slice(), &[0.0, 0.0, 0.0, 1.0 / 0.00605, 17.0, 5.0]);
    }

    #[test]
    fn partition_reassembles_into_state_space() {
        let p = plant(0.02);
        let state = FullState::zeros(1, 2);
        let pd = eval_partitioned(&p, &state).unwrap();
        let minv = pd.mass().try_inverse().unwrap();
        let mut a = DMatrix::zeros(6, 6);
        a.view_mut((0, 3), (3, 3)).copy_from(&DMatrix::identity(3, 3));
        a.view_mut((3, 0), (3, 3)).copy_from(&(-&minv * pd.stiffness()));
        a.view_mut((3, 3), (3, 3)).copy_from(&(-&minv * pd.coriolis()));
        let mut b = DMatrix::zeros(6, 1);
        b.view_mut((3, 0), (3, 1)).copy_from(&(&minv * pd.input() * p.input_scale()));
        let (a_ref, b_ref) = p.state_space();
        assert!((a - a_ref).amax() < 1e-12);
        assert!((b - b_ref).amax() < 1e-12);
    }

    #[test]
    fn blocks_are_state_independent() {
        let p = plant(0.01);
        let z = eval_partitioned(&p, &FullState::zeros(1, 2)).unwrap();
        let mut s = FullState::zeros(1, 2);
        s.q_r[0] = 1.3;
        s.q_f[1] = -0.2;
        s.dq_f[0] = 4.0;
        assert_eq!(z, eval_partitioned(&p, &s).unwrap());
        assert_eq!(z.mass(), DMatrix::identity(3, 3));
    }

    #[test]
    fn equilibrium_and_unit_acceleration() {
        let p = plant(0.01);
        let zero = FullState::zeros(1, 2);
        let a = accel(&p, &zero, &DVector::zeros(1)).unwrap();
        assert!(a.iter().all(|v| *v == 0.0));
        let a = accel(&p, &zero, &DVector::from_element(1, 0.00605)).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modal_restoring_force() {
        let p = plant(0.0);
        let mut s = FullState::zeros(1, 2);
        s.q_f[0] = 1.0;
        let a = accel(&p, &s, &DVector::zeros(1)).unwrap();
        assert!((a[1] + 475.24).abs() < 1e-9);
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn friction_enters_rigid_row() {
        let p = plant(0.0).with_friction(Friction { viscous: 0.004, coulomb: 0.002 });
        let mut s = FullState::zeros(1, 2);
        s.dq_r[0] = 2.0;
        let d = state_derivative(&p, &s, &DVector::zeros(1)).unwrap();
        assert!((d[3] + (0.004 * 2.0 + 0.002) / 0.00605).abs() < 1e-9);
        assert_eq!(d[4], 0.0);
    }

    #[test]
    fn wrong_torque_length_is_rejected() {
        let p = plant(0.0);
        assert!(accel(&p, &FullState::zeros(1, 2), &DVector::zeros(2)).is_err());
        assert!(eval_partitioned(&p, &FullState::zeros(1, 3)).is_err());
    }
}
