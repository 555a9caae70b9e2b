use nalgebra::{DMatrix, DVector};

use super::{ArmModel, FullState, PartitionedDynamics};
use crate::Real;

/// Inertial and friction constants of the two-link fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLinkParams<T: Real> {
    pub m1: T,
    pub m2: T,
    pub l1: T,
    /// Distance from joint 1 to the center of mass of link 1.
    pub lc1: T,
    pub lc2: T,
    /// Centroidal inertias.
    pub i1: T,
    pub i2: T,
    pub viscous: [T; 2],
    pub coulomb: [T; 2],
    /// Gravity along the arm plane; zero for a horizontal arm.
    pub gravity: T,
}

impl<T: Real> Default for TwoLinkParams<T> {
    fn default() -> Self {
        Self {
            m1: T::lit(1.0),
            m2: T::lit(0.8),
            l1: T::lit(0.5),
            lc1: T::lit(0.25),
            lc2: T::lit(0.2),
            i1: T::lit(0.02),
            i2: T::lit(0.015),
            viscous: [T::lit(0.05), T::lit(0.03)],
            coulomb: [T::lit(0.02), T::lit(0.01)],
            gravity: T::zero(),
        }
    }
}

/// Rigid two-link planar arm with closed-form `M(q)`, `V_m(q, q̇)`, gravity and
/// viscous + Coulomb friction. Optionally carries elastic modes attached
/// through a constant inertial coupling `M_rf`, which makes every block of the
/// partition nontrivial while keeping `Ṁ − 2V_m` skew-symmetric.
///
/// Used as a configuration-dependent test plant; the reference plant is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLinkArm<T: Real> {
    pub params: TwoLinkParams<T>,
    /// `M_rf`, 2 × m.
    pub coupling: DMatrix<T>,
    /// Diagonal of `K_ff`.
    pub stiffness: DVector<T>,
    /// Per-mode gravity load factor, `G_f = g γ cos(q1 + q2)`.
    pub flex_gravity: DVector<T>,
}

impl<T: Real> TwoLinkArm<T> {
    pub fn rigid(params: TwoLinkParams<T>) -> Self {
        Self {
            params,
            coupling: DMatrix::zeros(2, 0),
            stiffness: DVector::zeros(0),
            flex_gravity: DVector::zeros(0),
        }
    }

    /// Two elastic modes, vertical plane (gravity on).
    pub fn with_flex() -> Self {
        let params = TwoLinkParams {
            gravity: T::lit(9.81),
            ..TwoLinkParams::default()
        };
        Self {
            params,
            coupling: DMatrix::from_row_slice(2, 2, &[0.04, 0.015, 0.02, 0.01].map(T::lit)),
            stiffness: DVector::from_vec(vec![T::lit(400.0), T::lit(3600.0)]),
            flex_gravity: DVector::from_vec(vec![T::lit(0.01), T::lit(0.004)]),
        }
    }

    /// Lumped constants `[a1, a2, a3, a4, a5]` of the rigid dynamics.
    pub fn lumped(&self) -> [T; 5] {
        let p = &self.params;
        let a1 = p.i1 + p.i2 + p.m1 * p.lc1 * p.lc1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2);
        let a2 = p.i2 + p.m2 * p.lc2 * p.lc2;
        let a3 = p.m2 * p.l1 * p.lc2;
        let a4 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity;
        let a5 = p.m2 * p.lc2 * p.gravity;
        [a1, a2, a3, a4, a5]
    }

    /// Parameter vector matched by the two-link regressor:
    /// `[a1, a2, a3, a4, a5, b1, b2, c1, c2]`.
    pub fn regressor_parameters(&self) -> DVector<T> {
        let [a1, a2, a3, a4, a5] = self.lumped();
        let p = &self.params;
        DVector::from_vec(vec![
            a1,
            a2,
            a3,
            a4,
            a5,
            p.viscous[0],
            p.viscous[1],
            p.coulomb[0],
            p.coulomb[1],
        ])
    }

    pub fn mass_rr(&self, q: &DVector<T>) -> DMatrix<T> {
        let [a1, a2, a3, ..] = self.lumped();
        let c2 = q[1].cos();
        let two = T::lit(2.0);
        DMatrix::from_row_slice(2, 2, &[a1 + two * a3 * c2, a2 + a3 * c2, a2 + a3 * c2, a2])
    }

    pub fn coriolis_rr(&self, q: &DVector<T>, dq: &DVector<T>) -> DMatrix<T> {
        let [_, _, a3, ..] = self.lumped();
        let h = a3 * q[1].sin();
        DMatrix::from_row_slice(2, 2, &[-h * dq[1], -h * (dq[0] + dq[1]), h * dq[0], T::zero()])
    }

    pub fn gravity_r(&self, q: &DVector<T>) -> DVector<T> {
        let [_, _, _, a4, a5] = self.lumped();
        let c12 = (q[0] + q[1]).cos();
        DVector::from_vec(vec![a4 * q[0].cos() + a5 * c12, a5 * c12])
    }

    pub fn friction_r(&self, dq: &DVector<T>) -> DVector<T> {
        let p = &self.params;
        DVector::from_fn(2, |i, _| p.viscous[i] * dq[i] + p.coulomb[i] * dq[i].sgn())
    }
}

impl<T: Real> ArmModel<T> for TwoLinkArm<T> {
    fn n_rigid(&self) -> usize {
        2
    }

    fn n_flex(&self) -> usize {
        self.stiffness.len()
    }

    fn partitioned(&self, s: &FullState<T>) -> PartitionedDynamics<T> {
        let m = self.n_flex();
        let c12 = (s.q_r[0] + s.q_r[1]).cos();
        PartitionedDynamics {
            m_rr: self.mass_rr(&s.q_r),
            m_rf: self.coupling.clone(),
            m_fr: self.coupling.transpose(),
            m_ff: DMatrix::identity(m, m),
            v_rr: self.coriolis_rr(&s.q_r, &s.dq_r),
            v_rf: DMatrix::zeros(2, m),
            v_fr: DMatrix::zeros(m, 2),
            v_ff: DMatrix::zeros(m, m),
            k_ff: DMatrix::from_diagonal(&self.stiffness),
            f_r: self.friction_r(&s.dq_r),
            g_r: self.gravity_r(&s.q_r),
            g_f: &self.flex_gravity * (self.params.gravity * c12),
            b_r: DMatrix::identity(2, 2),
            b_f: DMatrix::zeros(m, 2),
        }
    }

    fn mass_rate(&self, s: &FullState<T>) -> DMatrix<T> {
        let [_, _, a3, ..] = self.lumped();
        let d = -a3 * s.q_r[1].sin() * s.dq_r[1];
        let m = self.n_flex();
        let mut out = DMatrix::zeros(2 + m, 2 + m);
        out[(0, 0)] = d * T::lit(2.0);
        out[(0, 1)] = d;
        out[(1, 0)] = d;
        out
    }

    fn configuration_dependent(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{eval_partitioned, is_spd};

    #[test]
    fn inertia_at_zero_configuration() {
        // closed form at q = 0: [[a1 + 2a3, a2 + a3], [a2 + a3, a2]]
        let arm = TwoLinkArm::<f64>::rigid(TwoLinkParams::default());
        let p = &arm.params;
        let a1 = p.i1 + p.i2 + p.m1 * p.lc1.powi(2) + p.m2 * (p.l1.powi(2) + p.lc2.powi(2));
        let a2 = p.i2 + p.m2 * p.lc2.powi(2);
        let a3 = p.m2 * p.l1 * p.lc2;
        let pd = eval_partitioned(&arm, &FullState::zeros(2, 0)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[a1 + 2.0 * a3, a2 + a3, a2 + a3, a2]);
        assert!((pd.m_rr - expect).amax() < 1e-15);
        assert!((a1 - 0.3295).abs() < 1e-12);
    }

    #[test]
    fn flexible_variant_is_spd_everywhere_on_a_grid() {
        let arm = TwoLinkArm::<f64>::with_flex();
        for k in 0..64 {
            let mut s = FullState::zeros(2, 2);
            s.q_r[1] = k as f64 * std::f64::consts::TAU / 64.0;
            let pd = eval_partitioned(&arm, &s).unwrap();
            assert!(is_spd(&pd.mass()));
        }
    }

    #[test]
    fn mass_rate_matches_finite_difference() {
        let arm = TwoLinkArm::<f64>::with_flex();
        let mut s = FullState::zeros(2, 2);
        s.q_r = DVector::from_vec(vec![0.3, 0.7]);
        s.dq_r = DVector::from_vec(vec![-1.1, 2.3]);
        let h = 1e-6;
        let mut fwd = s.clone();
        fwd.q_r += &s.dq_r * h;
        let mut back = s.clone();
        back.q_r -= &s.dq_r * h;
        let fd = (arm.partitioned(&fwd).mass() - arm.partitioned(&back).mass()) / (2.0 * h);
        assert!((fd - arm.mass_rate(&s)).amax() < 1e-8);
    }
}
