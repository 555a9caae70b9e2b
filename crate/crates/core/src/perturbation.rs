//! Two-time-scale decomposition of a partitioned flexible-arm model.
//!
//! With `k_m` the smallest stiffness constant, `ε = k_m^{-1/2}`,
//! `ψ = q_f / ε²` and `K_ff = K̃_ff / ε²`, the model splits into a slow
//! (rigid-equivalent) subsystem on the manifold `ψ̄` and a fast linear
//! subsystem in `φ = [ψ − ψ̄; εψ̇]` evolving in the stretched time `T = t/ε`.
//!
//! Torques here are in the model's generalized input units `u` (see
//! [`crate::dynamics::ArmModel::input_scale`]).

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{blocks, stack, PartitionedDynamics};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFactor<T: Real> {
    pub k_m: T,
    pub epsilon: T,
    /// `K̃_ff = K_ff / k_m`.
    pub k_tilde: DMatrix<T>,
}

/// `k_m` is the smallest eigenvalue of `K_ff` (its smallest diagonal entry when
/// diagonal).
pub fn scale_factor<T: Real>(k_ff: &DMatrix<T>) -> Result<ScaleFactor<T>> {
    if !k_ff.is_square() || k_ff.is_empty() {
        return Err(Error::param("K_ff", "must be a non-empty square matrix"));
    }
    let k_m = if is_diagonal(k_ff) {
        k_ff.diagonal().iter().copied().fold(k_ff[(0, 0)], |a, b| a.min(b))
    } else {
        crate::dynamics::min_eigenvalue(k_ff)
    };
    if !(k_m > T::zero()) || !k_m.finite() {
        return Err(Error::param("K_ff", format!("smallest stiffness constant must be positive, got {k_m}")));
    }
    Ok(ScaleFactor {
        k_m,
        epsilon: T::one() / k_m.sqrt(),
        k_tilde: k_ff / k_m,
    })
}

fn is_diagonal<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().enumerate().all(|(k, v)| k % m.nrows() == k / m.nrows() || *v == T::zero())
}

/// Blocks of `H = M⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseBlocks<T: Real> {
    pub h_rr: DMatrix<T>,
    pub h_rf: DMatrix<T>,
    pub h_fr: DMatrix<T>,
    pub h_ff: DMatrix<T>,
}

impl<T: Real> InverseBlocks<T> {
    pub fn assemble(&self) -> DMatrix<T> {
        blocks(&self.h_rr, &self.h_rf, &self.h_fr, &self.h_ff)
    }
}

pub fn invert_blocks<T: Real>(pd: &PartitionedDynamics<T>) -> Result<InverseBlocks<T>> {
    let (n, m) = (pd.n(), pd.m());
    let mass = pd.mass();
    let chol = mass.cholesky().ok_or(Error::Singular { what: "inertia matrix M" })?;
    let mut h = chol.inverse();
    // symmetrize away round-off
    h = (&h + h.transpose()) * T::lit(0.5);
    Ok(InverseBlocks {
        h_rr: h.view((0, 0), (n, n)).into_owned(),
        h_rf: h.view((0, n), (n, m)).into_owned(),
        h_fr: h.view((n, 0), (m, n)).into_owned(),
        h_ff: h.view((n, n), (m, m)).into_owned(),
    })
}

/// The `H`-weighted input and Coriolis blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrices<T: Real> {
    pub b1_r: DMatrix<T>,
    pub b1_f: DMatrix<T>,
    pub v1_rr: DMatrix<T>,
    pub v1_fr: DMatrix<T>,
    pub v1_rf: DMatrix<T>,
    pub v1_ff: DMatrix<T>,
}

pub fn reduced_matrices<T: Real>(pd: &PartitionedDynamics<T>, h: &InverseBlocks<T>) -> Result<ReducedMatrices<T>> {
    if h.h_rr.nrows() != pd.n() || h.h_ff.nrows() != pd.m() {
        return Err(Error::dim("inverse blocks", pd.n() + pd.m(), h.h_rr.nrows() + h.h_ff.nrows()));
    }
    Ok(ReducedMatrices {
        b1_r: &h.h_rr * &pd.b_r + &h.h_rf * &pd.b_f,
        b1_f: &h.h_fr * &pd.b_r + &h.h_ff * &pd.b_f,
        v1_rr: &h.h_rr * &pd.v_rr + &h.h_rf * &pd.v_fr,
        v1_fr: &h.h_fr * &pd.v_rr + &h.h_ff * &pd.v_fr,
        v1_rf: &h.h_rr * &pd.v_rf + &h.h_rf * &pd.v_ff,
        v1_ff: &h.h_fr * &pd.v_rf + &h.h_ff * &pd.v_ff,
    })
}

/// Quasi-static deflection `ψ̄` reached when `ε → 0`:
///
/// ```text
/// ψ̄ = K̃⁻¹ H_ff⁻¹ (B¹_f τ̄ − V¹_fr q̇_r − H_fr F_r − H_fr G_r − H_ff G_f)
/// ```
///
/// The friction and gravity weights are carried exactly as they appear in the
/// scaled equations of motion; with `H = M⁻¹` they are the rows of
/// `H [F_r + G_r; G_f]`.
pub fn slow_manifold<T: Real>(
    pd: &PartitionedDynamics<T>,
    h: &InverseBlocks<T>,
    rm: &ReducedMatrices<T>,
    scale: &ScaleFactor<T>,
    tau_slow: &DVector<T>,
    dq_r: &DVector<T>,
) -> Result<DVector<T>> {
    if tau_slow.len() != pd.inputs() {
        return Err(Error::dim("slow torque", pd.inputs(), tau_slow.len()));
    }
    if dq_r.len() != pd.n() {
        return Err(Error::dim("dq_r", pd.n(), dq_r.len()));
    }
    let rhs = &rm.b1_f * tau_slow - &rm.v1_fr * dq_r - &h.h_fr * &pd.f_r - &h.h_fr * &pd.g_r - &h.h_ff * &pd.g_f;
    let y = h.h_ff.clone().lu().solve(&rhs).ok_or(Error::Singular { what: "H_ff" })?;
    scale.k_tilde.clone().lu().solve(&y).ok_or(Error::Singular { what: "scaled stiffness K̃_ff" })
}

/// Rigid-equivalent acceleration on the manifold:
/// `q̈̄_r = M_rr⁻¹ [B_r τ̄ − V_rr q̇_r − F_r − G_r]`.
///
/// This is what substituting `ψ̄` into the rigid row gives exactly (Schur
/// complement of `M`), so it uses the unweighted `V_rr`.
pub fn slow_dynamics<T: Real>(pd: &PartitionedDynamics<T>, tau_slow: &DVector<T>, dq_r: &DVector<T>) -> Result<DVector<T>> {
    if tau_slow.len() != pd.inputs() {
        return Err(Error::dim("slow torque", pd.inputs(), tau_slow.len()));
    }
    if dq_r.len() != pd.n() {
        return Err(Error::dim("dq_r", pd.n(), dq_r.len()));
    }
    let rhs = &pd.b_r * tau_slow - &pd.v_rr * dq_r - &pd.f_r - &pd.g_r;
    let chol = pd.m_rr.clone().cholesky().ok_or(Error::Singular { what: "M_rr" })?;
    Ok(chol.solve(&rhs))
}

/// Fast subsystem `dφ/dT = A φ + B τ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct FastModel<T: Real> {
    /// `[0 I; −H_ff K̃_ff  −V¹_ff ε]`
    pub a: DMatrix<T>,
    /// `[0; B¹_f]`
    pub b: DMatrix<T>,
    pub epsilon: T,
}

impl<T: Real> FastModel<T> {
    pub fn n_modes(&self) -> usize {
        self.a.nrows() / 2
    }

    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<T>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

/// The first-order damping term `−V¹_ff ε` is kept.
pub fn fast_model<T: Real>(h: &InverseBlocks<T>, rm: &ReducedMatrices<T>, k_tilde: &DMatrix<T>, epsilon: T) -> Result<FastModel<T>> {
    let m = h.h_ff.nrows();
    if k_tilde.shape() != (m, m) || rm.v1_ff.shape() != (m, m) || rm.b1_f.nrows() != m {
        return Err(Error::dim("fast model blocks", m, k_tilde.nrows()));
    }
    let p = rm.b1_f.ncols();
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    a.view_mut((0, m), (m, m)).fill_with_identity();
    a.view_mut((m, 0), (m, m)).copy_from(&(-(&h.h_ff * k_tilde)));
    a.view_mut((m, m), (m, m)).copy_from(&(&rm.v1_ff * (-epsilon)));
    let mut b = DMatrix::zeros(2 * m, p);
    b.view_mut((m, 0), (m, p)).copy_from(&rm.b1_f);
    Ok(FastModel { a, b, epsilon })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastState<T: Real> {
    /// `ψ − ψ̄`
    pub phi1: DVector<T>,
    /// `εψ̇`
    pub phi2: DVector<T>,
}

impl<T: Real> FastState<T> {
    pub fn zeros(m: usize) -> Self {
        Self {
            phi1: DVector::zeros(m),
            phi2: DVector::zeros(m),
        }
    }

    pub fn stacked(&self) -> DVector<T> {
        stack(&self.phi1, &self.phi2)
    }

    pub fn from_stacked(x: &DVector<T>) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::dim("fast state", x.len() + 1, x.len()));
        }
        let m = x.len() / 2;
        Ok(Self {
            phi1: x.rows(0, m).into_owned(),
            phi2: x.rows(m, m).into_owned(),
        })
    }
}

/// The manifold's own rate `ψ̄̇` is taken as zero (slow variables frozen on the
/// fast scale).
pub fn fast_state<T: Real>(psi: &DVector<T>, dpsi: &DVector<T>, psi_bar: &DVector<T>, epsilon: T) -> Result<FastState<T>> {
    if dpsi.len() != psi.len() || psi_bar.len() != psi.len() {
        return Err(Error::dim("fast state", psi.len(), dpsi.len().max(psi_bar.len())));
    }
    Ok(FastState {
        phi1: psi - psi_bar,
        phi2: dpsi * epsilon,
    })
}

/// Everything the composite controller needs from one evaluation of the blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T: Real> {
    pub pd: PartitionedDynamics<T>,
    pub scale: ScaleFactor<T>,
    pub h: InverseBlocks<T>,
    pub rm: ReducedMatrices<T>,
}

impl<T: Real> Decomposition<T> {
    pub fn new(pd: PartitionedDynamics<T>) -> Result<Self> {
        let scale = scale_factor(&pd.k_ff)?;
        let h = invert_blocks(&pd)?;
        let rm = reduced_matrices(&pd, &h)?;
        Ok(Self { pd, scale, h, rm })
    }

    pub fn epsilon(&self) -> T {
        self.scale.epsilon
    }

    pub fn fast_model(&self) -> Result<FastModel<T>> {
        fast_model(&self.h, &self.rm, &self.scale.k_tilde, self.scale.epsilon)
    }

    pub fn manifold(&self, tau_slow: &DVector<T>, dq_r: &DVector<T>) -> Result<DVector<T>> {
        slow_manifold(&self.pd, &self.h, &self.rm, &self.scale, tau_slow, dq_r)
    }

    /// Fast state from measured deflections `q_f` and rates `q̇_f`, relative to
    /// the manifold `ψ̄`: `φ1 = q_f/ε² − ψ̄`, `φ2 = q̇_f/ε`.
    pub fn fast_state_from(&self, q_f: &DVector<T>, dq_f: &DVector<T>, psi_bar: &DVector<T>) -> Result<FastState<T>> {
        let k_m = self.scale.k_m;
        fast_state(&(q_f * k_m), &(dq_f * k_m), psi_bar, self.scale.epsilon)
    }
}
