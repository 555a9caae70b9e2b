use nalgebra::{DMatrix, DVector};

use super::ArmParams;
use crate::{Error, Real, Result};

/// Analytic modal data for a uniform Euler–Bernoulli link.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModes<T: Real> {
    /// Roots `β_i L` of `cos(βL) cosh(βL) = −1`.
    pub beta_l: DVector<T>,
    /// Clamped-free natural frequencies `β_i² √(EI/ρ)`, rad/s.
    pub omega: DVector<T>,
    /// Frequencies of the link pinned to the motor hub (hub inertia plus the
    /// clamped-free shapes as a Galerkin basis), rad/s.
    pub hub_omega: DVector<T>,
    /// Base slope of the mass-normalized hub-coupled mode shapes, 1/m. The
    /// clamped-free shapes themselves have zero slope at the root, so this is
    /// the slope of the absolute shape `x·θ_k + Σ v_ik φ_i(x)`, i.e. the hub
    /// rotation component `θ_k` of each mode. Signs are chosen positive.
    pub phi_prime0: DVector<T>,
}

const MAX_BISECTIONS: usize = 400;

/// Root of `cos x + sech x` (same zeros as `cos x cosh x + 1`) in
/// `[(k−1)π, kπ]`.
fn characteristic_root<T: Real>(k: usize) -> Result<T> {
    let pi = T::pi();
    let g = |x: T| x.cos() + T::one() / x.cosh();
    let mut lo = pi * T::from_usize(k - 1).unwrap();
    let mut hi = pi * T::from_usize(k).unwrap();
    let mut g_lo = g(lo);
    if g_lo * g(hi) > T::zero() {
        return Err(Error::RootNotConverged { mode: k });
    }
    let tol = T::lit(1e-10);
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo + hi) * T::lit(0.5);
        let g_mid = g(mid);
        if g_mid.abs() < tol || hi - lo <= T::default_epsilon() * hi * T::lit(4.0) {
            return Ok(mid);
        }
        if (g_mid > T::zero()) == (g_lo > T::zero()) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNotConverged { mode: k })
}

/// `ρ ∫₀ᴸ x φ(x) dx` for the mass-normalized clamped-free shape with root `bl`.
fn first_moment<T: Real>(bl: T, length: T, density: T) -> T {
    let b = bl / length;
    let l = length;
    let (sh, ch, s, c) = (bl.sinh(), bl.cosh(), bl.sin(), bl.cos());
    let sigma = (ch + c) / (sh + s);
    let b2 = b * b;
    let i_cosh = l * sh / b - (ch - T::one()) / b2;
    let i_cos = l * s / b + (c - T::one()) / b2;
    let i_sinh = l * ch / b - sh / b2;
    let i_sin = -l * c / b + s / b2;
    density / (density * l).sqrt() * (i_cosh - i_cos - sigma * (i_sinh - i_sin))
}

/// First `n` modes of the link in `params`.
pub fn beam_modes<T: Real>(params: &ArmParams<T>, n: usize) -> Result<BeamModes<T>> {
    if n == 0 {
        return Err(Error::param("n", "at least one mode is required"));
    }
    params.validate()?;
    let l = params.link_length;
    let wave = (params.flexural_rigidity / params.linear_density).sqrt();

    let beta_l = (1..=n).map(characteristic_root::<T>).collect::<Result<Vec<_>>>()?;
    let beta_l = DVector::from_vec(beta_l);
    let omega = beta_l.map(|bl| (bl / l) * (bl / l) * wave);

    // Hub + elastic link: coordinates [θ, q_1..q_n] with q_i on the clamped-free
    // shapes; M = [[I_r, mᵀ], [m, I]], K = diag(0, ω_i²).
    let dim = n + 1;
    let mut mass = DMatrix::identity(dim, dim);
    mass[(0, 0)] = params.rigid_inertia();
    for i in 0..n {
        let mi = first_moment(beta_l[i], l, params.linear_density);
        mass[(0, i + 1)] = mi;
        mass[(i + 1, 0)] = mi;
    }
    let mut stiff = DMatrix::zeros(dim, dim);
    for i in 0..n {
        stiff[(i + 1, i + 1)] = omega[i] * omega[i];
    }
    let chol = mass.clone().cholesky().ok_or(Error::Singular { what: "hub-link inertia" })?;
    let l_inv = chol.l().try_inverse().ok_or(Error::Singular { what: "hub-link inertia" })?;
    let reduced = &l_inv * stiff * l_inv.transpose();
    let eig = (&reduced + reduced.transpose()).scale(T::lit(0.5)).symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let shapes = l_inv.transpose() * &eig.eigenvectors;

    let mut hub_omega = DVector::zeros(n);
    let mut phi_prime0 = DVector::zeros(n);
    // order[0] is the rigid-body mode (zero eigenvalue).
    for k in 0..n {
        let j = order[k + 1];
        hub_omega[k] = eig.eigenvalues[j].max(T::zero()).sqrt();
        phi_prime0[k] = shapes[(0, j)].abs();
    }

    Ok(BeamModes {
        beta_l,
        omega,
        hub_omega,
        phi_prime0,
    })
}
