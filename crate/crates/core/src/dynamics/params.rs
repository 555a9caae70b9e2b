use nalgebra::DVector;

use crate::{Error, Real, Result};

/// Physical constants of a uniform flexible link driven by a hub motor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams<T: Real> {
    /// Motor (hub) inertia, kg·m².
    pub motor_inertia: T,
    /// m
    pub link_length: T,
    /// m
    pub link_height: T,
    /// m
    pub link_thickness: T,
    /// kg
    pub link_mass: T,
    /// kg/m
    pub linear_density: T,
    /// N·m²
    pub flexural_rigidity: T,
}

impl<T: Real> ArmParams<T> {
    /// The laboratory spring-steel link.
    pub fn laboratory() -> Self {
        Self {
            motor_inertia: T::lit(0.002),
            link_length: T::lit(0.45),
            link_height: T::lit(0.02),
            link_thickness: T::lit(0.0008),
            link_mass: T::lit(0.06),
            linear_density: T::lit(0.1333),
            flexural_rigidity: T::lit(0.1621),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("motor_inertia", self.motor_inertia),
            ("link_length", self.link_length),
            ("link_height", self.link_height),
            ("link_thickness", self.link_thickness),
            ("link_mass", self.link_mass),
            ("linear_density", self.linear_density),
            ("flexural_rigidity", self.flexural_rigidity),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.finite() {
                return Err(Error::param(name, format!("must be strictly positive, got {v}")));
            }
        }
        let mismatch = (self.linear_density * self.link_length - self.link_mass).abs() / self.link_mass;
        if mismatch > T::lit(0.01) {
            return Err(Error::param(
                "linear_density",
                format!("ρ·L differs from the link mass by {:.3}%", mismatch.to_f64_lossy() * 100.0),
            ));
        }
        Ok(())
    }

    /// Hub-side inertia of the link taken as rigid: `I_h + ρL³/3`.
    pub fn rigid_inertia(&self) -> T {
        let l = self.link_length;
        self.motor_inertia + self.linear_density * l * l * l / T::lit(3.0)
    }
}

/// Truncated modal description of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel<T: Real> {
    /// Modal frequencies ω_i, rad/s.
    pub omega: DVector<T>,
    /// Modal damping ratio δ.
    pub delta: T,
    /// Base slope φ′_i(0) of the mass-normalized mode shapes, 1/m.
    pub phi_prime0: DVector<T>,
    /// Total hub-side inertia I_r, kg·m².
    pub hub_inertia: T,
}

impl<T: Real> ModalModel<T> {
    pub fn new(omega: DVector<T>, delta: T, phi_prime0: DVector<T>, hub_inertia: T) -> Result<Self> {
        let model = Self {
            omega,
            delta,
            phi_prime0,
            hub_inertia,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    /// Measured frequencies of the first two modes (21.80 and 128.80 rad/s),
    /// δ = 0.01, rigid-link hub inertia and base slopes from [`super::beam_modes`].
    pub fn reference(params: &ArmParams<T>) -> Result<Self> {
        params.validate()?;
        let modes = super::beam_modes(params, 2)?;
        Self::new(
            DVector::from_vec(vec![T::lit(21.80), T::lit(128.80)]),
            T::lit(0.01),
            modes.phi_prime0,
            params.rigid_inertia(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.is_empty() {
            return Err(Error::param("omega", "at least one mode is required"));
        }
        if self.phi_prime0.len() != self.omega.len() {
            return Err(Error::dim("phi_prime0", self.omega.len(), self.phi_prime0.len()));
        }
        if !(self.omega[0] > T::zero()) {
            return Err(Error::param("omega", "modal frequencies must be positive"));
        }
        for w in self.omega.as_slice().windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::param("omega", "modal frequencies must be strictly increasing"));
            }
        }
        if !(self.delta >= T::zero() && self.delta < T::one()) {
            return Err(Error::param("delta", format!("must lie in [0, 1), got {}", self.delta)));
        }
        if !(self.hub_inertia > T::zero()) {
            return Err(Error::param("hub_inertia", "must be positive"));
        }
        if !self.phi_prime0.iter().all(|v| v.finite()) || !self.omega.iter().all(|v| v.finite()) {
            return Err(Error::param("phi_prime0", "entries must be finite"));
        }
        Ok(())
    }
}

/// Viscous plus Coulomb friction acting on the rigid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Friction<T: Real> {
    /// N·m·s
    pub viscous: T,
    /// N·m
    pub coulomb: T,
}

impl<T: Real> Friction<T> {
    pub fn none() -> Self {
        Self {
            viscous: T::zero(),
            coulomb: T::zero(),
        }
    }

    pub fn torque(&self, velocity: T) -> T {
        self.viscous * velocity + self.coulomb * velocity.sgn()
    }
}
