//! Experiment configuration: a sectioned key-value file whose missing keys
//! take the reference-rig defaults.
//!
//! ```text
//! [arm]        motor_inertia link_length link_height link_thickness
//!              link_mass linear_density flexural_rigidity
//! [modal]      omega delta phi_prime0 hub_inertia
//! [sliding]    lambda beta gamma eta rho_clamp a_hat0
//! [lqr]        q r
//! [sim]        dt_plant dt_ctrl horizon noise_angle noise_deflection
//!              viscous coulomb disturbance seed divergence_bound
//! [reference]  kind amplitude period smoothing
//! ```
//!
//! Lists are comma separated. Unknown sections or keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use flexlink::dynamics::{beam_modes, build_single_link, ArmParams, Friction, ModalModel, SingleLinkPlant};
use flexlink::fastctl::LqrWeights;
use flexlink::sim::{ControllerMode, Controllers, LyapunovProbe, Reference, ReferenceKind, SimConfig};
use flexlink::slowctl::{SingleLinkRegressor, SlidingConfig};
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config section `[{0}]`")]
    UnknownSection(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: {reason}")]
    Value { key: String, reason: String },
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Slow-controller settings for the single-link plant.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingSettings {
    pub lambda: f64,
    pub beta: f64,
    /// Γ = gamma · I.
    pub gamma: f64,
    pub eta: f64,
    pub rho_clamp: Option<f64>,
    /// Initial `[inertia, viscous]` estimate.
    pub a_hat0: [f64; 2],
}

/// Diagonal LQR weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrSettings {
    pub q: [f64; 4],
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub arm: ArmParams<f64>,
    pub modal: ModalModel<f64>,
    pub sliding: SlidingSettings,
    pub lqr: LqrSettings,
    pub sim: SimConfig<f64>,
    pub reference: Reference<f64>,
}

const SECTIONS: [&str; 6] = ["arm", "modal", "sliding", "lqr", "sim", "reference"];

/// Remaining `section.key → value` entries; whatever is left after parsing
/// is unknown.
struct Entries(BTreeMap<String, String>);

impl Entries {
    fn raw(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, &v),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(bad(key, format!("must be positive, got {v}")))
        }
    }

    fn non_negative(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(key, default)?;
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(bad(key, format!("must be non-negative, got {v}")))
        }
    }

    fn optional(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) if v.eq_ignore_ascii_case("none") => Ok(None),
            Some(v) => parse_f64(key, &v).map(Some),
        }
    }

    fn list(&mut self, key: &str, len: usize) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let vals = v.split(',').map(|s| parse_f64(key, s.trim())).collect::<Result<Vec<_>, _>>()?;
        if vals.len() != len {
            return Err(bad(key, format!("expected {len} comma-separated values, got {}", vals.len())));
        }
        Ok(Some(vals))
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.0.into_keys().next() {
            Some(k) => Err(ConfigError::UnknownKey(k)),
            None => Ok(()),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.trim().parse::<f64>().map_err(|_| bad(key, format!("expected a number, got `{s}`")))
}

/// Prefixes a core validation error with its section.
fn core_err(section: &str, e: flexlink::Error) -> ConfigError {
    match e {
        flexlink::Error::InvalidParameter { name, reason } => bad(&format!("{section}.{name}"), reason),
        other => bad(section, other.to_string()),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut map = BTreeMap::new();
        for (section, props) in ini.iter() {
            let section = match section {
                Some(s) if SECTIONS.contains(&s) => s,
                Some(s) => return Err(ConfigError::UnknownSection(s.to_string())),
                None if props.is_empty() => continue,
                None => {
                    let key = props.iter().next().map(|(k, _)| k).unwrap_or_default();
                    return Err(ConfigError::UnknownKey(key.to_string()));
                }
            };
            for (k, v) in props.iter() {
                let full = format!("{section}.{k}");
                if map.insert(full.clone(), v.to_string()).is_some() {
                    return Err(bad(&full, "given more than once"));
                }
            }
        }
        let mut e = Entries(map);

        let d = ArmParams::<f64>::laboratory();
        let arm = ArmParams {
            motor_inertia: e.positive("arm.motor_inertia", d.motor_inertia)?,
            link_length: e.positive("arm.link_length", d.link_length)?,
            link_height: e.positive("arm.link_height", d.link_height)?,
            link_thickness: e.positive("arm.link_thickness", d.link_thickness)?,
            link_mass: e.positive("arm.link_mass", d.link_mass)?,
            linear_density: e.positive("arm.linear_density", d.linear_density)?,
            flexural_rigidity: e.positive("arm.flexural_rigidity", d.flexural_rigidity)?,
        };
        arm.validate().map_err(|x| core_err("arm", x))?;

        let omega = e.list("modal.omega", 2)?.unwrap_or_else(|| vec![21.80, 128.80]);
        let delta = e.f64("modal.delta", 0.01)?;
        let phi_prime0 = match e.list("modal.phi_prime0", 2)? {
            Some(v) => v,
            None => beam_modes(&arm, 2).map_err(|x| bad("modal.phi_prime0", x.to_string()))?.phi_prime0.as_slice().to_vec(),
        };
        let hub_inertia = e.positive("modal.hub_inertia", arm.rigid_inertia())?;
        let modal = ModalModel::new(DVector::from_vec(omega), delta, DVector::from_vec(phi_prime0), hub_inertia)
            .map_err(|x| core_err("modal", x))?;

        let a0 = e.list("sliding.a_hat0", 2)?.unwrap_or_else(|| vec![0.0, 0.0]);
        let sliding = SlidingSettings {
            lambda: e.positive("sliding.lambda", 10.0)?,
            beta: e.positive("sliding.beta", 1.3)?,
            gamma: e.positive("sliding.gamma", 1e-4)?,
            eta: e.positive("sliding.eta", 0.01)?,
            rho_clamp: match e.optional("sliding.rho_clamp")? {
                Some(c) if !(c > 0.0) => return Err(bad("sliding.rho_clamp", "must be positive when set")),
                c => c,
            },
            a_hat0: [a0[0], a0[1]],
        };

        let q = e.list("lqr.q", 4)?.unwrap_or_else(|| vec![150.0, 500.0, 1.0, 0.0]);
        let lqr = LqrSettings {
            q: [q[0], q[1], q[2], q[3]],
            r: e.f64("lqr.r", 2.0)?,
        };
        LqrWeights::diagonal(&lqr.q, &[lqr.r]).map_err(|x| match x {
            flexlink::Error::InvalidParameter { name: "R", reason } => bad("lqr.r", reason),
            flexlink::Error::InvalidParameter { reason, .. } => bad("lqr.q", reason),
            other => bad("lqr", other.to_string()),
        })?;

        let ds = SimConfig::<f64>::default();
        let sim = SimConfig {
            dt_plant: e.positive("sim.dt_plant", ds.dt_plant)?,
            dt_ctrl: e.positive("sim.dt_ctrl", ds.dt_ctrl)?,
            horizon: e.positive("sim.horizon", ds.horizon)?,
            noise_std: [e.non_negative("sim.noise_angle", 0.0)?, e.non_negative("sim.noise_deflection", 0.0)?],
            friction: Friction {
                viscous: e.non_negative("sim.viscous", ds.friction.viscous)?,
                coulomb: e.non_negative("sim.coulomb", ds.friction.coulomb)?,
            },
            disturbance: e.optional("sim.disturbance")?,
            seed: match e.raw("sim.seed") {
                None => 0,
                Some(v) => v.trim().parse().map_err(|_| bad("sim.seed", format!("expected an unsigned integer, got `{v}`")))?,
            },
            divergence_bound: e.positive("sim.divergence_bound", ds.divergence_bound)?,
        };
        sim.validate().map_err(|x| core_err("sim", x))?;

        let dr = Reference::<f64>::default_square();
        let kind = match e.raw("reference.kind").as_deref().map(str::trim) {
            None => dr.kind,
            Some("smoothed-square") => ReferenceKind::SmoothedSquare,
            Some("step-train") => ReferenceKind::StepTrain,
            Some("sine") => ReferenceKind::Sine,
            Some(other) => {
                return Err(bad("reference.kind", format!("expected smoothed-square, step-train or sine, got `{other}`")))
            }
        };
        let reference = Reference::new(
            kind,
            e.f64("reference.amplitude", dr.amplitude)?,
            e.f64("reference.period", dr.period)?,
            e.f64("reference.smoothing", dr.smoothing)?,
        )
        .map_err(|x| core_err("reference", x))?;

        e.finish()?;
        let cfg = Config {
            arm,
            modal,
            sliding,
            lqr,
            sim,
            reference,
        };
        cfg.sliding_config().map_err(|x| core_err("sliding", x))?;
        Ok(cfg)
    }

    /// Every resolved value, in the input format. Parsing the result gives
    /// back an identical configuration.
    pub fn snapshot(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"));
        let a = &self.arm;
        let m = &self.modal;
        let s = &self.sliding;
        let sim = &self.sim;
        let r = &self.reference;
        let kind = match r.kind {
            ReferenceKind::SmoothedSquare => "smoothed-square",
            ReferenceKind::StepTrain => "step-train",
            ReferenceKind::Sine => "sine",
        };
        let mut out = String::new();
        let _ = write!(
            out,
            "[arm]\nmotor_inertia = {:?}\nlink_length = {:?}\nlink_height = {:?}\nlink_thickness = {:?}\nlink_mass = {:?}\n\
             linear_density = {:?}\nflexural_rigidity = {:?}\n\n",
            a.motor_inertia, a.link_length, a.link_height, a.link_thickness, a.link_mass, a.linear_density, a.flexural_rigidity
        );
        let _ = write!(
            out,
            "[modal]\nomega = {}\ndelta = {:?}\nphi_prime0 = {}\nhub_inertia = {:?}\n\n",
            list(m.omega.as_slice()),
            m.delta,
            list(m.phi_prime0.as_slice()),
            m.hub_inertia
        );
        let _ = write!(
            out,
            "[sliding]\nlambda = {:?}\nbeta = {:?}\ngamma = {:?}\neta = {:?}\nrho_clamp = {}\na_hat0 = {}\n\n",
            s.lambda,
            s.beta,
            s.gamma,
            s.eta,
            opt(s.rho_clamp),
            list(&s.a_hat0)
        );
        let _ = write!(out, "[lqr]\nq = {}\nr = {:?}\n\n", list(&self.lqr.q), self.lqr.r);
        let _ = write!(
            out,
            "[sim]\ndt_plant = {:?}\ndt_ctrl = {:?}\nhorizon = {:?}\nnoise_angle = {:?}\nnoise_deflection = {:?}\n\
             viscous = {:?}\ncoulomb = {:?}\ndisturbance = {}\nseed = {}\ndivergence_bound = {:?}\n\n",
            sim.dt_plant,
            sim.dt_ctrl,
            sim.horizon,
            sim.noise_std[0],
            sim.noise_std[1],
            sim.friction.viscous,
            sim.friction.coulomb,
            opt(sim.disturbance),
            sim.seed,
            sim.divergence_bound
        );
        let _ = write!(
            out,
            "[reference]\nkind = {kind}\namplitude = {:?}\nperiod = {:?}\nsmoothing = {:?}\n",
            r.amplitude, r.period, r.smoothing
        );
        out
    }

    pub fn plant(&self) -> flexlink::Result<SingleLinkPlant<f64>> {
        Ok(build_single_link(self.arm, self.modal.clone())?.with_friction(self.sim.friction))
    }

    pub fn sliding_config(&self) -> flexlink::Result<SlidingConfig<f64>> {
        let s = &self.sliding;
        let mut c = SlidingConfig::uniform(1, 2, s.lambda, s.beta, s.gamma, s.eta)?;
        c.rho_clamp = s.rho_clamp;
        c.validate()?;
        Ok(c)
    }

    pub fn weights(&self) -> flexlink::Result<LqrWeights<f64>> {
        LqrWeights::diagonal(&self.lqr.q, &[self.lqr.r])
    }

    /// Controllers for `mode`. The Lyapunov column uses the simulated plant
    /// as truth: `A = [I_r, viscous]`, and ρ covers the unmodeled Coulomb
    /// friction plus η.
    pub fn controllers(&self, mode: ControllerMode) -> flexlink::Result<Controllers<'static, f64>> {
        Ok(Controllers {
            mode,
            sliding: self.sliding_config()?,
            a_hat0: DVector::from_column_slice(&self.sliding.a_hat0),
            regressor: &SingleLinkRegressor,
            lqr: self.weights()?,
            probe: Some(LyapunovProbe {
                true_a: DVector::from_vec(vec![self.modal.hub_inertia, self.sim.friction.viscous]),
                true_rho: DVector::from_element(1, self.sim.friction.coulomb + self.sliding.eta),
            }),
        })
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::parse("").expect("built-in defaults are valid")
    }
}
