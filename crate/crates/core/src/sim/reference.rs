use nalgebra::DVector;

use crate::{Error, Real, Result};

/// Desired position, velocity and acceleration at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Desired<T: Real> {
    pub q: DVector<T>,
    pub dq: DVector<T>,
    pub ddq: DVector<T>,
}

/// A joint-space reference trajectory.
pub trait Trajectory<T: Real>: Send + Sync {
    fn joints(&self) -> usize;
    fn desired(&self, t: T) -> Desired<T>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Alternating 0 / amplitude levels, switching every half period.
    StepTrain,
    /// Same levels joined by minimum-jerk (quintic) transitions lasting
    /// `smoothing` seconds at the start of each half period, so velocity and
    /// acceleration are continuous and exactly zero on the plateaus.
    SmoothedSquare,
    /// `amplitude · sin(2πt / period)`.
    Sine,
}

/// Single-joint reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference<T: Real> {
    pub kind: ReferenceKind,
    /// rad
    pub amplitude: T,
    /// s
    pub period: T,
    /// s
    pub smoothing: T,
}

impl<T: Real> Reference<T> {
    pub fn new(kind: ReferenceKind, amplitude: T, period: T, smoothing: T) -> Result<Self> {
        let r = Self {
            kind,
            amplitude,
            period,
            smoothing,
        };
        r.validate()?;
        Ok(r)
    }

    /// 0.5 rad square wave, 4 s cycle, 1 s transitions.
    pub fn default_square() -> Self {
        Self {
            kind: ReferenceKind::SmoothedSquare,
            amplitude: T::lit(0.5),
            period: T::lit(4.0),
            smoothing: T::one(),
        }
    }

    pub fn zero() -> Self {
        Self {
            kind: ReferenceKind::StepTrain,
            amplitude: T::zero(),
            period: T::one(),
            smoothing: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > T::zero()) || !self.period.finite() {
            return Err(Error::param("period", "must be positive"));
        }
        if !(self.smoothing >= T::zero()) || !self.smoothing.finite() {
            return Err(Error::param("smoothing", "must be non-negative"));
        }
        if self.kind == ReferenceKind::SmoothedSquare && self.smoothing > self.period * T::lit(0.5) {
            return Err(Error::param("smoothing", "transition must fit in half a period"));
        }
        if !self.amplitude.finite() {
            return Err(Error::param("amplitude", "must be finite"));
        }
        Ok(())
    }

    /// `(q_d, q̇_d, q̈_d)` at `t ≥ 0`.
    pub fn sample(&self, t: T) -> (T, T, T) {
        let a = self.amplitude;
        let z = T::zero();
        match self.kind {
            ReferenceKind::Sine => {
                let w = T::two_pi() / self.period;
                let (s, c) = (w * t).sin_cos();
                (a * s, a * w * c, -a * w * w * s)
            }
            ReferenceKind::StepTrain | ReferenceKind::SmoothedSquare => {
                let half = self.period * T::lit(0.5);
                let k = (t / half).floor();
                let local = t - k * half;
                let rising = (k.to_f64_lossy() as i64).rem_euclid(2) == 0;
                let (from, to) = if rising { (z, a) } else { (a, z) };
                let ramp = self.kind == ReferenceKind::SmoothedSquare && self.smoothing > z;
                if !ramp || local >= self.smoothing {
                    return (to, z, z);
                }
                let ts = self.smoothing;
                let s = local / ts;
                let d = to - from;
                let (s2, s3) = (s * s, s * s * s);
                let pos = T::lit(10.0) * s3 - T::lit(15.0) * s3 * s + T::lit(6.0) * s3 * s2;
                let vel = T::lit(30.0) * s2 - T::lit(60.0) * s3 + T::lit(30.0) * s2 * s2;
                let acc = T::lit(60.0) * s - T::lit(180.0) * s2 + T::lit(120.0) * s3;
                (from + d * pos, d * vel / ts, d * acc / (ts * ts))
            }
        }
    }
}

impl<T: Real> Trajectory<T> for Reference<T> {
    fn joints(&self) -> usize {
        1
    }

    fn desired(&self, t: T) -> Desired<T> {
        let (q, dq, ddq) = self.sample(t);
        Desired {
            q: DVector::from_element(1, q),
            dq: DVector::from_element(1, dq),
            ddq: DVector::from_element(1, ddq),
        }
    }
}

/// Independent sines per joint, `a_i sin(w_i t + p_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSine<T: Real> {
    pub amplitude: DVector<T>,
    pub omega: DVector<T>,
    pub phase: DVector<T>,
}

impl<T: Real> Trajectory<T> for MultiSine<T> {
    fn joints(&self) -> usize {
        self.amplitude.len()
    }

    fn desired(&self, t: T) -> Desired<T> {
        let n = self.amplitude.len();
        let arg = |i: usize| self.omega[i] * t + self.phase[i];
        Desired {
            q: DVector::from_fn(n, |i, _| self.amplitude[i] * arg(i).sin()),
            dq: DVector::from_fn(n, |i, _| self.amplitude[i] * self.omega[i] * arg(i).cos()),
            ddq: DVector::from_fn(n, |i, _| -self.amplitude[i] * self.omega[i] * self.omega[i] * arg(i).sin()),
        }
    }
}
