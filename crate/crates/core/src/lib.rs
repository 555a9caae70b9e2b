//! Flexible-link arm control toolkit.
//!
//! The crate models a flexible manipulator in the rigid/flexible partitioned
//! Lagrangian form, decomposes it into a slow (rigid-equivalent) and a fast
//! (deflection) subsystem by singular perturbation, and controls each part
//! separately: an adaptive sliding-mode law with a boundary layer for the slow
//! part and an LQR law for the fast part. [`sim`] closes the loop around the
//! full plant and records everything needed to compare the rigid-only and the
//! composite controllers.
//!
//! All numerics are generic over [`Real`]; [`f64`] is the working precision
//! and the `*64` aliases below fix it for application code.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fastctl;
pub mod perturbation;
pub mod scalar;
pub mod sim;
pub mod slowctl;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ArmParams64 = dynamics::ArmParams<f64>;
pub type ModalModel64 = dynamics::ModalModel<f64>;
pub type FullState64 = dynamics::FullState<f64>;
pub type SingleLinkPlant64 = dynamics::SingleLinkPlant<f64>;
pub type TwoLinkArm64 = dynamics::TwoLinkArm<f64>;
pub type PartitionedDynamics64 = dynamics::PartitionedDynamics<f64>;
pub type FastModel64 = perturbation::FastModel<f64>;
pub type SlidingConfig64 = slowctl::SlidingConfig<f64>;
pub type SlidingState64 = slowctl::SlidingState<f64>;
pub type LqrWeights64 = fastctl::LqrWeights<f64>;
pub type LqrGains64 = fastctl::LqrGains<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type Reference64 = sim::Reference<f64>;
pub type TraceLog64 = sim::TraceLog<f64>;

pub type ArmParams32 = dynamics::ArmParams<f32>;
pub type ModalModel32 = dynamics::ModalModel<f32>;
pub type SingleLinkPlant32 = dynamics::SingleLinkPlant<f32>;
