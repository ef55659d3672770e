//! Approximation-free prescribed-performance tracking for strict-feedback
//! plants under a hard input bound.
//!
//! The pieces, bottom-up:
//!
//! * [`expr`]: parse, evaluate and differentiate the scalar expressions that
//!   define a plant and its reference.
//! * [`plant`]: strict-feedback dynamics with their known bound constants.
//! * [`perfspec`]: output funnel, filtered-error funnel and filter weights.
//! * [`controller`]: filtered tracking error and the saturating control law.
//! * [`feasibility`]: bound constants and the input / performance conditions.
//! * [`bounds`]: envelope propagation through filter cascades, with a
//!   time-domain oracle.
//! * [`sim`]: fixed-step RK4 closed-loop simulation with constraint monitors.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the common double-precision case.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod controller;
mod error;
pub mod expr;
pub mod feasibility;
pub mod perfspec;
pub mod plant;
mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::{binomial, Real, MAX_ORDER};

pub type PlantModel64 = plant::PlantModel<f64>;
pub type TrajectorySpec64 = plant::TrajectorySpec<f64>;
pub type PerformanceSpec64 = perfspec::PerformanceSpec<f64>;
pub type VirtualSpec64 = perfspec::VirtualSpec<f64>;
pub type Controller64 = controller::Controller<f64>;
pub type FeasibilityReport64 = feasibility::FeasibilityReport<f64>;
pub type Envelope64 = bounds::Envelope<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type Trajectory64 = sim::Trajectory<f64>;

pub type PlantModel32 = plant::PlantModel<f32>;
pub type TrajectorySpec32 = plant::TrajectorySpec<f32>;
pub type PerformanceSpec32 = perfspec::PerformanceSpec<f32>;
pub type VirtualSpec32 = perfspec::VirtualSpec<f32>;
pub type Controller32 = controller::Controller<f32>;
pub type Envelope32 = bounds::Envelope<f32>;
pub type SimConfig32 = sim::SimConfig<f32>;
pub type Trajectory32 = sim::Trajectory<f32>;
