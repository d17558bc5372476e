//! Generalized Riccati equations, their duals, and blow-up detection.

pub mod blowup;
pub mod bounds;
pub mod integrator;
pub mod problem;

pub use blowup::{
    blow_up_time, blow_up_time_with, integrate_backward, BlowUpResult, IntegrationOptions,
    Localization, Node, RiccatiTrajectory, Segment, StopReason,
};
pub use bounds::{check_weaker_condition, closed_form_k1, sup_norm};
pub use integrator::Tolerances;
pub use problem::{Chart, Gains, RiccatiSystem, MAX_GAIN_CONDITION};
