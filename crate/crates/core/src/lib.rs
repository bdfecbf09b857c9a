//! Kinematics, nilpotent approximation and sampled-data oscillating feedback
//! for a car pulling two off-hooked trailers.
//!
//! The crate is `no_std` with `alloc`. Lie brackets are computed by nested
//! forward-mode dual numbers, so every closed-form expression in the model
//! can be checked against exact derivatives of the vector fields.
//!
//! ```
//! use offhook_core::{compute_params, LengthParams};
//!
//! let a = compute_params(&LengthParams::UNIT);
//! assert!((a.theta - 4.0).abs() < 1e-12);
//! ```

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod approximation;
pub mod controller;
pub mod error;
pub mod fit;
pub mod lie;
pub mod linalg;
pub mod scalar;
pub mod sim;
pub mod vehicle;

pub use approximation::{
    bracket_matrix_g, compute_params, dilate, x_to_y, x_to_z, z_dynamics_residual,
    z_dynamics_residual_with, z_to_x, ApproxParams, StateY, StateZ, Weights,
};
pub use controller::{
    check_c1, coeffs, coeffs_via_inverse, control_value, find_resonances, ControlGains,
    FeedbackCoeffs, Resonance,
};
pub use error::{Error, Result};
pub use lie::{growth_vector, iterated_bracket, lie_bracket, Field, FieldRef, SmoothField};
pub use linalg::{Mat5, Vec5};
pub use sim::{
    chen_fliess_order_study, decay_report, simulate_nilpotent_closed_loop,
    simulate_original_closed_loop, simulate_original_open_loop, DecayReport, Frame,
    IntegratorConfig, OrderStudy, Trajectory,
};
pub use vehicle::{bracket_matrix_f, det_f, ControlInput, LengthParams, StateX};
