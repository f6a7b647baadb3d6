//! Time-dependent measurement spaces and forward operators.
//!
//! Each frame `k` has its own sample space `H_k`: complex values per coil and
//! sample, normed by the quadrature weights of the frame's sampling measure.

mod coils;
mod measurement;
mod operator;
mod pattern;

pub use coils::CoilSet;
pub use measurement::{add_noise, frame_inner, ht_norm, l2h_norm, Measurement};
pub use operator::{adjoint_frame, forward_frame, frame_norm_sq, FrameOperator, IdentityOperator, MriOperator};
pub use pattern::{
    pattern_cartesian_lines, pattern_cs_points, pattern_full_cartesian, pattern_radial,
    pattern_radial_scaled, PatternFrame, SamplingPattern,
};
