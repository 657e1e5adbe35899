//! Orientation, filtering and drift-corrected sagittal joint angles.

pub mod butterworth;
pub mod joints;
pub mod kalman;
pub mod orientation;

pub use butterworth::{lowpass7hz, Biquad, Butterworth, Smoother, GAIT_CUTOFF_HZ, GAIT_FILTER_ORDER};
pub use joints::{
    accel_inclination, joint_angles, joint_traces, segment_angles, unwrap_degrees,
    JointAngleSeries, JointTrace, SegmentAngles,
};
pub use kalman::{kf_segment_angle, KfOutput, KfParams, KfState};
pub use orientation::{
    to_global_accel, track_orientation, update_orientation, OrientationState, DEFAULT_GAIN,
    DEFAULT_GRAVITY,
};

/// The filters are designed for this sampling rate only.
pub const REQUIRED_RATE_HZ: f64 = 100.0;
