//! Gait rehabilitation quantification from body-worn IMUs.
//!
//! The pipeline turns seven-sensor walking recordings into sagittal joint
//! angles, a 243-element gait feature vector, a patient/control
//! classification and a scalar rehabilitation grade.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, with `*32` variants for `f32`.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod features;
pub mod grading;
pub mod ingest;
pub mod kinematics;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Quaternion = model::Quaternion<f64>;
pub type Quaternion32 = model::Quaternion<f32>;
pub type Vector3 = model::Vector3<f64>;
pub type Vector3f32 = model::Vector3<f32>;
pub type ImuSample = model::ImuSample<f64>;
pub type TimeSeries = model::TimeSeries<f64>;
pub type TimeSeries32 = model::TimeSeries<f32>;
pub type TrialRecording = model::TrialRecording<f64>;
pub type TrialRecording32 = model::TrialRecording<f32>;
pub type CalibrationOffsets = ingest::CalibrationOffsets<f64>;
pub type FeatureMatrix = dataset::FeatureMatrix<f64>;
pub type FeatureMatrix32 = dataset::FeatureMatrix<f32>;
pub type ClassifierModel = classify::ClassifierModel<f64>;
pub type ClassifierModel32 = classify::ClassifierModel<f32>;
pub type GradingModel = grading::GradingModel<f64>;
pub type GradingModel32 = grading::GradingModel<f32>;
