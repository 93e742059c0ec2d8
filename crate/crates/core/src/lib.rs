//! Key-rate analysis for quantum key distribution with physical line control.

pub mod channel;
pub mod error;
pub mod keyrate;
pub mod linecontrol;
pub mod montecarlo;
pub mod optimize;
pub mod scalar;

pub use error::{Error, Result};
pub use keyrate::Protocol;
pub use scalar::Real;

pub type ChannelParamsF64 = channel::ChannelParams<f64>;
pub type ChannelParamsF32 = channel::ChannelParams<f32>;
pub type RatePointF64 = keyrate::RatePoint<f64>;
pub type RatePointF32 = keyrate::RatePoint<f32>;
pub type OptimumF64 = optimize::Optimum<f64>;
pub type OptimumF32 = optimize::Optimum<f32>;
pub type SweepRecordF64 = optimize::SweepRecord<f64>;
pub type SweepRecordF32 = optimize::SweepRecord<f32>;
