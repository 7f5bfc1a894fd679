//! Kinematic feature extraction from pose time series of four neurological
//! exam tests, plus the classical analyses run on the resulting features.

pub mod analysis;
pub mod error;
pub mod features;
pub mod pose;
pub mod preprocess;
pub mod series;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use series::TimeSeries;
