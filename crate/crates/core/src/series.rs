use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    samples: Vec<f64>,
    fps: f64,
    t0: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, fps: f64) -> Result<Self> {
        Self::with_start(samples, fps, 0.0)
    }

    pub fn with_start(samples: Vec<f64>, fps: f64, t0: f64) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Value(format!("sample rate must be positive, got {fps}")));
        }
        if !t0.is_finite() {
            return Err(Error::Value("start time must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Value(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, fps, t0 })
    }

    /// Builds a series sharing this one's rate and start time.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::with_start(samples, self.fps, self.t0)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fps
    }

    /// Duration covered by the samples, `len / fps`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fps
    }

    /// Sub-series over `[start, end)`, keeping absolute time.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples.len() {
            return Err(Error::Range(format!(
                "slice [{start}, {end}) outside series of length {}",
                self.samples.len()
            )));
        }
        Ok(Self {
            samples: self.samples[start..end].to_vec(),
            fps: self.fps,
            t0: self.time_at(start),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|&v| f(v)).collect())
    }
}

impl std::ops::Index<usize> for TimeSeries {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.samples[i]
    }
}
