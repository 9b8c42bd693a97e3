//! Offline biosignal processing: skin conductance (tonic/phasic split and
//! response features) and pulse photoplethysmography (heart rate
//! variability).

mod eda;
pub mod filter;
mod ppg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eda::{
    eda_decompose, eda_preprocess, scl_normalize, scr_features, DecompositionMethod,
    EdaDecomposition, ScrFeatures, DEFAULT_MEDIAN_WINDOW_S, EDA_LOWPASS_HZ, SCL_ASSUMED_MAX,
    SCR_HIGHPASS_HZ, SCR_MIN_AMPLITUDE,
};
pub use ppg::{
    detect_beats, hrv_features, hrv_from_intervals, ppg_preprocess, ppg_windows, HrvFeatures,
    PPG_WINDOW_S,
};

/// Uniformly sampled signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSeries {
    pub sample_rate_hz: f64,
    pub samples: Vec<f64>,
    pub start_time_s: f64,
}

impl SignalSeries {
    pub fn new(sample_rate_hz: f64, samples: Vec<f64>, start_time_s: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate {sample_rate_hz} must be positive"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Length("signal has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range(format!("sample {i} is not finite")));
        }
        if !start_time_s.is_finite() {
            return Err(Error::Range("start time is not finite".into()));
        }
        Ok(Self {
            sample_rate_hz,
            samples,
            start_time_s,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time_s + index as f64 / self.sample_rate_hz
    }

    /// Samples whose timestamps fall in `[from_s, to_s)`.
    pub fn slice_time(&self, from_s: f64, to_s: f64) -> Result<SignalSeries> {
        let first = ((from_s - self.start_time_s) * self.sample_rate_hz)
            .ceil()
            .max(0.0) as usize;
        let end = (((to_s - self.start_time_s) * self.sample_rate_hz)
            .ceil()
            .max(0.0) as usize)
            .min(self.len());
        if first >= end {
            return Err(Error::Length(format!("no samples in [{from_s}, {to_s}) s")));
        }
        SignalSeries::new(
            self.sample_rate_hz,
            self.samples[first..end].to_vec(),
            self.time_of(first),
        )
    }

    /// The samples in an index range, keeping their timestamps.
    pub fn with_range(&self, range: std::ops::Range<usize>) -> SignalSeries {
        SignalSeries {
            sample_rate_hz: self.sample_rate_hz,
            start_time_s: self.time_of(range.start),
            samples: self.samples[range].to_vec(),
        }
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> SignalSeries {
        SignalSeries {
            sample_rate_hz: self.sample_rate_hz,
            samples,
            start_time_s: self.start_time_s,
        }
    }
}
