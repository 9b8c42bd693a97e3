use serde::{Deserialize, Serialize};

use super::filter::{butterworth, sosfiltfilt, BandKind};
use super::SignalSeries;
use crate::error::{Error, Result};

pub const EDA_LOWPASS_HZ: f64 = 0.25;
pub const SCR_HIGHPASS_HZ: f64 = 0.05;
pub const DEFAULT_MEDIAN_WINDOW_S: f64 = 8.0;
pub const SCL_ASSUMED_MAX: f64 = 20.0;
pub const SCR_MIN_AMPLITUDE: f64 = 0.01;
const FILTER_ORDER: usize = 4;
const HIGHPASS_ORDER: usize = 1;

/// Low-pass at 0.25 Hz (zero phase), then 1 s boxcar averages giving one
/// sample per second.
pub fn eda_preprocess(raw: &SignalSeries) -> Result<SignalSeries> {
    let fs = raw.sample_rate_hz;
    if fs < 1.0 {
        return Err(Error::Config(format!(
            "sample rate {fs} Hz is below the 1 Hz output rate"
        )));
    }
    let per_second = |i: usize| (i as f64 * fs).round() as usize;
    let seconds = (raw.duration_s() + 1e-9).floor() as usize;
    if seconds == 0 {
        return Err(Error::Length("EDA recording is shorter than 1 s".into()));
    }
    let filtered = if fs > 2.0 * EDA_LOWPASS_HZ {
        let sos = butterworth(FILTER_ORDER, BandKind::LowPass(EDA_LOWPASS_HZ), fs)?;
        sosfiltfilt(&sos, &raw.samples)?
    } else {
        raw.samples.clone()
    };
    let out: Vec<f64> = (0..seconds)
        .map(|i| {
            let bin = &filtered[per_second(i)..per_second(i + 1).min(filtered.len())];
            bin.iter().sum::<f64>() / bin.len() as f64
        })
        .collect();
    SignalSeries::new(1.0, out, raw.start_time_s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMethod {
    /// Running median as the tonic level.
    Median,
    /// 0.05 Hz high-pass as the phasic part.
    HighPass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdaDecomposition {
    pub scl: SignalSeries,
    pub scr: SignalSeries,
    pub method: DecompositionMethod,
}

/// Centered running median with an odd window; near the edges the window
/// shrinks symmetrically.
fn running_median(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let mut w = x[i - h..=i + h].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            w[h]
        })
        .collect()
}

/// Splits a conditioned signal into tonic level and phasic response.
/// `window_s` applies to the median method; an even sample count is widened
/// by one.
pub fn eda_decompose(
    signal: &SignalSeries,
    method: DecompositionMethod,
    window_s: f64,
) -> Result<EdaDecomposition> {
    let x = &signal.samples;
    let (scl, scr): (Vec<f64>, Vec<f64>) = match method {
        DecompositionMethod::Median => {
            let mut window = (window_s * signal.sample_rate_hz).round() as usize;
            if window.is_multiple_of(2) {
                window += 1;
            }
            if !(window_s.is_finite() && window >= 3) {
                return Err(Error::Config(format!(
                    "median window {window_s} s is under 3 samples"
                )));
            }
            let scl = running_median(x, window);
            let scr = x.iter().zip(&scl).map(|(v, l)| v - l).collect();
            (scl, scr)
        }
        DecompositionMethod::HighPass => {
            let sos = butterworth(
                HIGHPASS_ORDER,
                BandKind::HighPass(SCR_HIGHPASS_HZ),
                signal.sample_rate_hz,
            )?;
            let scr = sosfiltfilt(&sos, x)?;
            let scl = x.iter().zip(&scr).map(|(v, r)| v - r).collect();
            (scl, scr)
        }
    };
    Ok(EdaDecomposition {
        scl: signal.with_samples(scl),
        scr: signal.with_samples(scr),
        method,
    })
}

/// Maps tonic level to 0..10 between the relaxed minimum and an assumed
/// maximum, clamping outside that range.
pub fn scl_normalize(scl: &SignalSeries, relax_min: f64, assumed_max: f64) -> Result<SignalSeries> {
    if !(relax_min.is_finite() && assumed_max.is_finite() && relax_min < assumed_max) {
        return Err(Error::Config(format!(
            "relaxed minimum {relax_min} must be below the assumed maximum {assumed_max}"
        )));
    }
    let span = assumed_max - relax_min;
    Ok(scl.with_samples(
        scl.samples
            .iter()
            .map(|x| ((x - relax_min) / span * 10.0).clamp(0.0, 10.0))
            .collect(),
    ))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScrFeatures {
    pub n_peaks: usize,
    pub mean_amplitude: f64,
    pub max_amplitude: f64,
    pub sum_amplitude: f64,
    /// Sample indices of the detected peaks.
    pub peaks: Vec<usize>,
}

/// Peaks are local maxima (flat tops included) rising at least `min_amplitude` above the lowest
/// point since the previous maximum; peaks closer than 1 s keep the larger.
pub fn scr_features(scr: &SignalSeries, min_amplitude: f64) -> ScrFeatures {
    let x = &scr.samples;
    let min_dist = scr.sample_rate_hz.ceil().max(1.0) as usize;
    let mut peaks: Vec<(usize, f64)> = Vec::new();
    let mut trough = x.first().copied().unwrap_or(0.0);
    for i in 1..x.len().saturating_sub(1) {
        trough = trough.min(x[i]);
        // a flat top counts only when the signal falls after it
        let top_end = (i..x.len())
            .take_while(|&j| x[j] == x[i])
            .last()
            .unwrap_or(i);
        if x[i] > x[i - 1] && top_end + 1 < x.len() && x[top_end + 1] < x[i] {
            let amp = x[i] - trough;
            trough = x[i];
            if amp < min_amplitude {
                continue;
            }
            match peaks.last_mut() {
                Some(last) if i - last.0 < min_dist => {
                    if amp > last.1 {
                        *last = (i, amp);
                    }
                }
                _ => peaks.push((i, amp)),
            }
        }
    }
    if peaks.is_empty() {
        return ScrFeatures::default();
    }
    let sum: f64 = peaks.iter().map(|p| p.1).sum();
    ScrFeatures {
        n_peaks: peaks.len(),
        mean_amplitude: sum / peaks.len() as f64,
        max_amplitude: peaks.iter().map(|p| p.1).fold(0.0, f64::max),
        sum_amplitude: sum,
        peaks: peaks.into_iter().map(|p| p.0).collect(),
    }
}
