use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::filter::{butterworth, sosfiltfilt, BandKind};
use super::SignalSeries;
use crate::error::{Error, Result};

pub const PPG_WINDOW_S: f64 = 60.0;
const PPG_BAND_HZ: (f64, f64) = (0.5, 8.0);
const FILTER_ORDER: usize = 4;
const MIN_BPM: f64 = 40.0;
const MAX_BPM: f64 = 200.0;
const TACHOGRAM_HZ: f64 = 4.0;
const WELCH_SEGMENT: usize = 256;
const LF_BAND: (f64, f64) = (0.04, 0.15);
const HF_BAND: (f64, f64) = (0.15, 0.40);

/// 0.5–8 Hz band-pass, zero phase.
pub fn ppg_preprocess(raw: &SignalSeries) -> Result<SignalSeries> {
    if raw.sample_rate_hz <= 2.0 * PPG_BAND_HZ.1 {
        return Err(Error::Config(format!(
            "PPG sample rate {} Hz must exceed {} Hz",
            raw.sample_rate_hz,
            2.0 * PPG_BAND_HZ.1
        )));
    }
    let sos = butterworth(
        FILTER_ORDER,
        BandKind::BandPass(PPG_BAND_HZ.0, PPG_BAND_HZ.1),
        raw.sample_rate_hz,
    )?;
    Ok(raw.with_samples(sosfiltfilt(&sos, &raw.samples)?))
}

/// Consecutive non-overlapping 60 s windows; a trailing partial window is
/// dropped.
pub fn ppg_windows(signal: &SignalSeries) -> Vec<SignalSeries> {
    let len = (PPG_WINDOW_S * signal.sample_rate_hz).round() as usize;
    if len == 0 {
        return Vec::new();
    }
    signal
        .samples
        .chunks_exact(len)
        .enumerate()
        .map(|(i, chunk)| SignalSeries {
            sample_rate_hz: signal.sample_rate_hz,
            samples: chunk.to_vec(),
            start_time_s: signal.time_of(i * len),
        })
        .collect()
}

fn centered_mean(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = vec![0.0; x.len() + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Systolic peak times in seconds from the window start.
///
/// Two moving averages of the squared positive signal (peak ~111 ms, beat
/// ~667 ms) mark candidate blocks; each block long enough to hold a peak
/// contributes its maximum, refined by parabolic interpolation. Peaks
/// closer than the 200 BPM period keep the taller one.
pub fn detect_beats(signal: &SignalSeries) -> Vec<f64> {
    let fs = signal.sample_rate_hz;
    let x = &signal.samples;
    let squared: Vec<f64> = x.iter().map(|v| v.max(0.0).powi(2)).collect();
    let w_peak = ((0.111 * fs).round() as usize).max(1);
    let w_beat = ((0.667 * fs).round() as usize).max(1);
    let ma_peak = centered_mean(&squared, w_peak);
    let ma_beat = centered_mean(&squared, w_beat);
    let offset = 0.02 * squared.iter().sum::<f64>() / squared.len().max(1) as f64;

    let mut peaks: Vec<usize> = Vec::new();
    let min_gap = (60.0 / MAX_BPM * fs).floor() as usize;
    let mut i = 0;
    while i < x.len() {
        if ma_peak[i] > ma_beat[i] + offset {
            let start = i;
            while i < x.len() && ma_peak[i] > ma_beat[i] + offset {
                i += 1;
            }
            if i - start >= w_peak {
                let p = (start..i)
                    .max_by(|&a, &b| x[a].total_cmp(&x[b]))
                    .expect("non-empty block");
                match peaks.last_mut() {
                    Some(last) if p - *last < min_gap => {
                        if x[p] > x[*last] {
                            *last = p;
                        }
                    }
                    _ => peaks.push(p),
                }
            }
        } else {
            i += 1;
        }
    }
    peaks
        .into_iter()
        .map(|p| {
            let mut t = p as f64;
            if p > 0 && p + 1 < x.len() {
                let (a, b, c) = (x[p - 1], x[p], x[p + 1]);
                let denom = a - 2.0 * b + c;
                if denom < 0.0 {
                    t += 0.5 * (a - c) / denom;
                }
            }
            t / fs
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HrvFeatures {
    pub n_beats: usize,
    pub mean_nn_ms: f64,
    pub sdnn_ms: f64,
    pub rmssd_ms: f64,
    pub pnn20: f64,
    pub pnn50: f64,
    /// Band powers in ms²; NaN when the tachogram is too short for a
    /// spectrum.
    pub lf_power: f64,
    pub hf_power: f64,
    pub lf_hf_ratio: f64,
    pub ln_hf: f64,
}

/// Beat detection on a (preprocessed) window, then interval features.
/// Intervals outside the 40–200 BPM band are discarded.
pub fn hrv_features(window: &SignalSeries) -> Result<HrvFeatures> {
    let beats = detect_beats(window);
    let (lo, hi) = (60_000.0 / MAX_BPM, 60_000.0 / MIN_BPM);
    let nn: Vec<f64> = beats
        .windows(2)
        .map(|w| (w[1] - w[0]) * 1000.0)
        .filter(|d| (lo..=hi).contains(d))
        .collect();
    let mut f = hrv_from_intervals(&nn)?;
    f.n_beats = beats.len();
    Ok(f)
}

fn band_power(freqs: &[f64], psd: &[f64], band: (f64, f64)) -> f64 {
    let df = freqs.get(1).copied().unwrap_or(0.0);
    freqs
        .iter()
        .zip(psd)
        .filter(|(f, _)| **f >= band.0 && **f < band.1)
        .map(|(_, p)| p * df)
        .sum()
}

/// Welch density estimate with a periodic Hann window and 50% overlap.
fn welch(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len().min(WELCH_SEGMENT);
    let step = (n / 2).max(1);
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut segments = 0;
    let mut start = 0;
    while start + n <= x.len() {
        let seg = &x[start..start + n];
        let m = seg.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new((v - m) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            let mut v = buf[k].norm_sqr() / (fs * w2);
            if k != 0 && !(n.is_multiple_of(2) && k == n / 2) {
                v *= 2.0;
            }
            *p += v;
        }
        segments += 1;
        start += step;
    }
    psd.iter_mut().for_each(|p| *p /= segments as f64);
    let freqs = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    (freqs, psd)
}

/// Time- and frequency-domain features from NN intervals in milliseconds.
pub fn hrv_from_intervals(nn_ms: &[f64]) -> Result<HrvFeatures> {
    if nn_ms.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable intervals; at least 2 are needed",
            nn_ms.len()
        )));
    }
    let n = nn_ms.len() as f64;
    let mean = nn_ms.iter().sum::<f64>() / n;
    let sdnn = (nn_ms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let diffs: Vec<f64> = nn_ms.windows(2).map(|w| w[1] - w[0]).collect();
    let m = diffs.len() as f64;
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / m).sqrt();
    let pnn = |ms: f64| diffs.iter().filter(|d| d.abs() > ms).count() as f64 / m;

    // tachogram: each interval placed at the time of the beat that ends it
    let mut times = Vec::with_capacity(nn_ms.len());
    let mut t = 0.0;
    for v in nn_ms {
        t += v / 1000.0;
        times.push(t);
    }
    let samples = ((times[times.len() - 1] - times[0]) * TACHOGRAM_HZ).floor() as usize + 1;
    let (lf, hf) = if samples >= 16 {
        let mut j = 0;
        let grid: Vec<f64> = (0..samples)
            .map(|i| {
                let ti = times[0] + i as f64 / TACHOGRAM_HZ;
                while j + 2 < times.len() && times[j + 1] < ti {
                    j += 1;
                }
                let frac = ((ti - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
                nn_ms[j] + frac * (nn_ms[j + 1] - nn_ms[j])
            })
            .collect();
        let (freqs, psd) = welch(&grid, TACHOGRAM_HZ);
        (
            band_power(&freqs, &psd, LF_BAND),
            band_power(&freqs, &psd, HF_BAND),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(HrvFeatures {
        n_beats: nn_ms.len() + 1,
        mean_nn_ms: mean,
        sdnn_ms: sdnn,
        rmssd_ms: rmssd,
        pnn20: pnn(20.0),
        pnn50: pnn(50.0),
        lf_power: lf,
        hf_power: hf,
        lf_hf_ratio: if hf > 0.0 { lf / hf } else { f64::NAN },
        ln_hf: if hf > 0.0 { hf.ln() } else { f64::NAN },
    })
}
