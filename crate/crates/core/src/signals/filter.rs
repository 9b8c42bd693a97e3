//! Butterworth filters as cascaded second-order sections, applied
//! forward-backward for zero phase.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// One biquad: `[b0, b1, b2, a0 = 1, a1, a2]`.
pub type Section = [f64; 6];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandKind {
    LowPass(f64),
    HighPass(f64),
    BandPass(f64, f64),
}

/// Second-order sections of a digital Butterworth filter (bilinear
/// transform with prewarping). `order` is the prototype order; band-pass
/// designs have twice that many poles. An odd low/high-pass order leaves one
/// first-order section (`b2 = a2 = 0`).
pub fn butterworth(order: usize, band: BandKind, fs: f64) -> Result<Vec<Section>> {
    if order == 0 {
        return Err(Error::Config("filter order must be positive".into()));
    }
    let nyq = fs / 2.0;
    let check = |f: f64| {
        if f > 0.0 && f < nyq {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "cutoff {f} Hz must lie in (0, {nyq}) Hz"
            )))
        }
    };
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let proto: Vec<Complex64> = (1..=order)
        .map(|k| Complex64::from_polar(1.0, PI * (2 * k + order - 1) as f64 / (2 * order) as f64))
        .collect();

    // numerators of a full and a first-order section, and the frequency
    // (as a point on the unit circle) where the gain is normalized to 1
    let (analog, numerator, first_order, reference) = match band {
        BandKind::LowPass(f) => {
            check(f)?;
            let wc = warp(f);
            (
                proto.iter().map(|p| p * wc).collect::<Vec<_>>(),
                [1.0, 2.0, 1.0],
                [1.0, 1.0, 0.0],
                Complex64::new(1.0, 0.0),
            )
        }
        BandKind::HighPass(f) => {
            check(f)?;
            let wc = warp(f);
            (
                proto.iter().map(|p| wc / p).collect(),
                [1.0, -2.0, 1.0],
                [1.0, -1.0, 0.0],
                Complex64::new(-1.0, 0.0),
            )
        }
        BandKind::BandPass(lo, hi) => {
            check(lo)?;
            check(hi)?;
            if lo >= hi {
                return Err(Error::Config(format!("band edges {lo} >= {hi}")));
            }
            let (w1, w2) = (warp(lo), warp(hi));
            let bw = w2 - w1;
            let w0sq = w1 * w2;
            let mut poles = Vec::with_capacity(2 * order);
            for p in &proto {
                let pb = p * bw / 2.0;
                let disc = (pb * pb - w0sq).sqrt();
                poles.push(pb + disc);
                poles.push(pb - disc);
            }
            let center = 2.0 * (w0sq.sqrt() / (2.0 * fs)).atan();
            (
                poles,
                [1.0, 0.0, -1.0],
                [1.0, 0.0, -1.0],
                Complex64::from_polar(1.0, center),
            )
        }
    };

    let digital: Vec<Complex64> = analog
        .iter()
        .map(|s| (2.0 * fs + s) / (2.0 * fs - s))
        .collect();
    let mut upper: Vec<Complex64> = digital.iter().filter(|p| p.im > 1e-12).copied().collect();
    let mut real: Vec<f64> = digital
        .iter()
        .filter(|p| p.im.abs() <= 1e-12)
        .map(|p| p.re)
        .collect();
    upper.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.total_cmp(b));

    let mut sections: Vec<([f64; 3], [f64; 2])> = Vec::new();
    if real.len() % 2 == 1 {
        sections.push((first_order, [-real.remove(0), 0.0]));
    }
    sections.extend(
        real.chunks(2)
            .map(|r| (numerator, [-(r[0] + r[1]), r[0] * r[1]])),
    );
    sections.extend(
        upper
            .iter()
            .map(|p| (numerator, [-2.0 * p.re, p.norm_sqr()])),
    );

    let zi = reference.inv();
    Ok(sections
        .into_iter()
        .map(|(b, [a1, a2])| {
            let num = b[0] + b[1] * zi + b[2] * zi * zi;
            let den = 1.0 + a1 * zi + a2 * zi * zi;
            let g = 1.0 / (num / den).norm();
            [g * b[0], g * b[1], g * b[2], 1.0, a1, a2]
        })
        .collect())
}

/// Steady-state section states for a unit step input.
fn sos_zi(sos: &[Section]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sos.iter()
        .map(|s| {
            let g = (s[0] + s[1] + s[2]) / (1.0 + s[4] + s[5]);
            let z2 = s[2] - s[5] * g;
            let z1 = s[1] - s[4] * g + z2;
            let zi = [z1 * scale, z2 * scale];
            scale *= g;
            zi
        })
        .collect()
}

/// Causal filtering with transposed direct form II sections.
pub fn sosfilt(sos: &[Section], x: &[f64], zi: Option<Vec<[f64; 2]>>) -> Vec<f64> {
    let mut state = zi.unwrap_or_else(|| vec![[0.0; 2]; sos.len()]);
    let mut y = x.to_vec();
    for (s, z) in sos.iter().zip(state.iter_mut()) {
        for v in y.iter_mut() {
            let input = *v;
            let out = s[0] * input + z[0];
            z[0] = s[1] * input - s[4] * out + z[1];
            z[1] = s[2] * input - s[5] * out;
            *v = out;
        }
    }
    y
}

/// Samples of odd extension used at each end by [`sosfiltfilt`].
pub fn pad_len(sos: &[Section]) -> usize {
    let first_order = sos.iter().filter(|s| s[2] == 0.0 && s[5] == 0.0).count();
    3 * (2 * sos.len() + 1 - first_order)
}

/// Zero-phase filtering: odd extension at both ends, steady-state initial
/// conditions, forward and backward passes.
pub fn sosfiltfilt(sos: &[Section], x: &[f64]) -> Result<Vec<f64>> {
    let pad = pad_len(sos);
    let n = x.len();
    if n <= pad {
        return Err(Error::Length(format!(
            "signal of {n} samples is too short for filtering (needs more than {pad})"
        )));
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = sos_zi(sos);
    let scaled = |x0: f64| {
        zi.iter()
            .map(|z| [z[0] * x0, z[1] * x0])
            .collect::<Vec<_>>()
    };
    let forward = sosfilt(sos, &ext, Some(scaled(ext[0])));
    let mut rev: Vec<f64> = forward.into_iter().rev().collect();
    let x0 = rev[0];
    rev = sosfilt(sos, &rev, Some(scaled(x0)));
    rev.reverse();
    Ok(rev[pad..pad + n].to_vec())
}

/// Magnitude response of the cascade at `f` Hz.
pub fn magnitude(sos: &[Section], f: f64, fs: f64) -> f64 {
    let zi = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
    sos.iter()
        .map(|s| {
            let num = s[0] + s[1] * zi + s[2] * zi * zi;
            let den = s[3] + s[4] * zi + s[5] * zi * zi;
            (num / den).norm()
        })
        .product()
}
