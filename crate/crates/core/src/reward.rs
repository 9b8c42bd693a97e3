//! Scaled-Gaussian reward over the 0..10 anxiety scale.
//!
//! The Gaussian `exp(-0.5 ((x - mu) / delta)^2)` with `delta = 5` is shifted
//! and rescaled so that the target scores exactly 1 and the farther end of
//! the scale scores exactly -1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_ANXIETY: u8 = 0;
pub const MAX_ANXIETY: u8 = 10;

/// Discretized anxiety on the integer 0..10 scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnxietyLevel(u8);

impl AnxietyLevel {
    pub fn new(value: u8) -> Result<Self> {
        if value > MAX_ANXIETY {
            return Err(Error::Range(format!("anxiety {value} outside 0..=10")));
        }
        Ok(Self(value))
    }

    /// Rounds a continuous estimate to the nearest level, clamping to 0..10.
    pub fn from_continuous(value: f64) -> Self {
        let v = if value.is_nan() { 0.0 } else { value.round() };
        Self(v.clamp(MIN_ANXIETY as f64, MAX_ANXIETY as f64) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    target: u8,
}

impl RewardSpec {
    /// Half the anxiety range.
    pub const DELTA: f64 = (MAX_ANXIETY - MIN_ANXIETY) as f64 / 2.0;

    pub fn new(target: u8) -> Result<Self> {
        if target > MAX_ANXIETY {
            return Err(Error::Range(format!(
                "target anxiety {target} outside 0..=10"
            )));
        }
        Ok(Self { target })
    }

    pub fn target(&self) -> u8 {
        self.target
    }
}

fn gaussian(x: f64, mu: f64) -> f64 {
    let z = (x - mu) / RewardSpec::DELTA;
    (-0.5 * z * z).exp()
}

/// Reward for an arbitrary real anxiety value in `[0, 10]`.
pub fn reward_continuous(x: f64, spec: RewardSpec) -> Result<f64> {
    if !(0.0..=MAX_ANXIETY as f64).contains(&x) {
        return Err(Error::Range(format!("anxiety {x} outside [0, 10]")));
    }
    let mu = spec.target as f64;
    // gaussian value at the scale end farthest from the target
    let far = if mu < 5.0 {
        gaussian(MAX_ANXIETY as f64, mu)
    } else {
        gaussian(MIN_ANXIETY as f64, mu)
    };
    Ok((2.0 * (gaussian(x, mu) - far) / (1.0 - far) - 1.0).clamp(-1.0, 1.0))
}

pub fn reward(x: AnxietyLevel, spec: RewardSpec) -> f64 {
    reward_continuous(x.0 as f64, spec).expect("discrete anxiety is always in range")
}
