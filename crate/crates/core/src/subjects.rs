//! Virtual subjects: parametric anxiety responses standing in for people.
//!
//! A subject holds one non-negative weight per attribute. Its noiseless
//! response to a spider is the weighted attribute sum normalized by the
//! weighted sum at the all-maximum spider, scaled to 0..10 and rounded.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::AnxietyLevel;
use crate::rng::{derive_seed, rng_from, stream, SimRng};
use crate::state_space::{encode, Attribute, SpiderAttributes, NUM_ATTRIBUTES};

const MAX_RESAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpactFactor {
    pub mean: f64,
    pub std: f64,
}

/// Per-attribute impact-factor distributions for sampling a population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectPopulationConfig {
    pub impact: [ImpactFactor; NUM_ATTRIBUTES],
    pub noise_sigma: f64,
    pub n_subjects: usize,
    pub master_seed: u64,
    /// Multiplicative decay applied per prior exposure to the same spider;
    /// `None` disables habituation.
    pub habituation: Option<f64>,
}

impl Default for SubjectPopulationConfig {
    /// Illustrative defaults, not measured data: movement-related attributes
    /// and size weigh more than hairiness and color.
    fn default() -> Self {
        let f = |mean, std| ImpactFactor { mean, std };
        Self {
            impact: [
                f(1.0, 0.3),
                f(1.0, 0.3),
                f(1.0, 0.3),
                f(1.0, 0.3),
                f(0.5, 0.2),
                f(0.5, 0.2),
            ],
            noise_sigma: 0.0,
            n_subjects: 100,
            master_seed: 2024,
            habituation: None,
        }
    }
}

impl SubjectPopulationConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.impact.iter().enumerate() {
            if !(f.mean.is_finite() && f.std.is_finite()) || f.std < 0.0 || f.mean < 0.0 {
                return Err(Error::Config(format!(
                    "impact factor for {} must have finite mean >= 0 and std >= 0",
                    Attribute::ALL[i].name()
                )));
            }
        }
        if !self.impact.iter().any(|f| f.mean > 0.0) {
            return Err(Error::Config(
                "at least one impact mean must be positive".into(),
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma {} must be >= 0",
                self.noise_sigma
            )));
        }
        if let Some(d) = self.habituation {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::Config(format!(
                    "habituation decay {d} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualSubject {
    pub id: usize,
    pub weights: [f64; NUM_ATTRIBUTES],
    pub noise_sigma: f64,
    pub seed: u64,
    pub habituation: Option<f64>,
}

impl VirtualSubject {
    pub fn new(
        id: usize,
        weights: [f64; NUM_ATTRIBUTES],
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "subject weights must be finite and >= 0: {weights:?}"
            )));
        }
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma {noise_sigma} must be >= 0"
            )));
        }
        let s = Self {
            id,
            weights,
            noise_sigma,
            seed,
            habituation: None,
        };
        if s.max_response() <= 0.0 {
            return Err(Error::Config("subject weights are all zero".into()));
        }
        Ok(s)
    }

    pub fn with_habituation(mut self, decay: Option<f64>) -> Self {
        self.habituation = decay;
        self
    }

    fn max_response(&self) -> f64 {
        Attribute::ALL
            .iter()
            .map(|a| self.weights[a.index()] * a.max_value() as f64)
            .sum()
    }

    /// Noiseless continuous anxiety in `[0, 10]`.
    pub fn expected_anxiety(&self, spider: &SpiderAttributes) -> f64 {
        let response: f64 = spider
            .values()
            .iter()
            .zip(self.weights.iter())
            .map(|(&v, w)| w * v as f64)
            .sum();
        10.0 * response / self.max_response()
    }

    /// Starts a fresh response stream (noise rng and exposure history).
    pub fn start(&self) -> SubjectState<'_> {
        self.start_stream(&[])
    }

    /// Like [`start`](Self::start), with the noise stream further split by
    /// `path` (e.g. a repetition index).
    pub fn start_stream(&self, path: &[u64]) -> SubjectState<'_> {
        let mut full = vec![stream::SUBJECT];
        full.extend_from_slice(path);
        SubjectState {
            subject: self,
            rng: rng_from(self.seed, &full),
            exposures: HashMap::new(),
        }
    }
}

/// A subject plus its mutable response state.
#[derive(Clone, Debug)]
pub struct SubjectState<'a> {
    subject: &'a VirtualSubject,
    rng: SimRng,
    exposures: HashMap<usize, u32>,
}

impl SubjectState<'_> {
    pub fn subject(&self) -> &VirtualSubject {
        self.subject
    }

    /// Presents `spider` and returns the discretized anxiety it induces.
    ///
    /// A normal draw is consumed only when `noise_sigma > 0`.
    pub fn evaluate(&mut self, spider: &SpiderAttributes) -> AnxietyLevel {
        let mut value = self.subject.expected_anxiety(spider);
        if let Some(decay) = self.subject.habituation {
            let seen = self.exposures.entry(encode(spider)).or_insert(0);
            value *= decay.powi(*seen as i32);
            *seen += 1;
        }
        if self.subject.noise_sigma > 0.0 {
            let noise = Normal::new(0.0, self.subject.noise_sigma).expect("sigma validated");
            value += noise.sample(&mut self.rng);
        }
        AnxietyLevel::from_continuous(value)
    }
}

/// Evaluates `spider` once on a fresh response stream.
pub fn evaluate(subject: &VirtualSubject, spider: &SpiderAttributes) -> AnxietyLevel {
    subject.start().evaluate(spider)
}

/// Draws `n_subjects` subjects; subject `i` uses a stream derived from
/// `(master_seed, POPULATION, i)` so subjects are independent of `n`.
pub fn sample_population(cfg: &SubjectPopulationConfig) -> Result<Vec<VirtualSubject>> {
    cfg.validate()?;
    let normals: Vec<Normal<f64>> = cfg
        .impact
        .iter()
        .map(|f| Normal::new(f.mean, f.std).expect("validated"))
        .collect();
    (0..cfg.n_subjects)
        .map(|i| {
            let mut rng = rng_from(cfg.master_seed, &[stream::POPULATION, i as u64]);
            for _ in 0..MAX_RESAMPLES {
                let mut weights = [0.0; NUM_ATTRIBUTES];
                for (w, n) in weights.iter_mut().zip(normals.iter()) {
                    *w = n.sample(&mut rng).max(0.0);
                }
                let seed = derive_seed(cfg.master_seed, &[stream::SUBJECT, i as u64, rng.random()]);
                if let Ok(s) = VirtualSubject::new(i, weights, cfg.noise_sigma, seed) {
                    return Ok(s.with_habituation(cfg.habituation));
                }
            }
            Err(Error::Config(format!(
                "subject {i}: all weights clamped to zero after {MAX_RESAMPLES} draws"
            )))
        })
        .collect()
}
