//! Statistical tests and scoring procedures used by the session analyses.

mod binomial;
mod correlation;
mod kmeans;
mod stai;
mod ttest;
mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binomial::{binomial_test, two_proportion_z, ProportionTest};
pub use correlation::{pearson, PearsonResult};
pub use kmeans::{
    discretize_center, distinct_count, elbow_from_wcss, elbow_select, kmeans, kmeans_best,
    ClusterModel, ElbowResult, KMeansOptions, Point,
};
pub use stai::{stai6_score, Stai6Response};
pub use ttest::{paired_t_test, PairedTTest};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

/// Direction of the alternative hypothesis, stated for `a - b` (or `x`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

/// Two equal-length samples compared pairwise.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSamples {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSamples {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Config(format!(
                "paired samples differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::InsufficientData("paired samples are empty".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Range(
                "paired samples contain non-finite values".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// From precomputed differences (paired against zeros).
    pub fn from_differences(d: Vec<f64>) -> Result<Self> {
        let zeros = vec![0.0; d.len()];
        Self::new(d, zeros)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn differences(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(self.b.iter())
            .map(|(x, y)| x - y)
            .collect()
    }
}

/// Mean of squared deviations from `target`.
pub fn mse_vs_target(series: &[f64], target: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::InsufficientData("mse of an empty series".into()));
    }
    Ok(series.iter().map(|x| (x - target).powi(2)).sum::<f64>() / series.len() as f64)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_vs_target(&[30.0, 30.0, 30.0], 30.0).unwrap(), 0.0);
        assert_eq!(mse_vs_target(&[40.0, 20.0], 30.0).unwrap(), 100.0);
        assert_eq!(mse_vs_target(&[6.0, 8.0], 7.0).unwrap(), 1.0);
        assert!(mse_vs_target(&[], 1.0).is_err());
    }

    #[test]
    fn paired_samples_validation() {
        assert!(PairedSamples::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PairedSamples::new(vec![], vec![]).is_err());
        assert!(PairedSamples::new(vec![f64::NAN], vec![1.0]).is_err());
        let p = PairedSamples::new(vec![3.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(p.differences(), vec![2.0, 0.0]);
    }
}
