use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{mean, Alternative, PairedSamples};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_difference: f64,
    /// 95% confidence bounds on the mean difference; the unbounded side of a
    /// one-sided test is infinite.
    pub ci: (f64, f64),
}

pub fn paired_t_test(samples: &PairedSamples, alternative: Alternative) -> Result<PairedTTest> {
    let d = samples.differences();
    let n = d.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    let m = mean(&d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::Degenerate("differences have zero variance".into()));
    }
    let se = (var / n as f64).sqrt();
    let t = m / se;
    let df = (n - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let (p_value, ci) = match alternative {
        Alternative::TwoSided => {
            let q = dist.inverse_cdf(0.975);
            ((2.0 * dist.sf(t.abs())).min(1.0), (m - q * se, m + q * se))
        }
        Alternative::Greater => {
            let q = dist.inverse_cdf(0.95);
            (dist.sf(t), (m - q * se, f64::INFINITY))
        }
        Alternative::Less => {
            let q = dist.inverse_cdf(0.95);
            (dist.cdf(t), (f64::NEG_INFINITY, m + q * se))
        }
    };
    Ok(PairedTTest {
        t,
        df,
        p_value,
        mean_difference: m,
        ci,
    })
}
