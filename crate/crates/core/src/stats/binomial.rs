use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal};

use super::Alternative;
use crate::error::{Error, Result};

/// Exact binomial test of `successes` out of `trials` against rate `p0`.
pub fn binomial_test(
    successes: u64,
    trials: u64,
    p0: f64,
    alternative: Alternative,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Range(format!("null proportion {p0} outside [0, 1]")));
    }
    if successes > trials {
        return Err(Error::Range(format!(
            "{successes} successes exceed {trials} trials"
        )));
    }
    if trials == 0 {
        return Ok(1.0);
    }
    let dist = Binomial::new(p0, trials).map_err(|e| Error::Range(e.to_string()))?;
    let p = match alternative {
        Alternative::Greater => (successes..=trials).map(|i| dist.pmf(i)).sum::<f64>(),
        Alternative::Less => (0..=successes).map(|i| dist.pmf(i)).sum::<f64>(),
        Alternative::TwoSided => {
            let observed = dist.pmf(successes) * (1.0 + 1e-7);
            (0..=trials)
                .map(|i| dist.pmf(i))
                .filter(|&q| q <= observed)
                .sum::<f64>()
        }
    };
    Ok(p.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionTest {
    pub z: f64,
    pub p_value: f64,
}

/// Pooled two-proportion z-test of `s1/n1` against `s2/n2`.
pub fn two_proportion_z(
    s1: u64,
    n1: u64,
    s2: u64,
    n2: u64,
    alternative: Alternative,
) -> Result<ProportionTest> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InsufficientData(
            "both groups need at least one trial".into(),
        ));
    }
    if s1 > n1 || s2 > n2 {
        return Err(Error::Range("successes exceed trials".into()));
    }
    let (p1, p2) = (s1 as f64 / n1 as f64, s2 as f64 / n2 as f64);
    let pooled = (s1 + s2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return Ok(ProportionTest {
            z: 0.0,
            p_value: 1.0,
        });
    }
    let z = (p1 - p2) / se;
    let n = Normal::standard();
    let p_value = match alternative {
        Alternative::Greater => n.sf(z),
        Alternative::Less => n.cdf(z),
        Alternative::TwoSided => (2.0 * n.sf(z.abs())).min(1.0),
    };
    Ok(ProportionTest { z, p_value })
}
