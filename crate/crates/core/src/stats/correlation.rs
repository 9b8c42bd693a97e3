use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{mean, Alternative};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    /// 95% Fisher-z interval; `(-1, 1)` when n = 3.
    pub ci: (f64, f64),
}

pub fn pearson(x: &[f64], y: &[f64], alternative: Alternative) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::Config(format!(
            "series differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(
            "correlation needs at least 3 points".into(),
        ));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("a series has zero variance".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    if r.abs() == 1.0 {
        let p_value = match alternative {
            Alternative::Greater if r < 0.0 => 1.0,
            Alternative::Less if r > 0.0 => 1.0,
            _ => 0.0,
        };
        return Ok(PearsonResult {
            r,
            t: r * f64::INFINITY,
            df,
            p_value,
            ci: (r, r),
        });
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p_value = match alternative {
        Alternative::Greater => dist.sf(t),
        Alternative::Less => dist.cdf(t),
        Alternative::TwoSided => (2.0 * dist.sf(t.abs())).min(1.0),
    };
    let ci = if n > 3 {
        let z = r.atanh();
        let half = Normal::standard().inverse_cdf(0.975) / ((n - 3) as f64).sqrt();
        ((z - half).tanh(), (z + half).tanh())
    } else {
        (-1.0, 1.0)
    };
    Ok(PearsonResult {
        r,
        t,
        df,
        p_value,
        ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_zero() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = pearson(&x, &[2.0, 4.0, 6.0, 8.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.r, 1.0);
        assert_eq!(r.p_value, 0.0);
        let r = pearson(&x, &[1.0, -1.0, -1.0, 1.0], Alternative::TwoSided).unwrap();
        assert!(r.r.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
        assert!(r.ci.0 < 0.0 && r.ci.1 > 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], Alternative::TwoSided),
            Err(Error::Degenerate(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0], Alternative::TwoSided).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0], Alternative::TwoSided).is_err());
    }

    #[test]
    fn hand_computed() {
        // r = 0.8 for this set: sxy = 8, sxx = 10, syy = 10
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 1.0, 4.0, 3.0, 5.0];
        let r = pearson(&x, &y, Alternative::TwoSided).unwrap();
        assert!((r.r - 0.8).abs() < 1e-12);
        assert!((r.t - 0.8 * (3.0f64 / 0.36).sqrt()).abs() < 1e-12);
        assert!(r.ci.0 < 0.8 && 0.8 < r.ci.1);
    }
}
