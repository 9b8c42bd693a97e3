use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Alternative, PairedSamples};
use crate::error::{Error, Result};

/// Largest number of nonzero pairs for which the null distribution is
/// enumerated exactly.
pub const EXACT_MAX_N: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Normal-approximation z of the statistic (no continuity correction).
    pub z: f64,
    /// `z / sqrt(n)`.
    pub effect_r: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub exact: bool,
}

/// Average ranks (1-based) of `values`, plus tie-group sizes.
pub(crate) fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Counts of each achievable doubled positive-rank sum under random signs.
fn doubled_rank_sum_counts(doubled_ranks: &[usize]) -> Vec<u64> {
    let total: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in doubled_ranks {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

pub fn wilcoxon_signed_rank(
    samples: &PairedSamples,
    alternative: Alternative,
) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = samples
        .differences()
        .into_iter()
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(ranks.iter())
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_adj: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_adj;
    let sd = var.sqrt();
    let z = if sd > 0.0 { (w_plus - mean) / sd } else { 0.0 };

    let exact = n <= EXACT_MAX_N;
    let p_value = if exact {
        // average ranks are multiples of 1/2, so doubled ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let observed = (w_plus * 2.0).round() as usize;
        let counts = doubled_rank_sum_counts(&doubled);
        let total = 2f64.powi(n as i32);
        let upper = counts[observed..].iter().sum::<u64>() as f64 / total;
        let lower = counts[..=observed].iter().sum::<u64>() as f64 / total;
        match alternative {
            Alternative::Greater => upper,
            Alternative::Less => lower,
            Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
        }
    } else {
        let normal = Normal::standard();
        let corrected = |shift: f64| {
            if sd > 0.0 {
                (w_plus - mean + shift) / sd
            } else {
                0.0
            }
        };
        match alternative {
            Alternative::Greater => normal.sf(corrected(-0.5)),
            Alternative::Less => normal.cdf(corrected(0.5)),
            Alternative::TwoSided => {
                let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
                let zc = if sd > 0.0 { dev / sd } else { 0.0 };
                (2.0 * normal.sf(zc)).min(1.0)
            }
        }
    };

    Ok(WilcoxonResult {
        statistic: w_plus,
        p_value,
        z,
        effect_r: z / nf.sqrt(),
        n,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diffs(d: &[f64]) -> PairedSamples {
        PairedSamples::from_differences(d.to_vec()).unwrap()
    }

    #[test]
    fn all_positive_five() {
        let r =
            wilcoxon_signed_rank(&diffs(&[1.0, 2.0, 3.0, 4.0, 5.0]), Alternative::Greater).unwrap();
        assert_eq!(r.p_value, 1.0 / 32.0);
        assert_eq!(r.statistic, 15.0);
        assert!(r.exact);
        let r = wilcoxon_signed_rank(&diffs(&[1.0, 2.0, 3.0, 4.0, 5.0]), Alternative::TwoSided)
            .unwrap();
        assert_eq!(r.p_value, 1.0 / 16.0);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let s = PairedSamples::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            wilcoxon_signed_rank(&s, Alternative::TwoSided),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn sign_flip_swaps_tails() {
        for d in [
            vec![1.0, -2.0, 3.0, 4.5, -0.5, 2.0],
            (1..=20)
                .map(|i| (i as f64 * 0.37).sin())
                .collect::<Vec<_>>(),
        ] {
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            let g = wilcoxon_signed_rank(&diffs(&d), Alternative::Greater).unwrap();
            let l = wilcoxon_signed_rank(&diffs(&neg), Alternative::Less).unwrap();
            assert!((g.p_value - l.p_value).abs() < 1e-12);
        }
    }

    #[test]
    fn zeros_dropped_and_ties_averaged() {
        let r = wilcoxon_signed_rank(&diffs(&[0.0, 1.0, -1.0, 2.0]), Alternative::Greater).unwrap();
        assert_eq!(r.n, 3);
        // |d| = 1,1,2 -> ranks 1.5,1.5,3; positive ranks 1.5 + 3
        assert_eq!(r.statistic, 4.5);
    }

    #[test]
    fn large_sample_uses_normal_approximation() {
        let d: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&diffs(&d), Alternative::Greater).unwrap();
        assert!(!r.exact);
        assert!(r.p_value < 1e-5);
        assert!(r.z > 4.0);
        assert!((r.effect_r - r.z / 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ranks_with_ties() {
        let (r, t) = average_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![1, 1, 2]);
    }
}
