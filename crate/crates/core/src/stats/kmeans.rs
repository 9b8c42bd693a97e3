use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream};
use crate::state_space::{Attribute, SpiderAttributes, NUM_ATTRIBUTES};

pub type Point = [f64; NUM_ATTRIBUTES];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { max_iter: 300 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centers: Vec<Point>,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn member_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &a in &self.assignments {
            counts[a] += 1;
        }
        counts
    }

    pub fn discretized_centers(&self) -> Vec<SpiderAttributes> {
        self.centers.iter().map(discretize_center).collect()
    }
}

fn dist2(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &Point, centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Number of distinct points (bitwise comparison).
pub fn distinct_count(points: &[Point]) -> usize {
    let mut keys: Vec<[u64; NUM_ATTRIBUTES]> = points.iter().map(|p| p.map(f64::to_bits)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Rounds each coordinate to the nearest level and clamps it to the
/// attribute's bounds.
pub fn discretize_center(center: &Point) -> SpiderAttributes {
    let mut v = [0u8; NUM_ATTRIBUTES];
    for (i, attr) in Attribute::ALL.iter().enumerate() {
        v[i] = center[i].round().clamp(0.0, attr.max_value() as f64) as u8;
    }
    SpiderAttributes::new(v).expect("clamped to bounds")
}

fn seed_centers(points: &[Point], k: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = d2
            .iter()
            .rposition(|&d| d > 0.0)
            .expect("distinct points remain");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && u < d {
                pick = i;
                break;
            }
            u -= d;
        }
        let c = points[pick];
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Lloyd's iteration from k-means++ seeding, until assignments stop changing.
/// An emptied cluster keeps its previous center.
pub fn kmeans(points: &[Point], k: usize, seed: u64, opts: KMeansOptions) -> Result<ClusterModel> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Range("points contain non-finite coordinates".into()));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::Config(format!(
            "k = {k} exceeds {distinct} distinct points"
        )));
    }
    let mut rng = rng_from(seed, &[stream::KMEANS]);
    let mut centers = seed_centers(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let assigned: Vec<(usize, f64)> = points.iter().map(|p| nearest(p, &centers)).collect();
        let next: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        history.push(assigned.iter().map(|a| a.1).sum());
        if next == assignments || iterations >= opts.max_iter {
            assignments = next;
            break;
        }
        assignments = next;
        iterations += 1;
        let mut sums = vec![[0.0; NUM_ATTRIBUTES]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].map(|s| s / counts[c] as f64);
            }
        }
    }
    Ok(ClusterModel {
        k,
        wcss: *history.last().expect("at least one assignment"),
        centers,
        assignments,
        wcss_history: history,
        iterations,
    })
}

/// Lowest-wcss model over `restarts` seeded runs; ties keep the earlier run.
pub fn kmeans_best(points: &[Point], k: usize, restarts: usize, seed: u64) -> Result<ClusterModel> {
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let mut best: Option<ClusterModel> = None;
    for r in 0..restarts {
        let m = kmeans(
            points,
            k,
            derive_seed(seed, &[k as u64, r as u64]),
            KMeansOptions::default(),
        )?;
        if best.as_ref().is_none_or(|b| m.wcss < b.wcss) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElbowResult {
    pub chosen_k: usize,
    /// `(k, best wcss)` over the scanned range.
    pub wcss: Vec<(usize, f64)>,
}

/// Interior k with the largest second difference of wcss; ties go to the
/// smaller k.
pub fn elbow_from_wcss(ks: &[usize], wcss: &[f64]) -> Result<usize> {
    if ks.len() != wcss.len() || ks.len() < 3 {
        return Err(Error::Config("elbow needs at least 3 k values".into()));
    }
    let mut best = (ks[1], f64::NEG_INFINITY);
    for i in 1..ks.len() - 1 {
        let d2 = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
        if d2 > best.1 + 1e-9 * wcss[0].abs().max(1.0) {
            best = (ks[i], d2);
        }
    }
    Ok(best.0)
}

/// Best-of-`restarts` wcss for every k in `k_min..=k_max`, then the elbow.
pub fn elbow_select(
    points: &[Point],
    k_min: usize,
    k_max: usize,
    restarts: usize,
    seed: u64,
) -> Result<ElbowResult> {
    if k_min == 0 || k_max < k_min + 2 {
        return Err(Error::Config(format!(
            "k range {k_min}..={k_max} must span at least 3 values"
        )));
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let wcss: Vec<f64> = ks
        .par_iter()
        .map(|&k| kmeans_best(points, k, restarts, seed).map(|m| m.wcss))
        .collect::<Result<_>>()?;
    let chosen_k = elbow_from_wcss(&ks, &wcss)?;
    Ok(ElbowResult {
        chosen_k,
        wcss: ks.into_iter().zip(wcss).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(per: usize, seed: u64) -> (Vec<Point>, Vec<usize>) {
        let centers: [Point; 3] = [
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [10.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [5.0, 8.66, 0.0, 0.0, 0.0, 0.0],
        ];
        let mut rng = rng_from(seed, &[]);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (ci, c) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push(c.map(|v| v + noise.sample(&mut rng)));
                labels.push(ci);
            }
        }
        (pts, labels)
    }

    #[test]
    fn k_equals_n_has_zero_wcss() {
        let pts: Vec<Point> = (0..5)
            .map(|i| [i as f64, 0.0, 1.0, 0.0, 0.0, 2.0])
            .collect();
        let m = kmeans(&pts, 5, 1, KMeansOptions::default()).unwrap();
        assert_eq!(m.wcss, 0.0);
    }

    #[test]
    fn too_many_clusters() {
        let pts = vec![[1.0; 6], [1.0; 6], [2.0; 6]];
        assert!(matches!(
            kmeans(&pts, 3, 0, KMeansOptions::default()),
            Err(Error::Config(_))
        ));
        assert!(kmeans(&pts, 2, 0, KMeansOptions::default()).is_ok());
    }

    #[test]
    fn blobs_recovered() {
        let (pts, labels) = blobs(20, 9);
        let m = kmeans(&pts, 3, 4, KMeansOptions::default()).unwrap();
        for blob in 0..3 {
            let assigned: Vec<usize> = labels
                .iter()
                .zip(&m.assignments)
                .filter(|(l, _)| **l == blob)
                .map(|(_, a)| *a)
                .collect();
            assert!(assigned.iter().all(|a| *a == assigned[0]));
        }
        assert_eq!(m.member_counts(), vec![20, 20, 20]);
        assert!(m.wcss_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert_eq!(m, kmeans(&pts, 3, 4, KMeansOptions::default()).unwrap());
    }

    #[test]
    fn elbow_on_blobs() {
        let (pts, _) = blobs(20, 3);
        let e = elbow_select(&pts, 1, 8, 5, 11).unwrap();
        assert_eq!(e.chosen_k, 3);
        assert_eq!(e.wcss.len(), 8);
    }

    #[test]
    fn elbow_ties_go_to_smaller_k() {
        assert_eq!(
            elbow_from_wcss(&[1, 2, 3, 4, 5], &[10.0, 8.0, 6.0, 4.0, 2.0]).unwrap(),
            2
        );
        assert!(elbow_from_wcss(&[1, 2], &[1.0, 0.0]).is_err());
        assert!(elbow_select(&[[0.0; 6]], 2, 3, 1, 0).is_err());
    }

    #[test]
    fn discretization_clamps() {
        let s = discretize_center(&[2.6, -0.4, 1.49, 1.5, 0.9, 1.2]);
        assert_eq!(s.values(), [2, 0, 1, 2, 1, 1]);
        let s = discretize_center(&[0.0, 0.0, 0.0, 0.0, 1.7, 0.0]);
        assert_eq!(s.values()[4], 1);
    }
}
