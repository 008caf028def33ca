//! K-means clustering (Lloyd iterations, farthest-point seeding, restarts)
//! and the SSE-vs-K elbow scan used to pick the cluster count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{derive_seed, Rng};

/// Hard cap on Lloyd iterations per restart.
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Index of the nearest centroid for each training point.
    pub labels: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroids.
    pub sse: f64,
}

impl KmeansModel {
    /// Index of the nearest centroid; ties break toward the lowest index.
    pub fn assign(&self, point: &[f64]) -> usize {
        nearest(&self.centroids, point).0
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, point);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// Fits k-means with `restarts` independent seedings and returns the best
/// model by SSE. Deterministic for a given seed.
pub fn kmeans_fit(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KmeansModel> {
    kmeans_fit_with_history(points, k, restarts, seed).map(|(model, _)| model)
}

/// As [`kmeans_fit`], additionally returning the per-iteration SSE trace of
/// the winning restart (used by diagnostics and the invariant suite: Lloyd
/// iterations never increase SSE).
pub fn kmeans_fit_with_history(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<(KmeansModel, Vec<f64>)> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if points.len() < k {
        return Err(Error::data(format!(
            "cannot fit {k} clusters on {} points",
            points.len()
        )));
    }
    let restarts = restarts.max(1);
    let mut best: Option<(KmeansModel, Vec<f64>)> = None;
    for r in 0..restarts {
        let sub_seed = derive_seed(seed, r as u64);
        let (model, history) = fit_single(points, k, sub_seed);
        let better = match &best {
            None => true,
            Some((b, _)) => model.sse < b.sse,
        };
        if better {
            best = Some((model, history));
        }
    }
    Ok(best.expect("at least one restart ran"))
}

/// One seeded run: farthest-point initialization (first centroid random,
/// each next one the point farthest from its nearest chosen centroid), then
/// Lloyd iterations to an assignment fixed point.
fn fit_single(points: &[Vec<f64>], k: usize, seed: u64) -> (KmeansModel, Vec<f64>) {
    let mut rng = Rng::seeded(seed);
    let dim = points[0].len();

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.below(points.len())].clone());
    while centroids.len() < k {
        let mut far_idx = 0;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let (_, d) = nearest(&centroids, p);
            if d > far_d {
                far_d = d;
                far_idx = i;
            }
        }
        centroids.push(points[far_idx].clone());
    }

    let mut labels = vec![0usize; points.len()];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        // Assignment step.
        let mut changed = false;
        let mut sse = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (label, d) = nearest(&centroids, p);
            if labels[i] != label {
                labels[i] = label;
                changed = true;
            }
            sse += d;
        }
        history.push(sse);
        if !changed && history.len() > 1 {
            break;
        }

        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(labels.iter()) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an emptied centroid at the point farthest from its
                // currently assigned centroid.
                let mut far_idx = 0;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    let d = squared_distance(p, &centroids[labels[i]]);
                    if d > far_d {
                        far_d = d;
                        far_idx = i;
                    }
                }
                centroids[c] = points[far_idx].clone();
            } else {
                for (dst, s) in centroids[c].iter_mut().zip(sums[c].iter()) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
    }

    // Final assignment pass so labels and SSE match the final centroids.
    let mut sse = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (label, d) = nearest(&centroids, p);
        labels[i] = label;
        sse += d;
    }

    (
        KmeansModel {
            k,
            centroids,
            labels,
            sse,
        },
        history,
    )
}

/// Best SSE for each k in `k_range`, for plotting the elbow curve.
pub fn elbow_scan(
    points: &[Vec<f64>],
    k_range: std::ops::RangeInclusive<usize>,
    restarts: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let mut curve = Vec::new();
    for k in k_range {
        if k > points.len() {
            return Err(Error::data(format!(
                "elbow scan asked for k={k} with only {} points",
                points.len()
            )));
        }
        let model = kmeans_fit(points, k, restarts, derive_seed(seed, k as u64))?;
        curve.push((k, model.sse));
    }
    Ok(curve)
}

/// The k of maximum discrete curvature of the SSE curve: the interior point
/// maximizing `sse[i-1] - 2*sse[i] + sse[i+1]`. Returns None for curves with
/// fewer than three points.
pub fn elbow_k(curve: &[(usize, f64)]) -> Option<usize> {
    if curve.len() < 3 {
        return None;
    }
    let mut best_k = curve[1].0;
    let mut best_curv = f64::NEG_INFINITY;
    for w in curve.windows(3) {
        let curvature = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if curvature > best_curv {
            best_curv = curvature;
            best_k = w[1].0;
        }
    }
    Some(best_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three tight, well-separated 2-d blobs; returns (points, blob label).
    pub(crate) fn three_blobs(per_blob: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
        let mut rng = Rng::seeded(seed);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (b, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..per_blob {
                points.push(vec![cx + rng.normal(0.0, 0.3), cy + rng.normal(0.0, 0.3)]);
                labels.push(b);
            }
        }
        (points, labels)
    }

    #[test]
    fn k1_centroid_is_the_mean() {
        let (points, _) = three_blobs(20, 1);
        let model = kmeans_fit(&points, 1, 4, 0).unwrap();
        let n = points.len() as f64;
        let mean_x: f64 = points.iter().map(|p| p[0]).sum::<f64>() / n;
        let mean_y: f64 = points.iter().map(|p| p[1]).sum::<f64>() / n;
        assert!((model.centroids[0][0] - mean_x).abs() < 1e-9);
        assert!((model.centroids[0][1] - mean_y).abs() < 1e-9);
        // SSE equals total squared deviation from the mean.
        let expected: f64 = points
            .iter()
            .map(|p| (p[0] - mean_x).powi(2) + (p[1] - mean_y).powi(2))
            .sum();
        assert!((model.sse - expected).abs() < 1e-9);
    }

    #[test]
    fn blobs_are_recovered_up_to_permutation() {
        let (points, truth) = three_blobs(30, 2);
        let model = kmeans_fit(&points, 3, 8, 5).unwrap();
        // Every true blob maps to exactly one fitted cluster.
        let mut map = [usize::MAX; 3];
        for (label, &t) in model.labels.iter().zip(truth.iter()) {
            if map[t] == usize::MAX {
                map[t] = *label;
            }
            assert_eq!(map[t], *label);
        }
        let mut sorted = map;
        sorted.sort_unstable();
        assert_eq!(sorted, [0, 1, 2]);
    }

    #[test]
    fn labels_match_nearest_centroid_and_sse_is_consistent() {
        let (points, _) = three_blobs(25, 3);
        let model = kmeans_fit(&points, 3, 4, 9).unwrap();
        let mut sse = 0.0;
        for (p, &l) in points.iter().zip(model.labels.iter()) {
            assert_eq!(model.assign(p), l);
            sse += squared_distance(p, &model.centroids[l]);
        }
        assert!((sse - model.sse).abs() < 1e-9);
    }

    #[test]
    fn assign_breaks_ties_toward_lowest_index() {
        let model = KmeansModel {
            k: 3,
            centroids: vec![vec![-1.0, 0.0], vec![5.0, 5.0], vec![1.0, 0.0]],
            labels: vec![],
            sse: 0.0,
        };
        // (0, 0) is equidistant from centroids 0 and 2.
        assert_eq!(model.assign(&[0.0, 0.0]), 0);
        // A point exactly on a centroid maps to it.
        assert_eq!(model.assign(&[5.0, 5.0]), 1);
    }

    #[test]
    fn assign_matches_brute_force_scan() {
        let (points, _) = three_blobs(20, 4);
        let model = kmeans_fit(&points, 3, 4, 11).unwrap();
        let mut rng = Rng::seeded(21);
        for _ in 0..200 {
            let p = vec![rng.range_f64(-5.0, 15.0), rng.range_f64(-5.0, 15.0)];
            let brute = model
                .centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (i, squared_distance(c, &p)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap()
                .0;
            assert_eq!(model.assign(&p), brute);
        }
    }

    #[test]
    fn lloyd_sse_never_increases() {
        let (points, _) = three_blobs(40, 5);
        let (_, history) = kmeans_fit_with_history(&points, 3, 1, 3).unwrap();
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "SSE increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn elbow_curve_shape_on_blobs() {
        let (points, _) = three_blobs(40, 6);
        let curve = elbow_scan(&points, 1..=8, 6, 13).unwrap();
        assert_eq!(curve.len(), 8);
        let sse1 = curve[0].1;
        let sse3 = curve[2].1;
        assert!(sse1 > 20.0 * sse3, "no elbow: sse1={sse1}, sse3={sse3}");
        assert_eq!(elbow_k(&curve), Some(3));
        // Running-minimum view of the curve is non-increasing in k.
        let mut running = f64::INFINITY;
        for &(_, sse) in &curve {
            let m = running.min(sse);
            assert!(sse <= running + 1e-9 || m <= running);
            running = m;
        }
    }

    #[test]
    fn best_of_restarts_sse_is_non_increasing_in_k() {
        // With farthest-point seeding and enough restarts the best SSE is
        // non-increasing in k on this data (running minimum, 1e-9 slack).
        let (points, _) = three_blobs(30, 7);
        let curve = elbow_scan(&points, 1..=6, 10, 17).unwrap();
        let mut best = f64::INFINITY;
        for &(k, sse) in &curve {
            assert!(
                sse <= best + 1e-9,
                "best-of-restarts SSE rose at k={k}: {best} -> {sse}"
            );
            best = best.min(sse);
        }
    }

    #[test]
    fn k_larger_than_point_count_errors() {
        let (points, _) = three_blobs(2, 8);
        assert!(kmeans_fit(&points, 7, 2, 0).is_err());
        assert!(elbow_scan(&points, 1..=7, 2, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let (points, _) = three_blobs(25, 9);
        let a = kmeans_fit(&points, 3, 5, 99).unwrap();
        let b = kmeans_fit(&points, 3, 5, 99).unwrap();
        assert_eq!(a, b);
    }
}
