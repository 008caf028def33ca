//! The 13 car-following style indicators and z-score standardization.
//!
//! All statistics are over the follower's kinematics and its gap/speed
//! relation to the leader at the native 10 Hz sampling. Speed difference is
//! leader minus follower (positive while the gap opens). Standard deviations
//! use the sample (n-1) convention and are defined as 0 for windows with
//! fewer than two frames, which keeps short online windows usable.

use serde::{Deserialize, Serialize};

use crate::data::{CarFollowingPair, PairSample, DT};
use crate::error::{Error, Result};
use crate::util::{max_of, mean, min_of, sample_std};

pub const FEATURE_COUNT: usize = 13;

/// Default feature window taken from the start of each episode, seconds.
pub const FEATURE_WINDOW_S: f64 = 15.0;

/// CSV header for exported feature matrices.
pub const FEATURE_CSV_HEADER: &str = "X1,X2,X3,X4,X5,X6,X7,X8,X9,X10,X11,X12,X13";

/// The 13 characteristic indicators of one car-following window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub max_speed: f64,
    pub mean_speed: f64,
    pub std_speed: f64,
    pub max_accel: f64,
    pub min_accel: f64,
    pub mean_accel: f64,
    pub std_accel: f64,
    pub max_gap: f64,
    pub min_gap: f64,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub mean_speed_diff: f64,
    pub std_speed_diff: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.max_speed,
            self.mean_speed,
            self.std_speed,
            self.max_accel,
            self.min_accel,
            self.mean_accel,
            self.std_accel,
            self.max_gap,
            self.min_gap,
            self.mean_gap,
            self.std_gap,
            self.mean_speed_diff,
            self.std_speed_diff,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            max_speed: a[0],
            mean_speed: a[1],
            std_speed: a[2],
            max_accel: a[3],
            min_accel: a[4],
            mean_accel: a[5],
            std_accel: a[6],
            max_gap: a[7],
            min_gap: a[8],
            mean_gap: a[9],
            std_gap: a[10],
            mean_speed_diff: a[11],
            std_speed_diff: a[12],
        }
    }
}

/// Computes all 13 indicators over a slice of paired frames.
pub fn compute_features(samples: &[PairSample]) -> Result<FeatureVector> {
    if samples.is_empty() {
        return Err(Error::data("cannot compute features over an empty window"));
    }
    let speeds: Vec<f64> = samples.iter().map(|s| s.follower.speed).collect();
    let accels: Vec<f64> = samples.iter().map(|s| s.follower.accel).collect();
    let gaps: Vec<f64> = samples.iter().map(|s| s.gap).collect();
    let diffs: Vec<f64> = samples
        .iter()
        .map(|s| s.leader.speed - s.follower.speed)
        .collect();

    Ok(FeatureVector {
        max_speed: max_of(&speeds),
        mean_speed: mean(&speeds),
        std_speed: sample_std(&speeds),
        max_accel: max_of(&accels),
        min_accel: min_of(&accels),
        mean_accel: mean(&accels),
        std_accel: sample_std(&accels),
        max_gap: max_of(&gaps),
        min_gap: min_of(&gaps),
        mean_gap: mean(&gaps),
        std_gap: sample_std(&gaps),
        mean_speed_diff: mean(&diffs),
        std_speed_diff: sample_std(&diffs),
    })
}

/// Computes the indicators over the first `window_s` seconds of an episode.
///
/// The window is anchored at the episode start and sampled inclusively, so
/// 15 s covers 151 frames. Errors if the window exceeds the episode.
pub fn extract_features(pair: &CarFollowingPair, window_s: f64) -> Result<FeatureVector> {
    if window_s > pair.duration() + 1e-9 {
        return Err(Error::data(format!(
            "feature window {window_s} s exceeds episode duration {:.1} s",
            pair.duration()
        )));
    }
    let n = (window_s / DT).round() as usize + 1;
    compute_features(&pair.samples[..n.min(pair.samples.len())])
}

/// Per-dimension z-score parameters fitted on the offline feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: [f64; FEATURE_COUNT],
    pub stds: [f64; FEATURE_COUNT],
}

/// Fits per-dimension mean and sample standard deviation.
///
/// A dimension with zero variance cannot be standardized and is reported by
/// name as an error.
pub fn fit_standardizer(features: &[FeatureVector]) -> Result<Standardizer> {
    if features.len() < 2 {
        return Err(Error::data(format!(
            "standardizer needs at least 2 feature vectors, got {}",
            features.len()
        )));
    }
    let mut means = [0.0; FEATURE_COUNT];
    let mut stds = [0.0; FEATURE_COUNT];
    for dim in 0..FEATURE_COUNT {
        let column: Vec<f64> = features.iter().map(|f| f.as_array()[dim]).collect();
        means[dim] = mean(&column);
        stds[dim] = sample_std(&column);
        if stds[dim] <= 0.0 {
            return Err(Error::numerical(format!(
                "feature X{} has zero variance across the corpus",
                dim + 1
            )));
        }
    }
    Ok(Standardizer { means, stds })
}

impl Standardizer {
    /// (f - mean) / std, componentwise.
    pub fn standardize(&self, f: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let a = f.as_array();
        let mut z = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            z[i] = (a[i] - self.means[i]) / self.stds[i];
        }
        z
    }

    pub fn unstandardize(&self, z: &[f64; FEATURE_COUNT]) -> FeatureVector {
        let mut a = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            a[i] = z[i] * self.stds[i] + self.means[i];
        }
        FeatureVector::from_array(a)
    }
}
