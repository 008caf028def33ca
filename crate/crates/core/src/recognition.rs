//! Online driving-style recognition from a short observation window.
//!
//! Method 1 repeats the offline path on the window: features over whatever
//! frames exist, the *offline* standardizer and PCA (never refitted), nearest
//! cluster center. Method 2 scores each prototype parameter set by the local
//! acceleration log-likelihood and takes the argmax; it works from a single
//! frame. Windows grow by accumulation as more of the vehicle is observed.

use serde::{Deserialize, Serialize};

use crate::calibration::Style;
use crate::data::{CarFollowingPair, PairSample, DT, FRAME_TOL};
use crate::error::{Error, Result};
use crate::features::{compute_features, Standardizer};
use crate::idm::{log_likelihood, simulate, FollowerStart, IdmParams, NoiseModel, Rollout};
use crate::kmeans::KmeansModel;
use crate::pca::PcaModel;

/// A contiguous 10 Hz observation of one follower-leader relation, from the
/// first observed frame onward. A window of n frames has `t_dur = n * 0.1 s`
/// of data (so a 2 s window holds 20 frames).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    samples: Vec<PairSample>,
}

impl ObservationWindow {
    pub fn new() -> Self {
        ObservationWindow::default()
    }

    /// Wraps samples, checking 10 Hz contiguity.
    pub fn from_samples(samples: Vec<PairSample>) -> Result<Self> {
        let mut w = ObservationWindow::new();
        w.accumulate(&samples)?;
        Ok(w)
    }

    /// The first `t_dur` seconds of a pair: its first `10 * t_dur` frames.
    pub fn from_pair_prefix(pair: &CarFollowingPair, t_dur: f64) -> Result<Self> {
        let n = (t_dur / DT).round() as usize;
        if n == 0 {
            return Err(Error::data(format!(
                "observation window needs at least one frame (t_dur = {t_dur} s)"
            )));
        }
        if n > pair.samples.len() {
            return Err(Error::data(format!(
                "pair has {} frames, cannot take a {t_dur} s window",
                pair.samples.len()
            )));
        }
        Ok(ObservationWindow {
            samples: pair.samples[..n].to_vec(),
        })
    }

    /// Appends new frames; they must continue the 10 Hz grid exactly (no
    /// gap, no overlap).
    pub fn accumulate(&mut self, new_samples: &[PairSample]) -> Result<()> {
        for s in new_samples {
            if let Some(last) = self.samples.last() {
                let dt = s.time - last.time;
                if (dt - DT).abs() > FRAME_TOL {
                    return Err(Error::data(format!(
                        "window extension is not contiguous: {} s after {} s",
                        s.time, last.time
                    )));
                }
            }
            self.samples.push(*s);
        }
        Ok(())
    }

    pub fn samples(&self) -> &[PairSample] {
        &self.samples
    }

    /// Observed duration: one frame contributes 0.1 s.
    pub fn t_dur(&self) -> f64 {
        self.samples.len() as f64 * DT
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Baseline parameter sets the benchmark compares against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// Literature-recommended values.
    pub literature: IdmParams,
    /// Single-cluster calibration over the whole offline set.
    pub aggregate: IdmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryMetadata {
    pub seed: u64,
    pub k: usize,
    /// Fingerprint of the offline pair set the library was fitted on.
    pub dataset_hash: String,
    pub tool_version: String,
}

/// Everything the online half needs, fitted offline. This JSON-serialized
/// structure is the sole contract between the two halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleLibrary {
    pub schema: String,
    pub standardizer: Standardizer,
    pub pca: PcaModel,
    pub kmeans: KmeansModel,
    /// Calibrated parameter set per cluster, indexed by cluster.
    pub prototypes: Vec<IdmParams>,
    /// Style name per cluster, indexed by cluster.
    pub styles: Vec<Style>,
    pub baselines: Baselines,
    /// Default likelihood noise, m/s^2.
    pub sigma_default: f64,
    pub metadata: LibraryMetadata,
}

pub const STYLE_LIBRARY_SCHEMA: &str = "drivestyle-style-library-v1";

impl StyleLibrary {
    pub fn validate(&self) -> Result<()> {
        if self.prototypes.len() != self.kmeans.k {
            return Err(Error::config(format!(
                "library has {} prototypes for {} clusters",
                self.prototypes.len(),
                self.kmeans.k
            )));
        }
        if self.styles.len() != self.kmeans.k {
            return Err(Error::config(format!(
                "library has {} style names for {} clusters",
                self.styles.len(),
                self.kmeans.k
            )));
        }
        if !(self.sigma_default > 0.0 && self.sigma_default <= 0.5) {
            return Err(Error::config(format!(
                "sigma_default must lie in (0, 0.5], got {}",
                self.sigma_default
            )));
        }
        for p in self.prototypes.iter().chain([
            &self.baselines.literature,
            &self.baselines.aggregate,
        ]) {
            p.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lib: StyleLibrary = serde_json::from_str(text)
            .map_err(|e| Error::data(format!("style library parse failure: {e}")))?;
        lib.validate()?;
        Ok(lib)
    }

    #[cfg(not(target_arch = "wasm32"))]
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    #[cfg(not(target_arch = "wasm32"))]
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Result of one recognition call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionOutcome {
    pub cluster: usize,
    pub style: Style,
    /// Method-specific score of the chosen cluster: Euclidean distance in
    /// the PCA plane for method 1 (smaller is better), log-likelihood for
    /// method 2 (larger is better).
    pub score: f64,
    /// The chosen cluster's parameter set.
    pub params: IdmParams,
    /// Score of every cluster, indexed by cluster.
    pub per_cluster_scores: Vec<f64>,
}

/// Method 1: window features -> offline standardizer -> offline PCA ->
/// nearest cluster center. Spread statistics over a single frame are 0 by
/// convention, so this stays total down to 0.1 s windows (where it is
/// simply a poor classifier).
pub fn recognize_m1(lib: &StyleLibrary, window: &ObservationWindow) -> Result<RecognitionOutcome> {
    if window.is_empty() {
        return Err(Error::data("cannot recognize from an empty window"));
    }
    let features = compute_features(window.samples())?;
    let z = lib.standardizer.standardize(&features);
    let projected = lib.pca.project(&z);
    let distances: Vec<f64> = lib
        .kmeans
        .centroids
        .iter()
        .map(|c| {
            c.iter()
                .zip(projected.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let cluster = argbest(&distances, false);
    Ok(RecognitionOutcome {
        cluster,
        style: lib.styles[cluster],
        score: distances[cluster],
        params: lib.prototypes[cluster],
        per_cluster_scores: distances,
    })
}

/// Method 2: the prototype maximizing the local acceleration log-likelihood
/// over the window. Works from a single frame. Ties break toward the lower
/// cluster index. The argmax is invariant to `sigma` (it scales all
/// residual sums identically), so `sigma` only matters for reported scores.
pub fn recognize_m2(
    lib: &StyleLibrary,
    window: &ObservationWindow,
    sigma: f64,
) -> Result<RecognitionOutcome> {
    if window.is_empty() {
        return Err(Error::data("cannot recognize from an empty window"));
    }
    let noise = NoiseModel::new(sigma)?;
    let mut scores = Vec::with_capacity(lib.prototypes.len());
    for prototype in &lib.prototypes {
        scores.push(log_likelihood(prototype, &noise, window.samples())?);
    }
    let cluster = argbest(&scores, true);
    Ok(RecognitionOutcome {
        cluster,
        style: lib.styles[cluster],
        score: scores[cluster],
        params: lib.prototypes[cluster],
        per_cluster_scores: scores,
    })
}

/// Index of the best score; ties go to the lowest index.
fn argbest(scores: &[f64], maximize: bool) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        let better = if maximize {
            *s > scores[best]
        } else {
            *s < scores[best]
        };
        if better {
            best = i;
        }
    }
    best
}

/// Predicts follower motion with the recognized parameter set (delegates to
/// the IDM rollout, conditioned on the observed leader track).
pub fn predict_trajectory(
    outcome: &RecognitionOutcome,
    start: FollowerStart,
    leader_positions: &[f64],
    leader_speeds: &[f64],
) -> Result<Rollout> {
    simulate(&outcome.params, start, leader_positions, leader_speeds, DT)
}
