//! The demo's three interactive operations as plain JSON-serializable
//! functions, independent of the wasm ABI so they are testable on any
//! target.

use serde::{Deserialize, Serialize};

use drivestyle::benchmark::run_offline;
use drivestyle::config::PipelineConfig;
use drivestyle::data::DT;
use drivestyle::error::{Error, Result};
use drivestyle::features::{extract_features, FEATURE_WINDOW_S};
use drivestyle::idm::{log_likelihood, presets, simulate, FollowerStart, IdmParams, NoiseModel};
use drivestyle::synth::{generate_corpus, generate_window, SynthConfig};

// ---------------------------------------------------------------------------
// 1. Interactive car-following simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
pub struct SimulateRequest {
    pub v_star: f64,
    pub t_headway: f64,
    pub d_min: f64,
    pub a_max: f64,
    pub b_comf: f64,
    /// Initial gap as a multiple of the equilibrium gap (1.0 = equilibrium).
    #[serde(default = "default_gap_factor")]
    pub gap_factor: f64,
    /// Leader scenario: "stop_and_go", "hard_brake" or "cruise".
    #[serde(default = "default_scenario")]
    pub scenario: String,
}

fn default_gap_factor() -> f64 {
    1.0
}

fn default_scenario() -> String {
    "stop_and_go".to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResponse {
    pub t: Vec<f64>,
    pub leader_speed: Vec<f64>,
    pub leader_position: Vec<f64>,
    pub follower_speed: Vec<f64>,
    pub follower_position: Vec<f64>,
    pub follower_accel: Vec<f64>,
    pub gap: Vec<f64>,
    pub collided: bool,
    /// Equilibrium gap at the scenario's starting speed, if one exists.
    pub equilibrium_gap: Option<f64>,
}

fn leader_profile(scenario: &str, t: f64) -> Result<f64> {
    let v = match scenario {
        // Two slow-down/speed-up cycles through congested traffic.
        "stop_and_go" => {
            let cycle = t % 20.0;
            if cycle < 4.0 {
                9.0
            } else if cycle < 7.5 {
                9.0 - 2.0 * (cycle - 4.0)
            } else if cycle < 11.0 {
                2.0
            } else if cycle < 14.5 {
                2.0 + 2.0 * (cycle - 11.0)
            } else {
                9.0
            }
        }
        // One hard stop from highway speed.
        "hard_brake" => {
            if t < 5.0 {
                14.0
            } else if t < 9.4 {
                14.0 - 2.5 * (t - 5.0)
            } else if t < 16.0 {
                3.0
            } else if t < 27.0 {
                3.0 + 1.0 * (t - 16.0)
            } else {
                14.0
            }
        }
        "cruise" => 12.0,
        other => {
            return Err(Error::config(format!(
                "unknown scenario '{other}' (use stop_and_go, hard_brake or cruise)"
            )))
        }
    };
    Ok(v)
}

pub fn simulate_following(req: &SimulateRequest) -> Result<SimulateResponse> {
    let params = IdmParams::new(req.v_star, req.t_headway, req.d_min, req.a_max, req.b_comf)?;
    if !(req.gap_factor > 0.05 && req.gap_factor <= 10.0) {
        return Err(Error::config(format!(
            "gap factor {} out of range (0.05, 10]",
            req.gap_factor
        )));
    }
    let duration = 40.0;
    let steps = (duration / DT).round() as usize;
    let t: Vec<f64> = (0..=steps).map(|i| i as f64 * DT).collect();
    let leader_speed: Vec<f64> = t
        .iter()
        .map(|&ti| leader_profile(&req.scenario, ti))
        .collect::<Result<_>>()?;
    let mut leader_position = Vec::with_capacity(t.len());
    let mut x = 100.0;
    for (i, &v) in leader_speed.iter().enumerate() {
        leader_position.push(x);
        if i < steps {
            // Trapezoid over the speed profile keeps position consistent.
            x += (v + leader_speed[i + 1]) * DT / 2.0;
        }
    }

    let v0 = leader_speed[0];
    let equilibrium_gap = params.equilibrium_gap(v0);
    let gap0 = equilibrium_gap.unwrap_or(params.d_min + v0 * params.t_headway) * req.gap_factor;
    let rollout = simulate(
        &params,
        FollowerStart {
            position: 100.0 - gap0,
            speed: v0,
            gap: gap0,
        },
        &leader_position,
        &leader_speed,
        DT,
    )?;

    Ok(SimulateResponse {
        t,
        leader_speed,
        leader_position,
        follower_speed: rollout.speeds,
        follower_position: rollout.positions,
        follower_accel: rollout.accels,
        gap: rollout.gaps,
        collided: rollout.collided,
        equilibrium_gap,
    })
}

// ---------------------------------------------------------------------------
// 2. Offline style learning on a synthetic corpus
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
pub struct LearnRequest {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_n_pairs")]
    pub n_pairs: usize,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
}

fn default_seed() -> u64 {
    42
}

fn default_n_pairs() -> usize {
    30
}

fn default_noise() -> f64 {
    0.15
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterPoint {
    pub pc1: f64,
    pub pc2: f64,
    /// Fitted cluster index.
    pub cluster: usize,
    /// Ground-truth planted style index.
    pub planted: usize,
    /// True of pairs in the offline split (the demo projects online pairs
    /// too, marked false, to show the held-out side).
    pub offline: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub style: String,
    pub size: usize,
    pub proportion: f64,
    pub params: IdmParams,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnResponse {
    pub scatter: Vec<ScatterPoint>,
    pub centroids: Vec<Vec<f64>>,
    pub elbow: Vec<(usize, f64)>,
    pub elbow_suggestion: Option<usize>,
    pub explained_variance_ratio: Vec<f64>,
    pub accumulated_kept: f64,
    pub clusters: Vec<ClusterSummary>,
    pub aggregate_params: IdmParams,
}

pub fn learn_styles_demo(req: &LearnRequest) -> Result<LearnResponse> {
    if !(12..=120).contains(&req.n_pairs) {
        return Err(Error::config(format!(
            "n_pairs {} out of range [12, 120]",
            req.n_pairs
        )));
    }
    if !(0.0..=0.4).contains(&req.noise_sigma) {
        return Err(Error::config(format!(
            "noise sigma {} out of range [0, 0.4]",
            req.noise_sigma
        )));
    }
    let corpus = generate_corpus(
        &SynthConfig {
            n_pairs: req.n_pairs,
            duration_s: 30.0,
            noise_sigma: req.noise_sigma,
            ..SynthConfig::default()
        },
        req.seed,
    )?;
    // Browser-friendly budgets; the CLI uses the full defaults.
    let cfg = PipelineConfig {
        seed: req.seed,
        workers: 1,
        calibration_budget: 1200,
        calibration_starts: 8,
        kmeans_restarts: 10,
        elbow_k_max: 8,
        // An interactive playground cannot stop to ask for a manual label
        // override, so tied labels resolve deterministically instead.
        label_tie_break: drivestyle::calibration::LabelTieBreak::LowestIndex,
        ..PipelineConfig::default()
    };
    let (lib, report, split) = run_offline(corpus.pairs.clone(), &cfg)?;

    let planted: std::collections::BTreeMap<u64, usize> = corpus
        .pairs
        .iter()
        .zip(corpus.planted.iter())
        .map(|(p, &s)| (p.follower_id, s))
        .collect();

    let mut scatter = Vec::new();
    let mut offline_idx = 0usize;
    for (pairs, offline) in [(&split.offline_pairs, true), (&split.online_pairs, false)] {
        for pair in pairs.iter() {
            if pair.duration() + 1e-9 < cfg.feature_window_s {
                continue;
            }
            let f = extract_features(pair, FEATURE_WINDOW_S)?;
            let projected = lib.pca.project(&lib.standardizer.standardize(&f));
            let cluster = if offline {
                let label = lib.kmeans.labels[offline_idx];
                offline_idx += 1;
                label
            } else {
                lib.kmeans.assign(&projected)
            };
            scatter.push(ScatterPoint {
                pc1: projected[0],
                pc2: projected[1],
                cluster,
                planted: planted[&pair.follower_id],
                offline,
            });
        }
    }

    Ok(LearnResponse {
        scatter,
        centroids: lib.kmeans.centroids.clone(),
        elbow: report.elbow.clone(),
        elbow_suggestion: report.elbow_suggestion,
        explained_variance_ratio: report.explained_variance_ratio.clone(),
        accumulated_kept: report.accumulated_kept,
        clusters: report
            .clusters
            .iter()
            .map(|c| ClusterSummary {
                cluster: c.cluster,
                style: c.style.to_string(),
                size: c.size,
                proportion: c.proportion,
                params: c.params,
                mean_rmse: c.objective_value,
            })
            .collect(),
        aggregate_params: report.aggregate.params,
    })
}

// ---------------------------------------------------------------------------
// 3. Online recognition and prediction on a noisy window
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
pub struct RecognizeRequest {
    /// Which prototype drives the observed vehicle (0 neutral,
    /// 1 relatively aggressive, 2 timid).
    pub style: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Acceleration noise injected into the generated window, m/s^2.
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    /// Likelihood noise std used by the recognizer, m/s^2.
    #[serde(default = "default_noise")]
    pub sigma: f64,
    /// Observation length after which the 5 s prediction is made, s.
    #[serde(default = "default_t_dur")]
    pub t_dur: f64,
}

fn default_t_dur() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize)]
pub struct RecognizeResponse {
    pub style_names: Vec<String>,
    /// Window time axis (one entry per frame).
    pub t: Vec<f64>,
    /// Observed follower speed and gap over the window.
    pub follower_speed: Vec<f64>,
    pub gap: Vec<f64>,
    /// Cumulative log-likelihood of each prototype after each frame.
    pub log_likelihood: Vec<Vec<f64>>,
    /// Chosen prototype after each frame.
    pub chosen: Vec<usize>,
    /// Prediction made at `t_dur`: time axis, observed positions, and one
    /// predicted trajectory per prototype (positions relative to the
    /// follower's position at `t_dur`).
    pub prediction_t: Vec<f64>,
    pub actual_positions: Vec<f64>,
    pub predicted_positions: Vec<Vec<f64>>,
    pub prediction_rmse: Vec<f64>,
    /// Prototype recognized at `t_dur`.
    pub recognized: usize,
    pub planted: usize,
}

pub fn recognize_demo(req: &RecognizeRequest) -> Result<RecognizeResponse> {
    let prototypes = presets::style_prototypes();
    if req.style >= prototypes.len() {
        return Err(Error::config(format!(
            "style index {} out of range (have {})",
            req.style,
            prototypes.len()
        )));
    }
    if !(0.0..=0.4).contains(&req.noise_sigma) {
        return Err(Error::config("noise sigma out of range [0, 0.4]".to_string()));
    }
    if !(req.t_dur >= 0.1 && req.t_dur <= 5.0) {
        return Err(Error::config("t_dur out of range [0.1, 5]".to_string()));
    }
    let noise = NoiseModel::new(req.sigma)?;

    // The observed vehicle: a noisy window long enough for the observation
    // plus the 5 s prediction horizon.
    let horizon = 5.0;
    let total = req.t_dur + horizon;
    let window = generate_window(&prototypes[req.style], req.noise_sigma, total, req.seed)?;
    let samples = window.samples();
    let n_obs = (req.t_dur / DT).round() as usize;

    // Cumulative per-prototype log-likelihoods, frame by frame.
    let mut log_lik = vec![Vec::with_capacity(n_obs); prototypes.len()];
    let mut chosen = Vec::with_capacity(n_obs);
    for frame in 1..=n_obs {
        let mut best = 0usize;
        for (k, proto) in prototypes.iter().enumerate() {
            let l = log_likelihood(proto, &noise, &samples[..frame])?;
            log_lik[k].push(l);
            if l > log_lik[best][frame - 1] {
                best = k;
            }
        }
        chosen.push(best);
    }
    let recognized = *chosen.last().expect("n_obs >= 1");

    // 5 s prediction with every prototype from the state at t_dur.
    let horizon_samples = &samples[n_obs..];
    let leader_positions: Vec<f64> = horizon_samples.iter().map(|s| s.leader.position).collect();
    let leader_speeds: Vec<f64> = horizon_samples.iter().map(|s| s.leader.speed).collect();
    let start = FollowerStart {
        position: horizon_samples[0].follower.position,
        speed: horizon_samples[0].follower.speed,
        gap: horizon_samples[0].gap,
    };
    let origin = start.position;
    let actual_positions: Vec<f64> = horizon_samples
        .iter()
        .map(|s| s.follower.position - origin)
        .collect();
    let mut predicted_positions = Vec::with_capacity(prototypes.len());
    let mut prediction_rmse = Vec::with_capacity(prototypes.len());
    for proto in &prototypes {
        let rollout = simulate(proto, start, &leader_positions, &leader_speeds, DT)?;
        // RMSE over the five whole-second instants, as everywhere else.
        let per_second = (1.0 / DT).round() as usize;
        let sq: f64 = (1..=5)
            .map(|k| {
                let idx = (k * per_second).min(rollout.positions.len() - 1);
                (rollout.positions[idx] - horizon_samples[idx].follower.position).powi(2)
            })
            .sum();
        prediction_rmse.push((sq / 5.0).sqrt());
        predicted_positions.push(rollout.positions.iter().map(|x| x - origin).collect());
    }

    Ok(RecognizeResponse {
        style_names: prototypes
            .iter()
            .enumerate()
            .map(|(i, _)| match i {
                0 => "neutral".to_string(),
                1 => "relatively aggressive".to_string(),
                _ => "timid".to_string(),
            })
            .collect(),
        t: samples[..n_obs].iter().map(|s| s.time).collect(),
        follower_speed: samples[..n_obs].iter().map(|s| s.follower.speed).collect(),
        gap: samples[..n_obs].iter().map(|s| s.gap).collect(),
        log_likelihood: log_lik,
        chosen,
        prediction_t: horizon_samples.iter().map(|s| s.time).collect(),
        actual_positions,
        predicted_positions,
        prediction_rmse,
        recognized,
        planted: req.style,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_scenarios_run_clean() {
        for scenario in ["stop_and_go", "hard_brake", "cruise"] {
            let req = SimulateRequest {
                v_star: 34.7,
                t_headway: 1.0,
                d_min: 2.9,
                a_max: 0.5,
                b_comf: 1.5,
                gap_factor: 1.0,
                scenario: scenario.to_string(),
            };
            let resp = simulate_following(&req).unwrap();
            assert_eq!(resp.t.len(), resp.gap.len());
            assert_eq!(resp.t.len(), 401);
            assert!(resp.gap.iter().all(|g| g.is_finite()));
            assert!(resp.follower_speed.iter().all(|v| *v >= 0.0));
        }
        let bad = SimulateRequest {
            v_star: 34.7,
            t_headway: 1.0,
            d_min: 2.9,
            a_max: 0.5,
            b_comf: 1.5,
            gap_factor: 1.0,
            scenario: "warp".to_string(),
        };
        assert!(simulate_following(&bad).is_err());
    }

    #[test]
    fn cruise_at_equilibrium_stays_flat() {
        let req = SimulateRequest {
            v_star: 18.5,
            t_headway: 1.9,
            d_min: 4.5,
            a_max: 0.4,
            b_comf: 1.4,
            gap_factor: 1.0,
            scenario: "cruise".to_string(),
        };
        let resp = simulate_following(&req).unwrap();
        let eq = resp.equilibrium_gap.unwrap();
        for g in &resp.gap {
            assert!((g - eq).abs() < 1e-6);
        }
    }

    #[test]
    fn learn_demo_produces_consistent_shapes() {
        let resp = learn_styles_demo(&LearnRequest {
            seed: 7,
            n_pairs: 24,
            noise_sigma: 0.12,
        })
        .unwrap();
        assert_eq!(resp.clusters.len(), 3);
        assert_eq!(resp.centroids.len(), 3);
        assert_eq!(resp.scatter.len(), 24);
        assert!(resp.scatter.iter().all(|p| p.cluster < 3 && p.planted < 3));
        assert!(!resp.elbow.is_empty());
        let share: f64 = resp.clusters.iter().map(|c| c.proportion).sum();
        assert!((share - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recognize_demo_identifies_the_planted_style() {
        for style in 0..3 {
            let resp = recognize_demo(&RecognizeRequest {
                style,
                seed: 11,
                noise_sigma: 0.15,
                sigma: 0.15,
                t_dur: 2.0,
            })
            .unwrap();
            assert_eq!(resp.recognized, style, "style {style} misrecognized");
            assert_eq!(resp.log_likelihood.len(), 3);
            assert_eq!(resp.log_likelihood[0].len(), 20);
            assert_eq!(resp.chosen.len(), 20);
            // The planted prototype's prediction is at least as good as the
            // worst alternative.
            let own = resp.prediction_rmse[style];
            let worst = resp
                .prediction_rmse
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(own <= worst + 1e-12);
        }
    }

    #[test]
    fn requests_validate() {
        assert!(learn_styles_demo(&LearnRequest {
            seed: 1,
            n_pairs: 3,
            noise_sigma: 0.1
        })
        .is_err());
        assert!(recognize_demo(&RecognizeRequest {
            style: 9,
            seed: 1,
            noise_sigma: 0.1,
            sigma: 0.15,
            t_dur: 2.0
        })
        .is_err());
    }
}
