//! The Intelligent Driver Model: acceleration law, forward simulation against
//! an observed leader, horizon-RMSE scoring, and the per-point Gaussian
//! log-likelihood used for fast style recognition.
//!
//! Two distinct evaluation modes coexist and must never be mixed:
//!
//! * "global": [`simulate`] rolls the follower forward and [`rmse_5s`]
//!   compares predicted positions against observed ones; used for
//!   calibration objectives and benchmark scoring;
//! * "local": [`log_likelihood`] evaluates the model acceleration at each
//!   *observed* state independently, with no rollout; used for online
//!   recognition, where it needs as little as a single frame.

use serde::{Deserialize, Serialize};

use crate::data::{CarFollowingPair, PairSample, DT};
use crate::error::{Error, Result};

/// Prediction horizon used by calibration and the benchmark, seconds.
pub const PREDICTION_HORIZON_S: f64 = 5.0;

/// Gap floor applied when a simulated follower reaches its leader, m.
pub const COLLISION_GAP_FLOOR: f64 = 0.01;

/// IDM parameter set. The free-drive exponent is fixed at 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Desired velocity, m/s.
    pub v_star: f64,
    /// Desired time headway, s.
    pub t_headway: f64,
    /// Minimum spacing, m.
    pub d_min: f64,
    /// Maximum acceleration, m/s^2.
    pub a_max: f64,
    /// Comfortable braking deceleration, m/s^2.
    pub b_comf: f64,
    /// Free-drive exponent.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    4.0
}

impl IdmParams {
    pub fn new(v_star: f64, t_headway: f64, d_min: f64, a_max: f64, b_comf: f64) -> Result<Self> {
        let p = IdmParams {
            v_star,
            t_headway,
            d_min,
            a_max,
            b_comf,
            delta: default_delta(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_star", self.v_star),
            ("t_headway", self.t_headway),
            ("d_min", self.d_min),
            ("a_max", self.a_max),
            ("b_comf", self.b_comf),
            ("delta", self.delta),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::config(format!(
                    "IDM parameter {name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// The five calibrated parameters as an array (optimizer coordinates).
    pub fn as_array(&self) -> [f64; 5] {
        [self.v_star, self.t_headway, self.d_min, self.a_max, self.b_comf]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        IdmParams {
            v_star: a[0],
            t_headway: a[1],
            d_min: a[2],
            a_max: a[3],
            b_comf: a[4],
            delta: default_delta(),
        }
    }

    /// Gap at which the model holds speed `v` exactly when following a
    /// leader at the same speed: `(d_min + v T) / sqrt(1 - (v/v*)^delta)`.
    /// None when `v >= v_star` (no following equilibrium exists).
    pub fn equilibrium_gap(&self, v: f64) -> Option<f64> {
        if v < 0.0 || v >= self.v_star {
            return None;
        }
        let deficit = 1.0 - (v / self.v_star).powf(self.delta);
        Some((self.d_min + v * self.t_headway) / deficit.sqrt())
    }
}

/// Named parameter sets used as baselines and demo prototypes.
pub mod presets {
    use super::IdmParams;

    fn params(v: f64, t: f64, d: f64, a: f64, b: f64) -> IdmParams {
        IdmParams {
            v_star: v,
            t_headway: t,
            d_min: d,
            a_max: a,
            b_comf: b,
            delta: 4.0,
        }
    }

    /// Values commonly recommended in the car-following literature.
    pub fn literature() -> IdmParams {
        params(33.3, 2.0, 1.6, 0.73, 1.67)
    }

    /// Single-cluster calibration baseline from highway car-following data
    /// (no style separation).
    pub fn aggregate() -> IdmParams {
        params(19.0, 1.0, 0.3, 0.4, 1.4)
    }

    /// Neutral style prototype.
    pub fn neutral() -> IdmParams {
        params(34.7, 1.0, 2.9, 0.5, 1.5)
    }

    /// Relatively aggressive style prototype (small minimum spacing).
    pub fn relatively_aggressive() -> IdmParams {
        params(35.0, 1.0, 0.1, 0.4, 1.5)
    }

    /// Timid style prototype (low desired speed, long headway, wide spacing).
    pub fn timid() -> IdmParams {
        params(18.5, 1.9, 4.5, 0.4, 1.4)
    }

    /// The three style prototypes, indexed consistently everywhere.
    pub fn style_prototypes() -> Vec<IdmParams> {
        vec![neutral(), relatively_aggressive(), timid()]
    }
}

/// Instantaneous car-following state of a follower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfState {
    /// Follower speed, m/s (non-negative).
    pub v: f64,
    /// Leader speed, m/s.
    pub v_leader: f64,
    /// Net gap, m (positive).
    pub d: f64,
}

/// The IDM acceleration law.
///
/// `a = a_max [1 - (v/v*)^delta - (d*/d)^2]` with the desired gap
/// `d* = d_min + v T - v (v_L - v) / (2 sqrt(a_max b_comf))`, floored at
/// `d_min` (a fast-opening gap can otherwise drive `d*` negative and make the
/// interaction term spuriously positive).
pub fn idm_acceleration(p: &IdmParams, s: &CfState) -> f64 {
    let interaction = s.v * (s.v_leader - s.v) / (2.0 * (p.a_max * p.b_comf).sqrt());
    let desired_gap = (p.d_min + s.v * p.t_headway - interaction).max(p.d_min);
    let free = (s.v / p.v_star).powf(p.delta);
    let ratio = desired_gap / s.d;
    p.a_max * (1.0 - free - ratio * ratio)
}

/// Initial follower state for a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowerStart {
    pub position: f64,
    pub speed: f64,
    /// Net gap to the leader at the first frame, m.
    pub gap: f64,
}

/// A simulated follower trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub dt: f64,
    pub positions: Vec<f64>,
    pub speeds: Vec<f64>,
    /// Model acceleration evaluated at each state (the value applied over
    /// the following step; the last entry is diagnostic only).
    pub accels: Vec<f64>,
    pub gaps: Vec<f64>,
    /// True when the gap hit the collision floor at any step.
    pub collided: bool,
}

/// Rolls the follower forward against an observed leader track.
///
/// `leader_positions`/`leader_speeds` are sampled at `dt` and define the
/// horizon: a track of n+1 entries produces n steps. The update is ballistic
/// (exact for piecewise-constant acceleration) with the speed floored at 0:
/// `v' = max(0, v + a dt)`, `x' = x + (v + v') dt / 2`. The gap is recomputed
/// from the observed leader position each step, preserving the offset implied
/// by the initial gap; a non-positive gap is floored at
/// [`COLLISION_GAP_FLOOR`] and flagged.
pub fn simulate(
    p: &IdmParams,
    start: FollowerStart,
    leader_positions: &[f64],
    leader_speeds: &[f64],
    dt: f64,
) -> Result<Rollout> {
    if leader_positions.is_empty() || leader_positions.len() != leader_speeds.len() {
        return Err(Error::data(format!(
            "leader track malformed: {} positions vs {} speeds",
            leader_positions.len(),
            leader_speeds.len()
        )));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::config(format!("dt must be positive, got {dt}")));
    }
    if start.gap.is_nan() || start.gap <= 0.0 {
        return Err(Error::data(format!(
            "initial gap must be positive, got {}",
            start.gap
        )));
    }
    let steps = leader_positions.len() - 1;
    // Leader-position-to-gap offset fixed by the initial frame; this absorbs
    // whatever bumper/length convention the data uses.
    let offset = leader_positions[0] - start.position - start.gap;

    let mut positions = Vec::with_capacity(steps + 1);
    let mut speeds = Vec::with_capacity(steps + 1);
    let mut accels = Vec::with_capacity(steps + 1);
    let mut gaps = Vec::with_capacity(steps + 1);
    let mut collided = false;

    let mut x = start.position;
    let mut v = start.speed.max(0.0);
    let mut d = start.gap;

    for i in 0..=steps {
        let a = idm_acceleration(
            p,
            &CfState {
                v,
                v_leader: leader_speeds[i],
                d,
            },
        );
        positions.push(x);
        speeds.push(v);
        accels.push(a);
        gaps.push(d);
        if i == steps {
            break;
        }
        let v_next = (v + a * dt).max(0.0);
        x += (v + v_next) * dt / 2.0;
        v = v_next;
        d = leader_positions[i + 1] - x - offset;
        if d <= 0.0 {
            d = COLLISION_GAP_FLOOR;
            collided = true;
        }
    }

    Ok(Rollout {
        dt,
        positions,
        speeds,
        accels,
        gaps,
        collided,
    })
}

/// Which instants the horizon RMSE compares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonInstants {
    /// The five whole-second instants after the prediction start.
    #[default]
    WholeSeconds,
    /// All 50 frames of the 5 s horizon (sensitivity variant).
    AllFrames,
}

/// A scored 5 s prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    /// Predicted follower positions at 1..5 s after the start, m.
    pub predicted_positions: Vec<f64>,
    /// Root-mean-square position error over the comparison instants, m.
    pub rmse: f64,
    pub collided: bool,
}

/// Predicts 5 s of follower motion starting `start_s` seconds into the pair
/// and scores it against the observed trajectory:
/// `S = sqrt(sum_t (predicted_t - observed_t)^2 / 5)` over the five
/// whole-second instants.
pub fn rmse_5s(p: &IdmParams, pair: &CarFollowingPair, start_s: f64) -> Result<PredictionResult> {
    rmse_5s_with(p, pair, start_s, ComparisonInstants::WholeSeconds)
}

pub fn rmse_5s_with(
    p: &IdmParams,
    pair: &CarFollowingPair,
    start_s: f64,
    instants: ComparisonInstants,
) -> Result<PredictionResult> {
    let start_idx = (start_s / DT).round() as i64;
    if start_idx < 0 {
        return Err(Error::data(format!("negative prediction start {start_s} s")));
    }
    let start_idx = start_idx as usize;
    let horizon_steps = (PREDICTION_HORIZON_S / DT).round() as usize;
    let end_idx = start_idx + horizon_steps;
    if end_idx >= pair.samples.len() {
        return Err(Error::data(format!(
            "pair has {} frames; prediction needs frames {start_idx}..={end_idx}",
            pair.samples.len()
        )));
    }

    let window = &pair.samples[start_idx..=end_idx];
    let leader_positions: Vec<f64> = window.iter().map(|s| s.leader.position).collect();
    let leader_speeds: Vec<f64> = window.iter().map(|s| s.leader.speed).collect();
    let start = FollowerStart {
        position: window[0].follower.position,
        speed: window[0].follower.speed,
        gap: window[0].gap,
    };
    let rollout = simulate(p, start, &leader_positions, &leader_speeds, DT)?;

    let per_second = (1.0 / DT).round() as usize;
    let predicted_positions: Vec<f64> = (1..=5).map(|k| rollout.positions[k * per_second]).collect();

    let indices: Vec<usize> = match instants {
        ComparisonInstants::WholeSeconds => (1..=5).map(|k| k * per_second).collect(),
        ComparisonInstants::AllFrames => (1..=horizon_steps).collect(),
    };
    let mut sq_sum = 0.0;
    for &i in &indices {
        let err = rollout.positions[i] - window[i].follower.position;
        sq_sum += err * err;
    }
    let rmse = (sq_sum / indices.len() as f64).sqrt();

    Ok(PredictionResult {
        predicted_positions,
        rmse,
        collided: rollout.collided,
    })
}

/// Acceleration noise model for the likelihood: residuals are assumed
/// iid normal with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::config(format!(
                "noise sigma must be strictly positive, got {sigma}"
            )));
        }
        Ok(NoiseModel { sigma })
    }
}

/// Log-likelihood of observed accelerations under the model, evaluated
/// locally: at each frame the model acceleration uses the *observed* state
/// (v, v_L, d) at that frame, with no rollout.
///
/// `L = sum_i [ -(a_real(t_i) - a_model(t_i))^2 / (2 sigma^2)
///              - ln(sqrt(2 pi) sigma) ]`
pub fn log_likelihood(p: &IdmParams, noise: &NoiseModel, samples: &[PairSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::data("log-likelihood needs at least one frame"));
    }
    if noise.sigma.is_nan() || noise.sigma <= 0.0 {
        return Err(Error::config(format!(
            "noise sigma must be strictly positive, got {}",
            noise.sigma
        )));
    }
    let norm = (2.0 * std::f64::consts::PI).sqrt() * noise.sigma;
    let ln_norm = norm.ln();
    let inv_two_var = 1.0 / (2.0 * noise.sigma * noise.sigma);
    let mut total = 0.0;
    for s in samples {
        let predicted = idm_acceleration(
            p,
            &CfState {
                v: s.follower.speed,
                v_leader: s.leader.speed,
                d: s.gap,
            },
        );
        let residual = s.follower.accel - predicted;
        total += -residual * residual * inv_two_var - ln_norm;
    }
    Ok(total)
}
