//! Synthetic car-following corpus: planted style prototypes driving noisy
//! followers behind stop-and-go leaders.
//!
//! The generator owns its stepping loop (it never calls the rollout used for
//! prediction), so corpus and windows are an independent oracle for the
//! recognition and calibration paths: the recorded follower acceleration at
//! each frame is the model acceleration at the realized state plus the drawn
//! noise, which makes residuals under the generating parameters exactly the
//! injected noise.

use serde::{Deserialize, Serialize};

use crate::data::{CarFollowingPair, Kinematics, PairSample, TrajectorySample, DT};
use crate::error::{Error, Result};
use crate::idm::{idm_acceleration, presets, CfState, IdmParams};
use crate::recognition::ObservationWindow;
use crate::util::{derive_seed, seed_tags, Rng};

/// Vehicle length written into exported synthetic trajectories, m.
pub const SYNTH_VEHICLE_LENGTH: f64 = 4.5;

/// Gap below which a generated pair is considered degenerate and retried.
const MIN_GENERATED_GAP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_pairs: usize,
    /// Episode length, seconds.
    pub duration_s: f64,
    /// Acceleration noise injected into followers, m/s^2.
    pub noise_sigma: f64,
    /// Planted style parameter sets.
    pub styles: Vec<IdmParams>,
    /// Corpus share of each style (normalized internally).
    pub proportions: Vec<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_pairs: 30,
            duration_s: 30.0,
            noise_sigma: 0.15,
            styles: presets::style_prototypes(),
            proportions: vec![0.4, 0.4, 0.2],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::config("synthetic corpus needs at least one pair"));
        }
        if self.duration_s < 1.0 {
            return Err(Error::config("synthetic episodes must last at least 1 s"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise sigma must be finite and non-negative"));
        }
        if self.styles.is_empty() || self.styles.len() != self.proportions.len() {
            return Err(Error::config(
                "styles and proportions must be non-empty and equally long",
            ));
        }
        if self.proportions.iter().any(|p| *p < 0.0) || self.proportions.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config("style proportions must be non-negative and sum > 0"));
        }
        for s in &self.styles {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub pairs: Vec<CarFollowingPair>,
    /// Planted style index of each pair (ground truth for tests/reports).
    pub planted: Vec<usize>,
}

/// Leader speed profile: periodic stop-and-go driving in congested traffic.
///
/// Each cycle is cruise -> ramp down -> creep -> ramp up, with ramp rates
/// below the followers' maximum acceleration so they track their style's
/// equilibrium gap instead of a style-independent chase transient. The first
/// ramp starts 1-2 s in, which puts a creep phase inside every feature
/// window; creep speeds (~1 m/s) are where minimum-spacing differences
/// between styles actually surface in the gap statistics.
struct LeaderProfile {
    /// Cruise speed, m/s.
    v_cruise: f64,
    /// Creep speed, m/s.
    v_low: f64,
    /// Ramp magnitude, m/s^2.
    rate: f64,
    /// Start of the first ramp-down, s.
    t_first: f64,
    /// Creep-phase duration, s.
    hold_low: f64,
    /// Cruise-phase duration inside a cycle, s.
    hold_high: f64,
}

impl LeaderProfile {
    fn sample(rng: &mut Rng) -> Self {
        LeaderProfile {
            v_cruise: rng.range_f64(2.9, 3.3),
            v_low: rng.range_f64(0.7, 1.0),
            rate: rng.range_f64(0.28, 0.33),
            t_first: rng.range_f64(1.0, 2.0),
            hold_low: rng.range_f64(2.0, 3.0),
            hold_high: rng.range_f64(2.0, 3.5),
        }
    }

    fn ramp_duration(&self) -> f64 {
        (self.v_cruise - self.v_low) / self.rate
    }

    fn period(&self) -> f64 {
        2.0 * self.ramp_duration() + self.hold_low + self.hold_high
    }

    /// (speed, acceleration) at time t.
    fn kinematics(&self, t: f64) -> (f64, f64) {
        if t < self.t_first {
            return (self.v_cruise, 0.0);
        }
        let tau = (t - self.t_first) % self.period();
        let ramp = self.ramp_duration();
        if tau < ramp {
            (self.v_cruise - self.rate * tau, -self.rate)
        } else if tau < ramp + self.hold_low {
            (self.v_low, 0.0)
        } else if tau < 2.0 * ramp + self.hold_low {
            (self.v_low + self.rate * (tau - ramp - self.hold_low), self.rate)
        } else {
            (self.v_cruise, 0.0)
        }
    }

    fn speed(&self, t: f64) -> f64 {
        self.kinematics(t).0
    }

    fn accel(&self, t: f64) -> f64 {
        self.kinematics(t).1
    }

    /// Distance travelled from 0 to t (piecewise-quadratic closed form, so
    /// positions are exactly consistent with speeds at any t).
    fn distance(&self, t: f64) -> f64 {
        if t <= self.t_first {
            return self.v_cruise * t;
        }
        let mut total = self.v_cruise * self.t_first;
        let ramp = self.ramp_duration();
        let per_cycle = {
            let down = self.v_cruise * ramp - 0.5 * self.rate * ramp * ramp;
            let low = self.v_low * self.hold_low;
            let up = self.v_low * ramp + 0.5 * self.rate * ramp * ramp;
            let high = self.v_cruise * self.hold_high;
            down + low + up + high
        };
        let elapsed = t - self.t_first;
        let cycles = (elapsed / self.period()).floor();
        total += cycles * per_cycle;
        let mut tau = elapsed - cycles * self.period();

        let seg = tau.min(ramp);
        total += self.v_cruise * seg - 0.5 * self.rate * seg * seg;
        tau -= seg;
        if tau <= 0.0 {
            return total;
        }
        let seg = tau.min(self.hold_low);
        total += self.v_low * seg;
        tau -= seg;
        if tau <= 0.0 {
            return total;
        }
        let seg = tau.min(ramp);
        total += self.v_low * seg + 0.5 * self.rate * seg * seg;
        tau -= seg;
        if tau <= 0.0 {
            return total;
        }
        total + self.v_cruise * tau
    }
}

/// One noisy episode. Returns frames at 10 Hz; `Err` only if every retry
/// collapses the gap (practically impossible for sane parameters).
fn noisy_episode(
    params: &IdmParams,
    noise_sigma: f64,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<PairSample>> {
    let n = (duration_s / DT).round() as usize;
    for attempt in 0..8u64 {
        let mut rng = Rng::seeded(derive_seed(seed, attempt.wrapping_mul(0x9d5)));
        let profile = LeaderProfile::sample(&mut rng);

        let v0 = profile.speed(0.0);
        let factor = rng.range_f64(0.97, 1.08);
        let gap0 = params
            .equilibrium_gap(v0)
            .unwrap_or((params.d_min + v0 * params.t_headway) * 1.5)
            * factor;

        let leader_x0 = 100.0;
        let mut samples = Vec::with_capacity(n);
        let mut x = leader_x0 - gap0;
        let mut v = v0;
        let mut d = gap0;
        let mut collapsed = false;

        for i in 0..n {
            let t = i as f64 * DT;
            let leader_speed = profile.speed(t);
            let leader_pos = leader_x0 + profile.distance(t);
            let model_accel = idm_acceleration(
                params,
                &CfState {
                    v,
                    v_leader: leader_speed,
                    d,
                },
            );
            let applied = model_accel + if noise_sigma > 0.0 {
                rng.normal(0.0, noise_sigma)
            } else {
                0.0
            };
            samples.push(PairSample {
                time: t,
                follower: Kinematics {
                    position: x,
                    speed: v,
                    accel: applied,
                },
                leader: Kinematics {
                    position: leader_pos,
                    speed: leader_speed,
                    accel: profile.accel(t),
                },
                gap: d,
            });

            let v_next = (v + applied * DT).max(0.0);
            x += (v + v_next) * DT / 2.0;
            v = v_next;
            let next_leader_pos = leader_x0 + profile.distance(t + DT);
            d = next_leader_pos - x;
            if d < MIN_GENERATED_GAP {
                collapsed = true;
                break;
            }
        }
        if !collapsed {
            return Ok(samples);
        }
    }
    Err(Error::numerical(format!(
        "synthetic episode kept collapsing its gap for params {params:?}"
    )))
}

/// Generates the planted-style corpus. Deterministic for a given seed; pair
/// `i` uses an independent sub-seed, so corpora of different sizes share
/// their common prefix.
pub fn generate_corpus(cfg: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    cfg.validate()?;
    let total: f64 = cfg.proportions.iter().sum();
    // Largest-remainder apportionment of pairs to styles.
    let mut counts: Vec<usize> = cfg
        .proportions
        .iter()
        .map(|p| (p / total * cfg.n_pairs as f64).floor() as usize)
        .collect();
    let mut assigned: usize = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = cfg
        .proportions
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p / total * cfg.n_pairs as f64 - counts[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut cursor = 0;
    while assigned < cfg.n_pairs {
        counts[remainders[cursor % remainders.len()].0] += 1;
        assigned += 1;
        cursor += 1;
    }

    let base_seed = derive_seed(seed, seed_tags::SYNTH);
    let mut pairs = Vec::with_capacity(cfg.n_pairs);
    let mut planted = Vec::with_capacity(cfg.n_pairs);
    let mut pair_index: u64 = 0;
    for (style_idx, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let samples = noisy_episode(
                &cfg.styles[style_idx],
                cfg.noise_sigma,
                cfg.duration_s,
                derive_seed(base_seed, pair_index),
            )?;
            pairs.push(CarFollowingPair {
                follower_id: 1000 + 2 * pair_index + 1,
                leader_id: 1000 + 2 * pair_index,
                samples,
            });
            planted.push(style_idx);
            pair_index += 1;
        }
    }
    Ok(SynthCorpus { pairs, planted })
}

/// A noisy observation window of `duration_s` seconds generated by `params`
/// (the Monte-Carlo oracle for recognition experiments). Use prefixes of a
/// longer window to share noise across window lengths.
pub fn generate_window(
    params: &IdmParams,
    noise_sigma: f64,
    duration_s: f64,
    seed: u64,
) -> Result<ObservationWindow> {
    let samples = noisy_episode(params, noise_sigma, duration_s, seed)?;
    ObservationWindow::from_samples(samples)
}

/// Flattens a corpus into raw trajectory samples (leader and follower rows
/// per frame), with the space headway recorded front-to-front so loading it
/// back under the net-gap convention reproduces the pair gaps exactly.
pub fn corpus_to_trajectories(corpus: &SynthCorpus) -> Vec<TrajectorySample> {
    let mut out = Vec::new();
    for (i, pair) in corpus.pairs.iter().enumerate() {
        let lane = (i % 4) as i64 + 1;
        for s in &pair.samples {
            out.push(TrajectorySample {
                vehicle_id: pair.leader_id,
                frame_time: s.time,
                position: s.leader.position,
                speed: s.leader.speed,
                acceleration: s.leader.accel,
                lane_id: lane,
                leader_id: None,
                gap: None,
                length: Some(SYNTH_VEHICLE_LENGTH),
            });
            out.push(TrajectorySample {
                vehicle_id: pair.follower_id,
                frame_time: s.time,
                position: s.follower.position,
                speed: s.follower.speed,
                acceleration: s.follower.accel,
                lane_id: lane,
                leader_id: Some(pair.leader_id),
                gap: Some(s.gap + SYNTH_VEHICLE_LENGTH),
                length: Some(SYNTH_VEHICLE_LENGTH),
            });
        }
    }
    out.sort_by(|a, b| {
        (a.frame_time, a.vehicle_id)
            .partial_cmp(&(b.frame_time, b.vehicle_id))
            .unwrap()
    });
    out
}

/// Serializes trajectory samples as a CSV understood by the default column
/// mapping (SI units; frame counter at 10 Hz).
pub fn trajectories_csv(samples: &[TrajectorySample]) -> String {
    let mut out = String::from(
        "Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc,Lane_ID,Preceding,Space_Headway,v_Length\n",
    );
    for s in samples {
        let frame = (s.frame_time / DT).round() as i64;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.vehicle_id,
            frame,
            s.position,
            s.speed,
            s.acceleration,
            s.lane_id,
            s.leader_id.unwrap_or(0),
            s.gap.unwrap_or(0.0),
            s.length.unwrap_or(SYNTH_VEHICLE_LENGTH),
        ));
    }
    out
}
