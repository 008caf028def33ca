//! Trajectory samples, car-following pairs, and the offline/online split.
//!
//! A car-following pair is a maximal leader-follower episode in which the
//! follower's recorded preceding vehicle stays the same, neither vehicle
//! changes lane, frames are contiguous at 10 Hz, and the episode lasts at
//! least the configured minimum duration.

mod ingest;

pub use ingest::{
    load_trajectories, load_trajectories_path, ColumnMap, ColumnRef, Delimiter, GapConvention,
    IngestConfig, LoadReport, RecordError, Units, FEET_TO_METERS,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{derive_seed, seed_tags, ContentHash, Rng};

/// Native sampling interval of the trajectory data, seconds.
pub const DT: f64 = 0.1;

/// Tolerance when deciding whether two frames are adjacent on the 10 Hz grid.
pub const FRAME_TOL: f64 = 1e-6;

/// Default minimum car-following episode duration, seconds.
pub const MIN_PAIR_DURATION_S: f64 = 15.0;

/// Position, speed and acceleration of one vehicle at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    /// Longitudinal position along the lane, m.
    pub position: f64,
    /// Speed, m/s.
    pub speed: f64,
    /// Acceleration, m/s^2.
    pub accel: f64,
}

/// One 10 Hz observation of a vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub vehicle_id: u64,
    /// Time on the 10 Hz grid, seconds.
    pub frame_time: f64,
    /// Longitudinal position along the lane, m.
    pub position: f64,
    /// Speed, m/s (never negative).
    pub speed: f64,
    /// Acceleration, m/s^2.
    pub acceleration: f64,
    pub lane_id: i64,
    /// Recorded preceding vehicle, if any.
    pub leader_id: Option<u64>,
    /// Net bumper-to-bumper gap to the leader, m; present iff a leader is.
    pub gap: Option<f64>,
    /// Vehicle length, m, when the source provides it.
    pub length: Option<f64>,
}

/// One frame of a leader-follower episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    /// Absolute frame time, seconds.
    pub time: f64,
    pub follower: Kinematics,
    pub leader: Kinematics,
    /// Net gap between follower front and leader rear, m.
    pub gap: f64,
}

/// A leader-follower episode satisfying the extraction rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarFollowingPair {
    pub follower_id: u64,
    pub leader_id: u64,
    /// Frames ordered by time, contiguous at 10 Hz.
    pub samples: Vec<PairSample>,
}

impl CarFollowingPair {
    /// Episode duration: time from first to last frame, seconds.
    pub fn duration(&self) -> f64 {
        if self.samples.len() < 2 {
            return 0.0;
        }
        (self.samples.len() - 1) as f64 * DT
    }

    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.time)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Content fingerprint of a set of pairs; identifies the dataset a
    /// style library was fitted on.
    pub fn hash_pairs(pairs: &[CarFollowingPair]) -> String {
        let mut h = ContentHash::new();
        h.write_u64(pairs.len() as u64);
        for pair in pairs {
            h.write_u64(pair.follower_id);
            h.write_u64(pair.leader_id);
            h.write_u64(pair.samples.len() as u64);
            for s in &pair.samples {
                h.write_f64(s.time);
                h.write_f64(s.follower.position);
                h.write_f64(s.follower.speed);
                h.write_f64(s.follower.accel);
                h.write_f64(s.leader.position);
                h.write_f64(s.leader.speed);
                h.write_f64(s.leader.accel);
                h.write_f64(s.gap);
            }
        }
        h.finish_hex()
    }
}

/// Disjoint, exhaustive partition of pairs into offline and online sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub offline_pairs: Vec<CarFollowingPair>,
    pub online_pairs: Vec<CarFollowingPair>,
    pub seed: u64,
}

/// Extracts maximal car-following episodes from time-sorted samples.
///
/// "No interference from other vehicles" is operationalized as: the
/// follower's recorded preceding-vehicle id equals the leader's id at every
/// frame. An episode breaks whenever the leader changes, either vehicle
/// changes lane, the frame grid has a hole, the gap is missing or
/// non-positive, or the leader is not observed at that frame.
pub fn extract_pairs(
    samples: &[TrajectorySample],
    min_duration: f64,
    convention: GapConvention,
) -> Vec<CarFollowingPair> {
    // Index samples per vehicle and per frame for leader lookup.
    let mut by_vehicle: BTreeMap<u64, Vec<&TrajectorySample>> = BTreeMap::new();
    for s in samples {
        by_vehicle.entry(s.vehicle_id).or_default().push(s);
    }
    for list in by_vehicle.values_mut() {
        list.sort_by(|a, b| a.frame_time.total_cmp(&b.frame_time));
    }
    let frame_no = |t: f64| -> i64 { (t / DT).round() as i64 };
    let mut frame_index: BTreeMap<(u64, i64), &TrajectorySample> = BTreeMap::new();
    for s in samples {
        frame_index.insert((s.vehicle_id, frame_no(s.frame_time)), s);
    }

    let min_len = (min_duration / DT).round() as usize + 1;
    let mut pairs = Vec::new();

    for (&follower_id, follower_samples) in &by_vehicle {
        let mut run: Vec<PairSample> = Vec::new();
        let mut run_leader: Option<u64> = None;
        let mut run_lane: i64 = 0;
        let mut last_frame: i64 = 0;

        let mut flush = |run: &mut Vec<PairSample>, leader: &mut Option<u64>| {
            if let Some(l) = *leader {
                if run.len() >= min_len {
                    pairs.push(CarFollowingPair {
                        follower_id,
                        leader_id: l,
                        samples: std::mem::take(run),
                    });
                }
            }
            run.clear();
            *leader = None;
        };

        for f in follower_samples {
            let frame = frame_no(f.frame_time);
            let leader_id = match f.leader_id {
                Some(l) => l,
                None => {
                    flush(&mut run, &mut run_leader);
                    continue;
                }
            };
            let leader = match frame_index.get(&(leader_id, frame)) {
                Some(l) => *l,
                None => {
                    flush(&mut run, &mut run_leader);
                    continue;
                }
            };
            let gap = match net_gap(f, leader, convention) {
                Some(g) if g > 0.0 => g,
                _ => {
                    flush(&mut run, &mut run_leader);
                    continue;
                }
            };
            let ordered = f.position < leader.position;
            let same_lane = f.lane_id == leader.lane_id;

            let continues = run_leader == Some(leader_id)
                && f.lane_id == run_lane
                && frame == last_frame + 1
                && same_lane
                && ordered;
            let starts = run_leader.is_none() && same_lane && ordered;

            if continues || starts {
                if starts {
                    run_leader = Some(leader_id);
                    run_lane = f.lane_id;
                }
            } else {
                flush(&mut run, &mut run_leader);
                if same_lane && ordered {
                    run_leader = Some(leader_id);
                    run_lane = f.lane_id;
                } else {
                    continue;
                }
            }
            last_frame = frame;
            run.push(PairSample {
                time: f.frame_time,
                follower: Kinematics {
                    position: f.position,
                    speed: f.speed,
                    accel: f.acceleration,
                },
                leader: Kinematics {
                    position: leader.position,
                    speed: leader.speed,
                    accel: leader.acceleration,
                },
                gap,
            });
        }
        flush(&mut run, &mut run_leader);
    }

    // Deterministic order: by follower, then episode start.
    pairs.sort_by(|a, b| {
        (a.follower_id, a.start_time())
            .partial_cmp(&(b.follower_id, b.start_time()))
            .unwrap()
    });
    pairs
}

/// Net gap under the configured convention: the recorded space headway minus
/// the leader's length when both are available, otherwise the headway as-is.
fn net_gap(
    follower: &TrajectorySample,
    leader: &TrajectorySample,
    convention: GapConvention,
) -> Option<f64> {
    let headway = follower.gap?;
    match convention {
        GapConvention::NetOfLeaderLength => match leader.length {
            Some(len) => Some(headway - len),
            None => Some(headway),
        },
        GapConvention::HeadwayAsIs => Some(headway),
    }
}

/// Deterministic random split of pairs into offline and online sets.
///
/// The offline set receives `floor(fraction * n)` pairs; the online set the
/// remainder. The split is by pair, not by vehicle.
pub fn split_dataset(
    pairs: Vec<CarFollowingPair>,
    fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if pairs.len() < 2 {
        return Err(Error::data(format!(
            "cannot split {} pair(s); need at least 2",
            pairs.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let n_offline = (fraction * pairs.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = Rng::seeded(derive_seed(seed, seed_tags::SPLIT));
    rng.shuffle(&mut order);

    let chosen: std::collections::BTreeSet<usize> =
        order[..n_offline].iter().copied().collect();
    let mut offline = Vec::with_capacity(n_offline);
    let mut online = Vec::with_capacity(pairs.len() - n_offline);
    for (i, pair) in pairs.into_iter().enumerate() {
        if chosen.contains(&i) {
            offline.push(pair);
        } else {
            online.push(pair);
        }
    }
    Ok(DatasetSplit {
        offline_pairs: offline,
        online_pairs: online,
        seed,
    })
}
