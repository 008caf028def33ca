//! Driving-style learning and fast online recognition for car-following
//! trajectory prediction.
//!
//! The offline half ingests 10 Hz trajectory data, extracts leader-follower
//! episodes, summarizes each as 13 style indicators, reduces them with PCA,
//! clusters the projections with k-means, and calibrates an Intelligent
//! Driver Model parameter set per cluster. The result is a [`recognition::StyleLibrary`].
//!
//! The online half recognizes the style of a newly observed vehicle from a
//! short window, either by nearest cluster center in the PCA plane or by
//! the per-frame acceleration log-likelihood of each prototype parameter
//! set. The recognized parameters then predict the next 5 s of motion.
//!
//! [`benchmark`] drives the full pipeline and reproduces the RMSE-vs-window
//! and RMSE-vs-sigma comparison curves; [`synth`] generates a self-contained
//! synthetic corpus so everything runs without the real dataset.

pub mod benchmark;
pub mod calibration;
pub mod config;
pub mod data;
pub mod error;
pub mod features;
pub mod idm;
pub mod kmeans;
pub mod optim;
pub mod parallel;
pub mod pca;
pub mod recognition;
pub mod synth;
pub mod util;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testkit {
    //! Shared fixtures for unit tests across modules.

    use crate::data::{CarFollowingPair, Kinematics, PairSample, DT};
    use crate::idm::{simulate, FollowerStart, IdmParams};

    /// A pair generated by the model itself: leader varies speed smoothly,
    /// follower obeys `params` exactly under the crate's integrator. `phase`
    /// varies the leader profile so multi-pair corpora are not identical.
    pub fn model_generated_pair(params: &IdmParams, duration_s: f64, phase: f64) -> CarFollowingPair {
        let n = (duration_s / DT).round() as usize + 1;
        let mut leader_positions = Vec::with_capacity(n);
        let mut leader_speeds = Vec::with_capacity(n);
        let mut lx = 200.0;
        for i in 0..n {
            let t = i as f64 * DT;
            let lv = 11.0 + 2.0 * (0.35 * t + phase).sin();
            leader_positions.push(lx);
            leader_speeds.push(lv);
            lx += lv * DT;
        }
        let v0 = leader_speeds[0];
        let gap0 = params.equilibrium_gap(v0).unwrap_or(25.0);
        let rollout = simulate(
            params,
            FollowerStart {
                position: 200.0 - gap0,
                speed: v0,
                gap: gap0,
            },
            &leader_positions,
            &leader_speeds,
            DT,
        )
        .unwrap();
        let samples = (0..n)
            .map(|i| PairSample {
                time: i as f64 * DT,
                follower: Kinematics {
                    position: rollout.positions[i],
                    speed: rollout.speeds[i],
                    accel: rollout.accels[i],
                },
                leader: Kinematics {
                    position: leader_positions[i],
                    speed: leader_speeds[i],
                    accel: if i + 1 < n {
                        (leader_speeds[i + 1] - leader_speeds[i]) / DT
                    } else {
                        0.0
                    },
                },
                gap: rollout.gaps[i],
            })
            .collect();
        CarFollowingPair {
            follower_id: 1,
            leader_id: 2,
            samples,
        }
    }
}
