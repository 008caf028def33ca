//! Offline IDM parameter estimation: minimize the mean 5 s prediction RMSE
//! over a cluster's pairs with multi-start bounded Nelder-Mead, plus the
//! parameter-semantics rule that names each cluster's driving style.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::CarFollowingPair;
use crate::error::{Error, Result};
use crate::features::FEATURE_WINDOW_S;
use crate::idm::{rmse_5s_with, ComparisonInstants, IdmParams, PREDICTION_HORIZON_S};
use crate::optim::{latin_hypercube, nelder_mead_bounded, NmOptions};
use crate::parallel::par_map;
use crate::util::{derive_seed, seed_tags, stable_sum};

/// Closed parameter box for calibration, ordered as
/// (v_star, t_headway, d_min, a_max, b_comf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lo: [f64; 5],
    pub hi: [f64; 5],
}

impl Default for ParamBounds {
    fn default() -> Self {
        // A physically plausible envelope comfortably containing the
        // literature preset and all calibrated values seen in practice.
        ParamBounds {
            lo: [5.0, 0.3, 0.05, 0.1, 0.5],
            hi: [45.0, 4.0, 10.0, 4.0, 5.0],
        }
    }
}

impl ParamBounds {
    /// Bounds must be strictly positive and ordered. Collapsed dimensions
    /// (lo == hi) are allowed and pin that parameter.
    pub fn validate(&self) -> Result<()> {
        for i in 0..5 {
            if !(self.lo[i].is_finite() && self.hi[i].is_finite()) {
                return Err(Error::config("parameter bounds must be finite"));
            }
            if self.lo[i] <= 0.0 {
                return Err(Error::config(format!(
                    "lower bound {} must be strictly positive, got {}",
                    i, self.lo[i]
                )));
            }
            if self.lo[i] > self.hi[i] {
                return Err(Error::config(format!(
                    "bounds inverted in dimension {}: {} > {}",
                    i, self.lo[i], self.hi[i]
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &IdmParams) -> bool {
        let a = p.as_array();
        (0..5).all(|i| a[i] >= self.lo[i] - 1e-12 && a[i] <= self.hi[i] + 1e-12)
    }

    /// Names of parameters sitting on a bound (within 1e-9 of either edge);
    /// a calibration pushed against its box is worth flagging in reports.
    pub fn at_bounds(&self, p: &IdmParams) -> Vec<String> {
        const NAMES: [&str; 5] = ["v_star", "t_headway", "d_min", "a_max", "b_comf"];
        let a = p.as_array();
        (0..5)
            .filter(|&i| {
                self.hi[i] > self.lo[i]
                    && ((a[i] - self.lo[i]).abs() < 1e-9 || (a[i] - self.hi[i]).abs() < 1e-9)
            })
            .map(|i| NAMES[i].to_string())
            .collect()
    }
}

/// Where the scored 5 s prediction window starts within each pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// Right after the 15 s feature window when the episode is long enough
    /// (so the evaluation does not reuse the exact window features were
    /// computed on), otherwise at the episode start.
    #[default]
    FeatureWindowEnd,
    /// Always at the episode start.
    PairStart,
}

/// Prediction start offset (seconds into the pair) under an anchor mode.
pub fn prediction_anchor(pair: &CarFollowingPair, mode: AnchorMode) -> f64 {
    match mode {
        AnchorMode::PairStart => 0.0,
        AnchorMode::FeatureWindowEnd => {
            if pair.duration() >= FEATURE_WINDOW_S + PREDICTION_HORIZON_S {
                FEATURE_WINDOW_S
            } else {
                0.0
            }
        }
    }
}

/// Mean prediction RMSE over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanRmse {
    /// Arithmetic mean over evaluated pairs, m (NaN when none evaluated).
    pub mean: f64,
    pub evaluated: usize,
    /// Pairs skipped because they cannot host a 5 s window at the anchor.
    pub excluded: usize,
}

/// Mean of `rmse_5s` over pairs, one window per pair at the anchor. Pairs
/// too short for the window are excluded and counted. Collision-flagged
/// rollouts contribute their (large) RMSE rather than a penalty constant.
/// The reduction is permutation-invariant.
pub fn mean_rmse(
    params: &IdmParams,
    pairs: &[CarFollowingPair],
    anchor: AnchorMode,
    instants: ComparisonInstants,
    workers: usize,
) -> MeanRmse {
    let scores = par_map(pairs, workers, |_, pair| {
        let start = prediction_anchor(pair, anchor);
        rmse_5s_with(params, pair, start, instants).map(|r| r.rmse).ok()
    });
    let values: Vec<f64> = scores.iter().flatten().copied().collect();
    let excluded = scores.len() - values.len();
    let mean = if values.is_empty() {
        f64::NAN
    } else {
        stable_sum(&values) / values.len() as f64
    };
    MeanRmse {
        mean,
        evaluated: values.len(),
        excluded,
    }
}

/// One cluster's calibration task.
#[derive(Debug, Clone)]
pub struct CalibrationProblem<'a> {
    pub pairs: &'a [CarFollowingPair],
    pub bounds: ParamBounds,
    pub anchor: AnchorMode,
    pub instants: ComparisonInstants,
}

impl<'a> CalibrationProblem<'a> {
    pub fn new(pairs: &'a [CarFollowingPair]) -> Self {
        CalibrationProblem {
            pairs,
            bounds: ParamBounds::default(),
            anchor: AnchorMode::default(),
            instants: ComparisonInstants::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrateOptions {
    /// Total objective-evaluation budget across all starts (min 100).
    pub budget: u64,
    /// Number of Latin-hypercube starts.
    pub starts: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        CalibrateOptions {
            budget: 4000,
            starts: 16,
            seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: IdmParams,
    /// Mean RMSE at `params`, m.
    pub objective_value: f64,
    pub evaluations: u64,
    pub converged: bool,
}

/// Minimizes the cluster's mean RMSE over the bounded box.
///
/// The budget is divided evenly across starts, each start running bounded
/// Nelder-Mead from its Latin-hypercube point. Starts are independent, so
/// the result is identical for any worker count, and each start's evaluation
/// sequence depends only on the seed, so the best objective is
/// non-increasing in the budget.
pub fn calibrate(problem: &CalibrationProblem, opts: &CalibrateOptions) -> Result<CalibrationResult> {
    if opts.budget < 100 {
        return Err(Error::config(format!(
            "calibration budget must be at least 100 evaluations, got {}",
            opts.budget
        )));
    }
    if problem.pairs.is_empty() {
        return Err(Error::data("calibration needs at least one pair"));
    }
    problem.bounds.validate()?;

    let starts = opts.starts.max(1);
    let per_start = (opts.budget / starts as u64).max(1);
    let lhs_seed = derive_seed(opts.seed, seed_tags::CALIBRATION);
    let start_points = latin_hypercube(&problem.bounds.lo, &problem.bounds.hi, starts, lhs_seed);

    let runs = par_map(&start_points, opts.workers, |_, x0| {
        nelder_mead_bounded(
            |x| {
                let params = IdmParams::from_array([x[0], x[1], x[2], x[3], x[4]]);
                mean_rmse(&params, problem.pairs, problem.anchor, problem.instants, 1).mean
            },
            x0,
            &problem.bounds.lo,
            &problem.bounds.hi,
            &NmOptions {
                max_evals: per_start,
                ..NmOptions::default()
            },
        )
    });

    let evaluations: u64 = runs.iter().map(|r| r.evaluations).sum();
    let best = runs
        .iter()
        .filter(|r| r.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::numerical("all calibration objective evaluations were non-finite"))?;

    Ok(CalibrationResult {
        params: IdmParams::from_array([best.x[0], best.x[1], best.x[2], best.x[3], best.x[4]]),
        objective_value: best.value,
        evaluations,
        converged: best.converged,
    })
}

/// Driving style labels assigned to clusters after calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Neutral,
    RelativelyAggressive,
    Timid,
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Style::Neutral => write!(f, "neutral"),
            Style::RelativelyAggressive => write!(f, "relatively aggressive"),
            Style::Timid => write!(f, "timid"),
        }
    }
}

/// 0-based fractional ranks (ties share the average of their positions).
fn fractional_ranks(values: &[f64], ascending: bool) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        if ascending {
            values[a].total_cmp(&values[b])
        } else {
            values[b].total_cmp(&values[a])
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &id in &idx[i..=j] {
            ranks[id] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// What to do when the style-labeling rule reaches a tied decision (which
/// happens in practice when several clusters calibrate onto the same bound).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTieBreak {
    /// Refuse and ask for a manual override.
    #[default]
    Error,
    /// Deterministically take the lowest cluster index among the tied ones.
    LowestIndex,
}

/// Names each cluster's style from its calibrated parameters.
///
/// Timid is the cluster with the best combined rank for small `v_star`,
/// large `t_headway`, and large `d_min` (Borda over the three criteria,
/// fractional ranks for ties within a criterion). Among the rest, the
/// smallest `d_min` is relatively aggressive; everything else is neutral. A
/// single cluster is neutral. A tie in either final decision is an error
/// asking for a manual label override in configuration.
pub fn label_styles(params: &[IdmParams]) -> Result<Vec<Style>> {
    label_styles_with(params, LabelTieBreak::Error)
}

/// As [`label_styles`], with an explicit tied-decision policy.
pub fn label_styles_with(params: &[IdmParams], tie_break: LabelTieBreak) -> Result<Vec<Style>> {
    let k = params.len();
    if k == 0 {
        return Err(Error::config("cannot label zero clusters"));
    }
    if k == 1 {
        return Ok(vec![Style::Neutral]);
    }

    let v_star: Vec<f64> = params.iter().map(|p| p.v_star).collect();
    let t_headway: Vec<f64> = params.iter().map(|p| p.t_headway).collect();
    let d_min: Vec<f64> = params.iter().map(|p| p.d_min).collect();

    let borda: Vec<f64> = {
        let r_v = fractional_ranks(&v_star, true);
        let r_t = fractional_ranks(&t_headway, false);
        let r_d = fractional_ranks(&d_min, false);
        (0..k).map(|i| r_v[i] + r_t[i] + r_d[i]).collect()
    };

    let timid = argmin(&borda, tie_break).ok_or_else(|| {
        Error::config(
            "timid label is ambiguous (tied parameter ranks); set a manual style override",
        )
    })?;

    let rest: Vec<usize> = (0..k).filter(|&i| i != timid).collect();
    let rest_d_min: Vec<f64> = rest.iter().map(|&i| d_min[i]).collect();
    let aggressive_pos = argmin(&rest_d_min, tie_break).ok_or_else(|| {
        Error::config(
            "relatively-aggressive label is ambiguous (tied d_min); set a manual style override",
        )
    })?;
    let aggressive = rest[aggressive_pos];

    Ok((0..k)
        .map(|i| {
            if i == timid {
                Style::Timid
            } else if i == aggressive {
                Style::RelativelyAggressive
            } else {
                Style::Neutral
            }
        })
        .collect())
}

/// Index of the minimum; a tied minimum resolves per the policy.
fn argmin(values: &[f64], tie_break: LabelTieBreak) -> Option<usize> {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    let ties = values.iter().filter(|v| **v == values[best]).count();
    match (ties, tie_break) {
        (1, _) => Some(best),
        (_, LabelTieBreak::LowestIndex) => Some(best),
        (_, LabelTieBreak::Error) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idm::{presets, rmse_5s};
    use crate::testkit::model_generated_pair;

    fn synthetic_cluster(params: &IdmParams, count: usize, duration_s: f64) -> Vec<CarFollowingPair> {
        (0..count)
            .map(|i| {
                let mut pair = model_generated_pair(params, duration_s, 0.9 * i as f64);
                pair.follower_id = 10 + i as u64;
                pair
            })
            .collect()
    }

    #[test]
    fn single_pair_mean_equals_rmse() {
        let p = presets::neutral();
        let pairs = synthetic_cluster(&presets::timid(), 1, 12.0);
        let m = mean_rmse(&p, &pairs, AnchorMode::PairStart, ComparisonInstants::WholeSeconds, 1);
        let direct = rmse_5s(&p, &pairs[0], 0.0).unwrap();
        assert_eq!(m.evaluated, 1);
        assert!((m.mean - direct.rmse).abs() < 1e-15);
    }

    #[test]
    fn generating_params_score_zero_on_their_own_corpus() {
        let truth = presets::neutral();
        let pairs = synthetic_cluster(&truth, 6, 12.0);
        let m = mean_rmse(&truth, &pairs, AnchorMode::PairStart, ComparisonInstants::WholeSeconds, 2);
        assert_eq!(m.excluded, 0);
        assert!(m.mean < 1e-9, "mean = {}", m.mean);
    }

    #[test]
    fn mean_is_permutation_invariant() {
        let pairs: Vec<CarFollowingPair> = [presets::neutral(), presets::timid(), presets::aggregate()]
            .iter()
            .flat_map(|p| synthetic_cluster(p, 4, 12.0))
            .collect();
        let probe = presets::literature();
        let forward = mean_rmse(&probe, &pairs, AnchorMode::PairStart, ComparisonInstants::WholeSeconds, 1);
        let mut reversed = pairs.clone();
        reversed.reverse();
        let backward =
            mean_rmse(&probe, &reversed, AnchorMode::PairStart, ComparisonInstants::WholeSeconds, 3);
        assert_eq!(forward.mean, backward.mean);
    }

    #[test]
    fn short_pairs_are_excluded_and_counted() {
        let p = presets::neutral();
        let mut pairs = synthetic_cluster(&p, 2, 12.0);
        pairs[1].samples.truncate(30); // < 5 s of frames
        let m = mean_rmse(&p, &pairs, AnchorMode::PairStart, ComparisonInstants::WholeSeconds, 1);
        assert_eq!(m.evaluated, 1);
        assert_eq!(m.excluded, 1);
    }

    #[test]
    fn anchor_skips_the_feature_window_when_possible() {
        let p = presets::neutral();
        let long = model_generated_pair(&p, 25.0, 0.0);
        let short = model_generated_pair(&p, 12.0, 0.0);
        assert_eq!(prediction_anchor(&long, AnchorMode::FeatureWindowEnd), 15.0);
        assert_eq!(prediction_anchor(&short, AnchorMode::FeatureWindowEnd), 0.0);
        assert_eq!(prediction_anchor(&long, AnchorMode::PairStart), 0.0);
    }

    #[test]
    fn calibrate_recovers_a_planted_objective() {
        let truth = presets::neutral();
        let pairs = synthetic_cluster(&truth, 5, 12.0);
        let problem = CalibrationProblem {
            anchor: AnchorMode::PairStart,
            ..CalibrationProblem::new(&pairs)
        };
        let result = calibrate(
            &problem,
            &CalibrateOptions {
                budget: 6000,
                starts: 12,
                seed: 4,
                workers: 0,
            },
        )
        .unwrap();
        // The noise-free objective at the truth is 0; the optimizer must get
        // close to the floor even if individual parameters are only weakly
        // identifiable on this excitation.
        assert!(result.objective_value < 0.05, "objective = {}", result.objective_value);
        assert!(problem.bounds.contains(&result.params));
        assert!(result.evaluations <= 6000);
    }

    #[test]
    fn calibrate_budget_monotonicity() {
        let truth = presets::timid();
        let pairs = synthetic_cluster(&truth, 3, 12.0);
        let problem = CalibrationProblem {
            anchor: AnchorMode::PairStart,
            ..CalibrationProblem::new(&pairs)
        };
        let mut previous = f64::INFINITY;
        for budget in [400u64, 800, 1600, 3200] {
            let result = calibrate(
                &problem,
                &CalibrateOptions {
                    budget,
                    starts: 8,
                    seed: 11,
                    workers: 1,
                },
            )
            .unwrap();
            assert!(
                result.objective_value <= previous + 1e-12,
                "budget {budget}: {} > {previous}",
                result.objective_value
            );
            previous = result.objective_value;
        }
    }

    #[test]
    fn calibrate_is_deterministic_across_worker_counts() {
        let pairs = synthetic_cluster(&presets::aggregate(), 3, 12.0);
        let problem = CalibrationProblem {
            anchor: AnchorMode::PairStart,
            ..CalibrationProblem::new(&pairs)
        };
        let opts = |workers| CalibrateOptions {
            budget: 800,
            starts: 8,
            seed: 21,
            workers,
        };
        let serial = calibrate(&problem, &opts(1)).unwrap();
        let parallel = calibrate(&problem, &opts(0)).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn collapsed_bounds_return_that_point() {
        let pairs = synthetic_cluster(&presets::neutral(), 1, 12.0);
        let point = presets::literature().as_array();
        let problem = CalibrationProblem {
            bounds: ParamBounds { lo: point, hi: point },
            anchor: AnchorMode::PairStart,
            ..CalibrationProblem::new(&pairs)
        };
        let result = calibrate(&problem, &CalibrateOptions::default()).unwrap();
        assert_eq!(result.params.as_array(), point);
    }

    #[test]
    fn tiny_budget_is_rejected() {
        let pairs = synthetic_cluster(&presets::neutral(), 1, 12.0);
        let problem = CalibrationProblem::new(&pairs);
        let err = calibrate(
            &problem,
            &CalibrateOptions {
                budget: 99,
                ..CalibrateOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn style_labels_match_parameter_semantics() {
        // Three clusters: one clearly timid (small v*, long headway, wide
        // spacing), and two similar ones separated by d_min.
        let params = vec![
            IdmParams::new(34.7, 1.0, 2.9, 0.5, 1.5).unwrap(),
            IdmParams::new(35.0, 1.0, 0.1, 0.4, 1.5).unwrap(),
            IdmParams::new(18.5, 1.9, 4.5, 0.4, 1.4).unwrap(),
        ];
        let styles = label_styles(&params).unwrap();
        assert_eq!(
            styles,
            vec![Style::Neutral, Style::RelativelyAggressive, Style::Timid]
        );

        // Permuting the input permutes the labels with it.
        let permuted = vec![params[2], params[0], params[1]];
        let styles2 = label_styles(&permuted).unwrap();
        assert_eq!(
            styles2,
            vec![Style::Timid, Style::Neutral, Style::RelativelyAggressive]
        );
    }

    #[test]
    fn identical_rows_are_a_tie_error() {
        let p = IdmParams::new(30.0, 1.5, 2.0, 0.5, 1.5).unwrap();
        let err = label_styles(&[p, p]).unwrap_err();
        assert!(err.to_string().contains("override"));
        // The lowest-index policy resolves the same tie deterministically.
        let styles = label_styles_with(&[p, p], LabelTieBreak::LowestIndex).unwrap();
        assert_eq!(styles, vec![Style::Timid, Style::RelativelyAggressive]);
    }

    #[test]
    fn single_cluster_is_neutral() {
        let p = IdmParams::new(30.0, 1.5, 2.0, 0.5, 1.5).unwrap();
        assert_eq!(label_styles(&[p]).unwrap(), vec![Style::Neutral]);
    }

    #[test]
    fn fractional_ranks_average_ties() {
        let ranks = fractional_ranks(&[1.0, 1.0, 3.0], true);
        assert_eq!(ranks, vec![0.5, 0.5, 2.0]);
        let desc = fractional_ranks(&[1.0, 2.0, 3.0], false);
        assert_eq!(desc, vec![2.0, 1.0, 0.0]);
    }
}
