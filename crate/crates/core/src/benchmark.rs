//! End-to-end pipeline driver and benchmark harness.
//!
//! [`run_offline`] executes split -> features -> PCA -> elbow + k-means ->
//! per-cluster calibration -> style labeling and produces the
//! [`StyleLibrary`] plus a report with every table the offline stage backs.
//! [`run_benchmark`] scores both online recognition methods and the two
//! baselines over a grid of observation durations; [`run_sigma_sweep`]
//! restricts that to method 2 with varying noise. All reductions are
//! permutation-invariant and results are byte-identical for a fixed seed
//! regardless of worker count.

use serde::{Deserialize, Serialize};

use crate::calibration::{
    calibrate, label_styles_with, mean_rmse, CalibrateOptions, CalibrationProblem, Style,
};
use crate::config::PipelineConfig;
use crate::data::{split_dataset, CarFollowingPair, DatasetSplit, DT};
use crate::error::{Error, Result};
use crate::features::{extract_features, fit_standardizer, FeatureVector, FEATURE_CSV_HEADER};
use crate::idm::{presets, rmse_5s_with, ComparisonInstants, IdmParams};
use crate::kmeans::{elbow_k, elbow_scan, kmeans_fit};
use crate::parallel::par_map;
use crate::pca::fit_pca;
use crate::recognition::{
    recognize_m1, recognize_m2, Baselines, LibraryMetadata, ObservationWindow, StyleLibrary,
    STYLE_LIBRARY_SCHEMA,
};
use crate::util::{derive_seed, seed_tags, stable_sum};

pub const OFFLINE_REPORT_SCHEMA: &str = "drivestyle-offline-report-v1";
pub const BENCHMARK_REPORT_SCHEMA: &str = "drivestyle-benchmark-report-v1";

/// One calibrated cluster in the offline report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster: usize,
    pub style: Style,
    pub size: usize,
    pub proportion: f64,
    pub params: IdmParams,
    /// Mean RMSE at the calibrated parameters, m.
    pub objective_value: f64,
    pub evaluations: u64,
    pub converged: bool,
    /// Calibrated parameters sitting on a bound of the search box.
    pub params_at_bounds: Vec<String>,
    /// Mean RMSE of the literature preset on the same pairs, m.
    pub literature_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub params: IdmParams,
    pub objective_value: f64,
    pub evaluations: u64,
    pub converged: bool,
    pub params_at_bounds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineReport {
    pub schema: String,
    pub pair_count: usize,
    pub offline_count: usize,
    pub online_count: usize,
    /// Pairs too short for the feature window, skipped during learning.
    pub skipped_short: usize,
    pub explained_variance_ratio: Vec<f64>,
    /// Accumulated ratio of the kept components.
    pub accumulated_kept: f64,
    pub elbow: Vec<(usize, f64)>,
    /// Max-curvature point of the elbow curve (informational; `k` decides).
    pub elbow_suggestion: Option<usize>,
    pub k: usize,
    pub clusters: Vec<ClusterReport>,
    pub aggregate: AggregateReport,
    pub dataset_hash: String,
    pub seed: u64,
}

/// Runs the whole offline stage on extracted pairs.
///
/// Returns the style library, the report behind the offline tables, and the
/// dataset split (whose online half feeds [`run_benchmark`]).
pub fn run_offline(
    pairs: Vec<CarFollowingPair>,
    cfg: &PipelineConfig,
) -> Result<(StyleLibrary, OfflineReport, DatasetSplit)> {
    cfg.validate()?;
    let pair_count = pairs.len();
    let split = split_dataset(pairs, cfg.split_fraction, cfg.seed)
        .map_err(|e| stage("split", e))?;

    // Features over the fixed offline window; skip pairs that are too short.
    let mut learnable: Vec<&CarFollowingPair> = Vec::new();
    let mut skipped_short = 0usize;
    for pair in &split.offline_pairs {
        if pair.duration() + 1e-9 >= cfg.feature_window_s {
            learnable.push(pair);
        } else {
            skipped_short += 1;
        }
    }
    let features: Vec<FeatureVector> = learnable
        .iter()
        .map(|p| extract_features(p, cfg.feature_window_s))
        .collect::<Result<_>>()
        .map_err(|e| stage("features", e))?;

    let standardizer = fit_standardizer(&features).map_err(|e| stage("standardize", e))?;
    let standardized: Vec<_> = features.iter().map(|f| standardizer.standardize(f)).collect();

    let pca = fit_pca(&standardized, cfg.n_components).map_err(|e| stage("pca", e))?;
    let projected: Vec<Vec<f64>> = standardized.iter().map(|z| pca.project(z)).collect();

    let kmeans_seed = derive_seed(cfg.seed, seed_tags::KMEANS);
    let elbow_max = cfg.elbow_k_max.min(projected.len());
    let elbow = elbow_scan(&projected, 1..=elbow_max, cfg.kmeans_restarts, kmeans_seed)
        .map_err(|e| stage("elbow", e))?;
    let elbow_suggestion = elbow_k(&elbow);

    let kmeans = kmeans_fit(&projected, cfg.k, cfg.kmeans_restarts, kmeans_seed)
        .map_err(|e| stage("kmeans", e))?;
    let sizes = kmeans.cluster_sizes();

    // Per-cluster calibration.
    let calibration_seed = derive_seed(cfg.seed, seed_tags::CALIBRATION);
    let mut cluster_pairs: Vec<Vec<CarFollowingPair>> = vec![Vec::new(); cfg.k];
    for (pair, &label) in learnable.iter().zip(kmeans.labels.iter()) {
        cluster_pairs[label].push((*pair).clone());
    }
    let mut prototypes = Vec::with_capacity(cfg.k);
    let mut cluster_reports = Vec::with_capacity(cfg.k);
    for (c, members) in cluster_pairs.iter().enumerate() {
        let problem = CalibrationProblem {
            pairs: members,
            bounds: cfg.bounds,
            anchor: cfg.anchor,
            instants: cfg.rmse_instants,
        };
        let result = calibrate(
            &problem,
            &CalibrateOptions {
                budget: cfg.calibration_budget,
                starts: cfg.calibration_starts,
                seed: derive_seed(calibration_seed, c as u64 + 1),
                workers: cfg.workers,
            },
        )
        .map_err(|e| stage(&format!("calibrate cluster {c}"), e))?;
        let literature_objective =
            mean_rmse(&presets::literature(), members, cfg.anchor, cfg.rmse_instants, cfg.workers)
                .mean;
        prototypes.push(result.params);
        cluster_reports.push((result, literature_objective));
    }

    // Aggregate baseline: everything in one cluster.
    let aggregate_problem = CalibrationProblem {
        pairs: &split.offline_pairs,
        bounds: cfg.bounds,
        anchor: cfg.anchor,
        instants: cfg.rmse_instants,
    };
    let aggregate = calibrate(
        &aggregate_problem,
        &CalibrateOptions {
            budget: cfg.calibration_budget,
            starts: cfg.calibration_starts,
            seed: derive_seed(calibration_seed, 0),
            workers: cfg.workers,
        },
    )
    .map_err(|e| stage("calibrate aggregate", e))?;

    // Style names: parameter semantics, unless overridden.
    let styles = match &cfg.style_overrides {
        Some(map) if map.len() == cfg.k => {
            let mut v = Vec::with_capacity(cfg.k);
            for c in 0..cfg.k {
                v.push(*map.get(&c).ok_or_else(|| {
                    Error::config(format!("style override missing cluster {c}"))
                })?);
            }
            v
        }
        _ => label_styles_with(&prototypes, cfg.label_tie_break).map_err(|e| stage("label", e))?,
    };

    let dataset_hash = CarFollowingPair::hash_pairs(&split.offline_pairs);
    let library = StyleLibrary {
        schema: STYLE_LIBRARY_SCHEMA.to_string(),
        standardizer,
        pca: pca.clone(),
        kmeans,
        prototypes: prototypes.clone(),
        styles: styles.clone(),
        baselines: Baselines {
            literature: presets::literature(),
            aggregate: aggregate.params,
        },
        sigma_default: cfg.sigma,
        metadata: LibraryMetadata {
            seed: cfg.seed,
            k: cfg.k,
            dataset_hash: dataset_hash.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    library.validate()?;

    let learned = learnable.len();
    let report = OfflineReport {
        schema: OFFLINE_REPORT_SCHEMA.to_string(),
        pair_count,
        offline_count: split.offline_pairs.len(),
        online_count: split.online_pairs.len(),
        skipped_short,
        explained_variance_ratio: pca.explained_variance_ratio.clone(),
        accumulated_kept: pca.accumulated_ratio(cfg.n_components),
        elbow,
        elbow_suggestion,
        k: cfg.k,
        clusters: cluster_reports
            .into_iter()
            .enumerate()
            .map(|(c, (result, literature_objective))| ClusterReport {
                cluster: c,
                style: styles[c],
                size: sizes[c],
                proportion: sizes[c] as f64 / learned as f64,
                params_at_bounds: cfg.bounds.at_bounds(&result.params),
                params: result.params,
                objective_value: result.objective_value,
                evaluations: result.evaluations,
                converged: result.converged,
                literature_objective,
            })
            .collect(),
        aggregate: AggregateReport {
            params_at_bounds: cfg.bounds.at_bounds(&aggregate.params),
            params: aggregate.params,
            objective_value: aggregate.objective_value,
            evaluations: aggregate.evaluations,
            converged: aggregate.converged,
        },
        dataset_hash,
        seed: cfg.seed,
    };

    Ok((library, report, split))
}

fn stage(name: &str, err: Error) -> Error {
    match err {
        Error::Config(m) => Error::Config(format!("[{name}] {m}")),
        Error::Data(m) => Error::Data(format!("[{name}] {m}")),
        Error::Numerical(m) => Error::Numerical(format!("[{name}] {m}")),
        Error::Io(e) => Error::Io(e),
    }
}

/// One point of an RMSE-vs-t_dur curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t_dur: f64,
    pub mean_rmse: f64,
    /// Pairs contributing to this point.
    pub evaluated: usize,
    /// Pairs too short for this window plus the 5 s horizon.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCurves {
    pub m1: Vec<CurvePoint>,
    pub m2: Vec<CurvePoint>,
    pub literature: Vec<CurvePoint>,
    pub aggregate: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementPoint {
    pub t_dur: f64,
    pub baseline_rmse: f64,
    pub method_rmse: f64,
    /// (baseline - method) / baseline.
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementSummary {
    pub per_t_dur: Vec<ImprovementPoint>,
    pub best_pct: f64,
    pub best_t_dur: f64,
}

fn improvement(method: &[CurvePoint], baseline: &[CurvePoint]) -> ImprovementSummary {
    let per_t_dur: Vec<ImprovementPoint> = method
        .iter()
        .zip(baseline.iter())
        .map(|(m, b)| ImprovementPoint {
            t_dur: m.t_dur,
            baseline_rmse: b.mean_rmse,
            method_rmse: m.mean_rmse,
            pct: if b.mean_rmse > 0.0 {
                (b.mean_rmse - m.mean_rmse) / b.mean_rmse
            } else {
                0.0
            },
        })
        .collect();
    let best = per_t_dur
        .iter()
        .filter(|p| p.pct.is_finite())
        .max_by(|a, b| a.pct.total_cmp(&b.pct));
    ImprovementSummary {
        best_pct: best.map_or(f64::NAN, |p| p.pct),
        best_t_dur: best.map_or(f64::NAN, |p| p.t_dur),
        per_t_dur,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub sigma: f64,
    pub t_dur_grid: Vec<f64>,
    pub curves: MethodCurves,
    pub m1_vs_literature: ImprovementSummary,
    pub m1_vs_aggregate: ImprovementSummary,
    pub m2_vs_literature: ImprovementSummary,
    pub m2_vs_aggregate: ImprovementSummary,
    pub dataset_hash: String,
}

/// Per-pair scores at one observation duration (internal).
struct PairScores {
    m1: Option<f64>,
    m2: Option<f64>,
    literature: Option<f64>,
    aggregate: Option<f64>,
}

/// Scores recognition methods and baselines over the online pairs.
///
/// For each pair and observation duration `t_dur`: recognition sees only the
/// first `10 * t_dur` frames; the 5 s prediction starts right at `t_dur` and
/// is scored against the observed trajectory. The two baselines skip
/// recognition and predict with their fixed parameters from the same start.
pub fn run_benchmark(
    lib: &StyleLibrary,
    online_pairs: &[CarFollowingPair],
    t_durs: &[f64],
    sigma: f64,
    instants: ComparisonInstants,
    workers: usize,
) -> Result<BenchmarkReport> {
    if t_durs.is_empty() {
        return Err(Error::config("benchmark needs a non-empty t_dur grid"));
    }
    if online_pairs.is_empty() {
        return Err(Error::data("benchmark needs online pairs"));
    }
    lib.validate()?;

    let all_scores: Vec<Vec<PairScores>> = par_map(online_pairs, workers, |_, pair| {
        t_durs
            .iter()
            .map(|&t_dur| score_pair(lib, pair, t_dur, sigma, instants))
            .collect()
    });

    let collect_curve = |pick: &dyn Fn(&PairScores) -> Option<f64>| -> Vec<CurvePoint> {
        t_durs
            .iter()
            .enumerate()
            .map(|(ti, &t_dur)| {
                let values: Vec<f64> = all_scores
                    .iter()
                    .filter_map(|per_pair| pick(&per_pair[ti]))
                    .collect();
                CurvePoint {
                    t_dur,
                    mean_rmse: if values.is_empty() {
                        f64::NAN
                    } else {
                        stable_sum(&values) / values.len() as f64
                    },
                    evaluated: values.len(),
                    excluded: online_pairs.len() - values.len(),
                }
            })
            .collect()
    };

    let curves = MethodCurves {
        m1: collect_curve(&|s| s.m1),
        m2: collect_curve(&|s| s.m2),
        literature: collect_curve(&|s| s.literature),
        aggregate: collect_curve(&|s| s.aggregate),
    };

    Ok(BenchmarkReport {
        schema: BENCHMARK_REPORT_SCHEMA.to_string(),
        sigma,
        t_dur_grid: t_durs.to_vec(),
        m1_vs_literature: improvement(&curves.m1, &curves.literature),
        m1_vs_aggregate: improvement(&curves.m1, &curves.aggregate),
        m2_vs_literature: improvement(&curves.m2, &curves.literature),
        m2_vs_aggregate: improvement(&curves.m2, &curves.aggregate),
        curves,
        dataset_hash: CarFollowingPair::hash_pairs(online_pairs),
    })
}

fn score_pair(
    lib: &StyleLibrary,
    pair: &CarFollowingPair,
    t_dur: f64,
    sigma: f64,
    instants: ComparisonInstants,
) -> PairScores {
    let n = (t_dur / DT).round() as usize;
    let horizon_frames = (crate::idm::PREDICTION_HORIZON_S / DT).round() as usize;
    if n == 0 || n + horizon_frames >= pair.samples.len() {
        return PairScores {
            m1: None,
            m2: None,
            literature: None,
            aggregate: None,
        };
    }
    let window = match ObservationWindow::from_pair_prefix(pair, t_dur) {
        Ok(w) => w,
        Err(_) => {
            return PairScores {
                m1: None,
                m2: None,
                literature: None,
                aggregate: None,
            }
        }
    };
    let start_s = n as f64 * DT;
    let score_with = |params: &IdmParams| -> Option<f64> {
        rmse_5s_with(params, pair, start_s, instants).map(|r| r.rmse).ok()
    };

    let m1 = recognize_m1(lib, &window)
        .ok()
        .and_then(|o| score_with(&o.params));
    let m2 = recognize_m2(lib, &window, sigma)
        .ok()
        .and_then(|o| score_with(&o.params));
    let literature = score_with(&lib.baselines.literature);
    let aggregate = score_with(&lib.baselines.aggregate);
    PairScores {
        m1,
        m2,
        literature,
        aggregate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub sigma: f64,
    pub t_dur: f64,
    pub mean_rmse: f64,
    pub evaluated: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepReport {
    pub schema: String,
    pub points: Vec<SigmaPoint>,
    pub dataset_hash: String,
}

pub const SIGMA_SWEEP_SCHEMA: &str = "drivestyle-sigma-sweep-v1";

/// Method-2 RMSE over a (sigma, t_dur) grid. Row order: sigmas outer,
/// t_durs inner.
pub fn run_sigma_sweep(
    lib: &StyleLibrary,
    online_pairs: &[CarFollowingPair],
    sigmas: &[f64],
    t_durs: &[f64],
    instants: ComparisonInstants,
    workers: usize,
) -> Result<SigmaSweepReport> {
    if sigmas.is_empty() || t_durs.is_empty() {
        return Err(Error::config("sigma sweep needs non-empty sigma and t_dur grids"));
    }
    lib.validate()?;

    let mut points = Vec::with_capacity(sigmas.len() * t_durs.len());
    for &sigma in sigmas {
        let scores: Vec<Vec<Option<f64>>> = par_map(online_pairs, workers, |_, pair| {
            t_durs
                .iter()
                .map(|&t_dur| score_pair(lib, pair, t_dur, sigma, instants).m2)
                .collect()
        });
        for (ti, &t_dur) in t_durs.iter().enumerate() {
            let values: Vec<f64> = scores.iter().filter_map(|row| row[ti]).collect();
            points.push(SigmaPoint {
                sigma,
                t_dur,
                mean_rmse: if values.is_empty() {
                    f64::NAN
                } else {
                    stable_sum(&values) / values.len() as f64
                },
                evaluated: values.len(),
                excluded: online_pairs.len() - values.len(),
            });
        }
    }
    Ok(SigmaSweepReport {
        schema: SIGMA_SWEEP_SCHEMA.to_string(),
        points,
        dataset_hash: CarFollowingPair::hash_pairs(online_pairs),
    })
}

// ---------------------------------------------------------------------------
// CSV exports (each with a schema-version comment header; regeneration from
// identical inputs is byte-identical).
// ---------------------------------------------------------------------------

pub fn features_csv(features: &[FeatureVector]) -> String {
    let mut out = String::from("# schema: drivestyle.features.v1\n");
    out.push_str(FEATURE_CSV_HEADER);
    out.push('\n');
    for f in features {
        let row: Vec<String> = f.as_array().iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn benchmark_curves_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("# schema: drivestyle.benchmark-curves.v1\n");
    out.push_str("method,t_dur,mean_rmse,evaluated,excluded\n");
    for (name, curve) in [
        ("m1", &report.curves.m1),
        ("m2", &report.curves.m2),
        ("literature", &report.curves.literature),
        ("aggregate", &report.curves.aggregate),
    ] {
        for p in curve {
            out.push_str(&format!(
                "{name},{},{},{},{}\n",
                p.t_dur, p.mean_rmse, p.evaluated, p.excluded
            ));
        }
    }
    out
}

pub fn sigma_sweep_csv(report: &SigmaSweepReport) -> String {
    let mut out = String::from("# schema: drivestyle.sigma-sweep.v1\n");
    out.push_str("sigma,t_dur,mean_rmse,evaluated,excluded\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.sigma, p.t_dur, p.mean_rmse, p.evaluated, p.excluded
        ));
    }
    out
}

pub fn elbow_csv(elbow: &[(usize, f64)]) -> String {
    let mut out = String::from("# schema: drivestyle.elbow.v1\nk,sse\n");
    for (k, sse) in elbow {
        out.push_str(&format!("{k},{sse}\n"));
    }
    out
}

pub fn explained_variance_csv(ratios: &[f64]) -> String {
    let mut out = String::from("# schema: drivestyle.explained-variance.v1\ncomponent,ratio,accumulated\n");
    let mut acc = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        acc += r;
        out.push_str(&format!("PC{},{r},{acc}\n", i + 1));
    }
    out
}

pub fn clusters_csv(report: &OfflineReport) -> String {
    let mut out = String::from("# schema: drivestyle.clusters.v1\n");
    out.push_str("cluster,style,size,proportion,v_star,t_headway,d_min,a_max,b_comf,mean_rmse,literature_mean_rmse\n");
    for c in &report.clusters {
        let p = c.params;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            c.cluster,
            c.style,
            c.size,
            c.proportion,
            p.v_star,
            p.t_headway,
            p.d_min,
            p.a_max,
            p.b_comf,
            c.objective_value,
            c.literature_objective
        ));
    }
    let a = &report.aggregate;
    out.push_str(&format!(
        "aggregate,,{},1,{},{},{},{},{},{},\n",
        report.offline_count,
        a.params.v_star,
        a.params.t_headway,
        a.params.d_min,
        a.params.a_max,
        a.params.b_comf,
        a.objective_value
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::synth::{generate_corpus, SynthConfig};

    fn small_pipeline_config() -> PipelineConfig {
        PipelineConfig {
            seed: 7,
            workers: 1,
            calibration_budget: 600,
            calibration_starts: 6,
            kmeans_restarts: 8,
            elbow_k_max: 6,
            t_dur_grid: vec![0.5, 2.0],
            sigma_grid: vec![0.05, 0.15],
            sigma_sweep_t_durs: vec![0.5, 2.0],
            ..PipelineConfig::default()
        }
    }

    fn small_corpus() -> crate::synth::SynthCorpus {
        generate_corpus(
            &SynthConfig {
                n_pairs: 24,
                duration_s: 22.0,
                noise_sigma: 0.1,
                ..SynthConfig::default()
            },
            99,
        )
        .unwrap()
    }

    #[test]
    fn offline_pipeline_produces_a_valid_library() {
        let corpus = small_corpus();
        let cfg = small_pipeline_config();
        let (lib, report, split) = run_offline(corpus.pairs.clone(), &cfg).unwrap();
        lib.validate().unwrap();
        assert_eq!(report.pair_count, 24);
        assert_eq!(report.offline_count, 19); // floor(0.8 * 24)
        assert_eq!(report.online_count, 5);
        assert_eq!(split.offline_pairs.len() + split.online_pairs.len(), 24);
        assert_eq!(report.clusters.len(), 3);
        let total: usize = report.clusters.iter().map(|c| c.size).sum();
        assert_eq!(total, 19);
        // Ratios are a probability vector over 13 components.
        assert_eq!(report.explained_variance_ratio.len(), 13);
        assert!((report.explained_variance_ratio.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(report.accumulated_kept <= 1.0 + 1e-12);
    }

    #[test]
    fn offline_is_deterministic_across_runs_and_workers() {
        let corpus = small_corpus();
        let mut cfg = small_pipeline_config();
        let (lib_a, rep_a, _) = run_offline(corpus.pairs.clone(), &cfg).unwrap();
        let (lib_b, rep_b, _) = run_offline(corpus.pairs.clone(), &cfg).unwrap();
        assert_eq!(lib_a.to_json(), lib_b.to_json());
        assert_eq!(
            serde_json::to_string(&rep_a).unwrap(),
            serde_json::to_string(&rep_b).unwrap()
        );
        cfg.workers = 0; // all cores
        let (lib_c, rep_c, _) = run_offline(corpus.pairs, &cfg).unwrap();
        assert_eq!(lib_a.to_json(), lib_c.to_json());
        assert_eq!(
            serde_json::to_string(&rep_a).unwrap(),
            serde_json::to_string(&rep_c).unwrap()
        );
    }

    #[test]
    fn benchmark_produces_full_curves() {
        let corpus = small_corpus();
        let cfg = small_pipeline_config();
        let (lib, _, split) = run_offline(corpus.pairs, &cfg).unwrap();
        let report = run_benchmark(
            &lib,
            &split.online_pairs,
            &cfg.t_dur_grid,
            cfg.sigma,
            cfg.rmse_instants,
            1,
        )
        .unwrap();
        assert_eq!(report.curves.m2.len(), 2);
        for curve in [
            &report.curves.m1,
            &report.curves.m2,
            &report.curves.literature,
            &report.curves.aggregate,
        ] {
            for p in curve {
                assert!(p.evaluated > 0, "no pairs evaluated at t_dur {}", p.t_dur);
                assert!(p.mean_rmse.is_finite());
            }
        }
        // Improvements are computed pointwise against both baselines.
        assert_eq!(report.m2_vs_literature.per_t_dur.len(), 2);
        assert!(report.m2_vs_literature.best_pct.is_finite());
    }

    #[test]
    fn benchmark_is_deterministic_across_worker_counts() {
        let corpus = small_corpus();
        let cfg = small_pipeline_config();
        let (lib, _, split) = run_offline(corpus.pairs, &cfg).unwrap();
        let a = run_benchmark(&lib, &split.online_pairs, &cfg.t_dur_grid, 0.15, cfg.rmse_instants, 1)
            .unwrap();
        let b = run_benchmark(&lib, &split.online_pairs, &cfg.t_dur_grid, 0.15, cfg.rmse_instants, 0)
            .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn sigma_sweep_has_full_grid_and_flat_argmax_freedom() {
        let corpus = small_corpus();
        let cfg = small_pipeline_config();
        let (lib, _, split) = run_offline(corpus.pairs, &cfg).unwrap();
        let sweep = run_sigma_sweep(
            &lib,
            &split.online_pairs,
            &cfg.sigma_grid,
            &cfg.sigma_sweep_t_durs,
            cfg.rmse_instants,
            1,
        )
        .unwrap();
        assert_eq!(sweep.points.len(), cfg.sigma_grid.len() * cfg.sigma_sweep_t_durs.len());
        // The m2 argmax is sigma-invariant, so the curve is constant in
        // sigma at each t_dur.
        for (ti, &t_dur) in cfg.sigma_sweep_t_durs.iter().enumerate() {
            let col: Vec<f64> = sweep
                .points
                .iter()
                .filter(|p| p.t_dur == t_dur)
                .map(|p| p.mean_rmse)
                .collect();
            assert_eq!(col.len(), cfg.sigma_grid.len());
            for v in &col {
                assert_eq!(*v, col[0], "t_dur index {ti}");
            }
        }
    }

    #[test]
    fn csv_outputs_carry_schema_headers() {
        let corpus = small_corpus();
        let cfg = small_pipeline_config();
        let (lib, report, split) = run_offline(corpus.pairs, &cfg).unwrap();
        let bench = run_benchmark(&lib, &split.online_pairs, &cfg.t_dur_grid, 0.15, cfg.rmse_instants, 1)
            .unwrap();
        for csv in [
            benchmark_curves_csv(&bench),
            elbow_csv(&report.elbow),
            explained_variance_csv(&report.explained_variance_ratio),
            clusters_csv(&report),
        ] {
            assert!(csv.starts_with("# schema: drivestyle."), "{csv}");
        }
        let sweep = run_sigma_sweep(
            &lib,
            &split.online_pairs,
            &[0.1],
            &[0.5],
            cfg.rmse_instants,
            1,
        )
        .unwrap();
        let csv = sigma_sweep_csv(&sweep);
        assert_eq!(csv.lines().count(), 2 + 1);
    }

    #[test]
    fn recognition_ignores_the_future() {
        // Two online pairs identical up to t_dur and wildly different after
        // must produce identical recognition outcomes.
        let corpus = small_corpus();
        let cfg = small_pipeline_config();
        let (lib, _, split) = run_offline(corpus.pairs, &cfg).unwrap();
        let pair = &split.online_pairs[0];
        let mut poisoned = pair.clone();
        let n = 20; // 2 s window
        for s in poisoned.samples.iter_mut().skip(n) {
            s.follower.position += 1e6;
            s.follower.speed = 0.0;
            s.follower.accel = 99.0;
            s.gap = 1e-3;
        }
        let w_clean = ObservationWindow::from_pair_prefix(pair, 2.0).unwrap();
        let w_poison = ObservationWindow::from_pair_prefix(&poisoned, 2.0).unwrap();
        assert_eq!(
            recognize_m2(&lib, &w_clean, 0.15).unwrap(),
            recognize_m2(&lib, &w_poison, 0.15).unwrap()
        );
        assert_eq!(
            recognize_m1(&lib, &w_clean).unwrap(),
            recognize_m1(&lib, &w_poison).unwrap()
        );
    }
}
