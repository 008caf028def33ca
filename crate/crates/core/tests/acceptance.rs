//! Acceptance suite: one test per criterion, each printing a PASS line when
//! it holds (run with `--nocapture` to see them). Criterion 4 needs the real
//! I80 trajectory file and reports SKIPPED when it is absent; everything
//! else runs self-contained on synthetic data.

use std::time::Instant;

use drivestyle::calibration::{
    calibrate, mean_rmse, AnchorMode, CalibrateOptions, CalibrationProblem, label_styles,
};
use drivestyle::config::{Config, PipelineConfig};
use drivestyle::data::{
    extract_pairs, load_trajectories_path, CarFollowingPair, DT,
};
use drivestyle::features::FEATURE_COUNT;
use drivestyle::idm::{
    idm_acceleration, log_likelihood, presets, rmse_5s, simulate, CfState, ComparisonInstants,
    FollowerStart, IdmParams, NoiseModel,
};
use drivestyle::kmeans::kmeans_fit_with_history;
use drivestyle::pca::fit_pca;
use drivestyle::recognition::{
    recognize_m2, Baselines, LibraryMetadata, ObservationWindow, StyleLibrary,
    STYLE_LIBRARY_SCHEMA,
};
use drivestyle::benchmark::{
    benchmark_curves_csv, run_benchmark, run_offline, run_sigma_sweep, sigma_sweep_csv,
};
use drivestyle::synth::{generate_corpus, generate_window, SynthConfig};
use drivestyle::util::Rng;

/// A model-exact pair: leader on a smooth profile, follower integrated with
/// the crate's own rollout (zero noise).
fn exact_pair(params: &IdmParams, duration_s: f64, phase: f64) -> CarFollowingPair {
    let n = (duration_s / DT).round() as usize + 1;
    let mut leader_positions = Vec::with_capacity(n);
    let mut leader_speeds = Vec::with_capacity(n);
    let mut x = 300.0;
    for i in 0..n {
        let t = i as f64 * DT;
        let v = 9.0 + 2.5 * (0.4 * t + phase).sin();
        leader_positions.push(x);
        leader_speeds.push(v);
        x += v * DT;
    }
    let v0 = leader_speeds[0];
    let gap0 = params.equilibrium_gap(v0).unwrap_or(30.0);
    let rollout = simulate(
        params,
        FollowerStart {
            position: 300.0 - gap0,
            speed: v0,
            gap: gap0,
        },
        &leader_positions,
        &leader_speeds,
        DT,
    )
    .unwrap();
    let samples = (0..n)
        .map(|i| drivestyle::data::PairSample {
            time: i as f64 * DT,
            follower: drivestyle::data::Kinematics {
                position: rollout.positions[i],
                speed: rollout.speeds[i],
                accel: rollout.accels[i],
            },
            leader: drivestyle::data::Kinematics {
                position: leader_positions[i],
                speed: leader_speeds[i],
                accel: 0.0,
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

/// A library whose prototypes are exactly the three style presets; the
/// projection half is filled with a consistent dummy (method 2 never uses
/// it).
fn prototype_library() -> StyleLibrary {
    let prototypes = presets::style_prototypes();
    let styles = label_styles(&prototypes).unwrap();
    let identity: Vec<[f64; FEATURE_COUNT]> = (0..FEATURE_COUNT)
        .map(|i| {
            let mut row = [0.0; FEATURE_COUNT];
            row[i] = 1.0;
            row
        })
        .collect();
    StyleLibrary {
        schema: STYLE_LIBRARY_SCHEMA.to_string(),
        standardizer: drivestyle::features::Standardizer {
            means: [0.0; FEATURE_COUNT],
            stds: [1.0; FEATURE_COUNT],
        },
        pca: drivestyle::pca::PcaModel {
            components: identity,
            explained_variance_ratio: vec![1.0 / FEATURE_COUNT as f64; FEATURE_COUNT],
            n_kept: 2,
        },
        kmeans: drivestyle::kmeans::KmeansModel {
            k: 3,
            centroids: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            labels: Vec::new(),
            sse: 0.0,
        },
        prototypes,
        styles,
        baselines: Baselines {
            literature: presets::literature(),
            aggregate: presets::aggregate(),
        },
        sigma_default: 0.15,
        metadata: LibraryMetadata {
            seed: 0,
            k: 3,
            dataset_hash: String::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    }
}

#[test]
fn criterion_1_self_consistency_oracle() {
    let started = Instant::now();
    let mut params_under_test = presets::style_prototypes();
    params_under_test.push(presets::literature());
    params_under_test.push(presets::aggregate());
    let mut rng = Rng::seeded(7);
    for _ in 0..5 {
        params_under_test.push(
            IdmParams::new(
                rng.range_f64(10.0, 40.0),
                rng.range_f64(0.5, 3.0),
                rng.range_f64(0.2, 6.0),
                rng.range_f64(0.2, 2.0),
                rng.range_f64(0.8, 3.0),
            )
            .unwrap(),
        );
    }

    let mut worst: f64 = 0.0;
    for (i, params) in params_under_test.iter().enumerate() {
        let pair = exact_pair(params, 12.0, 0.31 * i as f64);
        for start in [0.0, 2.0, 5.0] {
            let result = rmse_5s(params, &pair, start).unwrap();
            worst = worst.max(result.rmse);
        }
    }
    assert!(
        worst < 1e-9,
        "self-consistency RMSE reached {worst:e} (limit 1e-9)"
    );
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "criterion 1 took {elapsed:?} (limit 1 s)"
    );
    println!(
        "criterion 1: PASS - self-consistency RMSE {worst:.2e} < 1e-9 over {} parameter sets in {elapsed:?}",
        params_under_test.len()
    );
}

#[test]
fn criterion_2_synthetic_recognition_recovery() {
    let started = Instant::now();
    let lib = prototype_library();
    let prototypes = presets::style_prototypes();
    let sigma = 0.15;
    let t_durs = [0.5, 1.0, 2.0, 5.0];
    let trials_per_style = 300;

    // Shared noise seeds: each trial generates its longest window once and
    // evaluates every t_dur on prefixes of it.
    let mut correct = [0usize; 4];
    let mut total = 0usize;
    for (style, params) in prototypes.iter().enumerate() {
        for trial in 0..trials_per_style {
            let seed = (style as u64) << 32 | trial as u64;
            let window5 = generate_window(params, sigma, 5.0, seed).unwrap();
            total += 1;
            for (ti, &t_dur) in t_durs.iter().enumerate() {
                let n = (t_dur / DT).round() as usize;
                let prefix =
                    ObservationWindow::from_samples(window5.samples()[..n].to_vec()).unwrap();
                let outcome = recognize_m2(&lib, &prefix, sigma).unwrap();
                if outcome.cluster == style {
                    correct[ti] += 1;
                }
            }
        }
    }
    let rates: Vec<f64> = correct.iter().map(|&c| c as f64 / total as f64).collect();
    let at_2s = rates[2];
    assert!(
        at_2s >= 0.90,
        "recovery at t_dur = 2 s is {:.3} (limit 0.90); rates {rates:?}",
        at_2s
    );
    for w in rates.windows(2) {
        assert!(
            w[1] >= w[0],
            "recovery decreased with more data under shared seeds: {rates:?}"
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "criterion 2 took {elapsed:?} (limit 1 min)"
    );
    println!(
        "criterion 2: PASS - recovery {:.1}%/{:.1}%/{:.1}%/{:.1}% at t_dur 0.5/1/2/5 s over {} trials in {elapsed:?}",
        rates[0] * 100.0,
        rates[1] * 100.0,
        rates[2] * 100.0,
        rates[3] * 100.0,
        total
    );
}

#[test]
fn criterion_3_calibration_dominance() {
    let started = Instant::now();
    let corpus = generate_corpus(
        &SynthConfig {
            n_pairs: 30,
            duration_s: 30.0,
            noise_sigma: 0.15,
            ..SynthConfig::default()
        },
        404,
    )
    .unwrap();
    let prototypes = presets::style_prototypes();

    // Ground-truth clusters from the planted labels; calibrate each at the
    // default budget and compare against the literature preset and the
    // oracle floor (the generating parameters themselves).
    let mut calibrated_total = 0.0;
    let mut literature_total = 0.0;
    let mut floor_total = 0.0;
    let mut weight_total = 0.0;
    #[allow(clippy::needless_range_loop)] // style indexes corpus.planted too
    for style in 0..3 {
        let members: Vec<CarFollowingPair> = corpus
            .pairs
            .iter()
            .zip(corpus.planted.iter())
            .filter(|(_, &s)| s == style)
            .map(|(p, _)| p.clone())
            .collect();
        let problem = CalibrationProblem::new(&members);
        let result = calibrate(
            &problem,
            &CalibrateOptions {
                seed: 9000 + style as u64,
                ..CalibrateOptions::default()
            },
        )
        .unwrap();
        let literature = mean_rmse(
            &presets::literature(),
            &members,
            AnchorMode::FeatureWindowEnd,
            ComparisonInstants::WholeSeconds,
            0,
        )
        .mean;
        let floor = mean_rmse(
            &prototypes[style],
            &members,
            AnchorMode::FeatureWindowEnd,
            ComparisonInstants::WholeSeconds,
            0,
        )
        .mean;
        assert!(
            result.objective_value < literature,
            "style {style}: calibrated {:.3} m does not beat literature {:.3} m",
            result.objective_value,
            literature
        );
        assert!(
            result.objective_value < floor + 0.1,
            "style {style}: calibrated {:.3} m exceeds oracle floor {:.3} m + 0.1",
            result.objective_value,
            floor
        );
        let w = members.len() as f64;
        calibrated_total += result.objective_value * w;
        literature_total += literature * w;
        floor_total += floor * w;
        weight_total += w;
    }
    let calibrated = calibrated_total / weight_total;
    let literature = literature_total / weight_total;
    let floor = floor_total / weight_total;
    assert!(calibrated < literature && calibrated < floor + 0.1);

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 600.0,
        "criterion 3 took {elapsed:?} (limit 10 min)"
    );
    println!(
        "criterion 3: PASS - calibrated {calibrated:.3} m vs literature {literature:.3} m, oracle floor {floor:.3} m, in {elapsed:?}"
    );
}

#[test]
fn criterion_4_real_dataset_reproduction() {
    let path = match std::env::var("DRIVESTYLE_I80_PATH") {
        Ok(p) if !p.is_empty() => p,
        _ => {
            println!(
                "criterion 4: SKIPPED - set DRIVESTYLE_I80_PATH to the reconstructed I80 \
                 trajectory file (and optionally DRIVESTYLE_I80_CONFIG) to run it"
            );
            return;
        }
    };
    let config = match std::env::var("DRIVESTYLE_I80_CONFIG") {
        Ok(p) if !p.is_empty() => Config::from_path(p).unwrap(),
        _ => Config::default(),
    };

    let report = load_trajectories_path(&path, &config.ingest).unwrap();
    let pairs = extract_pairs(
        &report.samples,
        config.pipeline.min_pair_duration_s,
        config.ingest.gap_convention,
    );
    let pair_count = pairs.len();
    assert!(
        (750..=916).contains(&pair_count),
        "pair count {pair_count} outside 833 +/- 10%"
    );

    let (lib, offline_report, split) = run_offline(pairs, &config.pipeline).unwrap();
    let accumulated_2 = offline_report.explained_variance_ratio[..2].iter().sum::<f64>();
    assert!(
        accumulated_2 >= 0.90,
        "PC1+PC2 explained variance {accumulated_2:.3} < 0.90"
    );

    // Cluster proportions within +/- 10 percentage points of the reference
    // 31.4/61.4/7.2 split, up to permutation.
    let mut got: Vec<f64> = offline_report.clusters.iter().map(|c| c.proportion).collect();
    let mut want = [0.314, 0.614, 0.072];
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    for (g, w) in got.iter().zip(want.iter()) {
        assert!(
            (g - w).abs() <= 0.10,
            "cluster proportions {got:?} vs reference {want:?}"
        );
    }

    // Real-data half of criterion 3: per-cluster calibrated parameters beat
    // the literature preset in-sample.
    for c in &offline_report.clusters {
        assert!(
            c.objective_value <= c.literature_objective,
            "cluster {}: calibrated {:.3} vs literature {:.3}",
            c.cluster,
            c.objective_value,
            c.literature_objective
        );
    }

    let bench = run_benchmark(
        &lib,
        &split.online_pairs,
        &config.pipeline.t_dur_grid,
        config.pipeline.sigma,
        config.pipeline.rmse_instants,
        config.pipeline.workers,
    )
    .unwrap();
    for ((m2, agg), lit) in bench
        .curves
        .m2
        .iter()
        .zip(bench.curves.aggregate.iter())
        .zip(bench.curves.literature.iter())
    {
        if m2.t_dur >= 2.0 {
            assert!(
                m2.mean_rmse < agg.mean_rmse && agg.mean_rmse < lit.mean_rmse,
                "ordering m2 < aggregate < literature violated at t_dur {}: {:.3} / {:.3} / {:.3}",
                m2.t_dur,
                m2.mean_rmse,
                agg.mean_rmse,
                lit.mean_rmse
            );
        }
    }
    let best_m2 = bench
        .curves
        .m2
        .iter()
        .map(|p| p.mean_rmse)
        .fold(f64::INFINITY, f64::min);
    assert!(
        (1.1..=1.8).contains(&best_m2),
        "best m2 mean RMSE {best_m2:.3} outside [1.1, 1.8]"
    );
    let lit_pct = bench.m2_vs_literature.best_pct;
    let agg_pct = bench.m2_vs_aggregate.best_pct;
    assert!(lit_pct > 0.0 && (lit_pct - 0.377).abs() <= 0.15);
    assert!(agg_pct > 0.0 && (agg_pct - 0.244).abs() <= 0.15);

    println!(
        "criterion 4: PASS - {pair_count} pairs, PC1+PC2 {accumulated_2:.3}, best m2 {best_m2:.2} m, improvements {:.1}%/{:.1}%",
        lit_pct * 100.0,
        agg_pct * 100.0
    );
}

#[test]
fn criterion_5_numerical_invariants() {
    // Equilibrium gap closed form holds over a 5 s rollout.
    let mut worst_drift: f64 = 0.0;
    for params in [presets::neutral(), presets::timid(), presets::literature()] {
        for v in [3.0, 6.0, 9.0, 12.0] {
            if v >= params.v_star {
                continue;
            }
            let gap = params.equilibrium_gap(v).unwrap();
            let n = 51;
            let leader_positions: Vec<f64> = (0..n).map(|i| 100.0 + v * i as f64 * DT).collect();
            let leader_speeds = vec![v; n];
            let rollout = simulate(
                &params,
                FollowerStart {
                    position: 100.0 - gap,
                    speed: v,
                    gap,
                },
                &leader_positions,
                &leader_speeds,
                DT,
            )
            .unwrap();
            for (g, s) in rollout.gaps.iter().zip(rollout.speeds.iter()) {
                worst_drift = worst_drift.max((g - gap).abs()).max((s - v).abs());
            }
        }
    }
    assert!(worst_drift < 1e-6, "equilibrium drift {worst_drift:e}");

    // Lloyd iterations never increase the SSE.
    let mut rng = Rng::seeded(55);
    let points: Vec<Vec<f64>> = (0..240)
        .map(|i| {
            let center = (i % 3) as f64 * 8.0;
            vec![center + rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)]
        })
        .collect();
    let (_, history) = kmeans_fit_with_history(&points, 3, 1, 5).unwrap();
    assert!(history.len() > 1);
    for w in history.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "Lloyd SSE increased: {history:?}");
    }

    // PCA orthonormality and reconstruction to 1e-9.
    let rows: Vec<[f64; FEATURE_COUNT]> = (0..80)
        .map(|_| {
            let mut row = [0.0; FEATURE_COUNT];
            for v in &mut row {
                *v = rng.normal(0.0, 1.0);
            }
            row
        })
        .collect();
    let pca = fit_pca(&rows, 2).unwrap();
    for i in 0..FEATURE_COUNT {
        for j in 0..FEATURE_COUNT {
            let dot: f64 = pca.components[i]
                .iter()
                .zip(pca.components[j].iter())
                .map(|(a, b)| a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-9, "orthonormality ({i},{j}): {dot}");
        }
    }
    for row in rows.iter().take(20) {
        let back = pca.reconstruct(&pca.project_full(row));
        for (a, b) in row.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-9, "reconstruction error {}", (a - b).abs());
        }
    }

    // Likelihood sigma-argmax invariance on 100 random windows: the chosen
    // cluster is exactly the same for every sigma.
    let lib = prototype_library();
    let prototypes = presets::style_prototypes();
    for i in 0..100u64 {
        let style = (i % 3) as usize;
        let t_dur = 0.5 + (i % 7) as f64 * 0.5;
        let window = generate_window(&prototypes[style], 0.15, t_dur, 7000 + i).unwrap();
        let reference = recognize_m2(&lib, &window, 0.15).unwrap().cluster;
        for sigma in [0.01, 0.05, 0.1, 0.2, 0.5] {
            let got = recognize_m2(&lib, &window, sigma).unwrap().cluster;
            assert_eq!(got, reference, "argmax changed with sigma {sigma} on window {i}");
        }
    }

    println!(
        "criterion 5: PASS - equilibrium drift {worst_drift:.2e}, Lloyd monotone, PCA orthonormal, sigma-argmax invariant"
    );
}

#[test]
fn criterion_6_log_likelihood_closed_forms() {
    // Zero-residual window: L = -n ln(sqrt(2 pi) sigma) to 1e-12 relative.
    let params = presets::neutral();
    let pair = exact_pair(&params, 6.0, 0.0);
    let sigma = 0.15;
    let noise = NoiseModel::new(sigma).unwrap();
    let mut worst_rel: f64 = 0.0;
    for n in [1usize, 5, 20, 50] {
        let l = log_likelihood(&params, &noise, &pair.samples[..n]).unwrap();
        let expected = -(n as f64) * ((2.0 * std::f64::consts::PI).sqrt() * sigma).ln();
        worst_rel = worst_rel.max(((l - expected) / expected).abs());
    }
    assert!(worst_rel <= 1e-12, "relative error {worst_rel:e}");

    // A 2 s window at 10 Hz carries exactly 20 points.
    let window = ObservationWindow::from_pair_prefix(&pair, 2.0).unwrap();
    assert_eq!(window.len(), 20);
    assert!((window.t_dur() - 2.0).abs() < 1e-12);

    // Residuals enter through the observed state: a hand-built single-frame
    // window at a known state gives exactly -r^2/(2 s^2) - ln(sqrt(2 pi) s).
    let state = CfState {
        v: 8.0,
        v_leader: 9.0,
        d: 14.0,
    };
    let model_a = idm_acceleration(&params, &state);
    let observed_a = model_a + 0.3;
    let single = vec![drivestyle::data::PairSample {
        time: 0.0,
        follower: drivestyle::data::Kinematics {
            position: 0.0,
            speed: state.v,
            accel: observed_a,
        },
        leader: drivestyle::data::Kinematics {
            position: 14.0,
            speed: state.v_leader,
            accel: 0.0,
        },
        gap: state.d,
    }];
    let l = log_likelihood(&params, &noise, &single).unwrap();
    let expected =
        -0.3f64.powi(2) / (2.0 * sigma * sigma) - ((2.0 * std::f64::consts::PI).sqrt() * sigma).ln();
    assert!((l - expected).abs() < 1e-12);

    println!(
        "criterion 6: PASS - zero-residual closed form to {worst_rel:.1e} relative, n = 20 at 2 s"
    );
}

#[test]
fn criterion_7_byte_identical_determinism() {
    let corpus = generate_corpus(
        &SynthConfig {
            n_pairs: 24,
            duration_s: 26.0,
            ..SynthConfig::default()
        },
        777,
    )
    .unwrap();
    // Determinism is the point here, not labeling: manual style overrides
    // keep the run total even if the rank-based labels would tie at this
    // reduced calibration budget.
    let overrides: std::collections::BTreeMap<usize, drivestyle::calibration::Style> = [
        (0, drivestyle::calibration::Style::Neutral),
        (1, drivestyle::calibration::Style::RelativelyAggressive),
        (2, drivestyle::calibration::Style::Timid),
    ]
    .into_iter()
    .collect();
    let base = PipelineConfig {
        seed: 31,
        calibration_budget: 800,
        calibration_starts: 8,
        kmeans_restarts: 8,
        elbow_k_max: 6,
        t_dur_grid: vec![0.5, 2.0, 5.0],
        style_overrides: Some(overrides),
        ..PipelineConfig::default()
    };

    let mut artifacts: Vec<(String, String, String, String)> = Vec::new();
    for workers in [1usize, 0, 1] {
        let cfg = PipelineConfig {
            workers,
            ..base.clone()
        };
        let (lib, report, split) = run_offline(corpus.pairs.clone(), &cfg).unwrap();
        let bench = run_benchmark(
            &lib,
            &split.online_pairs,
            &cfg.t_dur_grid,
            cfg.sigma,
            cfg.rmse_instants,
            workers,
        )
        .unwrap();
        let sweep = run_sigma_sweep(
            &lib,
            &split.online_pairs,
            &[0.05, 0.15],
            &[0.5, 2.0],
            cfg.rmse_instants,
            workers,
        )
        .unwrap();
        artifacts.push((
            lib.to_json(),
            serde_json::to_string_pretty(&report).unwrap(),
            benchmark_curves_csv(&bench),
            sigma_sweep_csv(&sweep),
        ));
    }
    // Two runs at workers=1 are byte-identical, and the all-cores run
    // matches them too.
    assert_eq!(artifacts[0], artifacts[2], "repeat run differed");
    assert_eq!(artifacts[0], artifacts[1], "worker count changed artifacts");

    println!(
        "criterion 7: PASS - library, offline report, benchmark CSV and sweep CSV byte-identical across runs and worker counts"
    );
}
