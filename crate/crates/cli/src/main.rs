//! Command-line driver: every pipeline stage as a subcommand.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use drivestyle::benchmark::{
    benchmark_curves_csv, clusters_csv, elbow_csv, explained_variance_csv, features_csv,
    run_benchmark, run_offline, run_sigma_sweep, OfflineReport,
};
use drivestyle::calibration::{calibrate, CalibrateOptions, CalibrationProblem};
use drivestyle::config::Config;
use drivestyle::data::{
    extract_pairs, load_trajectories_path, split_dataset, CarFollowingPair, Kinematics, PairSample,
};
use drivestyle::error::Error;
use drivestyle::features::extract_features;
use drivestyle::idm::IdmParams;
use drivestyle::recognition::{
    recognize_m1, recognize_m2, ObservationWindow, RecognitionOutcome, StyleLibrary,
};
use drivestyle::synth::{corpus_to_trajectories, generate_corpus, trajectories_csv};

#[derive(Parser)]
#[command(
    name = "drivestyle",
    version,
    about = "Car-following driving-style learning, online recognition, and trajectory-prediction benchmarks"
)]
struct Cli {
    /// Configuration file (.toml or .json); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the pipeline seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override worker threads (0 = available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    M1,
    M2,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory corpus (CSV + matching config).
    Synth {
        /// Number of leader-follower pairs.
        #[arg(long)]
        pairs: Option<usize>,
        /// Episode duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Acceleration noise, m/s^2.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Extract car-following pairs from a trajectory file.
    ExtractPairs {
        /// Trajectory file (or pairs JSON to re-serialize).
        #[arg(long)]
        input: PathBuf,
    },
    /// Compute the 13 style indicators for each extracted pair.
    Features {
        /// Trajectory file or pairs JSON.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the full offline stage and write the style library.
    LearnStyles {
        /// Trajectory file or pairs JSON.
        #[arg(long)]
        input: PathBuf,
    },
    /// Calibrate one aggregate parameter set over all extracted pairs.
    Calibrate {
        /// Trajectory file or pairs JSON.
        #[arg(long)]
        input: PathBuf,
    },
    /// Recognize driving styles: batch over pairs, or streaming NDJSON.
    Recognize {
        /// Style library JSON from learn-styles.
        #[arg(long)]
        library: PathBuf,
        /// Trajectory file or pairs JSON (batch mode).
        #[arg(long, required_unless_present = "stream")]
        input: Option<PathBuf>,
        /// Observation window per pair, seconds (batch mode).
        #[arg(long, default_value_t = 2.0)]
        t_dur: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::M2)]
        method: MethodArg,
        /// Likelihood noise std; defaults to the library's.
        #[arg(long)]
        sigma: Option<f64>,
        /// Read NDJSON observation records from stdin, emit outcomes per line.
        #[arg(long)]
        stream: bool,
    },
    /// Score both methods and both baselines over the t_dur grid.
    Benchmark {
        /// Style library JSON from learn-styles.
        #[arg(long)]
        library: PathBuf,
        /// Trajectory file or pairs JSON.
        #[arg(long)]
        input: PathBuf,
        /// Likelihood noise std for method 2; defaults to the config's.
        #[arg(long)]
        sigma: Option<f64>,
        /// Comma-separated observation durations, seconds.
        #[arg(long, value_delimiter = ',')]
        t_durs: Option<Vec<f64>>,
        /// Use every extracted pair instead of the online split.
        #[arg(long)]
        all_pairs: bool,
    },
    /// Method-2 RMSE over a sigma grid at a few observation durations.
    SigmaSweep {
        /// Style library JSON from learn-styles.
        #[arg(long)]
        library: PathBuf,
        /// Trajectory file or pairs JSON.
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated likelihood noise values, m/s^2.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        /// Comma-separated observation durations, seconds.
        #[arg(long, value_delimiter = ',')]
        t_durs: Option<Vec<f64>>,
        /// Use every extracted pair instead of the online split.
        #[arg(long)]
        all_pairs: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.pipeline.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.pipeline.workers = workers;
    }
    let out = cli.output_dir.clone();

    match cli.command {
        Command::Synth {
            pairs,
            duration,
            noise,
        } => cmd_synth(&config, &out, pairs, duration, noise),
        Command::ExtractPairs { input } => cmd_extract(&config, &out, &input),
        Command::Features { input } => cmd_features(&config, &out, &input),
        Command::LearnStyles { input } => cmd_learn(&config, &out, &input),
        Command::Calibrate { input } => cmd_calibrate(&config, &out, &input),
        Command::Recognize {
            library,
            input,
            t_dur,
            method,
            sigma,
            stream,
        } => cmd_recognize(&config, &library, input.as_deref(), t_dur, method, sigma, stream),
        Command::Benchmark {
            library,
            input,
            sigma,
            t_durs,
            all_pairs,
        } => cmd_benchmark(&config, &out, &library, &input, sigma, t_durs, all_pairs),
        Command::SigmaSweep {
            library,
            input,
            sigmas,
            t_durs,
            all_pairs,
        } => cmd_sigma_sweep(&config, &out, &library, &input, sigmas, t_durs, all_pairs),
    }
}

// ---------------------------------------------------------------------------
// Pair I/O shared by subcommands
// ---------------------------------------------------------------------------

/// Self-describing JSON form of extracted pairs (per-frame arrays).
#[derive(Serialize, Deserialize)]
struct PairDoc {
    follower_id: u64,
    leader_id: u64,
    duration: f64,
    time: Vec<f64>,
    follower_position: Vec<f64>,
    follower_speed: Vec<f64>,
    follower_accel: Vec<f64>,
    leader_position: Vec<f64>,
    leader_speed: Vec<f64>,
    leader_accel: Vec<f64>,
    gap: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PairsDoc {
    schema: String,
    pair_count: usize,
    pairs: Vec<PairDoc>,
}

const PAIRS_SCHEMA: &str = "drivestyle-pairs-v1";

impl PairsDoc {
    fn from_pairs(pairs: &[CarFollowingPair]) -> Self {
        PairsDoc {
            schema: PAIRS_SCHEMA.to_string(),
            pair_count: pairs.len(),
            pairs: pairs
                .iter()
                .map(|p| PairDoc {
                    follower_id: p.follower_id,
                    leader_id: p.leader_id,
                    duration: p.duration(),
                    time: p.samples.iter().map(|s| s.time).collect(),
                    follower_position: p.samples.iter().map(|s| s.follower.position).collect(),
                    follower_speed: p.samples.iter().map(|s| s.follower.speed).collect(),
                    follower_accel: p.samples.iter().map(|s| s.follower.accel).collect(),
                    leader_position: p.samples.iter().map(|s| s.leader.position).collect(),
                    leader_speed: p.samples.iter().map(|s| s.leader.speed).collect(),
                    leader_accel: p.samples.iter().map(|s| s.leader.accel).collect(),
                    gap: p.samples.iter().map(|s| s.gap).collect(),
                })
                .collect(),
        }
    }

    fn into_pairs(self) -> Result<Vec<CarFollowingPair>, Error> {
        if self.schema != PAIRS_SCHEMA {
            return Err(Error::data(format!(
                "unexpected pairs schema '{}' (want {PAIRS_SCHEMA})",
                self.schema
            )));
        }
        self.pairs
            .into_iter()
            .map(|d| {
                let n = d.time.len();
                for (name, len) in [
                    ("follower_position", d.follower_position.len()),
                    ("follower_speed", d.follower_speed.len()),
                    ("follower_accel", d.follower_accel.len()),
                    ("leader_position", d.leader_position.len()),
                    ("leader_speed", d.leader_speed.len()),
                    ("leader_accel", d.leader_accel.len()),
                    ("gap", d.gap.len()),
                ] {
                    if len != n {
                        return Err(Error::data(format!(
                            "pair {}: array '{name}' has {len} entries, expected {n}",
                            d.follower_id
                        )));
                    }
                }
                Ok(CarFollowingPair {
                    follower_id: d.follower_id,
                    leader_id: d.leader_id,
                    samples: (0..n)
                        .map(|i| PairSample {
                            time: d.time[i],
                            follower: Kinematics {
                                position: d.follower_position[i],
                                speed: d.follower_speed[i],
                                accel: d.follower_accel[i],
                            },
                            leader: Kinematics {
                                position: d.leader_position[i],
                                speed: d.leader_speed[i],
                                accel: d.leader_accel[i],
                            },
                            gap: d.gap[i],
                        })
                        .collect(),
                })
            })
            .collect()
    }
}

/// Loads pairs from either a pairs JSON document or a raw trajectory file.
fn load_pairs(config: &Config, input: &Path) -> Result<Vec<CarFollowingPair>, Error> {
    if input.extension().and_then(|e| e.to_str()) == Some("json") {
        let text = std::fs::read_to_string(input)?;
        let doc: PairsDoc = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("pairs JSON parse failure: {e}")))?;
        return doc.into_pairs();
    }
    let report = load_trajectories_path(input, &config.ingest)?;
    if !report.rejected.is_empty() {
        eprintln!(
            "warning: {} malformed row(s) rejected (first: line {}: {})",
            report.rejected.len(),
            report.rejected[0].line,
            report.rejected[0].message
        );
    }
    let pairs = extract_pairs(
        &report.samples,
        config.pipeline.min_pair_duration_s,
        config.ingest.gap_convention,
    );
    Ok(pairs)
}

/// The benchmark protocol evaluates the online split unless told otherwise.
fn online_selection(
    config: &Config,
    pairs: Vec<CarFollowingPair>,
    all_pairs: bool,
) -> Result<Vec<CarFollowingPair>, Error> {
    if all_pairs {
        return Ok(pairs);
    }
    let split = split_dataset(pairs, config.pipeline.split_fraction, config.pipeline.seed)?;
    Ok(split.online_pairs)
}

fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::numerical(format!("serialization failure: {e}")))?;
    write_text(dir, name, &text)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_synth(
    config: &Config,
    out: &Path,
    pairs: Option<usize>,
    duration: Option<f64>,
    noise: Option<f64>,
) -> Result<(), Error> {
    let mut synth = config.synth.clone();
    if let Some(p) = pairs {
        synth.n_pairs = p;
    }
    if let Some(d) = duration {
        synth.duration_s = d;
    }
    if let Some(n) = noise {
        synth.noise_sigma = n;
    }
    let corpus = generate_corpus(&synth, config.pipeline.seed)?;
    let samples = corpus_to_trajectories(&corpus);
    let csv_path = write_text(out, "trajectories.csv", &trajectories_csv(&samples))?;

    // A config whose ingest section matches the CSV just written.
    let mut file_config = config.clone();
    file_config.synth = synth.clone();
    file_config.ingest = drivestyle::data::IngestConfig {
        units: drivestyle::data::Units::Meters,
        ..drivestyle::data::IngestConfig::default()
    };
    let config_path = write_text(out, "synth_config.toml", &file_config.to_toml())?;

    let truth: Vec<serde_json::Value> = corpus
        .pairs
        .iter()
        .zip(corpus.planted.iter())
        .map(|(p, &style)| {
            serde_json::json!({
                "follower_id": p.follower_id,
                "leader_id": p.leader_id,
                "planted_style": style,
            })
        })
        .collect();
    let truth_path = write_json(out, "planted.json", &truth)?;

    println!(
        "synthetic corpus: {} pairs x {:.1} s, noise sigma {} m/s^2",
        synth.n_pairs, synth.duration_s, synth.noise_sigma
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", config_path.display());
    println!("wrote {}", truth_path.display());
    Ok(())
}

fn cmd_extract(config: &Config, out: &Path, input: &Path) -> Result<(), Error> {
    let pairs = load_pairs(config, input)?;
    let doc = PairsDoc::from_pairs(&pairs);
    let path = write_json(out, "pairs.json", &doc)?;
    let total_duration: f64 = pairs.iter().map(|p| p.duration()).sum();
    println!(
        "{} car-following pairs (>= {:.0} s each, {:.1} s of following in total)",
        pairs.len(),
        config.pipeline.min_pair_duration_s,
        total_duration
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_features(config: &Config, out: &Path, input: &Path) -> Result<(), Error> {
    let pairs = load_pairs(config, input)?;
    let window = config.pipeline.feature_window_s;
    let mut features = Vec::new();
    let mut skipped = 0usize;
    for pair in &pairs {
        match extract_features(pair, window) {
            Ok(f) => features.push(f),
            Err(_) => skipped += 1,
        }
    }
    let path = write_text(out, "features.csv", &features_csv(&features))?;
    println!(
        "{} feature vectors over {window:.0} s windows ({skipped} pair(s) too short)",
        features.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn print_offline_summary(report: &OfflineReport) {
    println!(
        "pairs: {} total -> {} offline / {} online (seed {})",
        report.pair_count, report.offline_count, report.online_count, report.seed
    );
    let ratios = &report.explained_variance_ratio;
    let mut acc = 0.0;
    let shown: Vec<String> = ratios
        .iter()
        .take(5)
        .enumerate()
        .map(|(i, r)| {
            acc += r;
            format!("PC{} {:.3} (acc {:.3})", i + 1, r, acc)
        })
        .collect();
    println!("explained variance: {}", shown.join(", "));
    match report.elbow_suggestion {
        Some(k) => println!("elbow suggests k = {k}; using k = {}", report.k),
        None => println!("elbow scan too short for a suggestion; using k = {}", report.k),
    }
    println!("cluster  style                  size  share     v*      T   d_min  a_max  b_comf   rmse    lit-rmse");
    for c in &report.clusters {
        println!(
            "{:<8} {:<22} {:>4} {:>6.1}% {:>6.1} {:>6.2} {:>7.2} {:>6.2} {:>7.2} {:>7.3} {:>9.3}",
            c.cluster,
            c.style.to_string(),
            c.size,
            c.proportion * 100.0,
            c.params.v_star,
            c.params.t_headway,
            c.params.d_min,
            c.params.a_max,
            c.params.b_comf,
            c.objective_value,
            c.literature_objective,
        );
    }
    let a = &report.aggregate;
    println!(
        "{:<8} {:<22} {:>4} {:>6.1}% {:>6.1} {:>6.2} {:>7.2} {:>6.2} {:>7.2} {:>7.3}",
        "agg",
        "(single cluster)",
        report.offline_count,
        100.0,
        a.params.v_star,
        a.params.t_headway,
        a.params.d_min,
        a.params.a_max,
        a.params.b_comf,
        a.objective_value,
    );
    for c in &report.clusters {
        if !c.params_at_bounds.is_empty() {
            println!(
                "note: cluster {} calibrated onto bound(s): {}",
                c.cluster,
                c.params_at_bounds.join(", ")
            );
        }
    }
    if !a.params_at_bounds.is_empty() {
        println!(
            "note: aggregate calibrated onto bound(s): {}",
            a.params_at_bounds.join(", ")
        );
    }
}

fn cmd_learn(config: &Config, out: &Path, input: &Path) -> Result<(), Error> {
    let pairs = load_pairs(config, input)?;
    let (library, report, _split) = run_offline(pairs, &config.pipeline)?;

    let lib_path = write_text(out, "style_library.json", &library.to_json())?;
    let report_path = write_json(out, "offline_report.json", &report)?;
    write_text(out, "elbow.csv", &elbow_csv(&report.elbow))?;
    write_text(
        out,
        "explained_variance.csv",
        &explained_variance_csv(&report.explained_variance_ratio),
    )?;
    write_text(out, "clusters.csv", &clusters_csv(&report))?;

    print_offline_summary(&report);
    println!("wrote {}", lib_path.display());
    println!("wrote {}", report_path.display());
    Ok(())
}

fn cmd_calibrate(config: &Config, out: &Path, input: &Path) -> Result<(), Error> {
    let pairs = load_pairs(config, input)?;
    let problem = CalibrationProblem {
        pairs: &pairs,
        bounds: config.pipeline.bounds,
        anchor: config.pipeline.anchor,
        instants: config.pipeline.rmse_instants,
    };
    let result = calibrate(
        &problem,
        &CalibrateOptions {
            budget: config.pipeline.calibration_budget,
            starts: config.pipeline.calibration_starts,
            seed: config.pipeline.seed,
            workers: config.pipeline.workers,
        },
    )?;
    let path = write_json(out, "calibration.json", &result)?;
    let p = result.params;
    println!(
        "calibrated over {} pairs: v*={:.1} T={:.2} d_min={:.2} a_max={:.2} b_comf={:.2} (mean RMSE {:.3} m, {} evals, converged: {})",
        pairs.len(),
        p.v_star,
        p.t_headway,
        p.d_min,
        p.a_max,
        p.b_comf,
        result.objective_value,
        result.evaluations,
        result.converged
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// Outcome line for batch and streaming recognition.
#[derive(Serialize)]
struct OutcomeRecord {
    vehicle_id: u64,
    t_dur: f64,
    cluster: usize,
    style: String,
    scores: Vec<f64>,
    params: IdmParams,
}

impl OutcomeRecord {
    fn new(vehicle_id: u64, t_dur: f64, outcome: &RecognitionOutcome) -> Self {
        OutcomeRecord {
            vehicle_id,
            t_dur,
            cluster: outcome.cluster,
            style: outcome.style.to_string(),
            scores: outcome.per_cluster_scores.clone(),
            params: outcome.params,
        }
    }
}

/// Streaming input record: one observed frame of one vehicle.
#[derive(Deserialize)]
struct StreamRecord {
    vehicle_id: u64,
    t: f64,
    follower: StreamKinematics,
    leader: StreamKinematics,
    gap: f64,
}

#[derive(Deserialize)]
struct StreamKinematics {
    x: f64,
    v: f64,
    a: f64,
}

fn cmd_recognize(
    config: &Config,
    library: &Path,
    input: Option<&Path>,
    t_dur: f64,
    method: MethodArg,
    sigma: Option<f64>,
    stream: bool,
) -> Result<(), Error> {
    let lib = StyleLibrary::load(library)?;
    let sigma = sigma.unwrap_or(lib.sigma_default);

    if stream {
        return stream_recognize(&lib, method, sigma);
    }

    let input = input.ok_or_else(|| Error::config("batch recognition needs --input"))?;
    let pairs = load_pairs(config, input)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut skipped = 0usize;
    for pair in &pairs {
        let window = match ObservationWindow::from_pair_prefix(pair, t_dur) {
            Ok(w) => w,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let outcome = match method {
            MethodArg::M1 => recognize_m1(&lib, &window),
            MethodArg::M2 => recognize_m2(&lib, &window, sigma),
        }?;
        let record = OutcomeRecord::new(pair.follower_id, window.t_dur(), &outcome);
        writeln!(
            out,
            "{}",
            serde_json::to_string(&record).map_err(|e| Error::numerical(e.to_string()))?
        )?;
    }
    if skipped > 0 {
        eprintln!("warning: {skipped} pair(s) shorter than the {t_dur} s window were skipped");
    }
    Ok(())
}

/// Streaming mode: accumulate per-vehicle windows from stdin NDJSON and emit
/// a refreshed outcome after every frame. A discontinuity restarts that
/// vehicle's window from the offending frame (reported on stderr).
fn stream_recognize(lib: &StyleLibrary, method: MethodArg, sigma: f64) -> Result<(), Error> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut windows: BTreeMap<u64, ObservationWindow> = BTreeMap::new();

    for (line_no, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StreamRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("line {}: bad record: {e}", line_no + 1);
                continue;
            }
        };
        let sample = PairSample {
            time: record.t,
            follower: Kinematics {
                position: record.follower.x,
                speed: record.follower.v,
                accel: record.follower.a,
            },
            leader: Kinematics {
                position: record.leader.x,
                speed: record.leader.v,
                accel: record.leader.a,
            },
            gap: record.gap,
        };
        let window = windows.entry(record.vehicle_id).or_default();
        if window.accumulate(std::slice::from_ref(&sample)).is_err() {
            eprintln!(
                "vehicle {}: discontinuous frame at t={}; restarting window",
                record.vehicle_id, record.t
            );
            let mut fresh = ObservationWindow::new();
            fresh
                .accumulate(std::slice::from_ref(&sample))
                .expect("single frame always accumulates");
            *window = fresh;
        }
        let outcome = match method {
            MethodArg::M1 => recognize_m1(lib, window),
            MethodArg::M2 => recognize_m2(lib, window, sigma),
        }?;
        let record_out = OutcomeRecord::new(record.vehicle_id, window.t_dur(), &outcome);
        writeln!(
            out,
            "{}",
            serde_json::to_string(&record_out).map_err(|e| Error::numerical(e.to_string()))?
        )?;
    }
    Ok(())
}

fn cmd_benchmark(
    config: &Config,
    out: &Path,
    library: &Path,
    input: &Path,
    sigma: Option<f64>,
    t_durs: Option<Vec<f64>>,
    all_pairs: bool,
) -> Result<(), Error> {
    let lib = StyleLibrary::load(library)?;
    let pairs = load_pairs(config, input)?;
    let online = online_selection(config, pairs, all_pairs)?;
    let t_durs = t_durs.unwrap_or_else(|| config.pipeline.t_dur_grid.clone());
    let sigma = sigma.unwrap_or(config.pipeline.sigma);

    let report = run_benchmark(
        &lib,
        &online,
        &t_durs,
        sigma,
        config.pipeline.rmse_instants,
        config.pipeline.workers,
    )?;

    let json_path = write_json(out, "benchmark_report.json", &report)?;
    let csv_path = write_text(out, "benchmark_curves.csv", &benchmark_curves_csv(&report))?;

    println!("benchmark over {} online pairs, sigma = {sigma}", online.len());
    println!("t_dur     m1      m2      literature  aggregate");
    for (((m1, m2), lit), agg) in report
        .curves
        .m1
        .iter()
        .zip(report.curves.m2.iter())
        .zip(report.curves.literature.iter())
        .zip(report.curves.aggregate.iter())
    {
        println!(
            "{:>5.1}  {:>6.3}  {:>6.3}  {:>10.3}  {:>9.3}   ({} pairs)",
            m1.t_dur, m1.mean_rmse, m2.mean_rmse, lit.mean_rmse, agg.mean_rmse, m2.evaluated
        );
    }
    println!(
        "m2 vs literature: best improvement {:.1}% at t_dur {:.1} s",
        report.m2_vs_literature.best_pct * 100.0,
        report.m2_vs_literature.best_t_dur
    );
    println!(
        "m2 vs aggregate:  best improvement {:.1}% at t_dur {:.1} s",
        report.m2_vs_aggregate.best_pct * 100.0,
        report.m2_vs_aggregate.best_t_dur
    );
    println!("wrote {}", json_path.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_sigma_sweep(
    config: &Config,
    out: &Path,
    library: &Path,
    input: &Path,
    sigmas: Option<Vec<f64>>,
    t_durs: Option<Vec<f64>>,
    all_pairs: bool,
) -> Result<(), Error> {
    let lib = StyleLibrary::load(library)?;
    let pairs = load_pairs(config, input)?;
    let online = online_selection(config, pairs, all_pairs)?;
    let sigmas = sigmas.unwrap_or_else(|| config.pipeline.sigma_grid.clone());
    let t_durs = t_durs.unwrap_or_else(|| config.pipeline.sigma_sweep_t_durs.clone());

    let report = run_sigma_sweep(
        &lib,
        &online,
        &sigmas,
        &t_durs,
        config.pipeline.rmse_instants,
        config.pipeline.workers,
    )?;
    let json_path = write_json(out, "sigma_sweep.json", &report)?;
    let csv_path = write_text(
        out,
        "sigma_sweep.csv",
        &drivestyle::benchmark::sigma_sweep_csv(&report),
    )?;
    println!(
        "sigma sweep: {} sigma values x {} window lengths over {} pairs",
        sigmas.len(),
        t_durs.len(),
        online.len()
    );
    println!("wrote {}", json_path.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}
