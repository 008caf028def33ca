//! Tabular trajectory ingestion with a configurable column mapping.
//!
//! The input is a delimiter-separated file (comma or whitespace) with one row
//! per vehicle-frame. The mapping from semantic fields to columns comes from
//! configuration; columns may be referenced by header name or zero-based
//! index. Units default to feet and are converted to SI on load.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{TrajectorySample, DT, FRAME_TOL};
use crate::error::{Error, Result};

/// Feet-to-meters conversion applied when the source is in imperial units.
pub const FEET_TO_METERS: f64 = 0.3048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    Comma,
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Feet,
    Meters,
}

/// How the net gap is derived from the recorded space headway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapConvention {
    /// Subtract the leader's vehicle length from the space headway when the
    /// length column is mapped; headway as-is otherwise.
    NetOfLeaderLength,
    /// Use the space-headway column unchanged.
    HeadwayAsIs,
}

/// A column referenced either by header name or by zero-based index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Semantic field to column mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub vehicle_id: ColumnRef,
    pub frame: ColumnRef,
    pub position: ColumnRef,
    pub speed: ColumnRef,
    pub lane: ColumnRef,
    pub leader: ColumnRef,
    pub space_headway: ColumnRef,
    /// Optional; when absent, acceleration is derived from speed by central
    /// finite differences at 0.1 s.
    #[serde(default)]
    pub acceleration: Option<ColumnRef>,
    /// Optional vehicle length column, used by the net-gap convention.
    #[serde(default)]
    pub length: Option<ColumnRef>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        // NGSIM-style header names.
        ColumnMap {
            vehicle_id: ColumnRef::Name("Vehicle_ID".into()),
            frame: ColumnRef::Name("Frame_ID".into()),
            position: ColumnRef::Name("Local_Y".into()),
            speed: ColumnRef::Name("v_Vel".into()),
            lane: ColumnRef::Name("Lane_ID".into()),
            leader: ColumnRef::Name("Preceding".into()),
            space_headway: ColumnRef::Name("Space_Headway".into()),
            acceleration: Some(ColumnRef::Name("v_Acc".into())),
            length: Some(ColumnRef::Name("v_Length".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub delimiter: Delimiter,
    pub has_header: bool,
    pub units: Units,
    pub columns: ColumnMap,
    /// When set, rows whose lane is not listed are dropped (not errors).
    pub lane_filter: Option<Vec<i64>>,
    /// The frame column is a 10 Hz frame counter rather than seconds.
    pub time_is_frames: bool,
    pub gap_convention: GapConvention,
    /// Abort on the first malformed row instead of collecting record errors.
    pub strict: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            delimiter: Delimiter::Comma,
            has_header: true,
            units: Units::Feet,
            columns: ColumnMap::default(),
            lane_filter: None,
            time_is_frames: true,
            gap_convention: GapConvention::NetOfLeaderLength,
            strict: false,
        }
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number in the source file.
    pub line: usize,
    pub message: String,
}

/// Loader output: accepted samples grouped by vehicle and sorted by time,
/// plus any rejected rows.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub samples: Vec<TrajectorySample>,
    pub rejected: Vec<RecordError>,
}

struct ResolvedColumns {
    vehicle_id: usize,
    frame: usize,
    position: usize,
    speed: usize,
    lane: usize,
    leader: usize,
    space_headway: usize,
    acceleration: Option<usize>,
    length: Option<usize>,
}

fn resolve(col: &ColumnRef, header: Option<&[String]>, field: &str) -> Result<usize> {
    match col {
        ColumnRef::Index(i) => Ok(*i),
        ColumnRef::Name(name) => {
            let header = header.ok_or_else(|| {
                Error::config(format!(
                    "column '{field}' is mapped by name '{name}' but the file has no header"
                ))
            })?;
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::config(format!("column '{name}' (for {field}) not found in header")))
        }
    }
}

fn split_row(line: &str, delimiter: Delimiter) -> Vec<String> {
    match delimiter {
        Delimiter::Comma => line.split(',').map(|s| s.trim().to_string()).collect(),
        Delimiter::Whitespace => line.split_whitespace().map(|s| s.to_string()).collect(),
    }
}

pub fn load_trajectories_path(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<LoadReport> {
    let file = File::open(path.as_ref())?;
    load_trajectories(BufReader::new(file), cfg)
}

/// Parses a trajectory file into samples grouped by vehicle and sorted by
/// time, with units normalized to SI.
///
/// Malformed rows become [`RecordError`]s carrying the 1-based line number;
/// in strict mode the first such row aborts the load. A missing or unmapped
/// column is a configuration error.
pub fn load_trajectories<R: BufRead>(reader: R, cfg: &IngestConfig) -> Result<LoadReport> {
    let mut lines = reader.lines().enumerate();

    let header: Option<Vec<String>> = if cfg.has_header {
        match lines.next() {
            Some((_, line)) => Some(split_row(&line?, cfg.delimiter)),
            None => return Err(Error::data("input file is empty")),
        }
    } else {
        None
    };

    let cols = ResolvedColumns {
        vehicle_id: resolve(&cfg.columns.vehicle_id, header.as_deref(), "vehicle_id")?,
        frame: resolve(&cfg.columns.frame, header.as_deref(), "frame")?,
        position: resolve(&cfg.columns.position, header.as_deref(), "position")?,
        speed: resolve(&cfg.columns.speed, header.as_deref(), "speed")?,
        lane: resolve(&cfg.columns.lane, header.as_deref(), "lane")?,
        leader: resolve(&cfg.columns.leader, header.as_deref(), "leader")?,
        space_headway: resolve(&cfg.columns.space_headway, header.as_deref(), "space_headway")?,
        acceleration: cfg
            .columns
            .acceleration
            .as_ref()
            .map(|c| resolve(c, header.as_deref(), "acceleration"))
            .transpose()?,
        length: cfg
            .columns
            .length
            .as_ref()
            .map(|c| resolve(c, header.as_deref(), "length"))
            .transpose()?,
    };

    let scale = match cfg.units {
        Units::Feet => FEET_TO_METERS,
        Units::Meters => 1.0,
    };

    let mut samples = Vec::new();
    let mut rejected = Vec::new();

    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_row(&line, line_no, &cols, cfg, scale) {
            Ok(Some(sample)) => samples.push(sample),
            Ok(None) => {} // filtered by lane
            Err(err) => {
                if cfg.strict {
                    return Err(Error::data(format!("line {line_no}: {}", err.message)));
                }
                rejected.push(err);
            }
        }
    }

    // Group by vehicle, sort by time, then fill any missing accelerations.
    samples.sort_by(|a, b| {
        (a.vehicle_id, a.frame_time)
            .partial_cmp(&(b.vehicle_id, b.frame_time))
            .unwrap()
    });
    if cols.acceleration.is_none() {
        fill_accelerations(&mut samples);
    }

    Ok(LoadReport { samples, rejected })
}

fn parse_row(
    line: &str,
    line_no: usize,
    cols: &ResolvedColumns,
    cfg: &IngestConfig,
    scale: f64,
) -> std::result::Result<Option<TrajectorySample>, RecordError> {
    let fields = split_row(line, cfg.delimiter);
    let get = |i: usize, what: &str| -> std::result::Result<&str, RecordError> {
        fields.get(i).map(|s| s.as_str()).ok_or_else(|| RecordError {
            line: line_no,
            message: format!("row has {} fields; {what} expects column {i}", fields.len()),
        })
    };
    let num = |i: usize, what: &str| -> std::result::Result<f64, RecordError> {
        let raw = get(i, what)?;
        raw.parse::<f64>().map_err(|_| RecordError {
            line: line_no,
            message: format!("{what} value '{raw}' is not a number"),
        })
    };

    let lane = num(cols.lane, "lane")? as i64;
    if let Some(filter) = &cfg.lane_filter {
        if !filter.contains(&lane) {
            return Ok(None);
        }
    }

    let vehicle_id = num(cols.vehicle_id, "vehicle_id")? as u64;
    let frame_raw = num(cols.frame, "frame")?;
    let frame_time = if cfg.time_is_frames {
        frame_raw * DT
    } else {
        frame_raw
    };
    let position = num(cols.position, "position")? * scale;
    let speed = num(cols.speed, "speed")? * scale;
    if speed < 0.0 {
        return Err(RecordError {
            line: line_no,
            message: format!("negative speed {speed:.3} m/s"),
        });
    }
    let acceleration = match cols.acceleration {
        Some(i) => num(i, "acceleration")? * scale,
        None => 0.0, // derived later from speed differences
    };
    let leader_raw = num(cols.leader, "leader")? as i64;
    let (leader_id, gap) = if leader_raw > 0 {
        let headway = num(cols.space_headway, "space_headway")? * scale;
        if headway <= 0.0 {
            return Err(RecordError {
                line: line_no,
                message: format!("non-positive space headway {headway:.3} m with a leader present"),
            });
        }
        (Some(leader_raw as u64), Some(headway))
    } else {
        (None, None)
    };
    let length = match cols.length {
        Some(i) => Some(num(i, "length")? * scale),
        None => None,
    };

    Ok(Some(TrajectorySample {
        vehicle_id,
        frame_time,
        position,
        speed,
        acceleration,
        lane_id: lane,
        leader_id,
        gap,
        length,
    }))
}

/// Central finite differences of speed within contiguous 10 Hz runs of each
/// vehicle; one-sided differences at run boundaries.
fn fill_accelerations(samples: &mut [TrajectorySample]) {
    let n = samples.len();
    let mut start = 0;
    while start < n {
        let vehicle = samples[start].vehicle_id;
        let mut end = start + 1;
        while end < n
            && samples[end].vehicle_id == vehicle
            && (samples[end].frame_time - samples[end - 1].frame_time - DT).abs() < FRAME_TOL
        {
            end += 1;
        }
        let run = &mut samples[start..end];
        let m = run.len();
        if m >= 2 {
            let speeds: Vec<f64> = run.iter().map(|s| s.speed).collect();
            for (i, s) in run.iter_mut().enumerate() {
                s.acceleration = if i == 0 {
                    (speeds[1] - speeds[0]) / DT
                } else if i == m - 1 {
                    (speeds[m - 1] - speeds[m - 2]) / DT
                } else {
                    (speeds[i + 1] - speeds[i - 1]) / (2.0 * DT)
                };
            }
        }
        start = end;
    }
}
