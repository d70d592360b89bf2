//! Parsing of trace files and JSON descriptors, regularization of raw
//! samples onto a uniform grid, and gap handling.
//!
//! Trace CSV format (one file per sensor, filename stem = sensor id):
//!
//! ```text
//! timestamp,frequency_hz
//! 2024-08-31T07:35:30.000000Z,60.001
//! 2024-08-31T07:35:30.100000Z,          <- empty value marks a gap
//! ```
//!
//! Raw samples are re-gridded by linear interpolation. Holes longer than
//! twice the target interval are never interpolated across; the grid points
//! inside them become gap markers, and downstream onset/RoCoF searches skip
//! any window touching a gap.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timefmt;
use crate::trace::{
    is_gap, FrequencyTrace, RegionDefinition, FREQ_BAND_MAX_HZ, FREQ_BAND_MIN_HZ, GAP,
};

/// Expected trace CSV header.
pub const TRACE_CSV_HEADER: &str = "timestamp,frequency_hz";

/// Holes longer than this many target intervals become gap markers instead
/// of being interpolated. Single dropped samples (a hole of exactly two
/// intervals between surviving neighbors) are still bridged.
pub const GAP_THRESHOLD_INTERVALS: f64 = 2.0;

/// One row of a trace file: absolute timestamp plus a frequency value or a
/// gap marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub timestamp: f64,
    pub frequency_hz: Option<f64>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing header; expected `{TRACE_CSV_HEADER}`")]
    MissingHeader,
    #[error("invalid header {found:?}; expected `{TRACE_CSV_HEADER}`")]
    InvalidHeader { found: String },
    #[error("row {row}: {reason}")]
    Row { row: u64, reason: String },
    #[error("row {row}: timestamp does not increase over the previous row")]
    NonMonotonic { row: u64 },
    #[error("all samples are gap-marked")]
    AllGaps,
    #[error("raw span {span_s} s is shorter than twice the target interval {interval_s} s")]
    SpanTooShort { span_s: f64, interval_s: f64 },
    #[error("target interval must be strictly positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("fewer than 2 raw samples")]
    TooFewSamples,
    #[error("no trace files in {0}")]
    EmptyDirectory(PathBuf),
    #[error("no usable sensors (see diagnostics)")]
    NoUsableSensors,
    #[error("window [{0}, {1}] does not overlap the loaded traces")]
    WindowOutsideSpan(f64, f64),
    #[error("traces share no common time span")]
    NoCommonSpan,
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

/// Parse one trace CSV from a reader. Returns samples in file order.
///
/// Rows are numbered by file line, header included, so the first data row is
/// row 2. Any malformed row aborts the parse with its row number.
pub fn parse_trace_reader<R: Read>(reader: R) -> Result<Vec<RawSample>, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    {
        let headers = csv_reader.headers().map_err(|_| IngestError::MissingHeader)?;
        let found: Vec<&str> = headers.iter().collect();
        if found != ["timestamp", "frequency_hz"] {
            if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
                return Err(IngestError::MissingHeader);
            }
            return Err(IngestError::InvalidHeader { found: found.join(",") });
        }
    }

    let mut samples: Vec<RawSample> = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| IngestError::Row {
            row: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(IngestError::Row {
                row,
                reason: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let timestamp = timefmt::parse_utc_seconds(&record[0])
            .map_err(|reason| IngestError::Row { row, reason })?;
        let raw_value = record[1].trim();
        let frequency_hz = if raw_value.is_empty() {
            None
        } else {
            let v: f64 = raw_value.parse().map_err(|_| IngestError::Row {
                row,
                reason: format!("unparseable frequency {raw_value:?}"),
            })?;
            Some(v)
        };
        if let Some(prev) = samples.last() {
            if timestamp <= prev.timestamp {
                return Err(IngestError::NonMonotonic { row });
            }
        }
        samples.push(RawSample { timestamp, frequency_hz });
    }
    Ok(samples)
}

/// Parse a trace file; the filename stem becomes the sensor id.
pub fn parse_trace_file(path: &Path) -> Result<(String, Vec<RawSample>), IngestError> {
    let sensor_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = fs::File::open(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    let samples = parse_trace_reader(file)?;
    Ok((sensor_id, samples))
}

/// Round `t` up to the next multiple of `interval`, treating values within
/// the alignment tolerance of a multiple as already on it.
fn ceil_to_multiple(t: f64, interval: f64) -> f64 {
    let q = t / interval;
    let k = if (q - q.round()).abs() <= crate::trace::GRID_ALIGN_TOL { q.round() } else { q.ceil() };
    k * interval
}

fn floor_to_multiple(t: f64, interval: f64) -> f64 {
    let q = t / interval;
    let k = if (q - q.round()).abs() <= crate::trace::GRID_ALIGN_TOL { q.round() } else { q.floor() };
    k * interval
}

/// Re-grid raw samples onto `t = k·target_interval` (absolute multiples, so
/// traces regularized to the same interval share grid phase).
///
/// Values come from linear interpolation between the nearest valued raw
/// neighbors. Grid points inside a hole longer than
/// [`GAP_THRESHOLD_INTERVALS`]·`target_interval`, or outside the valued
/// span, become gap markers. The operation is idempotent: re-running it on
/// its own output reproduces the trace exactly.
pub fn regularize(
    sensor_id: &str,
    samples: &[RawSample],
    target_interval: f64,
) -> Result<FrequencyTrace, IngestError> {
    if !(target_interval > 0.0) || !target_interval.is_finite() {
        return Err(IngestError::NonPositiveInterval(target_interval));
    }
    if samples.len() < 2 {
        return Err(IngestError::TooFewSamples);
    }
    let span = samples.last().unwrap().timestamp - samples[0].timestamp;
    if span < 2.0 * target_interval {
        return Err(IngestError::SpanTooShort { span_s: span, interval_s: target_interval });
    }
    let valued: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|s| s.frequency_hz.map(|v| (s.timestamp, v)))
        .collect();
    if valued.is_empty() {
        return Err(IngestError::AllGaps);
    }

    let grid_start = ceil_to_multiple(samples[0].timestamp, target_interval);
    let grid_end = floor_to_multiple(samples.last().unwrap().timestamp, target_interval);
    let n = ((grid_end - grid_start) / target_interval).round() as i64 + 1;
    if n < 2 {
        return Err(IngestError::SpanTooShort { span_s: span, interval_s: target_interval });
    }

    let exact_tol = target_interval * crate::trace::GRID_ALIGN_TOL;
    let gap_limit = GAP_THRESHOLD_INTERVALS * target_interval + exact_tol;
    let mut values = Vec::with_capacity(n as usize);
    // Index into `valued` of the last sample at or before the cursor.
    let mut left = 0usize;
    for k in 0..n {
        let t = grid_start + k as f64 * target_interval;
        while left + 1 < valued.len() && valued[left + 1].0 <= t + exact_tol {
            left += 1;
        }
        let (t_a, v_a) = valued[left];
        if (t - t_a).abs() <= exact_tol {
            values.push(v_a);
            continue;
        }
        if t < t_a || left + 1 >= valued.len() {
            // Outside the valued span; nothing to bracket with.
            values.push(GAP);
            continue;
        }
        let (t_b, v_b) = valued[left + 1];
        if t_b - t_a > gap_limit {
            values.push(GAP);
        } else {
            let ratio = ((t - t_a) / (t_b - t_a)).clamp(0.0, 1.0);
            values.push(v_a + (v_b - v_a) * ratio);
        }
    }
    Ok(FrequencyTrace::new(sensor_id, grid_start, target_interval, values))
}

/// Every trace of one event window, on a shared grid.
#[derive(Debug, Clone)]
pub struct TraceBundle {
    pub traces: BTreeMap<String, FrequencyTrace>,
    /// Intersection of all member spans, `[start, end]`.
    pub common_span: (f64, f64),
}

impl TraceBundle {
    /// Build a bundle from traces, computing the common span.
    pub fn from_traces(traces: BTreeMap<String, FrequencyTrace>) -> Result<Self, IngestError> {
        if traces.is_empty() {
            return Err(IngestError::NoUsableSensors);
        }
        let start = traces.values().map(|t| t.t0).fold(f64::MIN, f64::max);
        let end = traces.values().map(|t| t.end_time()).fold(f64::MAX, f64::min);
        if start >= end {
            return Err(IngestError::NoCommonSpan);
        }
        Ok(Self { traces, common_span: (start, end) })
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Region members that are present in the bundle, in region order.
    pub fn present_members<'a>(&self, region: &'a RegionDefinition) -> Vec<&'a str> {
        region
            .member_sensor_ids
            .iter()
            .filter(|id| self.traces.contains_key(id.as_str()))
            .map(|id| id.as_str())
            .collect()
    }

    /// Region members with no trace in the bundle, in region order.
    pub fn missing_members(&self, region: &RegionDefinition) -> Vec<String> {
        region
            .member_sensor_ids
            .iter()
            .filter(|id| !self.traces.contains_key(id.as_str()))
            .cloned()
            .collect()
    }
}

/// Infer the target grid interval from raw files: the median of per-file
/// median timestamp steps, rounded to the microsecond.
fn infer_interval(per_file: &[Vec<RawSample>]) -> Option<f64> {
    let mut medians: Vec<f64> = per_file
        .iter()
        .filter_map(|samples| {
            let mut diffs: Vec<f64> =
                samples.windows(2).map(|w| w[1].timestamp - w[0].timestamp).collect();
            if diffs.is_empty() {
                None
            } else {
                Some(crate::math::median_in_place(&mut diffs))
            }
        })
        .collect();
    if medians.is_empty() {
        return None;
    }
    let m = crate::math::median_in_place(&mut medians);
    Some((m * 1e6).round() / 1e6)
}

/// Load every `*.csv` trace in `directory`, regularize onto a common grid,
/// and restrict to `window`.
///
/// Out-of-band raw values (outside 55–65 Hz) are gap-marked rather than
/// kept; that and any per-file parse failure are reported in the returned
/// diagnostics, as are region members with no file. Fails only when nothing
/// usable remains.
pub fn load_bundle(
    directory: &Path,
    region: &RegionDefinition,
    window: (f64, f64),
) -> Result<(TraceBundle, Vec<String>), IngestError> {
    let mut diagnostics = Vec::new();
    let entries = fs::read_dir(directory)
        .map_err(|source| IngestError::Io { path: directory.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(IngestError::EmptyDirectory(directory.to_path_buf()));
    }

    let mut parsed: Vec<(String, Vec<RawSample>)> = Vec::new();
    for path in &paths {
        match parse_trace_file(path) {
            Ok((sensor_id, mut samples)) => {
                let out_of_band = samples
                    .iter_mut()
                    .filter(|s| {
                        s.frequency_hz.is_some_and(|v| {
                            !(FREQ_BAND_MIN_HZ..=FREQ_BAND_MAX_HZ).contains(&v)
                        })
                    })
                    .map(|s| s.frequency_hz = None)
                    .count();
                if out_of_band > 0 {
                    diagnostics.push(format!(
                        "sensor {sensor_id}: {out_of_band} out-of-band samples gap-marked"
                    ));
                }
                parsed.push((sensor_id, samples));
            }
            Err(e) => diagnostics.push(format!("{}: {e}", path.display())),
        }
    }

    let interval = infer_interval(
        &parsed.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>(),
    )
    .ok_or(IngestError::NoUsableSensors)?;

    let mut any_regularized = false;
    let mut traces = BTreeMap::new();
    for (sensor_id, samples) in &parsed {
        match regularize(sensor_id, samples, interval) {
            Ok(full) => {
                any_regularized = true;
                match full.restrict(window.0, window.1) {
                    Some(clipped) => {
                        traces.insert(sensor_id.clone(), clipped);
                    }
                    None => diagnostics
                        .push(format!("sensor {sensor_id}: no data inside the analysis window")),
                }
            }
            Err(e) => diagnostics.push(format!("sensor {sensor_id}: {e}")),
        }
    }
    if traces.is_empty() {
        if any_regularized {
            return Err(IngestError::WindowOutsideSpan(window.0, window.1));
        }
        return Err(IngestError::NoUsableSensors);
    }

    for missing in region.member_sensor_ids.iter().filter(|id| !traces.contains_key(id.as_str())) {
        diagnostics.push(format!("missing sensor {missing}"));
    }

    let bundle = TraceBundle::from_traces(traces)?;
    Ok((bundle, diagnostics))
}

// ---------------------------------------------------------------------------
// JSON descriptors
// ---------------------------------------------------------------------------

/// One sensor entry of the region descriptor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorDescriptor {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub in_region: bool,
}

/// On-disk region descriptor: the full sensor set with region membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDescriptor {
    pub region_id: String,
    pub sensors: Vec<SensorDescriptor>,
}

impl RegionDescriptor {
    /// Uniformly weighted region over the `in_region` sensors.
    pub fn to_region_definition(&self) -> RegionDefinition {
        RegionDefinition::uniform(
            self.region_id.clone(),
            self.sensors.iter().filter(|s| s.in_region).map(|s| s.id.clone()).collect(),
        )
    }
}

/// Read and validate a region descriptor JSON file.
pub fn load_region(path: &Path) -> Result<RegionDescriptor, IngestError> {
    let text = fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| IngestError::Json { path: path.to_path_buf(), source })
}

/// Read an event descriptor JSON file.
pub fn load_event(path: &Path) -> Result<crate::trace::DisturbanceEvent, IngestError> {
    let text = fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| IngestError::Json { path: path.to_path_buf(), source })
}

/// Write a trace in the CSV format [`parse_trace_file`] reads.
pub fn write_trace_csv<W: std::io::Write>(w: &mut W, trace: &FrequencyTrace) -> std::io::Result<()> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for (k, &v) in trace.samples.iter().enumerate() {
        let ts = timefmt::format_utc_seconds(trace.time_at(k));
        if is_gap(v) {
            writeln!(w, "{ts},")?;
        } else {
            writeln!(w, "{ts},{v}")?;
        }
    }
    Ok(())
}
