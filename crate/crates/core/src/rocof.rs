//! Representative post-onset RoCoF: the peak least-squares slope of a short
//! window slid one grid step at a time across the first half second after
//! onset.
//!
//! At 10 samples/s the default 0.1 s window holds exactly two samples and
//! the fit degenerates to the finite difference; at higher rates the same
//! estimator uses every in-window sample.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ingest::TraceBundle;
use crate::math;
use crate::onset::{self, OnsetError};
use crate::trace::{FrequencyTrace, RegionDefinition, SystemConstants};

/// A peak RoCoF measurement and the window that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RocofEstimate {
    /// Signed slope of maximum magnitude, Hz/s.
    pub value_hz_s: f64,
    /// Absolute timestamp where the winning window starts.
    pub window_start: f64,
    /// Window length in seconds.
    pub window_s: f64,
    /// Search horizon after onset in seconds.
    pub horizon_s: f64,
    /// Number of windows the sweep evaluated.
    pub n_windows_evaluated: usize,
}

impl RocofEstimate {
    /// Wrap an externally reported RoCoF value (e.g. a published table
    /// entry, in mHz/s) so it can feed the swing equation. Window metadata
    /// is zeroed; `n_windows_evaluated` is 0 to mark that no sweep ran.
    pub fn from_reported_mhz_s(value_mhz_s: f64) -> Self {
        Self {
            value_hz_s: value_mhz_s / 1e3,
            window_start: 0.0,
            window_s: 0.0,
            horizon_s: 0.0,
            n_windows_evaluated: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RocofError {
    #[error("onset time {onset} is not on the trace grid")]
    OnsetNotOnGrid { onset: f64 },
    #[error("trace ends {missing_s} s before the post-onset horizon")]
    InsufficientData { missing_s: f64 },
    #[error("gap inside the post-onset horizon")]
    GapInHorizon,
    #[error("window {window_s} s holds fewer than 2 samples at {interval_s} s sampling")]
    WindowTooShort { window_s: f64, interval_s: f64 },
    #[error("no usable member sensors: {0:?}")]
    NoUsableSensors(Vec<String>),
    #[error("onset detection failed for {sensor}: {source}")]
    Onset { sensor: String, source: OnsetError },
}

/// Peak sliding-window RoCoF over `[onset, onset + horizon]`.
///
/// The window advances one grid step per evaluation; the signed slope of
/// maximum magnitude wins, ties broken by the earliest window.
pub fn peak_rocof(
    trace: &FrequencyTrace,
    onset_time: f64,
    window_s: f64,
    horizon_s: f64,
) -> Result<RocofEstimate, RocofError> {
    let dt = trace.sample_interval;
    let onset_idx = trace
        .index_of(onset_time)
        .ok_or(RocofError::OnsetNotOnGrid { onset: onset_time })?;
    let window_steps = (window_s / dt + crate::trace::GRID_ALIGN_TOL).floor() as usize;
    if window_steps < 1 {
        return Err(RocofError::WindowTooShort { window_s, interval_s: dt });
    }
    let horizon_steps = (horizon_s / dt + crate::trace::GRID_ALIGN_TOL).floor() as usize;
    let end_idx = onset_idx + horizon_steps;
    if end_idx >= trace.len() {
        let missing = (end_idx + 1 - trace.len()) as f64 * dt;
        return Err(RocofError::InsufficientData { missing_s: missing });
    }
    if trace.has_gap_in(onset_idx, end_idx) {
        return Err(RocofError::GapInHorizon);
    }
    if horizon_steps < window_steps {
        return Err(RocofError::InsufficientData {
            missing_s: (window_steps - horizon_steps) as f64 * dt,
        });
    }

    let n_windows = horizon_steps - window_steps + 1;
    let mut best_value = 0.0_f64;
    let mut best_start = onset_idx;
    let mut found = false;
    for start in onset_idx..onset_idx + n_windows {
        let slope = math::least_squares_slope(&trace.samples[start..=start + window_steps], dt);
        if !found || slope.abs() > best_value.abs() {
            best_value = slope;
            best_start = start;
            found = true;
        }
    }
    Ok(RocofEstimate {
        value_hz_s: best_value,
        window_start: trace.time_at(best_start),
        window_s,
        horizon_s,
        n_windows_evaluated: n_windows,
    })
}

/// Peak RoCoF of the interconnection median trace, using the configured
/// window and horizon. Same contract as [`peak_rocof`].
pub fn interconnection_rocof(
    intercon_trace: &FrequencyTrace,
    onset_time: f64,
    constants: &SystemConstants,
) -> Result<RocofEstimate, RocofError> {
    peak_rocof(intercon_trace, onset_time, constants.rocof_window_s, constants.rocof_horizon_s)
}

/// Per-sensor peak RoCoF across the region members.
#[derive(Debug, Clone)]
pub struct LocalSweep {
    /// Successful estimates, keyed by sensor id.
    pub per_sensor: BTreeMap<String, RocofEstimate>,
    /// The maximum-magnitude entry.
    pub worst: RocofEstimate,
    /// Sensor id of the worst entry.
    pub worst_sensor: String,
    /// Sensors that failed onset detection or the RoCoF sweep, with reasons.
    pub diagnostics: Vec<String>,
}

/// Sweep every region member present in the bundle: each sensor gets its own
/// onset (sensors see the event at different times) and its own peak RoCoF.
///
/// Sensors that fail are reported in `diagnostics`, never silently dropped.
/// Errors only when no member yields an estimate.
pub fn local_rocof_sweep(
    bundle: &TraceBundle,
    region: &RegionDefinition,
    search_span: (f64, f64),
    constants: &SystemConstants,
) -> Result<LocalSweep, RocofError> {
    let mut per_sensor = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for id in &region.member_sensor_ids {
        let Some(trace) = bundle.traces.get(id) else {
            diagnostics.push(format!("sensor {id}: not present in bundle"));
            continue;
        };
        let onset = match onset::detect_onset(trace, search_span, constants.onset_window_s) {
            Ok(o) => o,
            Err(e) => {
                diagnostics.push(format!("sensor {id}: onset detection failed: {e}"));
                continue;
            }
        };
        match peak_rocof(trace, onset.onset_time, constants.rocof_window_s, constants.rocof_horizon_s)
        {
            Ok(estimate) => {
                per_sensor.insert(id.clone(), estimate);
            }
            Err(e) => diagnostics.push(format!("sensor {id}: rocof sweep failed: {e}")),
        }
    }
    if per_sensor.is_empty() {
        return Err(RocofError::NoUsableSensors(diagnostics));
    }
    let (worst_sensor, worst) = per_sensor
        .iter()
        .max_by(|a, b| a.1.value_hz_s.abs().total_cmp(&b.1.value_hz_s.abs()))
        .map(|(id, est)| (id.clone(), est.clone()))
        .expect("non-empty map");
    Ok(LocalSweep { per_sensor, worst, worst_sensor, diagnostics })
}
