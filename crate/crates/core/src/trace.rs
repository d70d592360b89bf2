//! Core domain types shared by every stage of the pipeline: frequency
//! traces, region/event descriptors, analysis constants, and the per-event
//! result row.
//!
//! Sign convention: RoCoF values carry sign everywhere. A generation trip
//! drives frequency down (negative RoCoF); a load loss drives it up.
//! Magnitudes are taken only inside the swing equation and when selecting
//! the "peak" window. Inertia values are always strictly positive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timefmt;

/// Physical plausibility band for grid frequency samples, in Hz.
pub const FREQ_BAND_MIN_HZ: f64 = 55.0;
/// Upper edge of the plausibility band, in Hz.
pub const FREQ_BAND_MAX_HZ: f64 = 65.0;

/// Gap marker used inside [`FrequencyTrace::samples`].
pub const GAP: f64 = f64::NAN;

/// True when a sample value is the gap marker.
#[inline]
pub fn is_gap(value_hz: f64) -> bool {
    value_hz.is_nan()
}

/// Relative tolerance (as a fraction of the sample interval) used when
/// matching absolute timestamps to grid indices. Loose enough to absorb
/// microsecond rounding from text round-trips, far below half a sample.
pub(crate) const GRID_ALIGN_TOL: f64 = 1e-3;

/// One sensor's uniformly sampled frequency time series.
///
/// Samples live on the implicit grid `t0 + k·sample_interval`; no per-sample
/// timestamps are stored. Gaps are marked with [`GAP`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub sensor_id: String,
    /// Absolute UTC timestamp of the first sample, seconds with fraction.
    pub t0: f64,
    /// Grid spacing in seconds, strictly positive.
    pub sample_interval: f64,
    /// Frequency values in Hz; [`GAP`] marks missing data.
    pub samples: Vec<f64>,
}

impl FrequencyTrace {
    pub fn new(sensor_id: impl Into<String>, t0: f64, sample_interval: f64, samples: Vec<f64>) -> Self {
        Self { sensor_id: sensor_id.into(), t0, sample_interval, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Absolute timestamp of sample `index`.
    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.sample_interval
    }

    /// Timestamp of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.len().saturating_sub(1))
    }

    /// Inclusive span `[t0, end]` covered by the trace.
    pub fn span(&self) -> (f64, f64) {
        (self.t0, self.end_time())
    }

    pub fn is_gap_at(&self, index: usize) -> bool {
        is_gap(self.samples[index])
    }

    /// Grid index of an absolute timestamp, if it lands on the grid (within
    /// [`GRID_ALIGN_TOL`] of a sample instant) and inside the trace.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.sample_interval).round();
        if k < 0.0 || k >= self.len() as f64 {
            return None;
        }
        let idx = k as usize;
        if (t - self.time_at(idx)).abs() <= self.sample_interval * GRID_ALIGN_TOL {
            Some(idx)
        } else {
            None
        }
    }

    /// First grid index whose timestamp is ≥ `t` (within tolerance), clamped
    /// to the trace; `None` when `t` is past the end.
    pub fn first_index_at_or_after(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.sample_interval - GRID_ALIGN_TOL).ceil();
        let k = k.max(0.0);
        if k >= self.len() as f64 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Last grid index whose timestamp is ≤ `t` (within tolerance), clamped
    /// to the trace; `None` when `t` is before the start.
    pub fn last_index_at_or_before(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.sample_interval + GRID_ALIGN_TOL).floor();
        if k < 0.0 {
            None
        } else {
            Some((k as usize).min(self.len() - 1))
        }
    }

    /// True when any sample in the inclusive index range is a gap.
    pub fn has_gap_in(&self, first: usize, last: usize) -> bool {
        self.samples[first..=last].iter().any(|&v| is_gap(v))
    }

    /// True when `other` lives on the same grid: equal spacing and aligned
    /// phase (start times differ by a whole number of intervals).
    pub fn same_grid(&self, other: &FrequencyTrace) -> bool {
        let dt = self.sample_interval;
        if (dt - other.sample_interval).abs() > dt * 1e-9 {
            return false;
        }
        let steps = (other.t0 - self.t0) / dt;
        (steps - steps.round()).abs() <= GRID_ALIGN_TOL
    }

    /// Restrict the trace to `[start, end]`, keeping grid alignment.
    /// `None` when fewer than two samples remain.
    pub fn restrict(&self, start: f64, end: f64) -> Option<FrequencyTrace> {
        let first = self.first_index_at_or_after(start)?;
        let last = self.last_index_at_or_before(end)?;
        if last < first + 1 {
            return None;
        }
        Some(FrequencyTrace {
            sensor_id: self.sensor_id.clone(),
            t0: self.time_at(first),
            sample_interval: self.sample_interval,
            samples: self.samples[first..=last].to_vec(),
        })
    }
}

/// A single broken invariant found by [`validate_trace`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceViolation {
    #[error("sample interval must be strictly positive, got {value}")]
    NonPositiveInterval { value: f64 },
    #[error("trace must hold at least 2 samples, got {len}")]
    TooFewSamples { len: usize },
    #[error("unmarked out-of-band value {value_hz} Hz at sample index {index}")]
    OutOfBand { index: usize, value_hz: f64 },
}

/// Check every [`FrequencyTrace`] invariant. Returns an empty list iff the
/// trace is valid; each rule reports its first offending sample index.
pub fn validate_trace(trace: &FrequencyTrace) -> Vec<TraceViolation> {
    let mut violations = Vec::new();
    if !(trace.sample_interval > 0.0) || !trace.sample_interval.is_finite() {
        violations.push(TraceViolation::NonPositiveInterval { value: trace.sample_interval });
    }
    if trace.len() < 2 {
        violations.push(TraceViolation::TooFewSamples { len: trace.len() });
    }
    if let Some((index, &value_hz)) = trace
        .samples
        .iter()
        .enumerate()
        .find(|(_, &v)| !is_gap(v) && !(FREQ_BAND_MIN_HZ..=FREQ_BAND_MAX_HZ).contains(&v))
    {
        violations.push(TraceViolation::OutOfBand { index, value_hz });
    }
    violations
}

/// Which sensors make up the study region and how they are weighted.
///
/// Member order is preserved for deterministic output; ids must be unique.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDefinition {
    pub region_id: String,
    pub member_sensor_ids: Vec<String>,
    /// Optional per-member weights, aligned with `member_sensor_ids`. Each
    /// must be ≥ 0 and they must sum to 1 within 1e-9. `None` means uniform.
    pub weights: Option<Vec<f64>>,
}

impl RegionDefinition {
    /// Uniformly weighted region over the given members.
    pub fn uniform(region_id: impl Into<String>, members: Vec<String>) -> Self {
        Self { region_id: region_id.into(), member_sensor_ids: members, weights: None }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.member_sensor_ids.is_empty() {
            return Err(ModelError::InvalidRegion("member set is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in &self.member_sensor_ids {
            if !seen.insert(id) {
                return Err(ModelError::InvalidRegion(format!("duplicate member sensor id {id:?}")));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.member_sensor_ids.len() {
                return Err(ModelError::InvalidRegion(format!(
                    "{} weights for {} members",
                    w.len(),
                    self.member_sensor_ids.len()
                )));
            }
            if let Some(bad) = w.iter().find(|&&x| !(x >= 0.0)) {
                return Err(ModelError::InvalidRegion(format!("negative weight {bad}")));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ModelError::InvalidRegion(format!("weights sum to {sum}, expected 1")));
            }
        }
        Ok(())
    }
}

/// Direction of the power mismatch. A generation trip pulls frequency down,
/// a load loss pushes it up; the magnitude is carried by
/// [`DisturbanceEvent::delta_p_mw`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    GenerationTrip,
    LoadLoss,
}

impl EventKind {
    /// Expected sign of post-onset RoCoF for this kind of event.
    pub fn expected_rocof_sign(self) -> f64 {
        match self {
            EventKind::GenerationTrip => -1.0,
            EventKind::LoadLoss => 1.0,
        }
    }
}

/// A confirmed disturbance: coarse time hint (±30 s), power mismatch
/// magnitude, and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub event_id: String,
    /// Coarse hint of the event time; the onset detector searches ±30 s
    /// around it. Serialized as ISO-8601.
    #[serde(with = "iso_timestamp")]
    pub approx_time: f64,
    /// Power mismatch magnitude in MW, strictly positive.
    pub delta_p_mw: f64,
    pub kind: EventKind,
    pub region_id: String,
}

impl DisturbanceEvent {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.delta_p_mw > 0.0) {
            return Err(ModelError::InvalidEvent(format!(
                "delta_p_mw must be > 0, got {}",
                self.delta_p_mw
            )));
        }
        Ok(())
    }
}

/// Analysis constants with the standard defaults: 60 Hz nominal, 0.1 s
/// RoCoF window over a 0.5 s post-onset horizon, 0.5 s onset windows, and a
/// 1e-4 Hz/s division guard for the swing equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConstants {
    pub nominal_frequency_hz: f64,
    pub rocof_window_s: f64,
    pub rocof_horizon_s: f64,
    pub onset_window_s: f64,
    /// RoCoF magnitudes below this are treated as unresolvable and refuse
    /// the swing-equation division.
    pub min_rocof_hz_per_s: f64,
}

impl Default for SystemConstants {
    fn default() -> Self {
        Self {
            nominal_frequency_hz: 60.0,
            rocof_window_s: 0.1,
            rocof_horizon_s: 0.5,
            onset_window_s: 0.5,
            min_rocof_hz_per_s: 1e-4,
        }
    }
}

impl SystemConstants {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.nominal_frequency_hz > 0.0) {
            return Err(ModelError::InvalidConstants("nominal frequency must be positive".into()));
        }
        if !(self.rocof_window_s > 0.0) {
            return Err(ModelError::InvalidConstants("rocof window must be positive".into()));
        }
        if self.rocof_window_s > self.rocof_horizon_s {
            return Err(ModelError::InvalidConstants(format!(
                "rocof window {} s exceeds horizon {} s",
                self.rocof_window_s, self.rocof_horizon_s
            )));
        }
        if !(self.onset_window_s > 0.0) {
            return Err(ModelError::InvalidConstants("onset window must be positive".into()));
        }
        if !(self.min_rocof_hz_per_s > 0.0) {
            return Err(ModelError::InvalidConstants("rocof guard must be positive".into()));
        }
        Ok(())
    }
}

/// The complete per-event metric row plus diagnostics.
///
/// RoCoF fields are in Hz/s and signed; conversion to mHz/s is a reporting
/// concern (see [`crate::report`]). Onset timestamps serialize as ISO-8601.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub event_id: String,
    pub interconnection_rocof_hz_s: f64,
    pub regional_rocof_hz_s: f64,
    /// Worst (maximum-magnitude) single-sensor RoCoF in the region.
    pub local_rocof_hz_s: f64,
    /// Per-sensor peak RoCoF, keyed by sensor id (sorted).
    pub per_sensor_rocof: BTreeMap<String, f64>,
    pub h_intercon_mva_s: f64,
    pub h_region_mva_s: f64,
    pub h_local_mva_s: f64,
    /// Interconnection onset minus regional onset, an exact multiple of the
    /// grid interval. Negative when the wider grid reacts first.
    pub arrival_time_s: f64,
    /// `h_region_mva_s / h_intercon_mva_s`, dimensionless.
    pub region_to_system_ratio: f64,
    #[serde(with = "iso_timestamp")]
    pub onset_time_region: f64,
    #[serde(with = "iso_timestamp")]
    pub onset_time_intercon: f64,
    pub diagnostics: Vec<String>,
}

/// Serde adapter storing `f64` UTC seconds as ISO-8601 text.
mod iso_timestamp {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::timefmt::format_utc_seconds(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        super::timefmt::parse_utc_seconds(&text).map_err(D::Error::custom)
    }
}

/// Construction errors for the descriptor types in this module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid region definition: {0}")]
    InvalidRegion(String),
    #[error("invalid disturbance event: {0}")]
    InvalidEvent(String),
    #[error("invalid system constants: {0}")]
    InvalidConstants(String),
}
