//! The reporting boundary: metric rows in table units (RoCoF in mHz/s,
//! inertia in MVA·s, ratio in percent) and the plot-series CSV.
//!
//! This is the only place RoCoF values are scaled; everything upstream
//! works in Hz/s.

use serde::{Deserialize, Serialize};

use crate::onset::OnsetResult;
use crate::rocof::RocofEstimate;
use crate::timefmt;
use crate::trace::{is_gap, AnalysisResult, DisturbanceEvent, FrequencyTrace};

/// Header of the per-event metric table, row layout.
pub const METRIC_CSV_HEADER: &str = "event_id,power_mismatch_mw,interconnection_max_rocof_mhz_s,regional_rocof_mhz_s,local_rocof_mhz_s,h_intercon_mva_s,h_region_mva_s,h_local_mva_s,arrival_time_s,h_region_to_h_intercon_pct";

/// Metric names, in table order, for the column layout.
pub const METRIC_NAMES: [&str; 9] = [
    "power_mismatch_mw",
    "interconnection_max_rocof_mhz_s",
    "regional_rocof_mhz_s",
    "local_rocof_mhz_s",
    "h_intercon_mva_s",
    "h_region_mva_s",
    "h_local_mva_s",
    "arrival_time_s",
    "h_region_to_h_intercon_pct",
];

/// One event's metrics in reporting units. `None` fields render as empty
/// cells (used for events whose analysis failed in batch mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub event_id: String,
    pub power_mismatch_mw: Option<f64>,
    pub interconnection_max_rocof_mhz_s: Option<f64>,
    pub regional_rocof_mhz_s: Option<f64>,
    pub local_rocof_mhz_s: Option<f64>,
    pub h_intercon_mva_s: Option<f64>,
    pub h_region_mva_s: Option<f64>,
    pub h_local_mva_s: Option<f64>,
    pub arrival_time_s: Option<f64>,
    pub h_region_to_h_intercon_pct: Option<f64>,
}

impl MetricRow {
    /// An all-empty row for an event whose analysis failed.
    pub fn empty(event_id: impl Into<String>) -> Self {
        Self {
            event_id: event_id.into(),
            power_mismatch_mw: None,
            interconnection_max_rocof_mhz_s: None,
            regional_rocof_mhz_s: None,
            local_rocof_mhz_s: None,
            h_intercon_mva_s: None,
            h_region_mva_s: None,
            h_local_mva_s: None,
            arrival_time_s: None,
            h_region_to_h_intercon_pct: None,
        }
    }

    fn values(&self) -> [Option<f64>; 9] {
        [
            self.power_mismatch_mw,
            self.interconnection_max_rocof_mhz_s,
            self.regional_rocof_mhz_s,
            self.local_rocof_mhz_s,
            self.h_intercon_mva_s,
            self.h_region_mva_s,
            self.h_local_mva_s,
            self.arrival_time_s,
            self.h_region_to_h_intercon_pct,
        ]
    }
}

/// Convert an analysis result to reporting units. Signed RoCoF values are
/// scaled ×1000 here and nowhere else.
pub fn metric_row(event: &DisturbanceEvent, result: &AnalysisResult) -> MetricRow {
    MetricRow {
        event_id: result.event_id.clone(),
        power_mismatch_mw: Some(event.delta_p_mw),
        interconnection_max_rocof_mhz_s: Some(result.interconnection_rocof_hz_s * 1e3),
        regional_rocof_mhz_s: Some(result.regional_rocof_hz_s * 1e3),
        local_rocof_mhz_s: Some(result.local_rocof_hz_s * 1e3),
        h_intercon_mva_s: Some(result.h_intercon_mva_s),
        h_region_mva_s: Some(result.h_region_mva_s),
        h_local_mva_s: Some(result.h_local_mva_s),
        arrival_time_s: Some(result.arrival_time_s),
        h_region_to_h_intercon_pct: Some(result.region_to_system_ratio * 100.0),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render rows as CSV, one row per event.
pub fn rows_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRIC_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.event_id);
        for v in row.values() {
            out.push(',');
            out.push_str(&cell(v));
        }
        out.push('\n');
    }
    out
}

/// Render rows as CSV in table orientation: one column per event, one row
/// per metric.
pub fn columns_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("metric");
    for row in rows {
        out.push(',');
        out.push_str(&row.event_id);
    }
    out.push('\n');
    for (i, name) in METRIC_NAMES.iter().enumerate() {
        out.push_str(name);
        for row in rows {
            out.push(',');
            out.push_str(&cell(row.values()[i]));
        }
        out.push('\n');
    }
    out
}

/// Header of the plot-series CSV written next to analysis results.
pub const SERIES_CSV_HEADER: &str =
    "timestamp,regional_hz,interconnection_hz,region_onset,intercon_onset,regional_peak_window";

/// Plot data for one event: the two reference traces with onset markers and
/// the winning regional RoCoF window flagged.
pub fn series_csv(
    regional: &FrequencyTrace,
    interconnection: &FrequencyTrace,
    regional_onset: &OnsetResult,
    intercon_onset: &OnsetResult,
    regional_rocof: &RocofEstimate,
) -> String {
    let mut out = String::from(SERIES_CSV_HEADER);
    out.push('\n');
    let window_end = regional_rocof.window_start + regional_rocof.window_s;
    for k in 0..regional.len() {
        let t = regional.time_at(k);
        let reg = regional.samples[k];
        let ic = interconnection.index_of(t).map(|i| interconnection.samples[i]);
        let fmt = |v: Option<f64>| match v {
            Some(x) if !is_gap(x) => x.to_string(),
            _ => String::new(),
        };
        let tol = regional.sample_interval * 1e-3;
        let in_window = t >= regional_rocof.window_start - tol && t <= window_end + tol;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            timefmt::format_utc_seconds(t),
            fmt(Some(reg)),
            fmt(ic),
            u8::from((t - regional_onset.onset_time).abs() <= tol),
            u8::from((t - intercon_onset.onset_time).abs() <= tol),
            u8::from(in_window),
        ));
    }
    out
}
