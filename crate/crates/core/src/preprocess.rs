//! Reference frequency signals built from a trace bundle: the weighted-mean
//! regional signal, the median interconnection signal, and the two-point
//! mean smoothing filter.

use thiserror::Error;

use crate::ingest::TraceBundle;
use crate::math;
use crate::trace::{is_gap, FrequencyTrace, RegionDefinition, GAP};

/// Sensor id of the interconnection-wide median trace.
pub const INTERCONNECTION_ID: &str = "INTERCONNECTION";

/// Noise score (std of first differences over a pre-event second) above
/// which the automatic filter policy smooths a sensor, in Hz.
pub const NOISE_SCORE_THRESHOLD_HZ: f64 = 0.005;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("no region members present in the bundle")]
    NoMembersPresent,
    #[error("bundle is empty")]
    EmptyBundle,
    #[error("member traces do not share a grid: {0}")]
    GridMismatch(String),
    #[error("member traces have no overlapping span")]
    NoOverlap,
    #[error("trace has {0} samples; at least 2 required")]
    TooShort(usize),
}

fn check_shared_grid(traces: &[&FrequencyTrace]) -> Result<(), PreprocessError> {
    let first = traces[0];
    for t in &traces[1..] {
        if !first.same_grid(t) {
            return Err(PreprocessError::GridMismatch(format!(
                "{} (dt {}, t0 {}) vs {} (dt {}, t0 {})",
                first.sensor_id, first.sample_interval, first.t0, t.sensor_id,
                t.sample_interval, t.t0
            )));
        }
    }
    Ok(())
}

/// Per-grid-point aggregation over traces that share a grid, restricted to
/// their overlapping span.
fn aggregate(
    traces: &[&FrequencyTrace],
    out_id: &str,
    mut combine: impl FnMut(&[f64], &[usize]) -> f64,
) -> Result<FrequencyTrace, PreprocessError> {
    check_shared_grid(traces)?;
    let dt = traces[0].sample_interval;
    let start = traces.iter().map(|t| t.t0).fold(f64::MIN, f64::max);
    let end = traces.iter().map(|t| t.end_time()).fold(f64::MAX, f64::min);
    let n = ((end - start) / dt + crate::trace::GRID_ALIGN_TOL).floor() as i64 + 1;
    if n < 2 {
        return Err(PreprocessError::NoOverlap);
    }
    let offsets: Vec<usize> = traces
        .iter()
        .map(|t| ((start - t.t0) / dt).round() as usize)
        .collect();

    let mut values = Vec::with_capacity(n as usize);
    let mut present_values = Vec::with_capacity(traces.len());
    let mut present_indices = Vec::with_capacity(traces.len());
    for k in 0..n as usize {
        present_values.clear();
        present_indices.clear();
        for (i, t) in traces.iter().enumerate() {
            let v = t.samples[offsets[i] + k];
            if !is_gap(v) {
                present_values.push(v);
                present_indices.push(i);
            }
        }
        if present_values.is_empty() {
            values.push(GAP);
        } else {
            values.push(combine(&present_values, &present_indices));
        }
    }
    Ok(FrequencyTrace::new(out_id, start, dt, values))
}

/// Weighted mean of the region members' frequencies, per grid point.
///
/// Members absent at a grid point (gaps) are skipped and the remaining
/// weights renormalized; a diagnostic reports how many points were averaged
/// from fewer than half of the present members. Output sensor id is the
/// region id.
pub fn regional_frequency(
    bundle: &TraceBundle,
    region: &RegionDefinition,
) -> Result<(FrequencyTrace, Vec<String>), PreprocessError> {
    let members: Vec<(&FrequencyTrace, f64)> = region
        .member_sensor_ids
        .iter()
        .enumerate()
        .filter_map(|(i, id)| {
            bundle.traces.get(id).map(|t| {
                let w = region
                    .weights
                    .as_ref()
                    .map_or(1.0 / region.member_sensor_ids.len() as f64, |w| w[i]);
                (t, w)
            })
        })
        .collect();
    if members.is_empty() {
        return Err(PreprocessError::NoMembersPresent);
    }
    let traces: Vec<&FrequencyTrace> = members.iter().map(|(t, _)| *t).collect();
    let weights: Vec<f64> = members.iter().map(|(_, w)| *w).collect();
    let member_count = traces.len();

    let mut sparse_points = 0usize;
    let trace = aggregate(&traces, &region.region_id, |values, indices| {
        if values.len() * 2 < member_count {
            sparse_points += 1;
        }
        let total_w: f64 = indices.iter().map(|&i| weights[i]).sum();
        if total_w <= 0.0 {
            // All contributing weights are zero; fall back to a plain mean.
            return values.iter().sum::<f64>() / values.len() as f64;
        }
        values
            .iter()
            .zip(indices)
            .map(|(&v, &i)| v * weights[i])
            .sum::<f64>()
            / total_w
    })?;

    let mut diagnostics = Vec::new();
    if sparse_points > 0 {
        diagnostics.push(format!(
            "regional mean: {sparse_points} grid points averaged fewer than half of {member_count} members"
        ));
    }
    Ok((trace, diagnostics))
}

/// Per-grid-point median across every sensor in the bundle (the robust
/// interconnection-wide reference). Even counts take the mean of the two
/// central values. Output sensor id is [`INTERCONNECTION_ID`].
pub fn interconnection_frequency(bundle: &TraceBundle) -> Result<FrequencyTrace, PreprocessError> {
    if bundle.is_empty() {
        return Err(PreprocessError::EmptyBundle);
    }
    let traces: Vec<&FrequencyTrace> = bundle.traces.values().collect();
    let mut buf = Vec::with_capacity(traces.len());
    aggregate(&traces, INTERCONNECTION_ID, |values, _| {
        buf.clear();
        buf.extend_from_slice(values);
        math::median_in_place(&mut buf)
    })
}

/// Two-point mean filter: `y[i] = (x[i] + x[i+1]) / 2`, last sample passed
/// through. A pair touching a gap outputs a gap.
///
/// The forward average introduces a uniform half-sample lag that cancels in
/// slope differences, and it preserves the least-squares slope of an exact
/// linear segment over interior windows.
pub fn two_point_mean_filter(trace: &FrequencyTrace) -> Result<FrequencyTrace, PreprocessError> {
    let n = trace.len();
    if n < 2 {
        return Err(PreprocessError::TooShort(n));
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let (a, b) = (trace.samples[i], trace.samples[i + 1]);
        if is_gap(a) || is_gap(b) {
            values.push(GAP);
        } else {
            values.push((a + b) / 2.0);
        }
    }
    values.push(trace.samples[n - 1]);
    Ok(FrequencyTrace::new(trace.sensor_id.clone(), trace.t0, trace.sample_interval, values))
}

/// Std of first differences over `[span.0, span.1]`; the noisiness score
/// that drives the automatic filter policy. `None` when fewer than two
/// consecutive non-gap pairs exist in the span.
pub fn noise_score(trace: &FrequencyTrace, span: (f64, f64)) -> Option<f64> {
    let first = trace.first_index_at_or_after(span.0)?;
    let last = trace.last_index_at_or_before(span.1)?;
    if last <= first {
        return None;
    }
    let diffs: Vec<f64> = (first..last)
        .filter_map(|k| {
            let (a, b) = (trace.samples[k], trace.samples[k + 1]);
            if is_gap(a) || is_gap(b) {
                None
            } else {
                Some(b - a)
            }
        })
        .collect();
    if diffs.len() < 2 {
        None
    } else {
        Some(math::sample_std(&diffs))
    }
}
