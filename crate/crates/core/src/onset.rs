//! Disturbance onset detection: the onset is the grid timestamp that
//! maximizes the absolute difference between the least-squares slopes of two
//! adjacent moving windows (one ending at the candidate, one starting there).

use thiserror::Error;

use crate::math;
use crate::trace::FrequencyTrace;

/// Scores below this (in Hz/s) mean the trace is flat and no onset exists.
pub const MIN_ONSET_SCORE_HZ_S: f64 = 1e-6;

/// A detected onset with the pre/post slopes behind the decision.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetResult {
    /// Grid-aligned absolute timestamp of the onset.
    pub onset_time: f64,
    /// Index of the onset sample within the searched trace.
    pub onset_index: usize,
    /// Least-squares slope over the window ending at the onset, Hz/s.
    pub rocof_pre: f64,
    /// Least-squares slope over the window starting at the onset, Hz/s.
    pub rocof_post: f64,
    /// `|rocof_pre - rocof_post|` at the onset.
    pub score: f64,
    /// The span that was actually searched.
    pub search_span: (f64, f64),
    /// Grid interval of the searched trace, for exact arrival arithmetic.
    pub sample_interval: f64,
}

#[derive(Debug, Error)]
pub enum OnsetError {
    #[error("onset window must span at least one grid step, got {window_s} s at {interval_s} s sampling")]
    WindowTooShort { window_s: f64, interval_s: f64 },
    #[error("search span leaves no candidate timestamps")]
    SpanTooShort,
    #[error("every candidate window touches a gap")]
    AllCandidatesGapped,
    #[error("no onset found: maximum slope change {max_score} Hz/s is below {MIN_ONSET_SCORE_HZ_S}")]
    NoOnsetFound { max_score: f64 },
    #[error("onset grids do not match: {0}")]
    GridMismatch(String),
}

/// Scan `search_span` for the timestamp with maximum pre/post slope
/// difference.
///
/// Both windows include the candidate sample itself. Candidates whose
/// windows touch a gap are skipped; ties break toward the earliest
/// timestamp. Candidates are restricted so both windows fit inside the
/// trace.
pub fn detect_onset(
    trace: &FrequencyTrace,
    search_span: (f64, f64),
    window_s: f64,
) -> Result<OnsetResult, OnsetError> {
    let dt = trace.sample_interval;
    let steps = (window_s / dt + crate::trace::GRID_ALIGN_TOL).floor() as usize;
    if steps < 1 {
        return Err(OnsetError::WindowTooShort { window_s, interval_s: dt });
    }
    let n = trace.len();
    if n < 2 * steps + 1 {
        return Err(OnsetError::SpanTooShort);
    }

    let lo = trace.first_index_at_or_after(search_span.0).unwrap_or(0).max(steps);
    let hi = trace
        .last_index_at_or_before(search_span.1)
        .unwrap_or(0)
        .min(n - 1 - steps);
    if lo > hi {
        return Err(OnsetError::SpanTooShort);
    }

    let mut best: Option<(usize, f64, f64, f64)> = None;
    let mut any_candidate = false;
    for k in lo..=hi {
        if trace.has_gap_in(k - steps, k + steps) {
            continue;
        }
        any_candidate = true;
        let pre = math::least_squares_slope(&trace.samples[k - steps..=k], dt);
        let post = math::least_squares_slope(&trace.samples[k..=k + steps], dt);
        let score = (pre - post).abs();
        if best.map_or(true, |(_, _, _, s)| score > s) {
            best = Some((k, pre, post, score));
        }
    }
    if !any_candidate {
        return Err(OnsetError::AllCandidatesGapped);
    }
    let (k, rocof_pre, rocof_post, score) = best.unwrap();
    if score < MIN_ONSET_SCORE_HZ_S {
        return Err(OnsetError::NoOnsetFound { max_score: score });
    }
    Ok(OnsetResult {
        onset_time: trace.time_at(k),
        onset_index: k,
        rocof_pre,
        rocof_post,
        score,
        search_span: (trace.time_at(lo), trace.time_at(hi)),
        sample_interval: dt,
    })
}

/// Inertial support arrival time: interconnection onset minus regional
/// onset, snapped to an exact multiple of the grid interval.
///
/// Negative values (the interconnection trace reacts first) come with a
/// diagnostic; they indicate the event originated outside the study region.
pub fn arrival_time(
    region_onset: &OnsetResult,
    intercon_onset: &OnsetResult,
) -> Result<(f64, Vec<String>), OnsetError> {
    let dt = region_onset.sample_interval;
    if (dt - intercon_onset.sample_interval).abs() > dt * 1e-9 {
        return Err(OnsetError::GridMismatch(format!(
            "sample intervals differ: {} vs {}",
            dt, intercon_onset.sample_interval
        )));
    }
    let delta = intercon_onset.onset_time - region_onset.onset_time;
    let steps = (delta / dt).round();
    if (delta - steps * dt).abs() > dt * crate::trace::GRID_ALIGN_TOL {
        return Err(OnsetError::GridMismatch(format!(
            "onset separation {delta} s is not a whole number of {dt} s steps"
        )));
    }
    let arrival = steps * dt;
    let mut diagnostics = Vec::new();
    if arrival < 0.0 {
        diagnostics.push(format!(
            "negative arrival time {arrival} s: interconnection onset precedes regional onset"
        ));
    }
    Ok((arrival, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::GAP;

    /// Flat at 60 Hz until `kink_time`, then a ramp of `slope` Hz/s.
    fn kink_trace(t0: f64, dt: f64, n: usize, kink_time: f64, slope: f64) -> FrequencyTrace {
        let samples = (0..n)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                if t < kink_time {
                    60.0
                } else {
                    60.0 + slope * (t - kink_time)
                }
            })
            .collect();
        FrequencyTrace::new("K", t0, dt, samples)
    }

    #[test]
    fn exact_kink_is_found_exactly() {
        let trace = kink_trace(0.0, 0.1, 100, 5.0, -0.2);
        let r = detect_onset(&trace, (0.0, 10.0), 0.5).unwrap();
        assert_eq!(r.onset_time, trace.time_at(50));
        assert_eq!(r.onset_index, 50);
        assert!(r.rocof_pre.abs() < 1e-12);
        assert!((r.rocof_post - (-0.2)).abs() < 1e-12);
        assert!((r.score - 0.2).abs() < 1e-12);
    }

    #[test]
    fn exact_kink_any_window_length() {
        let trace = kink_trace(0.0, 0.1, 200, 9.3, -0.1);
        for window in [0.2, 0.5, 1.0, 2.0] {
            let r = detect_onset(&trace, (0.0, 20.0), window).unwrap();
            assert_eq!(r.onset_index, 93, "window {window}");
        }
    }

    #[test]
    fn constant_trace_has_no_onset() {
        let trace = FrequencyTrace::new("C", 0.0, 0.1, vec![60.0; 100]);
        assert!(matches!(
            detect_onset(&trace, (0.0, 10.0), 0.5),
            Err(OnsetError::NoOnsetFound { .. })
        ));
    }

    #[test]
    fn gapped_candidates_are_skipped() {
        let mut trace = kink_trace(0.0, 0.1, 100, 5.0, -0.2);
        // A gap well before the kink disqualifies the candidates whose
        // windows touch it (indices 38..=48) but leaves the kink findable.
        trace.samples[43] = GAP;
        let r = detect_onset(&trace, (0.0, 10.0), 0.5).unwrap();
        assert_eq!(r.onset_index, 50);
    }

    #[test]
    fn gap_at_the_kink_hides_the_onset() {
        // With the kink itself unreachable (every window across it is
        // gapped), the surviving candidates sit entirely on the flat or
        // entirely on the ramp, where pre and post slopes agree: the
        // detector must refuse rather than invent an onset elsewhere.
        let mut trace = kink_trace(0.0, 0.1, 100, 5.0, -0.2);
        trace.samples[50] = GAP;
        assert!(matches!(
            detect_onset(&trace, (0.0, 10.0), 0.5),
            Err(OnsetError::NoOnsetFound { .. })
        ));
    }

    #[test]
    fn all_gapped_candidates_error() {
        let mut trace = kink_trace(0.0, 0.1, 100, 5.0, -0.2);
        for k in 40..60 {
            trace.samples[k] = GAP;
        }
        assert!(matches!(
            detect_onset(&trace, (4.6, 5.4), 0.5),
            Err(OnsetError::AllCandidatesGapped)
        ));
    }

    #[test]
    fn short_span_errors() {
        let trace = kink_trace(0.0, 0.1, 12, 0.6, -0.2);
        assert!(matches!(detect_onset(&trace, (0.0, 1.2), 1.0), Err(OnsetError::SpanTooShort)));
    }

    #[test]
    fn time_shift_equivariance() {
        let a = kink_trace(0.0, 0.1, 100, 5.0, -0.3);
        let b = kink_trace(2.0, 0.1, 100, 7.0, -0.3); // same shape, 2 s later
        let ra = detect_onset(&a, (0.0, 10.0), 0.5).unwrap();
        let rb = detect_onset(&b, (2.0, 12.0), 0.5).unwrap();
        assert_eq!(ra.onset_index, rb.onset_index);
        assert!((rb.onset_time - ra.onset_time - 2.0).abs() < 1e-9);
    }

    #[test]
    fn amplitude_scale_leaves_location() {
        let base = kink_trace(0.0, 0.1, 100, 5.0, -0.1);
        let scaled = FrequencyTrace::new(
            "S",
            0.0,
            0.1,
            base.samples.iter().map(|v| 60.0 + (v - 60.0) * 3.0).collect(),
        );
        let rb = detect_onset(&base, (0.0, 10.0), 0.5).unwrap();
        let rs = detect_onset(&scaled, (0.0, 10.0), 0.5).unwrap();
        assert_eq!(rb.onset_index, rs.onset_index);
        assert!((rs.score - 3.0 * rb.score).abs() < 1e-9);
    }

    #[test]
    fn arrival_time_is_grid_quantized_subtraction() {
        let region = kink_trace(0.0, 0.1, 200, 10.0, -0.2);
        let intercon = kink_trace(0.0, 0.1, 200, 10.2, -0.2);
        let ro = detect_onset(&region, (5.0, 15.0), 0.5).unwrap();
        let io = detect_onset(&intercon, (5.0, 15.0), 0.5).unwrap();
        let (arrival, diags) = arrival_time(&ro, &io).unwrap();
        assert_eq!(arrival, 0.2_f64 * 1.0); // 2 grid steps of 0.1 s
        assert!((arrival / 0.1).fract().abs() < 1e-12);
        assert!(diags.is_empty());
    }

    #[test]
    fn identical_onsets_give_zero_arrival() {
        let trace = kink_trace(0.0, 0.1, 200, 10.0, -0.2);
        let o = detect_onset(&trace, (5.0, 15.0), 0.5).unwrap();
        let (arrival, diags) = arrival_time(&o, &o.clone()).unwrap();
        assert_eq!(arrival, 0.0);
        assert!(diags.is_empty());
    }

    #[test]
    fn negative_arrival_gets_diagnostic() {
        let region = kink_trace(0.0, 0.1, 200, 10.0, -0.2);
        let intercon = kink_trace(0.0, 0.1, 200, 9.9, -0.2);
        let ro = detect_onset(&region, (5.0, 15.0), 0.5).unwrap();
        let io = detect_onset(&intercon, (5.0, 15.0), 0.5).unwrap();
        let (arrival, diags) = arrival_time(&ro, &io).unwrap();
        assert!((arrival - (-0.1)).abs() < 1e-12);
        assert!(diags[0].contains("negative arrival"), "{diags:?}");
    }

    #[test]
    fn mismatched_grids_error() {
        let a = kink_trace(0.0, 0.1, 200, 10.0, -0.2);
        let b = kink_trace(0.0, 0.05, 400, 10.0, -0.2);
        let ra = detect_onset(&a, (5.0, 15.0), 0.5).unwrap();
        let rb = detect_onset(&b, (5.0, 15.0), 0.5).unwrap();
        assert!(matches!(arrival_time(&ra, &rb), Err(OnsetError::GridMismatch(_))));
    }

    #[test]
    fn offset_invariance() {
        let base = kink_trace(0.0, 0.1, 100, 5.0, -0.2);
        let shifted = FrequencyTrace::new(
            "S",
            0.0,
            0.1,
            base.samples.iter().map(|v| v + 0.5).collect(),
        );
        let rb = detect_onset(&base, (0.0, 10.0), 0.5).unwrap();
        let rs = detect_onset(&shifted, (0.0, 10.0), 0.5).unwrap();
        assert_eq!(rb.onset_index, rs.onset_index);
    }
}
