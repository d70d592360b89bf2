//! End-to-end composition: bundle in, per-event metric row out.
//!
//! The steps mirror the estimation workflow: optional per-sensor smoothing,
//! regional and interconnection reference signals, onset detection on each,
//! peak RoCoF, swing-equation inertia at the three scales, arrival time,
//! and the region-to-system ratio.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inertia::{self, InertiaError, ResultComponents};
use crate::ingest::{IngestError, TraceBundle};
use crate::onset::{self, OnsetError};
use crate::preprocess::{self, PreprocessError};
use crate::rocof::{self, RocofError};
use crate::trace::{
    AnalysisResult, DisturbanceEvent, FrequencyTrace, ModelError, RegionDefinition,
    SystemConstants,
};

/// Half-width of the onset search span around the event's coarse time hint.
pub const ONSET_SEARCH_HALF_SPAN_S: f64 = 30.0;

/// Smoothing policy. `Auto` filters only sensors whose pre-event noise
/// score exceeds [`preprocess::NOISE_SCORE_THRESHOLD_HZ`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    #[default]
    Auto,
    On,
    Off,
}

/// Where smoothing is applied: per sensor before spatial aggregation
/// (default), or on the aggregated reference signals afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStage {
    #[default]
    PerSensor,
    AfterAveraging,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    pub constants: SystemConstants,
    pub filter: FilterMode,
    pub filter_stage: FilterStage,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("preprocess ({context}): {source}")]
    Preprocess { context: &'static str, source: PreprocessError },
    #[error("onset detection ({context}): {source}")]
    Onset { context: &'static str, source: OnsetError },
    #[error("rocof ({context}): {source}")]
    Rocof { context: &'static str, source: RocofError },
    #[error("inertia: {0}")]
    Inertia(#[from] InertiaError),
    #[error("event {event_id}: approx_time {approx} outside the bundle span [{start}, {end}]")]
    EventOutsideSpan { event_id: String, approx: f64, start: f64, end: f64 },
}

/// Everything the analysis produced, for callers that want to plot or
/// inspect intermediates. [`analyze`] returns just the result row.
#[derive(Debug, Clone)]
pub struct AnalysisArtifacts {
    pub result: AnalysisResult,
    pub regional_trace: FrequencyTrace,
    pub interconnection_trace: FrequencyTrace,
    pub regional_onset: onset::OnsetResult,
    pub interconnection_onset: onset::OnsetResult,
    pub regional_rocof: rocof::RocofEstimate,
    pub interconnection_rocof: rocof::RocofEstimate,
}

/// The analysis window a bundle should cover for an event: the onset search
/// span plus padding for the onset windows and the post-onset horizon.
pub fn analysis_window(event: &DisturbanceEvent, constants: &SystemConstants) -> (f64, f64) {
    let pre = ONSET_SEARCH_HALF_SPAN_S + constants.onset_window_s + 1.0;
    let post = ONSET_SEARCH_HALF_SPAN_S
        + constants.onset_window_s.max(constants.rocof_horizon_s)
        + 1.0;
    (event.approx_time - pre, event.approx_time + post)
}

fn search_span(event: &DisturbanceEvent) -> (f64, f64) {
    (
        event.approx_time - ONSET_SEARCH_HALF_SPAN_S,
        event.approx_time + ONSET_SEARCH_HALF_SPAN_S,
    )
}

/// Apply the filter policy to every sensor of the bundle. In `Auto` mode
/// the noise score is measured over the first second of the onset search
/// span, which precedes the event by construction of the ±30 s hint.
fn filter_bundle(
    bundle: &TraceBundle,
    event: &DisturbanceEvent,
    mode: FilterMode,
    diagnostics: &mut Vec<String>,
) -> Result<TraceBundle, PipelineError> {
    if mode == FilterMode::Off {
        return Ok(bundle.clone());
    }
    let score_span_start = event.approx_time - ONSET_SEARCH_HALF_SPAN_S;
    let score_span = (score_span_start, score_span_start + 1.0);
    let mut traces = std::collections::BTreeMap::new();
    for (id, trace) in &bundle.traces {
        let apply = match mode {
            FilterMode::On => true,
            FilterMode::Auto => preprocess::noise_score(trace, score_span)
                .is_some_and(|s| s > preprocess::NOISE_SCORE_THRESHOLD_HZ),
            FilterMode::Off => unreachable!(),
        };
        let out = if apply {
            diagnostics.push(format!("sensor {id}: two-point mean filter applied"));
            preprocess::two_point_mean_filter(trace)
                .map_err(|source| PipelineError::Preprocess { context: "sensor filter", source })?
        } else {
            trace.clone()
        };
        traces.insert(id.clone(), out);
    }
    Ok(TraceBundle { traces, common_span: bundle.common_span })
}

fn maybe_filter_reference(
    trace: FrequencyTrace,
    stage: FilterStage,
    mode: FilterMode,
    context: &'static str,
    diagnostics: &mut Vec<String>,
) -> Result<FrequencyTrace, PipelineError> {
    if stage != FilterStage::AfterAveraging || mode == FilterMode::Off {
        return Ok(trace);
    }
    // After-averaging mode treats On and Auto alike for the reference
    // signals: the per-sensor noise scores no longer apply.
    diagnostics.push(format!("{context}: two-point mean filter applied"));
    preprocess::two_point_mean_filter(&trace)
        .map_err(|source| PipelineError::Preprocess { context: "reference filter", source })
}

/// Run the full estimation pipeline and return the detailed artifacts.
pub fn analyze_detailed(
    bundle: &TraceBundle,
    event: &DisturbanceEvent,
    region: &RegionDefinition,
    options: &AnalyzeOptions,
) -> Result<AnalysisArtifacts, PipelineError> {
    options.constants.validate()?;
    region.validate()?;
    event.validate()?;
    let (start, end) = bundle.common_span;
    if event.approx_time < start || event.approx_time > end {
        return Err(PipelineError::EventOutsideSpan {
            event_id: event.event_id.clone(),
            approx: event.approx_time,
            start,
            end,
        });
    }

    let constants = &options.constants;
    let mut diagnostics = Vec::new();

    let working = match options.filter_stage {
        FilterStage::PerSensor => {
            filter_bundle(bundle, event, options.filter, &mut diagnostics)?
        }
        FilterStage::AfterAveraging => bundle.clone(),
    };

    let (regional_trace, regional_diags) = preprocess::regional_frequency(&working, region)
        .map_err(|source| PipelineError::Preprocess { context: "regional frequency", source })?;
    diagnostics.extend(regional_diags);
    let regional_trace = maybe_filter_reference(
        regional_trace,
        options.filter_stage,
        options.filter,
        "regional trace",
        &mut diagnostics,
    )?;

    let interconnection_trace = preprocess::interconnection_frequency(&working)
        .map_err(|source| PipelineError::Preprocess { context: "interconnection frequency", source })?;
    let interconnection_trace = maybe_filter_reference(
        interconnection_trace,
        options.filter_stage,
        options.filter,
        "interconnection trace",
        &mut diagnostics,
    )?;

    let span = search_span(event);
    let regional_onset = onset::detect_onset(&regional_trace, span, constants.onset_window_s)
        .map_err(|source| PipelineError::Onset { context: "regional trace", source })?;
    let interconnection_onset =
        onset::detect_onset(&interconnection_trace, span, constants.onset_window_s)
            .map_err(|source| PipelineError::Onset { context: "interconnection trace", source })?;

    let regional_rocof = rocof::peak_rocof(
        &regional_trace,
        regional_onset.onset_time,
        constants.rocof_window_s,
        constants.rocof_horizon_s,
    )
    .map_err(|source| PipelineError::Rocof { context: "regional trace", source })?;
    let interconnection_rocof = rocof::interconnection_rocof(
        &interconnection_trace,
        interconnection_onset.onset_time,
        constants,
    )
    .map_err(|source| PipelineError::Rocof { context: "interconnection trace", source })?;

    let sweep = rocof::local_rocof_sweep(&working, region, span, constants)
        .map_err(|source| PipelineError::Rocof { context: "local sweep", source })?;
    diagnostics.extend(sweep.diagnostics.iter().cloned());

    let guard = constants.min_rocof_hz_per_s;
    let f_s = constants.nominal_frequency_hz;
    let h_region = inertia::inertia_from_rocof(event.delta_p_mw, &regional_rocof, f_s, guard)?;
    let h_intercon =
        inertia::inertia_from_rocof(event.delta_p_mw, &interconnection_rocof, f_s, guard)?;
    let h_local = inertia::inertia_from_rocof(event.delta_p_mw, &sweep.worst, f_s, guard)?;

    let result = inertia::assemble_result(
        event,
        region,
        ResultComponents {
            region_onset: Some(regional_onset.clone()),
            intercon_onset: Some(interconnection_onset.clone()),
            regional_rocof: Some(regional_rocof.clone()),
            interconnection_rocof: Some(interconnection_rocof.clone()),
            per_sensor_rocof: sweep.per_sensor.clone(),
            worst_local_rocof: Some(sweep.worst.clone()),
            h_region: Some(h_region),
            h_intercon: Some(h_intercon),
            h_local: Some(h_local),
            diagnostics,
        },
    )?;

    Ok(AnalysisArtifacts {
        result,
        regional_trace,
        interconnection_trace,
        regional_onset,
        interconnection_onset,
        regional_rocof,
        interconnection_rocof,
    })
}

/// Run the full estimation pipeline for one event.
pub fn analyze(
    bundle: &TraceBundle,
    event: &DisturbanceEvent,
    region: &RegionDefinition,
    options: &AnalyzeOptions,
) -> Result<AnalysisResult, PipelineError> {
    analyze_detailed(bundle, event, region, options).map(|artifacts| artifacts.result)
}
