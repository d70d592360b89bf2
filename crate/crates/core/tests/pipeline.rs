//! Whole-pipeline integration tests on generated datasets, including the
//! file-format round trip.

use swingmeter_core::ingest::load_bundle;
use swingmeter_core::pipeline::{
    analyze, analyze_detailed, analysis_window, AnalyzeOptions, PipelineError,
};
use swingmeter_core::report::{metric_row, series_csv};
use swingmeter_core::synth::{self, GovernorSpec, SensorSpec, SynthSpec};
use swingmeter_core::trace::{AnalysisResult, EventKind};

/// A heterogeneous system: steep in-region sensors with small delays, and
/// attenuated, later out-of-region sensors.
fn heterogeneous_spec() -> SynthSpec {
    let mut sensors = Vec::new();
    for i in 0..4 {
        sensors.push(SensorSpec {
            sensor_id: format!("CA{i}"),
            delay_s: 0.1 * (i % 2) as f64,
            noise_std_hz: 0.0005,
            slope_scale: 1.0 + 0.2 * i as f64,
            in_region: true,
        });
    }
    for i in 0..5 {
        sensors.push(SensorSpec {
            sensor_id: format!("EX{i}"),
            delay_s: 0.2 + 0.1 * (i % 3) as f64,
            noise_std_hz: 0.0005,
            slope_scale: 0.4 + 0.05 * i as f64,
            in_region: false,
        });
    }
    SynthSpec {
        true_h_mva_s: 400_000.0,
        delta_p_mw: 1100.0,
        f_s: 60.0,
        onset_time: 35.0,
        record_length_s: 70.0,
        sample_rate: 10.0,
        governor: GovernorSpec { droop_mw_per_hz: 2000.0, time_constant_s: 3.0 },
        sensors,
        seed: 11,
        kind: EventKind::GenerationTrip,
        start_time: synth::DEFAULT_START_TIME,
        region_id: "CA".into(),
        event_id: "hetero-1".into(),
    }
}

#[test]
fn spatial_attenuation_ordering_holds_on_generator_output() {
    let out = synth::generate(&heterogeneous_spec()).unwrap();
    let region = out.region.to_region_definition();
    let result = analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap();

    // In-region events: |worst local| ≥ |regional| ≥ |interconnection|.
    assert!(
        result.local_rocof_hz_s.abs() >= result.regional_rocof_hz_s.abs(),
        "local {} vs regional {}",
        result.local_rocof_hz_s,
        result.regional_rocof_hz_s
    );
    assert!(
        result.regional_rocof_hz_s.abs() >= result.interconnection_rocof_hz_s.abs(),
        "regional {} vs interconnection {}",
        result.regional_rocof_hz_s,
        result.interconnection_rocof_hz_s
    );
    // Steep region inside a softer interconnection: ratio below one, and
    // inertia estimates ordered opposite to the RoCoF magnitudes.
    assert!(result.region_to_system_ratio < 1.0);
    assert!(result.h_local_mva_s <= result.h_region_mva_s);
    assert!(result.h_region_mva_s <= result.h_intercon_mva_s);
    // The region reacts before the wider system.
    assert!(result.arrival_time_s >= 0.0);
    assert_eq!(result.per_sensor_rocof.len(), 4);
    assert!(
        !result.diagnostics.iter().any(|d| d.contains("sign convention")),
        "{:?}",
        result.diagnostics
    );
}

#[test]
fn analysis_is_deterministic() {
    let out = synth::generate(&heterogeneous_spec()).unwrap();
    let region = out.region.to_region_definition();
    let a = analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap();
    let b = analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn analysis_result_round_trips_through_json() {
    let out = synth::generate(&heterogeneous_spec()).unwrap();
    let region = out.region.to_region_definition();
    let result = analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap();
    let json = serde_json::to_string_pretty(&result).unwrap();
    let back: AnalysisResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.event_id, result.event_id);
    assert_eq!(back.per_sensor_rocof, result.per_sensor_rocof);
    assert!((back.onset_time_region - result.onset_time_region).abs() < 1e-6);
    assert_eq!(back.h_region_mva_s, result.h_region_mva_s);
}

#[test]
fn file_round_trip_matches_in_memory_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth::generate(&heterogeneous_spec()).unwrap();
    synth::write_dataset(&out, dir.path()).unwrap();

    let region_desc = swingmeter_core::ingest::load_region(&dir.path().join("region.json")).unwrap();
    let event = swingmeter_core::ingest::load_event(&dir.path().join("event.json")).unwrap();
    let region = region_desc.to_region_definition();
    let constants = swingmeter_core::trace::SystemConstants::default();
    let window = analysis_window(&event, &constants);
    let (bundle, diags) =
        load_bundle(&dir.path().join("traces"), &region, window).unwrap();
    assert!(diags.is_empty(), "{diags:?}");

    let from_files = analyze(&bundle, &event, &region, &AnalyzeOptions::default()).unwrap();
    let in_memory = analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap();

    // Timestamps survive the text round trip to microsecond precision, so
    // the numbers match to well below estimator noise.
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
    assert!(rel(from_files.h_region_mva_s, in_memory.h_region_mva_s) < 1e-6);
    assert!(rel(from_files.regional_rocof_hz_s, in_memory.regional_rocof_hz_s) < 1e-6);
    assert!((from_files.onset_time_region - in_memory.onset_time_region).abs() < 1e-3);
    assert_eq!(from_files.arrival_time_s, in_memory.arrival_time_s);
}

#[test]
fn onset_failure_names_its_stage() {
    let mut spec = heterogeneous_spec();
    // Flatten: no event at all within the record, and no noise to mimic one.
    spec.true_h_mva_s = 1e15;
    for s in &mut spec.sensors {
        s.noise_std_hz = 0.0;
    }
    let out = synth::generate(&spec).unwrap();
    let region = out.region.to_region_definition();
    match analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()) {
        Err(PipelineError::Onset { context, .. }) => assert_eq!(context, "regional trace"),
        other => panic!("expected onset provenance, got {other:?}"),
    }
}

#[test]
fn invalid_event_is_rejected_before_analysis() {
    let out = synth::generate(&heterogeneous_spec()).unwrap();
    let region = out.region.to_region_definition();
    let mut event = out.event.clone();
    event.delta_p_mw = -1.0;
    assert!(matches!(
        analyze(&out.bundle, &event, &region, &AnalyzeOptions::default()),
        Err(PipelineError::Model(_))
    ));
}

#[test]
fn report_row_and_series_come_from_the_same_artifacts() {
    let out = synth::generate(&heterogeneous_spec()).unwrap();
    let region = out.region.to_region_definition();
    let artifacts =
        analyze_detailed(&out.bundle, &out.event, &region, &AnalyzeOptions::default()).unwrap();
    let row = metric_row(&out.event, &artifacts.result);
    assert_eq!(row.power_mismatch_mw, Some(1100.0));
    assert!(
        (row.regional_rocof_mhz_s.unwrap() - artifacts.result.regional_rocof_hz_s * 1e3).abs()
            < 1e-9
    );

    let series = series_csv(
        &artifacts.regional_trace,
        &artifacts.interconnection_trace,
        &artifacts.regional_onset,
        &artifacts.interconnection_onset,
        &artifacts.regional_rocof,
    );
    let lines: Vec<&str> = series.lines().collect();
    assert_eq!(lines.len(), artifacts.regional_trace.len() + 1);
    // Exactly one regional onset marker, and at least one window sample.
    let onset_marks = lines.iter().filter(|l| l.split(',').nth(3) == Some("1")).count();
    assert_eq!(onset_marks, 1);
    assert!(lines.iter().any(|l| l.ends_with(",1")));
}

#[test]
fn oracle_recovery_with_filter_forced_on() {
    let mut spec = heterogeneous_spec();
    for s in &mut spec.sensors {
        s.slope_scale = 1.0;
        s.delay_s = 0.0;
        s.in_region = true;
        s.noise_std_hz = 0.001;
    }
    let out = synth::generate(&spec).unwrap();
    let region = out.region.to_region_definition();
    let options = AnalyzeOptions { filter: swingmeter_core::FilterMode::On, ..Default::default() };
    let result = analyze(&out.bundle, &out.event, &region, &options).unwrap();
    let rel = (result.h_region_mva_s - spec.true_h_mva_s).abs() / spec.true_h_mva_s;
    assert!(rel < 0.05, "h_region {} ({rel})", result.h_region_mva_s);
}
