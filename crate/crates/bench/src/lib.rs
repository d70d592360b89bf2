//! Shared fixtures for the pipeline benchmarks.

use swingmeter_core::synth::{GovernorSpec, SensorSpec, SynthOutput, SynthSpec};
use swingmeter_core::trace::EventKind;

/// A representative synthetic disturbance: `n_sensors` recorders at
/// 10 samples/s over 70 s, mild governor recovery, 1 mHz noise.
pub fn bench_dataset(n_sensors: usize, seed: u64) -> SynthOutput {
    let spec = SynthSpec {
        true_h_mva_s: 400_000.0,
        delta_p_mw: 1100.0,
        f_s: 60.0,
        onset_time: 35.0,
        record_length_s: 70.0,
        sample_rate: 10.0,
        governor: GovernorSpec { droop_mw_per_hz: 4000.0, time_constant_s: 4.0 },
        sensors: (0..n_sensors)
            .map(|i| SensorSpec {
                sensor_id: format!("S{i:02}"),
                delay_s: 0.1 * (i % 3) as f64,
                noise_std_hz: 0.001,
                slope_scale: 1.0 + 0.05 * (i % 4) as f64,
                in_region: i % 2 == 0,
            })
            .collect(),
        seed,
        kind: EventKind::GenerationTrip,
        start_time: swingmeter_core::synth::DEFAULT_START_TIME,
        region_id: "BENCH".into(),
        event_id: "bench-event".into(),
    };
    swingmeter_core::synth::generate(&spec).expect("valid bench spec")
}
