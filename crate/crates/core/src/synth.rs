//! Synthetic multi-sensor disturbance generator with known ground truth —
//! the validation oracle for the whole pipeline.
//!
//! The base trajectory holds nominal frequency until onset, then integrates
//!
//! ```text
//! df/dt = (m + p) · f_s / (2·H)          m = ±ΔP (sign from event kind)
//! dp/dt = (-droop · (f - f_s) - p) / τ   first-order governor lag
//! ```
//!
//! with fixed-step RK4 at ten times the sample rate, so the first-instant
//! slope equals `-ΔP·f_s/(2H)` exactly for a generation trip and integration
//! error stays far below estimator tolerances. Per-sensor traces delay the
//! base, scale its deviations, and add seeded white noise.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{write_trace_csv, RegionDescriptor, SensorDescriptor, TraceBundle};
use crate::trace::{DisturbanceEvent, EventKind, FrequencyTrace};

/// RK4 substeps per output sample.
const OVERSAMPLING: usize = 10;

/// Default absolute start time of generated records (2024-01-01T00:00:00Z).
pub const DEFAULT_START_TIME: f64 = 1_704_067_200.0;

/// First-order governor model: proportional droop response through a lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GovernorSpec {
    /// Proportional response in MW per Hz of deviation, ≥ 0. Zero disables
    /// recovery entirely.
    pub droop_mw_per_hz: f64,
    /// Lag time constant in seconds, > 0.
    pub time_constant_s: f64,
}

impl Default for GovernorSpec {
    fn default() -> Self {
        Self { droop_mw_per_hz: 0.0, time_constant_s: 5.0 }
    }
}

/// One simulated sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub sensor_id: String,
    /// Signal propagation delay relative to the base trajectory, ≥ 0.
    /// Quantized to the integrator substep (a tenth of a sample).
    #[serde(default)]
    pub delay_s: f64,
    /// Std of white measurement noise, Hz, ≥ 0.
    #[serde(default)]
    pub noise_std_hz: f64,
    /// Multiplier on deviations from nominal, > 0. Values above 1 emulate
    /// sensors electrically close to the event.
    #[serde(default = "default_slope_scale")]
    pub slope_scale: f64,
    /// Whether the sensor belongs to the study region.
    #[serde(default = "default_true")]
    pub in_region: bool,
}

fn default_slope_scale() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

/// Full description of a synthetic disturbance dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// True inertia product H·S in MVA·s, > 0.
    pub true_h_mva_s: f64,
    /// Power mismatch magnitude in MW, > 0.
    pub delta_p_mw: f64,
    /// Nominal frequency in Hz.
    #[serde(default = "default_f_s")]
    pub f_s: f64,
    /// Onset, seconds into the record. Snapped to the sample grid.
    pub onset_time: f64,
    pub record_length_s: f64,
    /// Samples per second.
    pub sample_rate: f64,
    #[serde(default)]
    pub governor: GovernorSpec,
    pub sensors: Vec<SensorSpec>,
    pub seed: u64,
    /// Event direction; the mirror case (load loss) flips the trajectory.
    #[serde(default = "default_kind")]
    pub kind: EventKind,
    /// Absolute UTC start time of the record.
    #[serde(default = "default_start_time")]
    pub start_time: f64,
    #[serde(default = "default_region_id")]
    pub region_id: String,
    #[serde(default = "default_event_id")]
    pub event_id: String,
}

fn default_f_s() -> f64 {
    60.0
}

fn default_kind() -> EventKind {
    EventKind::GenerationTrip
}

fn default_start_time() -> f64 {
    DEFAULT_START_TIME
}

fn default_region_id() -> String {
    "SYNTH-REGION".to_string()
}

fn default_event_id() -> String {
    "synthetic-event".to_string()
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("cannot write {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidSpec(msg));
        if !(self.true_h_mva_s > 0.0) {
            return fail(format!("true_h_mva_s must be > 0, got {}", self.true_h_mva_s));
        }
        if !(self.delta_p_mw > 0.0) {
            return fail(format!("delta_p_mw must be > 0, got {}", self.delta_p_mw));
        }
        if !(self.f_s > 0.0) {
            return fail(format!("f_s must be > 0, got {}", self.f_s));
        }
        if !(self.sample_rate > 0.0) {
            return fail(format!("sample_rate must be > 0, got {}", self.sample_rate));
        }
        // Room for two onset windows before the kink and a second after it.
        if !(self.onset_time > 1.0) || !(self.onset_time < self.record_length_s - 1.0) {
            return fail(format!(
                "onset_time {} s must lie in (1, record_length - 1) = (1, {})",
                self.onset_time,
                self.record_length_s - 1.0
            ));
        }
        if !(self.governor.droop_mw_per_hz >= 0.0) {
            return fail("governor droop must be >= 0".to_string());
        }
        if !(self.governor.time_constant_s > 0.0) {
            return fail("governor time constant must be > 0".to_string());
        }
        if self.sensors.is_empty() {
            return fail("at least one sensor required".to_string());
        }
        for s in &self.sensors {
            if !(s.delay_s >= 0.0) {
                return fail(format!("sensor {}: delay must be >= 0", s.sensor_id));
            }
            if !(s.noise_std_hz >= 0.0) {
                return fail(format!("sensor {}: noise std must be >= 0", s.sensor_id));
            }
            if !(s.slope_scale > 0.0) {
                return fail(format!("sensor {}: slope scale must be > 0", s.sensor_id));
            }
        }
        Ok(())
    }
}

/// Per-sensor ground truth for oracle comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorTruth {
    pub delay_s: f64,
    pub slope_scale: f64,
    pub noise_std_hz: f64,
    /// Analytic first-instant RoCoF this sensor should exhibit, Hz/s.
    pub initial_rocof_hz_s: f64,
    /// Absolute onset time at this sensor (base onset plus delay).
    pub onset_time: f64,
}

/// Ground truth record written alongside generated datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    /// Effective (grid-snapped) onset, seconds into the record.
    pub onset_time_s: f64,
    /// Absolute onset timestamp.
    pub onset_time_abs: f64,
    /// Analytic first-instant RoCoF of the base trajectory, Hz/s.
    pub base_initial_rocof_hz_s: f64,
    pub per_sensor: BTreeMap<String, SensorTruth>,
}

/// A generated dataset: the trace bundle plus everything needed to analyze
/// and verify it.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub bundle: TraceBundle,
    pub truth: GroundTruth,
    pub region: RegionDescriptor,
    pub event: DisturbanceEvent,
}

/// Signed first-instant RoCoF implied by the swing equation, Hz/s
/// (generation-trip sign: negative).
pub fn rocof_from_inertia(h_mva_s: f64, delta_p_mw: f64, f_s: f64) -> Result<f64, SynthError> {
    if !(h_mva_s > 0.0) {
        return Err(SynthError::InvalidSpec(format!("h must be > 0, got {h_mva_s}")));
    }
    if !(delta_p_mw > 0.0) {
        return Err(SynthError::InvalidSpec(format!("delta_p must be > 0, got {delta_p_mw}")));
    }
    if !(f_s > 0.0) {
        return Err(SynthError::InvalidSpec(format!("f_s must be > 0, got {f_s}")));
    }
    Ok(-delta_p_mw * f_s / (2.0 * h_mva_s))
}

/// Integrate the base trajectory on the fine (oversampled) grid, starting at
/// the onset sample. Returns fine-grid frequency values; index 0 is the
/// onset instant itself (still at nominal).
fn integrate_base(spec: &SynthSpec, fine_steps: usize) -> Vec<f64> {
    let fine_dt = 1.0 / (spec.sample_rate * OVERSAMPLING as f64);
    let sign = spec.kind.expected_rocof_sign();
    let mismatch = sign * spec.delta_p_mw;
    let droop = spec.governor.droop_mw_per_hz;
    let tau = spec.governor.time_constant_s;
    let accel = spec.f_s / (2.0 * spec.true_h_mva_s);

    let deriv = |f: f64, p: f64| -> (f64, f64) {
        let df = (mismatch + p) * accel;
        let dp = (-droop * (f - spec.f_s) - p) / tau;
        (df, dp)
    };

    let mut values = Vec::with_capacity(fine_steps + 1);
    let mut f = spec.f_s;
    let mut p = 0.0;
    values.push(f);
    for _ in 0..fine_steps {
        let (k1f, k1p) = deriv(f, p);
        let (k2f, k2p) = deriv(f + 0.5 * fine_dt * k1f, p + 0.5 * fine_dt * k1p);
        let (k3f, k3p) = deriv(f + 0.5 * fine_dt * k2f, p + 0.5 * fine_dt * k2p);
        let (k4f, k4p) = deriv(f + fine_dt * k3f, p + fine_dt * k3p);
        f += fine_dt / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        p += fine_dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        values.push(f);
    }
    values
}

/// Generate the dataset described by `spec`. Deterministic: identical specs
/// produce bit-identical bundles.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let dt = 1.0 / spec.sample_rate;
    let n_samples = (spec.record_length_s * spec.sample_rate).round() as usize + 1;
    let onset_idx = (spec.onset_time * spec.sample_rate).round() as usize;
    let onset_s = onset_idx as f64 * dt;
    let post_samples = n_samples - 1 - onset_idx;

    // Base trajectory on the fine grid, from onset to the end of the record.
    let base_fine = integrate_base(spec, post_samples * OVERSAMPLING);

    // base(t) for t expressed in fine steps relative to onset; flat at
    // nominal before the event.
    let base_at = |fine_idx: i64| -> f64 {
        if fine_idx <= 0 {
            spec.f_s
        } else {
            base_fine[(fine_idx as usize).min(base_fine.len() - 1)]
        }
    };

    let trip_rocof = rocof_from_inertia(spec.true_h_mva_s, spec.delta_p_mw, spec.f_s)?;
    let base_initial_rocof = trip_rocof.abs() * spec.kind.expected_rocof_sign();

    let mut traces = BTreeMap::new();
    let mut per_sensor = BTreeMap::new();
    for (i, sensor) in spec.sensors.iter().enumerate() {
        // Independent, order-stable noise stream per sensor.
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let normal = Normal::new(0.0, sensor.noise_std_hz)
            .map_err(|e| SynthError::InvalidSpec(format!("noise std: {e}")))?;
        let delay_fine = (sensor.delay_s * spec.sample_rate * OVERSAMPLING as f64).round() as i64;

        let samples: Vec<f64> = (0..n_samples)
            .map(|k| {
                let fine_idx = (k as i64 - onset_idx as i64) * OVERSAMPLING as i64 - delay_fine;
                let clean = spec.f_s + sensor.slope_scale * (base_at(fine_idx) - spec.f_s);
                let noise =
                    if sensor.noise_std_hz > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                clean + noise
            })
            .collect();

        traces.insert(
            sensor.sensor_id.clone(),
            FrequencyTrace::new(&sensor.sensor_id, spec.start_time, dt, samples),
        );
        per_sensor.insert(
            sensor.sensor_id.clone(),
            SensorTruth {
                delay_s: delay_fine as f64 / (spec.sample_rate * OVERSAMPLING as f64),
                slope_scale: sensor.slope_scale,
                noise_std_hz: sensor.noise_std_hz,
                initial_rocof_hz_s: base_initial_rocof * sensor.slope_scale,
                onset_time: spec.start_time
                    + onset_s
                    + delay_fine as f64 / (spec.sample_rate * OVERSAMPLING as f64),
            },
        );
    }

    let bundle = TraceBundle::from_traces(traces)
        .map_err(|e| SynthError::InvalidSpec(format!("bundle: {e}")))?;

    let region = RegionDescriptor {
        region_id: spec.region_id.clone(),
        sensors: spec
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| SensorDescriptor {
                id: s.sensor_id.clone(),
                // Deterministic synthetic coordinates: in-region sensors
                // cluster around (36, -120), the rest to the northeast.
                lat: if s.in_region { 36.0 + 0.4 * i as f64 } else { 44.0 + 0.4 * i as f64 },
                lon: if s.in_region { -120.0 + 0.3 * i as f64 } else { -111.0 + 0.3 * i as f64 },
                in_region: s.in_region,
            })
            .collect(),
    };

    let event = DisturbanceEvent {
        event_id: spec.event_id.clone(),
        // Coarse hint, as a real confirmation record would carry: whole
        // seconds only.
        approx_time: spec.start_time + onset_s.floor(),
        delta_p_mw: spec.delta_p_mw,
        kind: spec.kind,
        region_id: spec.region_id.clone(),
    };

    let truth = GroundTruth {
        spec: spec.clone(),
        onset_time_s: onset_s,
        onset_time_abs: spec.start_time + onset_s,
        base_initial_rocof_hz_s: base_initial_rocof,
        per_sensor,
    };

    Ok(SynthOutput { bundle, truth, region, event })
}

/// Write a generated dataset in the layout the ingest module reads:
/// `traces/<sensor>.csv`, `region.json`, `event.json`, `ground_truth.json`.
pub fn write_dataset(output: &SynthOutput, dir: &Path) -> Result<(), SynthError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| SynthError::Io { path, source }
    };
    let traces_dir = dir.join("traces");
    fs::create_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;
    for (id, trace) in &output.bundle.traces {
        let path = traces_dir.join(format!("{id}.csv"));
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, trace).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
    }
    let region_path = dir.join("region.json");
    fs::write(&region_path, serde_json::to_string_pretty(&output.region).unwrap())
        .map_err(io_err(&region_path))?;
    let event_path = dir.join("event.json");
    fs::write(&event_path, serde_json::to_string_pretty(&output.event).unwrap())
        .map_err(io_err(&event_path))?;
    let truth_path = dir.join("ground_truth.json");
    fs::write(&truth_path, serde_json::to_string_pretty(&output.truth).unwrap())
        .map_err(io_err(&truth_path))?;
    Ok(())
}
