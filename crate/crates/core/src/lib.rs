//! Regional grid-inertia estimation from multi-sensor frequency recordings.
//!
//! The crate turns frequency disturbance recordings (one time series per
//! sensor) plus a confirmed power-mismatch figure into inertia metrics:
//!
//! 1. [`ingest`] parses per-sensor trace CSVs onto a uniform grid and handles
//!    measurement gaps.
//! 2. [`preprocess`] builds the regional (weighted mean) and interconnection
//!    (median) reference frequency signals, with optional smoothing.
//! 3. [`onset`] locates the disturbance onset as the instant of maximum
//!    pre/post slope difference across two moving windows.
//! 4. [`rocof`] extracts the peak rate-of-change-of-frequency from a short
//!    sliding window after onset.
//! 5. [`inertia`] applies the swing equation `H·S = ΔP·f_s / (2·|df/dt|)`
//!    and assembles the per-event metric row.
//! 6. [`synth`] generates disturbance datasets with known ground truth, used
//!    as the validation oracle for the whole pipeline.
//!
//! Units are fixed crate-wide: frequency in Hz, RoCoF in Hz/s, power in MW,
//! inertia (the product `H·S`) in MVA·s. Conversion to the reporting unit
//! (mHz/s) happens only in [`report`].

pub mod inertia;
pub mod ingest;
mod math;
pub mod onset;
pub mod pipeline;
pub mod preprocess;
pub mod published;
pub mod report;
pub mod rocof;
pub mod synth;
pub mod timefmt;
pub mod trace;

pub use inertia::{assemble_result, inertia_from_rocof, region_to_system_ratio, InertiaEstimate};
pub use ingest::{load_bundle, parse_trace_file, regularize, RawSample, TraceBundle};
pub use onset::{arrival_time, detect_onset, OnsetResult};
pub use pipeline::{analyze, analyze_detailed, AnalyzeOptions, FilterMode};
pub use preprocess::{interconnection_frequency, regional_frequency, two_point_mean_filter};
pub use rocof::{interconnection_rocof, local_rocof_sweep, peak_rocof, RocofEstimate};
pub use synth::{generate, rocof_from_inertia, SynthSpec};
pub use trace::{
    validate_trace, AnalysisResult, DisturbanceEvent, EventKind, FrequencyTrace,
    RegionDefinition, SystemConstants,
};
