//! Built-in self-consistency suite: published metrics for seven confirmed
//! CAISO disturbances (2013–2024) are embedded as fixtures, and the swing
//! equation is required to reproduce each published inertia value from the
//! published power mismatch and RoCoF.
//!
//! Published RoCoFs are rounded to whole mHz/s, which bounds the achievable
//! agreement; the tolerances below encode that rounding worst-case.

use crate::inertia::{inertia_from_rocof, region_to_system_ratio};
use crate::pipeline::{analyze, AnalyzeOptions};
use crate::rocof::RocofEstimate;
use crate::synth::{self, GovernorSpec, SensorSpec, SynthSpec};
use crate::trace::EventKind;

/// Relative tolerance for reproducing a published inertia value from the
/// published ΔP and RoCoF. A RoCoF entry rounded to a whole mHz/s can be
/// off by up to 0.5 mHz/s, which at the smallest published magnitude
/// (27 mHz/s) is ~1.9 % of the quotient; 3 % covers every cell with margin.
pub const PUBLISHED_INERTIA_TOL_REL: f64 = 0.03;

/// Absolute tolerance, in percentage points, for reproducing the published
/// regional-to-system ratio from the published inertia pair.
pub const PUBLISHED_RATIO_TOL_PP: f64 = 1.0;

/// Relative tolerance for the fast synthetic round trip in the selfcheck.
pub const SELFCHECK_ROUNDTRIP_TOL_REL: f64 = 0.01;

/// One event row of the published metric table. RoCoF magnitudes in mHz/s
/// as printed; all events are generation trips (falling frequency).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedEvent {
    /// Event date, PST/PDT, as printed in the source table.
    pub label: &'static str,
    /// ISO-style identifier used in check names.
    pub event_id: &'static str,
    pub delta_p_mw: f64,
    pub intercon_rocof_mhz_s: f64,
    pub regional_rocof_mhz_s: f64,
    pub local_rocof_mhz_s: f64,
    pub h_intercon_mva_s: f64,
    pub h_region_mva_s: f64,
    pub h_local_mva_s: f64,
    pub arrival_time_s: f64,
    pub ratio_pct: f64,
}

/// The seven confirmed CAISO disturbances, 2013–2024.
pub const PUBLISHED_EVENTS: [PublishedEvent; 7] = [
    PublishedEvent {
        label: "7/10/2013 9:49",
        event_id: "2013-07-10",
        delta_p_mw: 1130.0,
        intercon_rocof_mhz_s: 42.0,
        regional_rocof_mhz_s: 207.0,
        local_rocof_mhz_s: 307.0,
        h_intercon_mva_s: 815_000.0,
        h_region_mva_s: 164_000.0,
        h_local_mva_s: 110_000.0,
        arrival_time_s: 0.2,
        ratio_pct: 20.1,
    },
    PublishedEvent {
        label: "2/2/2014 12:29",
        event_id: "2014-02-02",
        delta_p_mw: 1450.0,
        intercon_rocof_mhz_s: 58.0,
        regional_rocof_mhz_s: 261.0,
        local_rocof_mhz_s: 435.0,
        h_intercon_mva_s: 502_000.0,
        h_region_mva_s: 167_000.0,
        h_local_mva_s: 100_000.0,
        arrival_time_s: 0.2,
        ratio_pct: 33.3,
    },
    PublishedEvent {
        label: "10/9/2017 12:14",
        event_id: "2017-10-09",
        delta_p_mw: 973.0,
        intercon_rocof_mhz_s: 104.0,
        regional_rocof_mhz_s: 422.0,
        local_rocof_mhz_s: 1139.0,
        h_intercon_mva_s: 280_000.0,
        h_region_mva_s: 69_200.0,
        h_local_mva_s: 25_600.0,
        arrival_time_s: 0.2,
        ratio_pct: 24.7,
    },
    PublishedEvent {
        label: "12/1/2018 11:06",
        event_id: "2018-12-01",
        delta_p_mw: 1114.0,
        intercon_rocof_mhz_s: 39.0,
        regional_rocof_mhz_s: 227.0,
        local_rocof_mhz_s: 383.0,
        h_intercon_mva_s: 860_000.0,
        h_region_mva_s: 147_000.0,
        h_local_mva_s: 85_000.0,
        arrival_time_s: 0.2,
        ratio_pct: 17.1,
    },
    PublishedEvent {
        label: "10/15/2021 17:49",
        event_id: "2021-10-15",
        delta_p_mw: 988.0,
        intercon_rocof_mhz_s: 34.0,
        regional_rocof_mhz_s: 114.0,
        local_rocof_mhz_s: 178.0,
        h_intercon_mva_s: 864_000.0,
        h_region_mva_s: 261_000.0,
        h_local_mva_s: 167_000.0,
        arrival_time_s: 0.0,
        ratio_pct: 30.2,
    },
    PublishedEvent {
        label: "4/6/2022 15:05",
        event_id: "2022-04-06",
        delta_p_mw: 794.0,
        intercon_rocof_mhz_s: 44.0,
        regional_rocof_mhz_s: 157.0,
        local_rocof_mhz_s: 335.0,
        h_intercon_mva_s: 536_000.0,
        h_region_mva_s: 152_000.0,
        h_local_mva_s: 71_100.0,
        arrival_time_s: 0.1,
        ratio_pct: 28.3,
    },
    PublishedEvent {
        label: "8/31/2024 0:36",
        event_id: "2024-08-31",
        delta_p_mw: 771.0,
        intercon_rocof_mhz_s: 27.0,
        regional_rocof_mhz_s: 65.0,
        local_rocof_mhz_s: 133.0,
        h_intercon_mva_s: 855_083.0,
        h_region_mva_s: 355_850.0,
        h_local_mva_s: 173_910.0,
        arrival_time_s: 0.2,
        ratio_pct: 41.6,
    },
];

/// Outcome of one selfcheck item.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: String, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Swing-equation consistency of one published cell: inertia from the
/// published ΔP and RoCoF against the published inertia value.
pub fn check_inertia_cell(
    event: &PublishedEvent,
    scale: &str,
    rocof_mhz_s: f64,
    published_h: f64,
) -> CheckOutcome {
    // All published events are trips; published magnitudes carry the sign
    // convention implicitly.
    let rocof = RocofEstimate::from_reported_mhz_s(-rocof_mhz_s);
    let name = format!("{} h_{scale} swing-consistency", event.event_id);
    match inertia_from_rocof(event.delta_p_mw, &rocof, 60.0, 1e-4) {
        Ok(est) => {
            let computed = est.h_times_s_mva_s;
            let rel = (computed - published_h).abs() / published_h;
            CheckOutcome::new(
                name,
                rel <= PUBLISHED_INERTIA_TOL_REL,
                format!(
                    "{:.0} MW at {rocof_mhz_s} mHz/s -> {computed:.0} MVA·s vs published {published_h:.0} ({:.2} % off)",
                    event.delta_p_mw,
                    rel * 100.0
                ),
            )
        }
        Err(e) => CheckOutcome::new(name, false, format!("estimator refused: {e}")),
    }
}

/// Ratio consistency of one published event: the ratio operation applied to
/// the published inertia pair against the published percentage.
pub fn check_ratio(event: &PublishedEvent) -> CheckOutcome {
    let name = format!("{} ratio reproduction", event.event_id);
    // Back-compute the RoCoF each published inertia value implies so the
    // estimates are internally consistent, then let the dual-route ratio
    // operation produce the quotient.
    let rocof_region = event.delta_p_mw * 60.0 / (2.0 * event.h_region_mva_s);
    let rocof_intercon = event.delta_p_mw * 60.0 / (2.0 * event.h_intercon_mva_s);
    let build = |rocof: f64| {
        inertia_from_rocof(
            event.delta_p_mw,
            &RocofEstimate::from_reported_mhz_s(-rocof * 1e3),
            60.0,
            1e-4,
        )
    };
    match (build(rocof_region), build(rocof_intercon)) {
        (Ok(h_region), Ok(h_intercon)) => match region_to_system_ratio(&h_region, &h_intercon) {
            Ok(ratio) => {
                let pct = ratio * 100.0;
                let diff_pp = (pct - event.ratio_pct).abs();
                CheckOutcome::new(
                    name,
                    diff_pp <= PUBLISHED_RATIO_TOL_PP,
                    format!("computed {pct:.2} % vs published {} % ({diff_pp:.2} pp off)", event.ratio_pct),
                )
            }
            Err(e) => CheckOutcome::new(name, false, format!("ratio refused: {e}")),
        },
        _ => CheckOutcome::new(name, false, "estimate construction failed".into()),
    }
}

/// Fast synthetic round trip: generate a small noise-free disturbance and
/// require the full pipeline to recover the true inertia within
/// [`SELFCHECK_ROUNDTRIP_TOL_REL`] and the onset exactly.
pub fn check_synthetic_roundtrip() -> CheckOutcome {
    let spec = SynthSpec {
        true_h_mva_s: 200_000.0,
        delta_p_mw: 1000.0,
        f_s: 60.0,
        onset_time: 35.0,
        record_length_s: 70.0,
        sample_rate: 10.0,
        governor: GovernorSpec { droop_mw_per_hz: 3000.0, time_constant_s: 5.0 },
        sensors: (0..3)
            .map(|i| SensorSpec {
                sensor_id: format!("S{i}"),
                delay_s: 0.0,
                noise_std_hz: 0.0,
                slope_scale: 1.0,
                in_region: true,
            })
            .collect(),
        seed: 1,
        kind: EventKind::GenerationTrip,
        start_time: synth::DEFAULT_START_TIME,
        region_id: "SELFCHECK".into(),
        event_id: "selfcheck-roundtrip".into(),
    };
    let name = "synthetic round trip".to_string();
    let out = match synth::generate(&spec) {
        Ok(out) => out,
        Err(e) => return CheckOutcome::new(name, false, format!("generator failed: {e}")),
    };
    let region = out.region.to_region_definition();
    match analyze(&out.bundle, &out.event, &region, &AnalyzeOptions::default()) {
        Ok(result) => {
            let rel = (result.h_region_mva_s - spec.true_h_mva_s).abs() / spec.true_h_mva_s;
            let onset_err = (result.onset_time_region - out.truth.onset_time_abs).abs();
            let passed = rel <= SELFCHECK_ROUNDTRIP_TOL_REL && onset_err < 1e-6;
            CheckOutcome::new(
                name,
                passed,
                format!(
                    "recovered {:.0} MVA·s vs true {:.0} ({:.3} % off), onset error {onset_err:.3e} s",
                    result.h_region_mva_s,
                    spec.true_h_mva_s,
                    rel * 100.0
                ),
            )
        }
        Err(e) => CheckOutcome::new(name, false, format!("pipeline failed: {e}")),
    }
}

/// Run the complete selfcheck suite: 21 swing-consistency cells, 7 ratio
/// reproductions, and the synthetic round trip.
pub fn run_selfcheck() -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();
    for event in &PUBLISHED_EVENTS {
        outcomes.push(check_inertia_cell(
            event,
            "intercon",
            event.intercon_rocof_mhz_s,
            event.h_intercon_mva_s,
        ));
        outcomes.push(check_inertia_cell(
            event,
            "region",
            event.regional_rocof_mhz_s,
            event.h_region_mva_s,
        ));
        outcomes.push(check_inertia_cell(
            event,
            "local",
            event.local_rocof_mhz_s,
            event.h_local_mva_s,
        ));
    }
    for event in &PUBLISHED_EVENTS {
        outcomes.push(check_ratio(event));
    }
    outcomes.push(check_synthetic_roundtrip());
    outcomes
}
