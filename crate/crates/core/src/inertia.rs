//! Swing-equation inertia estimation and per-event result assembly.
//!
//! The estimator isolates the product `H·S` in MVA·s:
//!
//! ```text
//! H·S = ΔP · f_s / (2 · |df/dt|)
//! ```
//!
//! No attempt is made to split `H` from `S`; the regional MVA base is not
//! observable from frequency measurements alone.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::onset::{self, OnsetError, OnsetResult};
use crate::rocof::RocofEstimate;
use crate::trace::{AnalysisResult, DisturbanceEvent, RegionDefinition};

/// Relative tolerance for the dual-route ratio cross-check: the inertia
/// quotient and the inverse RoCoF quotient are algebraically identical, so
/// any disagreement beyond float rounding means an estimate was built
/// inconsistently.
pub const RATIO_CROSS_CHECK_TOL: f64 = 1e-9;

/// A swing-equation inertia estimate with its inputs recorded for audit.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaEstimate {
    /// The product `H·S` in MVA·s, strictly positive.
    pub h_times_s_mva_s: f64,
    /// The RoCoF measurement the estimate was derived from.
    pub source_rocof: RocofEstimate,
    /// Power mismatch magnitude in MW.
    pub delta_p_mw: f64,
    /// Nominal system frequency in Hz.
    pub nominal_frequency_hz: f64,
}

#[derive(Debug, Error)]
pub enum InertiaError {
    #[error("RoCoF below resolvable threshold: |{value_hz_s}| Hz/s < guard {guard_hz_s} Hz/s")]
    RocofBelowGuard { value_hz_s: f64, guard_hz_s: f64 },
    #[error("power mismatch must be strictly positive, got {0} MW")]
    NonPositiveDeltaP(f64),
    #[error("estimates do not describe the same event: {0}")]
    MismatchedInputs(String),
    #[error("ratio cross-check failed: inertia quotient {inertia_quotient} vs rocof quotient {rocof_quotient}")]
    RatioCrossCheck { inertia_quotient: f64, rocof_quotient: f64 },
    #[error("missing component: {0}")]
    MissingComponent(&'static str),
    #[error("arrival time: {0}")]
    Arrival(#[from] OnsetError),
}

/// Apply the rearranged swing equation to one RoCoF measurement.
///
/// The guard rejects RoCoF magnitudes below the sensor noise floor, where
/// the division would explode into meaningless inertia values.
pub fn inertia_from_rocof(
    delta_p_mw: f64,
    rocof: &RocofEstimate,
    nominal_frequency_hz: f64,
    guard_hz_s: f64,
) -> Result<InertiaEstimate, InertiaError> {
    if !(delta_p_mw > 0.0) {
        return Err(InertiaError::NonPositiveDeltaP(delta_p_mw));
    }
    let magnitude = rocof.value_hz_s.abs();
    if magnitude < guard_hz_s {
        return Err(InertiaError::RocofBelowGuard {
            value_hz_s: rocof.value_hz_s,
            guard_hz_s,
        });
    }
    Ok(InertiaEstimate {
        h_times_s_mva_s: delta_p_mw * nominal_frequency_hz / (2.0 * magnitude),
        source_rocof: rocof.clone(),
        delta_p_mw,
        nominal_frequency_hz,
    })
}

/// Regional-to-system inertia ratio `h_region / h_intercon`.
///
/// ΔP and f_s cancel in the quotient, so the same number must emerge from
/// the inverse RoCoF quotient; both routes are computed and cross-checked to
/// [`RATIO_CROSS_CHECK_TOL`].
pub fn region_to_system_ratio(
    h_region: &InertiaEstimate,
    h_intercon: &InertiaEstimate,
) -> Result<f64, InertiaError> {
    if (h_region.delta_p_mw - h_intercon.delta_p_mw).abs()
        > h_region.delta_p_mw.abs() * 1e-9
    {
        return Err(InertiaError::MismatchedInputs(format!(
            "delta_p {} MW vs {} MW",
            h_region.delta_p_mw, h_intercon.delta_p_mw
        )));
    }
    if (h_region.nominal_frequency_hz - h_intercon.nominal_frequency_hz).abs() > 1e-9 {
        return Err(InertiaError::MismatchedInputs(format!(
            "nominal frequency {} Hz vs {} Hz",
            h_region.nominal_frequency_hz, h_intercon.nominal_frequency_hz
        )));
    }
    let inertia_quotient = h_region.h_times_s_mva_s / h_intercon.h_times_s_mva_s;
    let rocof_quotient =
        h_intercon.source_rocof.value_hz_s.abs() / h_region.source_rocof.value_hz_s.abs();
    if (inertia_quotient - rocof_quotient).abs() > RATIO_CROSS_CHECK_TOL * inertia_quotient.abs()
    {
        return Err(InertiaError::RatioCrossCheck { inertia_quotient, rocof_quotient });
    }
    Ok(inertia_quotient)
}

/// Everything [`assemble_result`] needs; `None` components produce an error
/// naming what is missing.
#[derive(Debug, Clone, Default)]
pub struct ResultComponents {
    pub region_onset: Option<OnsetResult>,
    pub intercon_onset: Option<OnsetResult>,
    pub regional_rocof: Option<RocofEstimate>,
    pub interconnection_rocof: Option<RocofEstimate>,
    pub per_sensor_rocof: BTreeMap<String, RocofEstimate>,
    pub worst_local_rocof: Option<RocofEstimate>,
    pub h_region: Option<InertiaEstimate>,
    pub h_intercon: Option<InertiaEstimate>,
    pub h_local: Option<InertiaEstimate>,
    pub diagnostics: Vec<String>,
}

/// Assemble the full per-event metric row.
///
/// Computes arrival time and the region/system ratio from the components,
/// merges diagnostics, and applies the sign-convention check: a generation
/// trip must show negative RoCoF (load loss positive). Violations produce a
/// diagnostic, never silent sign-flipping. When the per-sensor map covers
/// every region member, `|local| < |regional|` is also flagged.
pub fn assemble_result(
    event: &DisturbanceEvent,
    region: &RegionDefinition,
    parts: ResultComponents,
) -> Result<AnalysisResult, InertiaError> {
    let region_onset = parts.region_onset.ok_or(InertiaError::MissingComponent("regional onset"))?;
    let intercon_onset =
        parts.intercon_onset.ok_or(InertiaError::MissingComponent("interconnection onset"))?;
    let regional_rocof =
        parts.regional_rocof.ok_or(InertiaError::MissingComponent("regional rocof"))?;
    let interconnection_rocof = parts
        .interconnection_rocof
        .ok_or(InertiaError::MissingComponent("interconnection rocof"))?;
    let worst_local =
        parts.worst_local_rocof.ok_or(InertiaError::MissingComponent("local rocof"))?;
    let h_region = parts.h_region.ok_or(InertiaError::MissingComponent("regional inertia"))?;
    let h_intercon =
        parts.h_intercon.ok_or(InertiaError::MissingComponent("interconnection inertia"))?;
    let h_local = parts.h_local.ok_or(InertiaError::MissingComponent("local inertia"))?;

    let mut diagnostics = parts.diagnostics;
    let (arrival_time_s, arrival_diags) = onset::arrival_time(&region_onset, &intercon_onset)?;
    diagnostics.extend(arrival_diags);

    let ratio = region_to_system_ratio(&h_region, &h_intercon)?;

    let expected_sign = event.kind.expected_rocof_sign();
    for (name, value) in [
        ("regional", regional_rocof.value_hz_s),
        ("interconnection", interconnection_rocof.value_hz_s),
        ("local", worst_local.value_hz_s),
    ] {
        if value * expected_sign < 0.0 {
            diagnostics.push(format!(
                "sign convention violation: {name} RoCoF {value} Hz/s contradicts {:?}",
                event.kind
            ));
        }
    }

    if parts.per_sensor_rocof.len() == region.member_sensor_ids.len()
        && worst_local.value_hz_s.abs() < regional_rocof.value_hz_s.abs()
    {
        diagnostics.push(format!(
            "local RoCoF magnitude {} below regional {}; spatial averaging should attenuate, not amplify",
            worst_local.value_hz_s.abs(),
            regional_rocof.value_hz_s.abs()
        ));
    }

    Ok(AnalysisResult {
        event_id: event.event_id.clone(),
        interconnection_rocof_hz_s: interconnection_rocof.value_hz_s,
        regional_rocof_hz_s: regional_rocof.value_hz_s,
        local_rocof_hz_s: worst_local.value_hz_s,
        per_sensor_rocof: parts
            .per_sensor_rocof
            .iter()
            .map(|(id, est)| (id.clone(), est.value_hz_s))
            .collect(),
        h_intercon_mva_s: h_intercon.h_times_s_mva_s,
        h_region_mva_s: h_region.h_times_s_mva_s,
        h_local_mva_s: h_local.h_times_s_mva_s,
        arrival_time_s,
        region_to_system_ratio: ratio,
        onset_time_region: region_onset.onset_time,
        onset_time_intercon: intercon_onset.onset_time,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::EventKind;

    fn estimate(delta_p: f64, rocof_hz_s: f64) -> InertiaEstimate {
        inertia_from_rocof(delta_p, &RocofEstimate::from_reported_mhz_s(rocof_hz_s * 1e3), 60.0, 1e-4)
            .unwrap()
    }

    #[test]
    fn published_regional_cell_reproduces() {
        // 771 MW at -65 mHz/s: 355,846 MVA·s, within rounding of the
        // published 355,850.
        let est = estimate(771.0, -0.065);
        assert!((est.h_times_s_mva_s - 355_846.153846).abs() < 1e-3);
        assert!((est.h_times_s_mva_s - 355_850.0).abs() / 355_850.0 < 0.03);
    }

    #[test]
    fn published_local_cell_reproduces() {
        let est = estimate(1130.0, -0.307);
        assert!((est.h_times_s_mva_s - 110_423.452768).abs() < 1e-3);
        assert!((est.h_times_s_mva_s - 110_000.0).abs() / 110_000.0 < 0.03);
    }

    #[test]
    fn algebraic_round_trip() {
        let h = 100_000.0;
        let rocof = crate::synth::rocof_from_inertia(h, 1000.0, 60.0).unwrap();
        assert!((rocof - (-0.3)).abs() < 1e-12);
        let est = estimate(1000.0, rocof);
        assert!((est.h_times_s_mva_s - h).abs() / h < 1e-12);
    }

    #[test]
    fn guard_rejects_tiny_rocof() {
        let rocof = RocofEstimate::from_reported_mhz_s(-0.03); // 3e-8 Hz/s
        assert!(matches!(
            inertia_from_rocof(1000.0, &rocof, 60.0, 1e-4),
            Err(InertiaError::RocofBelowGuard { .. })
        ));
    }

    #[test]
    fn non_positive_delta_p_rejected() {
        let rocof = RocofEstimate::from_reported_mhz_s(-65.0);
        assert!(matches!(
            inertia_from_rocof(0.0, &rocof, 60.0, 1e-4),
            Err(InertiaError::NonPositiveDeltaP(_))
        ));
        assert!(matches!(
            inertia_from_rocof(-5.0, &rocof, 60.0, 1e-4),
            Err(InertiaError::NonPositiveDeltaP(_))
        ));
    }

    #[test]
    fn inertia_decreases_as_rocof_grows() {
        let mut prev = f64::INFINITY;
        for mhz in [10.0, 50.0, 100.0, 500.0, 1000.0] {
            let est = estimate(1000.0, -mhz / 1e3);
            assert!(est.h_times_s_mva_s < prev);
            prev = est.h_times_s_mva_s;
        }
    }

    #[test]
    fn ratio_matches_published_event() {
        // Published inertia pair for the 2024-08-31 event: 41.6 %.
        let rocof_region = 771.0 * 60.0 / (2.0 * 355_850.0);
        let rocof_intercon = 771.0 * 60.0 / (2.0 * 855_083.0);
        let h_region = estimate(771.0, -rocof_region);
        let h_intercon = estimate(771.0, -rocof_intercon);
        let ratio = region_to_system_ratio(&h_region, &h_intercon).unwrap();
        assert!((ratio - 0.416).abs() < 5e-4, "ratio {ratio}");
    }

    #[test]
    fn ratio_of_equal_estimates_is_one() {
        let a = estimate(1000.0, -0.1);
        let b = estimate(1000.0, -0.1);
        assert!((region_to_system_ratio(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_cross_check_form_consistent_with_published_rounding() {
        // Published RoCoFs for 2024-08-31: -27 and -65 mHz/s. The inverse
        // quotient 27/65 = 0.4154 agrees with the published 41.6 % within
        // the rounding of whole-mHz/s entries.
        let quotient: f64 = 0.027 / 0.065;
        assert!((quotient - 0.4154).abs() < 1e-4);
        assert!((quotient - 0.416).abs() < 0.01);
    }

    #[test]
    fn ratio_rejects_mismatched_events() {
        let a = estimate(1000.0, -0.1);
        let b = estimate(900.0, -0.1);
        assert!(matches!(
            region_to_system_ratio(&a, &b),
            Err(InertiaError::MismatchedInputs(_))
        ));
    }

    #[test]
    fn ratio_rejects_inconsistent_estimates() {
        let a = estimate(1000.0, -0.1);
        let mut b = estimate(1000.0, -0.2);
        // Tamper with the stored inertia so the two routes disagree.
        b.h_times_s_mva_s *= 1.5;
        assert!(matches!(
            region_to_system_ratio(&a, &b),
            Err(InertiaError::RatioCrossCheck { .. })
        ));
    }

    fn onset_at(t: f64) -> OnsetResult {
        OnsetResult {
            onset_time: t,
            onset_index: (t / 0.1).round() as usize,
            rocof_pre: 0.0,
            rocof_post: -0.2,
            score: 0.2,
            search_span: (t - 5.0, t + 5.0),
            sample_interval: 0.1,
        }
    }

    fn trip_event() -> DisturbanceEvent {
        DisturbanceEvent {
            event_id: "ev1".into(),
            approx_time: 10.0,
            delta_p_mw: 1000.0,
            kind: EventKind::GenerationTrip,
            region_id: "R".into(),
        }
    }

    fn full_components() -> ResultComponents {
        let regional = RocofEstimate::from_reported_mhz_s(-200.0);
        let intercon = RocofEstimate::from_reported_mhz_s(-50.0);
        let local = RocofEstimate::from_reported_mhz_s(-300.0);
        ResultComponents {
            region_onset: Some(onset_at(10.0)),
            intercon_onset: Some(onset_at(10.2)),
            regional_rocof: Some(regional.clone()),
            interconnection_rocof: Some(intercon.clone()),
            per_sensor_rocof: [("s1".to_string(), local.clone())].into_iter().collect(),
            worst_local_rocof: Some(local.clone()),
            h_region: Some(inertia_from_rocof(1000.0, &regional, 60.0, 1e-4).unwrap()),
            h_intercon: Some(inertia_from_rocof(1000.0, &intercon, 60.0, 1e-4).unwrap()),
            h_local: Some(inertia_from_rocof(1000.0, &local, 60.0, 1e-4).unwrap()),
            diagnostics: vec![],
        }
    }

    #[test]
    fn assembly_populates_all_metric_fields() {
        let region = RegionDefinition::uniform("R", vec!["s1".into()]);
        let result = assemble_result(&trip_event(), &region, full_components()).unwrap();
        assert_eq!(result.event_id, "ev1");
        assert!((result.arrival_time_s - 0.2).abs() < 1e-12);
        assert!((result.region_to_system_ratio - 0.25).abs() < 1e-9);
        assert_eq!(result.per_sensor_rocof.len(), 1);
        assert!(result.diagnostics.is_empty(), "{:?}", result.diagnostics);
        assert!(result.h_region_mva_s > 0.0);
        assert_eq!(
            result.region_to_system_ratio,
            result.h_region_mva_s / result.h_intercon_mva_s
        );
    }

    #[test]
    fn assembly_names_missing_component() {
        let region = RegionDefinition::uniform("R", vec!["s1".into()]);
        let mut parts = full_components();
        parts.intercon_onset = None;
        match assemble_result(&trip_event(), &region, parts) {
            Err(InertiaError::MissingComponent(name)) => {
                assert_eq!(name, "interconnection onset")
            }
            other => panic!("expected missing component, got {other:?}"),
        }
    }

    #[test]
    fn load_loss_with_positive_rocof_has_no_sign_diagnostic() {
        let region = RegionDefinition::uniform("R", vec!["s1".into()]);
        let mut event = trip_event();
        event.kind = EventKind::LoadLoss;
        let mut parts = full_components();
        for est in [
            parts.regional_rocof.as_mut().unwrap(),
            parts.interconnection_rocof.as_mut().unwrap(),
            parts.worst_local_rocof.as_mut().unwrap(),
        ] {
            est.value_hz_s = -est.value_hz_s;
        }
        parts.h_region = Some(
            inertia_from_rocof(1000.0, parts.regional_rocof.as_ref().unwrap(), 60.0, 1e-4).unwrap(),
        );
        parts.h_intercon = Some(
            inertia_from_rocof(1000.0, parts.interconnection_rocof.as_ref().unwrap(), 60.0, 1e-4)
                .unwrap(),
        );
        parts.h_local = Some(
            inertia_from_rocof(1000.0, parts.worst_local_rocof.as_ref().unwrap(), 60.0, 1e-4)
                .unwrap(),
        );
        let result = assemble_result(&event, &region, parts).unwrap();
        assert!(result.regional_rocof_hz_s > 0.0);
        assert!(result.diagnostics.is_empty(), "{:?}", result.diagnostics);
    }

    #[test]
    fn trip_with_positive_rocof_gets_sign_diagnostic() {
        let region = RegionDefinition::uniform("R", vec!["s1".into()]);
        let mut parts = full_components();
        parts.regional_rocof.as_mut().unwrap().value_hz_s = 0.2;
        parts.h_region = Some(
            inertia_from_rocof(1000.0, parts.regional_rocof.as_ref().unwrap(), 60.0, 1e-4).unwrap(),
        );
        let result = assemble_result(&trip_event(), &region, parts).unwrap();
        assert!(
            result.diagnostics.iter().any(|d| d.contains("sign convention")),
            "{:?}",
            result.diagnostics
        );
    }
}
