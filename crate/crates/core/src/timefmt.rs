//! Conversion between absolute UTC timestamps (seconds with fractional part)
//! and ISO-8601 text as used by the trace CSV and JSON descriptor formats.

use chrono::{DateTime, SecondsFormat, Utc};

/// Parse an ISO-8601 / RFC 3339 timestamp into UTC seconds since the epoch.
pub fn parse_utc_seconds(text: &str) -> Result<f64, String> {
    let dt = DateTime::parse_from_rfc3339(text.trim())
        .map_err(|e| format!("invalid timestamp {text:?}: {e}"))?;
    let utc = dt.with_timezone(&Utc);
    Ok(utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) * 1e-9)
}

/// Format UTC seconds as ISO-8601 with microsecond precision.
///
/// Microseconds cover every sample rate the f64 representation can carry at
/// epoch magnitudes; a fixed width keeps file output deterministic.
pub fn format_utc_seconds(t: f64) -> String {
    let mut secs = t.floor();
    // Round to the displayed precision; f64 resolution at epoch magnitudes
    // is ~0.1 µs, so truncation would print .099999 for an intended .1.
    let mut micros = ((t - secs) * 1e6).round();
    if micros >= 1e6 {
        secs += 1.0;
        micros = 0.0;
    }
    let dt = DateTime::<Utc>::from_timestamp(secs as i64, micros as u32 * 1000)
        .expect("timestamp representable");
    dt.to_rfc3339_opts(SecondsFormat::Micros, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_fractional_seconds() {
        let t = parse_utc_seconds("2024-08-31T07:36:00.1Z").unwrap();
        assert!((t - 1725089760.1).abs() < 1e-6);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_utc_seconds("not a time").is_err());
        assert!(parse_utc_seconds("2024-13-40T99:00:00Z").is_err());
    }

    #[test]
    fn format_round_trips() {
        for &t in &[0.0, 1725089760.1, 1704067200.0, 1360521000.25] {
            let s = format_utc_seconds(t);
            let back = parse_utc_seconds(&s).unwrap();
            assert!((back - t).abs() < 1e-6, "{t} -> {s} -> {back}");
        }
    }

    #[test]
    fn format_is_fixed_width_utc() {
        assert_eq!(format_utc_seconds(1704067200.0), "2024-01-01T00:00:00.000000Z");
        assert_eq!(format_utc_seconds(1704067200.1), "2024-01-01T00:00:00.100000Z");
    }
}
