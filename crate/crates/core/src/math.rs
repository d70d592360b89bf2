//! Small numeric helpers shared by the estimation modules.

/// Ordinary least-squares slope of uniformly spaced samples.
///
/// Abscissae are `0, dt, 2·dt, …` relative to the window start; relative
/// time keeps the normal equations well conditioned even when absolute
/// timestamps are epoch-sized. For two samples this reduces to the chord
/// slope `(y1 - y0) / dt`.
pub(crate) fn least_squares_slope(values: &[f64], dt: f64) -> f64 {
    debug_assert!(values.len() >= 2);
    debug_assert!(dt > 0.0);
    let n = values.len() as f64;
    let x_mean = dt * (n - 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 * dt - x_mean;
        num += dx * (y - y_mean);
        den += dx * dx;
    }
    num / den
}

/// Median with the even-count convention: mean of the two central values.
/// Sorts the buffer in place.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Sample standard deviation (n − 1 denominator). Zero for fewer than two
/// values.
pub(crate) fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}
