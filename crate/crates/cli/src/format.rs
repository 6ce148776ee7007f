//! Number formatting shared by the CSV writers. Every value round-trips
//! through `f64::from_str` exactly.

pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), fmt_f64)
}

/// Semicolon-separated, so the list stays a single CSV field.
pub fn fmt_times(ts: &[f64]) -> String {
    ts.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(";")
}
