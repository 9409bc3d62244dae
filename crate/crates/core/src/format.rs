//! Number formatting shared by the CSV writers.

/// Shortest representation of `x` that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
