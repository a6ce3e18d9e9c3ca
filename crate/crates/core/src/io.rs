//! Deterministic text emission shared by the CSV writers.

use std::fmt::Write as _;

/// Formats a float with 17 significant digits, locale independent.
///
/// Non-finite values are written as `nan`, `inf` and `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// Builds a CSV document from a header and rows of pre-formatted cells.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
