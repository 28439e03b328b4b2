//! Plain-text output helpers shared by the CSV writers.
//!
//! Every CSV has a header row, LF line endings, and prints floats with 17
//! significant digits so outputs are byte-stable for a fixed input.

use std::fmt::Write;

/// Formats with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Builds a CSV document from a header and numeric rows.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut first = true;
        for &v in row.as_ref() {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{}", fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

/// Serializes to pretty JSON with object keys in sorted order.
pub fn to_sorted_json<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    // serde_json::Map is a BTreeMap unless `preserve_order` is enabled.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
