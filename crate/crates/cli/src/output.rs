//! Machine-readable output: JSON with floating-point fields at 17
//! significant digits, and the same float format for CSV cells.

use serde_json::ser::Formatter;
use serde_json::Value;

/// Writes `f64` as `{:.16e}` (one leading digit plus sixteen fractional
/// digits: 17 significant digits), enough to round-trip any double exactly
/// and stable across platforms.
struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a JSON value with 17-significant-digit floats.
pub fn to_json_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits);
    serde::Serialize::serialize(value, &mut ser).expect("JSON serialization cannot fail");
    String::from_utf8(out).expect("serializer emits UTF-8")
}

/// Prints a JSON value to stdout with a trailing newline.
pub fn print_json(value: &Value) {
    println!("{}", to_json_string(value));
}

/// The CSV float format, matching the JSON one.
pub fn csv_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// JSON array from a slice of floats.
pub fn float_array(values: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(values.into_iter().map(|v| v.into()).collect())
}

/// JSON array-of-arrays from a dense matrix.
pub fn matrix_array(matrix: &ndarray::Array2<f64>) -> Value {
    Value::Array(
        matrix
            .rows()
            .into_iter()
            .map(|row| float_array(row.iter().copied()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        let s = to_json_string(&json!({ "chi": 1.0 / 6.0 }));
        assert_eq!(s, "{\"chi\":1.6666666666666666e-1}");
    }

    #[test]
    fn csv_float_matches_the_json_format() {
        assert_eq!(csv_float(0.75), "7.5000000000000000e-1");
    }
}
