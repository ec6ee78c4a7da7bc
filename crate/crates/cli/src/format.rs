//! Number formatting shared by the JSON and CSV writers.

use serde_json::{Number, Value};

/// A real in 17-significant-digit scientific notation, enough to round-trip
/// every f64. Non-finite values become `null`.
pub fn real(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = real_text(x);
    Value::Number(text.parse::<Number>().expect("formatted float is valid JSON"))
}

pub fn real_text(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| real(x)).collect())
}

pub fn opt_real(x: Option<f64>) -> Value {
    x.map_or(Value::Null, real)
}
