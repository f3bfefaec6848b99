//! Number formatting shared by the text, JSON and CSV outputs.

use serde_json::Value;

/// Digits kept in JSON and CSV output.
pub const MACHINE_DIGITS: usize = 12;
/// Digits shown in text output.
pub const TEXT_DIGITS: usize = 6;

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let rounded: f64 = format!("{:.*e}", digits - 1, x).parse().unwrap_or(x);
    // avoid printing -0
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Shortest decimal form of `x` at `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    let r = round_sig(x, digits);
    let a = r.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

pub fn text(x: f64) -> String {
    sig(x, TEXT_DIGITS)
}

pub fn machine(x: f64) -> String {
    sig(x, MACHINE_DIGITS)
}

pub fn text_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| text(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Rounds every non-integer number in `v` to [`MACHINE_DIGITS`].
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64(round_sig(x, MACHINE_DIGITS)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}
