use std::str::FromStr;

use chronoinfo::blackhole::InformationVolume;
use serde_json::{Number, Value};

/// Fixed seven-decimal rendering. `{:.7}` rounds exact ties to even; negative
/// zero is folded into zero so that golden output does not depend on sign bits.
pub fn fixed(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{x:.7}");
    if s == "-0.0000000" {
        "0.0000000".to_string()
    } else {
        s
    }
}

/// JSON number carrying exactly the text of [`fixed`]. Non-finite values become
/// strings, since JSON has no literal for them.
pub fn json(x: f64) -> Value {
    let s = fixed(x);
    match Number::from_str(&s) {
        Ok(n) if x.is_finite() => Value::Number(n),
        _ => Value::String(s),
    }
}

pub fn volume_text(v: InformationVolume) -> String {
    match v {
        InformationVolume::Finite(bits) => fixed(bits),
        InformationVolume::Infinite => "inf".to_string(),
    }
}

pub fn volume_json(v: InformationVolume) -> Value {
    match v {
        InformationVolume::Finite(bits) => json(bits),
        InformationVolume::Infinite => Value::String("inf".to_string()),
    }
}
