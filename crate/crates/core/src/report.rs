//! Report serialization helpers.
//!
//! Every floating-point value in a report is written with 17 significant
//! digits in scientific notation (`{:.16e}`), which round-trips any `f64` and
//! is identical on every platform. Non-finite values become `null` in JSON.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats `x` with 17 significant digits, e.g. `2.8873280995676742e0`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn raw(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".into()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

/// `serialize_with` helper for `f64` fields.
pub fn sig17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x).serialize(s)
}

/// `serialize_with` helper for `Vec<f64>` / `[f64]` fields.
pub fn sig17_seq<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let raws: Vec<Box<RawValue>> = xs.iter().map(|&x| raw(x)).collect();
    raws.serialize(s)
}

/// `serialize_with` helper for `Option<f64>` fields.
pub fn sig17_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    x.map(raw).serialize(s)
}

/// `serialize_with` helper for `Option<Vec<f64>>` fields.
pub fn sig17_opt_seq<S: Serializer>(xs: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
    xs.as_ref()
        .map(|v| v.iter().map(|&x| raw(x)).collect::<Vec<_>>())
        .serialize(s)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Probe {
        #[serde(serialize_with = "sig17")]
        x: f64,
        #[serde(serialize_with = "sig17_seq")]
        xs: Vec<f64>,
        #[serde(serialize_with = "sig17_opt")]
        none: Option<f64>,
    }

    #[test]
    fn fixed_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        let json = to_json(&Probe {
            x: 1.0 / 3.0,
            xs: vec![1.0, f64::NAN],
            none: None,
        });
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 1.0 / 3.0);
        assert!(back["xs"][1].is_null());
        assert!(json.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, 123456.789, -7.0e22] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
