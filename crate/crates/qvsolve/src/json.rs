//! Canonical JSON: sorted keys, two-space indentation and every float
//! written with 17 significant digits, so a rendered document parses back to
//! the same bytes.

use num_complex::Complex64;
use serde_json::{Map, Number, Value};

/// Floats become `d.dddddddddddddddde±x`; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(text.parse::<Number>().expect("formatted float is valid JSON"))
}

pub fn int(x: u64) -> Value {
    Value::from(x)
}

pub fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

pub fn vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn matrix<R: AsRef<[f64]>>(rows: &[R]) -> Value {
    Value::Array(rows.iter().map(|r| vec(r.as_ref())).collect())
}

pub fn complex(z: Complex64) -> Value {
    object([("re", num(z.re)), ("im", num(z.im))])
}

pub fn object<'a>(pairs: impl IntoIterator<Item = (&'a str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

pub fn render(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("values always serialize");
    out.push('\n');
    out
}

/// Re-renders any JSON text in canonical form.
pub fn canonicalize(input: &str) -> serde_json::Result<String> {
    let value: Value = serde_json::from_str(input)?;
    Ok(render(&canonical(value)))
}

/// Rewrites every float in `value` to the canonical digits.
pub fn canonical(mut value: Value) -> Value {
    normalize(&mut value);
    value
}

fn normalize(value: &mut Value) {
    match value {
        Value::Number(n) => {
            let s = n.to_string();
            if s.contains(['.', 'e', 'E']) {
                if let Ok(x) = s.parse::<f64>() {
                    *value = num(x);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_every_bit() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0, f64::MIN_POSITIVE] {
            let v = num(x);
            let back: f64 = v.to_string().parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{v}");
        }
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(1.5).to_string(), "1.5000000000000000e+0");
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let doc = object([("b", vec(&[0.1, 2.0])), ("a", int(3)), ("c", complex(Complex64::new(1.0, -0.25)))]);
        let once = render(&doc);
        assert_eq!(canonicalize(&once).unwrap(), once);
        assert!(once.find("\"a\"").unwrap() < once.find("\"b\"").unwrap());
        assert_eq!(canonicalize("{\"x\": 0.1, \"n\": 7}").unwrap(), canonicalize("{\"n\":7,\"x\":1e-1}").unwrap());
    }
}
