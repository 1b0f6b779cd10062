//! Number formatting shared by the CSV and JSON writers.

use num_complex::Complex64;
use serde_json::{Number, Value};

/// 17 significant digits, enough to round-trip any double.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A JSON number printed by [`fmt17`]; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    fmt17(x)
        .parse::<Number>()
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// `[re, im]`.
pub fn complex(z: Complex64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

pub fn opt_complex(z: Option<Complex64>) -> Value {
    z.map(complex).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e308, std::f64::consts::PI] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
            let v = serde_json::to_string(&num(x)).unwrap();
            assert_eq!(v.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(fmt17(f64::NEG_INFINITY), "-inf");
    }
}
