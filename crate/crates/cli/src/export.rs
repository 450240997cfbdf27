//! Bit-stable rendering: every float is written with 17 significant digits.

use serde::Serialize;
use serde_json::value::RawValue;

/// A float rendered as `d.dddddddddddddddde±x`; non-finite values become
/// JSON `null` (and an empty CSV cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        // Avoid "-0" so mirrored runs agree byte for byte.
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

impl Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(fmt_f64(self.0)).map_err(serde::ser::Error::custom)?.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().map(|x| Num(*x)).collect()
}

pub fn point(p: [f64; 2]) -> [Num; 2] {
    [Num(p[0]), Num(p[1])]
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "");
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn json_numbers_are_raw() {
        let s = serde_json::to_string(&vec![Num(2.0), Num(f64::NAN)]).unwrap();
        assert_eq!(s, "[2.0000000000000000e0,null]");
    }
}
