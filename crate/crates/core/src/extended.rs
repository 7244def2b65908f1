//! Non-negative-infinity-aware reals.
//!
//! Rate functions, moment abscissas and the maximal slope all live in
//! `(-inf, +inf]`. [`Extended`] keeps the infinite case as an explicit
//! variant so comparisons against `θ↑` or `r̄` are exact and never depend
//! on a float sentinel.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInf,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::PosInf)
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::PosInf => None,
        }
    }

    /// Lossy conversion for plotting and CSV output.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(x) => x,
            Extended::PosInf => f64::INFINITY,
        }
    }

    /// Scales by a non-negative factor with the convention `0 · ∞ = 0`.
    pub fn scale(self, factor: f64) -> Extended {
        debug_assert!(factor >= 0.0);
        match self {
            Extended::Finite(x) => Extended::Finite(x * factor),
            Extended::PosInf if factor == 0.0 => Extended::ZERO,
            Extended::PosInf => Extended::PosInf,
        }
    }

    pub fn min(self, other: Extended) -> Extended {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Extended) -> Extended {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl From<f64> for Extended {
    /// `+∞` maps to [`Extended::PosInf`]; every other value is kept as is.
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            Extended::PosInf
        } else {
            Extended::Finite(x)
        }
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            (Extended::Finite(_), Extended::PosInf) => Some(Ordering::Less),
            (Extended::PosInf, Extended::Finite(_)) => Some(Ordering::Greater),
            (Extended::PosInf, Extended::PosInf) => Some(Ordering::Equal),
        }
    }
}

impl PartialEq<f64> for Extended {
    fn eq(&self, other: &f64) -> bool {
        matches!(self, Extended::Finite(x) if x == other)
    }
}

impl PartialOrd<f64> for Extended {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.partial_cmp(&Extended::Finite(*other))
    }
}

impl Add for Extended {
    type Output = Extended;

    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::PosInf,
        }
    }
}

impl Add<f64> for Extended {
    type Output = Extended;

    fn add(self, rhs: f64) -> Extended {
        self + Extended::Finite(rhs)
    }
}

impl AddAssign for Extended {
    fn add_assign(&mut self, rhs: Extended) {
        *self = *self + rhs;
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => fmt::Display::fmt(x, f),
            Extended::PosInf => f.write_str("inf"),
        }
    }
}

// JSON has no infinity literal: finite values are numbers, `+∞` is the
// string "inf".
impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => serializer.serialize_f64(*x),
            Extended::PosInf => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => Ok(Extended::Finite(x)),
            Repr::Text(s) if s == "inf" || s == "+inf" => Ok(Extended::PosInf),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(Extended::Finite(1e300) < Extended::PosInf);
        assert!(Extended::PosInf > 3.0);
        assert_eq!(Extended::PosInf.partial_cmp(&Extended::PosInf), Some(Ordering::Equal));
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(Extended::PosInf.scale(0.0), Extended::ZERO);
        assert_eq!(Extended::PosInf.scale(2.0), Extended::PosInf);
    }

    #[test]
    fn addition_absorbs_infinity() {
        assert_eq!(Extended::Finite(1.0) + Extended::PosInf, Extended::PosInf);
        assert_eq!(Extended::Finite(1.0) + 2.0, Extended::Finite(3.0));
    }

    #[test]
    fn json_uses_inf_string() {
        let s = serde_json::to_string(&[Extended::Finite(0.5), Extended::PosInf]).unwrap();
        assert_eq!(s, r#"[0.5,"inf"]"#);
        let back: Vec<Extended> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Extended::Finite(0.5), Extended::PosInf]);
    }
}
