//! A nonnegative-or-unbounded real, used wherever a figure of merit can be infinite.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Either a finite value or an explicit "unbounded" marker.
///
/// Serialized as a JSON number, or as the string `"inf"` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// `x / y` for `x, y >= 0`, returning `Infinite` when `y == 0` and `x > 0`.
    pub fn ratio(x: f64, y: f64) -> Extended {
        if y == 0.0 {
            if x == 0.0 {
                Extended::Finite(0.0)
            } else {
                Extended::Infinite
            }
        } else {
            Extended::Finite(x / y)
        }
    }

    /// Reciprocal; `1/0` is unbounded and `1/inf` is zero.
    pub fn recip(self) -> Extended {
        match self {
            Extended::Infinite => Extended::Finite(0.0),
            Extended::Finite(0.0) => Extended::Infinite,
            Extended::Finite(v) => Extended::Finite(1.0 / v),
        }
    }

    /// Harmonic combination `(1/a + 1/b)^-1`.
    pub fn harmonic(a: Extended, b: Extended) -> Extended {
        match (a, b) {
            (Extended::Infinite, x) | (x, Extended::Infinite) => x,
            (Extended::Finite(x), Extended::Finite(y)) => {
                if x == 0.0 || y == 0.0 {
                    Extended::Finite(0.0)
                } else {
                    Extended::Finite(1.0 / (1.0 / x + 1.0 / y))
                }
            }
        }
    }

    /// Multiply by a finite nonnegative scalar.
    pub fn scale(self, s: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(v * s),
            Extended::Infinite if s == 0.0 => Extended::Finite(0.0),
            Extended::Infinite => Extended::Infinite,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Extended::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Extended::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}
