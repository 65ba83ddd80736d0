//! Integers extended with the two infinities.

use std::fmt;
use std::ops::Neg;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integer or one of the symbolic values `-inf` / `+inf`.
///
/// The derived ordering is total: `NegInf < Finite(_) < PosInf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtInt {
    NegInf,
    Finite(i64),
    PosInf,
}

impl ExtInt {
    pub const ZERO: ExtInt = ExtInt::Finite(0);

    pub fn finite(self) -> Option<i64> {
        match self {
            ExtInt::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtInt::Finite(_))
    }

    /// Saturating addition. `(+inf) + (-inf)` is rejected.
    pub fn checked_add(self, rhs: ExtInt) -> Result<ExtInt> {
        use ExtInt::*;
        match (self, rhs) {
            (PosInf, NegInf) | (NegInf, PosInf) => {
                Err(Error::Arithmetic("(+inf) + (-inf) is undefined"))
            }
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => a
                .checked_add(b)
                .map(Finite)
                .ok_or(Error::Arithmetic("integer overflow")),
        }
    }

    pub fn checked_sub(self, rhs: ExtInt) -> Result<ExtInt> {
        self.checked_add(-rhs)
    }

    /// Middle value of three, used to slide a center point into an interval.
    pub fn median(a: ExtInt, b: ExtInt, c: ExtInt) -> ExtInt {
        a.max(b).min(a.min(b).max(c))
    }

    pub fn contains(lo: ExtInt, hi: ExtInt, v: i64) -> bool {
        lo <= ExtInt::Finite(v) && ExtInt::Finite(v) <= hi
    }
}

impl Neg for ExtInt {
    type Output = ExtInt;

    fn neg(self) -> ExtInt {
        match self {
            ExtInt::NegInf => ExtInt::PosInf,
            ExtInt::PosInf => ExtInt::NegInf,
            ExtInt::Finite(v) => ExtInt::Finite(-v),
        }
    }
}

impl From<i64> for ExtInt {
    fn from(v: i64) -> Self {
        ExtInt::Finite(v)
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::NegInf => f.write_str("-inf"),
            ExtInt::PosInf => f.write_str("+inf"),
            ExtInt::Finite(v) => write!(f, "{v}"),
        }
    }
}

// JSON form: a plain integer, or the strings "-inf" / "+inf".
impl Serialize for ExtInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtInt::Finite(v) => s.serialize_i64(*v),
            ExtInt::NegInf => s.serialize_str("-inf"),
            ExtInt::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtInt;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer, \"-inf\" or \"+inf\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtInt, E> {
                Ok(ExtInt::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtInt, E> {
                i64::try_from(v)
                    .map(ExtInt::Finite)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtInt, E> {
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    Ok(ExtInt::Finite(v as i64))
                } else {
                    Err(E::custom("bounds must be integers"))
                }
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtInt, E> {
                match v {
                    "-inf" => Ok(ExtInt::NegInf),
                    "+inf" | "inf" => Ok(ExtInt::PosInf),
                    _ => Err(E::custom(format!("unknown bound `{v}`"))),
                }
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}
