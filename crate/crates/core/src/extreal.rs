//! Extended reals with the max-plus conventions.
//!
//! `ExtReal` wraps an `f64` whose infinities stand for `±∞`. NaN is never
//! representable and `-0.0` is folded to `+0.0`, so bitwise equality of the
//! payload coincides with equality in `ℝ ∪ {±∞}`.
//!
//! Addition uses the convention that `-∞` is absorbing: `(-∞) + (+∞) = -∞`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const POS_INF: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Panics on NaN. Use [`ExtReal::try_new`] for untrusted input.
    #[inline]
    pub fn new(v: f64) -> Self {
        assert!(!v.is_nan(), "ExtReal cannot hold NaN");
        ExtReal(v + 0.0)
    }

    pub fn try_new(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::NotANumber)
        } else {
            Ok(ExtReal(v + 0.0))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Finite value, or `None` for `±∞`.
    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }

    /// Max-plus addition.
    #[inline]
    pub fn oplus(self, other: ExtReal) -> ExtReal {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// Max-plus multiplication: ordinary addition with `-∞` absorbing.
    #[inline]
    pub fn otimes(self, other: ExtReal) -> ExtReal {
        if self.is_neg_inf() || other.is_neg_inf() {
            ExtReal::NEG_INF
        } else {
            // inf + finite and finite + finite never produce NaN here
            ExtReal(self.0 + other.0 + 0.0)
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    /// Bit pattern of the payload; equal values give equal bits.
    pub fn to_bits(self) -> u64 {
        self.0.to_bits()
    }
}

pub fn oplus(a: ExtReal, b: ExtReal) -> ExtReal {
    a.oplus(b)
}

pub fn otimes(a: ExtReal, b: ExtReal) -> ExtReal {
    a.otimes(b)
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("ExtReal is never NaN")
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        self.otimes(rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal(-self.0 + 0.0)
    }
}

/// `a - b` is `a + (-b)` under the absorbing convention.
impl Sub for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: ExtReal) -> ExtReal {
        self.otimes(-rhs)
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_inf() {
            f.write_str("+inf")
        } else if self.is_neg_inf() {
            f.write_str("-inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_pos_inf() {
            s.serialize_str("+inf")
        } else if self.is_neg_inf() {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

struct ExtRealVisitor;

impl<'de> Visitor<'de> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or one of \"-inf\", \"+inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
        ExtReal::try_new(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
        Ok(ExtReal::new(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
        Ok(ExtReal::new(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
        match v {
            "+inf" | "inf" => Ok(ExtReal::POS_INF),
            "-inf" => Ok(ExtReal::NEG_INF),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<ExtReal, D::Error> {
        d.deserialize_any(ExtRealVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ext() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            1 => Just(ExtReal::NEG_INF),
            1 => Just(ExtReal::POS_INF),
            // dyadic values keep sums exact, so the laws hold bitwise
            8 => (-4096i32..4096).prop_map(|k| ExtReal::new(k as f64 / 8.0)),
        ]
    }

    #[test]
    fn basic_examples() {
        assert_eq!(oplus(ExtReal::NEG_INF, 3.0.into()), ExtReal::new(3.0));
        assert_eq!(otimes(ExtReal::NEG_INF, ExtReal::POS_INF), ExtReal::NEG_INF);
        assert_eq!(otimes(ExtReal::POS_INF, ExtReal::NEG_INF), ExtReal::NEG_INF);
        assert_eq!(otimes(2.0.into(), 3.0.into()), ExtReal::new(5.0));
        assert_eq!(-ExtReal::POS_INF, ExtReal::NEG_INF);
        assert!(ExtReal::NEG_INF < ExtReal::new(-1e300));
        assert!(ExtReal::new(1e300) < ExtReal::POS_INF);
    }

    #[test]
    fn nan_rejected_and_zero_canonical() {
        assert_eq!(ExtReal::try_new(f64::NAN), Err(Error::NotANumber));
        assert_eq!(ExtReal::new(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!((ExtReal::new(-1.0) + ExtReal::new(1.0)).to_bits(), 0);
        assert_eq!((-ExtReal::ZERO).to_bits(), 0);
    }

    #[test]
    fn json_strings_for_infinities() {
        let v = vec![ExtReal::NEG_INF, ExtReal::new(1.5), ExtReal::POS_INF];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["-inf",1.5,"+inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<ExtReal>("\"nan\"").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn semiring_laws(a in ext(), b in ext(), c in ext()) {
            prop_assert_eq!(a.oplus(b).oplus(c), a.oplus(b.oplus(c)));
            prop_assert_eq!(a.oplus(b), b.oplus(a));
            prop_assert_eq!(a.otimes(b).otimes(c), a.otimes(b.otimes(c)));
            prop_assert_eq!(a.otimes(b), b.otimes(a));
            prop_assert_eq!(a.otimes(b.oplus(c)), a.otimes(b).oplus(a.otimes(c)));
            prop_assert_eq!(a.oplus(ExtReal::NEG_INF), a);
            prop_assert_eq!(a.otimes(ExtReal::ZERO), a);
            prop_assert_eq!(a.otimes(ExtReal::NEG_INF), ExtReal::NEG_INF);
        }
    }
}
