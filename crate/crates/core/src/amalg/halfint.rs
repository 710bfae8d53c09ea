use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// An integer or half-integer, stored as twice its value so that spin
/// quantum numbers are exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    /// The value `twice / 2`.
    #[inline]
    pub const fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    #[inline]
    pub const fn integer(n: i64) -> Self {
        HalfInt(2 * n)
    }

    /// `count / 2`, e.g. the total spin of `count` spin-1/2 particles.
    #[inline]
    pub const fn half(count: usize) -> Self {
        HalfInt(count as i64)
    }

    #[inline]
    pub const fn twice(self) -> i64 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    #[inline]
    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    #[inline]
    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// Integer part when the value is integral.
    #[inline]
    pub fn as_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.0 / 2)
    }

    /// True if `self` and `other` are both integers or both half-odd-integers.
    #[inline]
    pub const fn same_parity(self, other: HalfInt) -> bool {
        (self.0 - other.0) % 2 == 0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl From<i64> for HalfInt {
    fn from(n: i64) -> Self {
        HalfInt::integer(n)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_display() {
        let a = HalfInt::from_twice(3);
        let b = HalfInt::half(1);
        assert_eq!(a + b, HalfInt::integer(2));
        assert_eq!(a - b, HalfInt::integer(1));
        assert_eq!((-a).twice(), -3);
        assert_eq!(a.to_string(), "3/2");
        assert_eq!(HalfInt::integer(-2).to_string(), "-2");
        assert!(a.same_parity(HalfInt::from_twice(-1)));
        assert!(!a.same_parity(HalfInt::ZERO));
        assert_eq!(HalfInt::from_twice(-4).as_integer(), Some(-2));
        assert_eq!(a.as_integer(), None);
    }
}
