use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Signed square root of a nonnegative rational, `sign · √radicand`.
///
/// Clebsch-Gordan coefficients are always of this form, so products and
/// squares of them stay exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactRadical {
    sign: i8,
    radicand: BigRational,
}

impl ExactRadical {
    pub fn zero() -> Self {
        ExactRadical {
            sign: 0,
            radicand: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        ExactRadical {
            sign: 1,
            radicand: BigRational::one(),
        }
    }

    /// Builds `sign · √radicand`. The sign is normalized to 0 when the
    /// radicand vanishes.
    ///
    /// Panics if `radicand` is negative.
    pub fn new(sign: i8, radicand: BigRational) -> Self {
        assert!(!radicand.is_negative(), "radicand must be nonnegative");
        if radicand.is_zero() || sign == 0 {
            return Self::zero();
        }
        ExactRadical {
            sign: sign.signum(),
            radicand,
        }
    }

    /// The radical whose signed square is `q`, i.e. `sign(q) · √|q|`.
    pub fn from_signed_square(q: BigRational) -> Self {
        let sign = if q.is_positive() {
            1
        } else if q.is_negative() {
            -1
        } else {
            0
        };
        Self::new(sign, q.abs())
    }

    /// `n / d` as an exact rational (not a square root).
    pub fn rational(n: i64, d: i64) -> Self {
        let q = BigRational::new(BigInt::from(n), BigInt::from(d));
        Self::from_signed_square(q.clone() * q.abs())
    }

    #[inline]
    pub fn sign(&self) -> i8 {
        self.sign
    }

    #[inline]
    pub fn radicand(&self) -> &BigRational {
        &self.radicand
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// The square of the value, exactly.
    pub fn square(&self) -> BigRational {
        self.radicand.clone()
    }

    /// `sign · radicand`.
    pub fn signed_square(&self) -> BigRational {
        match self.sign {
            0 => BigRational::zero(),
            s if s > 0 => self.radicand.clone(),
            _ => -self.radicand.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let r = rational_to_f64(&self.radicand);
        f64::from(self.sign) * r.sqrt()
    }
}

/// Converts a big rational to the nearest double, including values whose
/// numerator and denominator individually overflow `f64`.
pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() && (v != 0.0 || q.is_zero()) {
            return v;
        }
    }
    let n = q.numer().abs();
    let d = q.denom().abs();
    let shift = n.bits() as i64 - d.bits() as i64;
    // scale both sides into the normal range before dividing
    let (n2, d2) = if shift > 0 {
        (n.clone(), d.clone() << (shift as usize))
    } else {
        (n.clone() << ((-shift) as usize), d.clone())
    };
    let scaled = BigRational::new(n2, d2).to_f64().unwrap_or(f64::NAN);
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    sign * scaled * 2f64.powi(shift as i32)
}

impl Mul for &ExactRadical {
    type Output = ExactRadical;
    fn mul(self, rhs: &ExactRadical) -> ExactRadical {
        ExactRadical::new(self.sign * rhs.sign, &self.radicand * &rhs.radicand)
    }
}

impl Mul for ExactRadical {
    type Output = ExactRadical;
    fn mul(self, rhs: ExactRadical) -> ExactRadical {
        &self * &rhs
    }
}

impl From<&ExactRadical> for f64 {
    fn from(r: &ExactRadical) -> f64 {
        r.to_f64()
    }
}

impl fmt::Display for ExactRadical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}√({})", if s > 0 { "+" } else { "-" }, self.radicand),
        }
    }
}
