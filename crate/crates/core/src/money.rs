//! Exact-rational money type.
//!
//! All internal arithmetic is exact; decimal rounding happens only at I/O
//! boundaries (CSV export, payment rounding).

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// An arbitrary-precision rational amount of currency (also used for bids,
/// values and quality weights).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(BigRational);

impl Money {
    pub fn zero() -> Self {
        Money(BigRational::zero())
    }

    pub fn one() -> Self {
        Money(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Money(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Money(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// 2^k as an exact rational.
    pub fn pow2(k: u32) -> Self {
        Money(BigRational::from_integer(BigInt::one() << k))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Money(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Money(self.0.abs())
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// max(self, 0); envy and regret clamp at zero by definition.
    pub fn clamp_zero(self) -> Self {
        if self.is_negative() {
            Money::zero()
        } else {
            self
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Money::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Nearest multiple of `step`; exact halves round toward negative infinity.
    pub fn round_to_multiple(&self, step: &Money) -> Money {
        assert!(step.is_positive(), "step must be positive");
        let q = &self.0 / &step.0;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let k = (q - half).ceil();
        Money(k * &step.0)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Fixed-point decimal string with exactly `digits` fractional digits
    /// (value rounded to the nearest multiple of 10^-digits).
    pub fn to_fixed(&self, digits: u32) -> String {
        let scale = BigInt::from(10u32).pow(digits);
        let grid = Money(BigRational::new(BigInt::one(), scale.clone()));
        let rounded = self.round_to_multiple(&grid);
        let scaled = (&rounded.0 * BigRational::from_integer(scale.clone()))
            .to_integer();
        let neg = scaled.sign() == Sign::Minus;
        let mag = scaled.magnitude().to_string();
        let mag = if mag.len() <= digits as usize {
            format!("{}{}", "0".repeat(digits as usize + 1 - mag.len()), mag)
        } else {
            mag
        };
        let (int_part, frac_part) = mag.split_at(mag.len() - digits as usize);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }

    /// Exact decimal representation when the denominator divides a power of
    /// ten, otherwise `None`.
    pub fn to_exact_decimal(&self) -> Option<String> {
        let den = self.0.denom().magnitude().clone();
        let (twos, rest) = factor_out(&den, 2u32);
        let (fives, rest) = factor_out(&rest, 5u32);
        if !rest.is_one() {
            return None;
        }
        let digits = twos.max(fives);
        if digits == 0 {
            return Some(self.0.numer().to_string());
        }
        Some(self.to_fixed(digits as u32))
    }
}

fn factor_out(n: &num_bigint::BigUint, p: u32) -> (u64, num_bigint::BigUint) {
    let p = num_bigint::BigUint::from(p);
    let mut n = n.clone();
    let mut count = 0u64;
    while (&n % &p).is_zero() && !n.is_zero() {
        n /= &p;
        count += 1;
    }
    (count, n)
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_exact_decimal() {
            Some(s) => f.write_str(&s),
            // Non-decimal denominator: fall back to 12 fractional digits.
            None => f.write_str(&self.to_fixed(12)),
        }
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_exact_decimal() {
            Some(s) => write!(f, "Money({s})"),
            None => write!(f, "Money({}/{})", self.0.numer(), self.0.denom()),
        }
    }
}

impl FromStr for Money {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let err = || Error::MoneyParse(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(err());
        }
        let (sign, body) = match t.as_bytes()[0] {
            b'-' => (-1i64, &t[1..]),
            b'+' => (1, &t[1..]),
            _ => (1, t),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let digits = format!(
            "{}{}",
            if int_part.is_empty() { "0" } else { int_part },
            frac_part
        );
        let numer: BigInt = digits.parse().map_err(|_| err())?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Money(BigRational::new(numer * sign, denom)))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Money;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string or integer")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Money, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Money, E> {
                Ok(Money::from_int(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Money, E> {
                Ok(Money(BigRational::from_integer(BigInt::from(v))))
            }
        }
        deserializer.deserialize_any(V)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Money {
            type Output = Money;
            fn $method(self, rhs: Money) -> Money {
                Money(self.0 $op rhs.0)
            }
        }
        impl $trait<&Money> for &Money {
            type Output = Money;
            fn $method(self, rhs: &Money) -> Money {
                Money(&self.0 $op &rhs.0)
            }
        }
        impl $trait<&Money> for Money {
            type Output = Money;
            fn $method(self, rhs: &Money) -> Money {
                Money(self.0 $op &rhs.0)
            }
        }
        impl $trait<Money> for &Money {
            type Output = Money;
            fn $method(self, rhs: Money) -> Money {
                Money(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div for Money {
    type Output = Money;
    fn div(self, rhs: Money) -> Money {
        assert!(!rhs.is_zero(), "division by zero");
        Money(self.0 / rhs.0)
    }
}

impl Div<&Money> for &Money {
    type Output = Money;
    fn div(self, rhs: &Money) -> Money {
        assert!(!rhs.is_zero(), "division by zero");
        Money(&self.0 / &rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign<&Money> for Money {
    fn add_assign(&mut self, rhs: &Money) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Money> for Money {
    fn sub_assign(&mut self, rhs: &Money) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        let mut acc = Money::zero();
        for m in iter {
            acc += &m;
        }
        acc
    }
}

impl PartialEq<i64> for Money {
    fn eq(&self, other: &i64) -> bool {
        self == &Money::from_int(*other)
    }
}

impl PartialOrd<i64> for Money {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.partial_cmp(&Money::from_int(*other))
    }
}
