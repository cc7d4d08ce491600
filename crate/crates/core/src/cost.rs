//! Exact extended non-negative costs.
//!
//! A [`Cost`] is either a finite non-negative rational or `+inf`. Finite values
//! are kept in lowest terms; small values live in an `i64` ratio and are
//! promoted to a big rational only when an operation would overflow. The
//! representation is canonical (a value that fits is always stored small), so
//! derived `Eq`/`Hash` agree with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Non-negative exact rational.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(Ratio::zero()))
    }

    pub fn from_integer(n: u64) -> Self {
        match i64::try_from(n) {
            Ok(small) => Rational(Repr::Small(Ratio::from_integer(small))),
            Err(_) => Self::from_big(BigRational::from_integer(BigInt::from(n))),
        }
    }

    /// Builds `numer / denom`. Fails on a zero denominator or a negative value.
    pub fn new(numer: BigInt, denom: BigInt) -> Result<Self, Error> {
        if denom.is_zero() {
            return Err(Error::parse("zero denominator in cost"));
        }
        let r = BigRational::new(numer, denom);
        if r.is_negative() {
            return Err(Error::parse("costs must be non-negative"));
        }
        Ok(Self::from_big(r))
    }

    fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rational(Repr::Small(Ratio::new_raw(n, d))),
            _ => Rational(Repr::Big(r)),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => {
                BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            }
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.numer()),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.denom()),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(r) => r.is_zero(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_integer(),
            Repr::Big(r) => r.is_integer(),
        }
    }

    /// Larger of the bit lengths of numerator and denominator.
    pub fn bits(&self) -> u64 {
        match &self.0 {
            Repr::Small(r) => {
                let n = 64 - r.numer().unsigned_abs().leading_zeros() as u64;
                let d = 64 - r.denom().unsigned_abs().leading_zeros() as u64;
                n.max(d)
            }
            Repr::Big(r) => r.numer().bits().max(r.denom().bits()),
        }
    }

    /// `self - other`, or `None` when the result would be negative.
    pub fn checked_sub(&self, other: &Rational) -> Option<Rational> {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if let Some(d) = a.checked_sub(b) {
                return (!d.is_negative()).then_some(Rational(Repr::Small(d)));
            }
        }
        let d = self.to_big() - other.to_big();
        (!d.is_negative()).then(|| Self::from_big(d))
    }

    pub fn mul_integer(&self, k: u64) -> Rational {
        if let (Repr::Small(a), Ok(k)) = (&self.0, i64::try_from(k)) {
            if let Some(p) = a.checked_mul(&Ratio::from_integer(k)) {
                return Rational(Repr::Small(p));
            }
        }
        Self::from_big(self.to_big() * BigRational::from_integer(BigInt::from(k)))
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if let Some(p) = a.checked_mul(b) {
                return Rational(Repr::Small(p));
            }
        }
        Self::from_big(self.to_big() * other.to_big())
    }

    /// `floor(self / other)`; `other` must be non-zero.
    pub fn floor_div(&self, other: &Rational) -> BigInt {
        assert!(!other.is_zero(), "division by zero cost");
        (self.to_big() / other.to_big()).floor().to_integer()
    }

    /// Smallest integer strictly greater than `self`.
    pub fn floor_plus_one(&self) -> Rational {
        let f = self.to_big().floor() + BigRational::one();
        Self::from_big(f)
    }
}

impl Add for &Rational {
    type Output = Rational;

    fn add(self, rhs: &Rational) -> Rational {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if a.denom() == b.denom() {
                if let Some(n) = i64::checked_add(*a.numer(), *b.numer()) {
                    return Rational(Repr::Small(Ratio::new(n, *a.denom())));
                }
            } else if let Some(s) = a.checked_add(b) {
                return Rational(Repr::Small(s));
            }
        }
        Rational::from_big(self.to_big() + rhs.to_big())
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => {
                if a.denom() == b.denom() {
                    return a.numer().cmp(b.numer());
                }
                // cross-multiply in i128; cannot overflow for i64 parts
                let l = *a.numer() as i128 * *b.denom() as i128;
                let r = *b.numer() as i128 * *a.denom() as i128;
                l.cmp(&r)
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Extended non-negative cost: a finite exact rational or `+inf`.
///
/// Ordering places every finite value below `Infinite`; addition is total and
/// `Infinite` absorbs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Cost {
    Finite(Rational),
    Infinite,
}

impl Cost {
    pub fn zero() -> Self {
        Cost::Finite(Rational::zero())
    }

    pub fn int(n: u64) -> Self {
        Cost::Finite(Rational::from_integer(n))
    }

    /// `p / q`; panics on `q == 0`. Intended for literals in code and tests.
    pub fn ratio(p: u64, q: u64) -> Self {
        Cost::Finite(Rational::new(BigInt::from(p), BigInt::from(q)).expect("valid ratio"))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Cost::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Cost::Finite(r) if r.is_zero())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Cost::Finite(r) => Some(r),
            Cost::Infinite => None,
        }
    }

    pub fn add_ref(&self, other: &Cost) -> Cost {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }

    /// Subtracts a finite shift from a finite cost; `Infinite` is unchanged.
    /// Returns `None` if the result would be negative.
    pub fn sub_finite(&self, shift: &Rational) -> Option<Cost> {
        match self {
            Cost::Finite(a) => a.checked_sub(shift).map(Cost::Finite),
            Cost::Infinite => Some(Cost::Infinite),
        }
    }

    pub fn mul_integer(&self, k: u64) -> Cost {
        match self {
            Cost::Finite(a) => Cost::Finite(a.mul_integer(k)),
            Cost::Infinite if k == 0 => Cost::zero(),
            Cost::Infinite => Cost::Infinite,
        }
    }

    pub fn min_ref<'a>(&'a self, other: &'a Cost) -> &'a Cost {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Bit length of the finite value (0 for `Infinite`).
    pub fn bits(&self) -> u64 {
        self.finite().map_or(0, Rational::bits)
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Cost>>(items: I) -> Cost {
        let mut acc = Rational::zero();
        for c in items {
            match c {
                Cost::Finite(r) => acc = &acc + r,
                Cost::Infinite => return Cost::Infinite,
            }
        }
        Cost::Finite(acc)
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        self.add_ref(&rhs)
    }
}

impl<'a> Add<&'a Cost> for &'a Cost {
    type Output = Cost;

    fn add(self, rhs: &'a Cost) -> Cost {
        self.add_ref(rhs)
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a.cmp(b),
            (Cost::Finite(_), Cost::Infinite) => Ordering::Less,
            (Cost::Infinite, Cost::Finite(_)) => Ordering::Greater,
            (Cost::Infinite, Cost::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(r) => write!(f, "{r}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Rational> for Cost {
    fn from(r: Rational) -> Self {
        Cost::Finite(r)
    }
}

impl FromStr for Cost {
    type Err = Error;

    /// Accepts `"inf"`, a non-negative integer, or `"p/q"`. Decimal and
    /// exponent notation are rejected rather than rounded.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Cost::Infinite);
        }
        let parse_int = |t: &str| -> Result<BigInt, Error> {
            let t = t.trim();
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::parse(format!(
                    "invalid cost {s:?}: expected a non-negative integer, \"p/q\" or \"inf\""
                )));
            }
            Ok(t.parse::<BigInt>().expect("digits only"))
        };
        match s.split_once('/') {
            Some((p, q)) => Ok(Cost::Finite(Rational::new(parse_int(p)?, parse_int(q)?)?)),
            None => Ok(Cost::Finite(Rational::new(parse_int(s)?, BigInt::one())?)),
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cost::Finite(r) if r.is_integer() => match r.numer().to_u64() {
                Some(n) => serializer.serialize_u64(n),
                None => serializer.serialize_str(&r.to_string()),
            },
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        Cost::Finite(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match Cost::deserialize(deserializer)? {
            Cost::Finite(r) => Ok(r),
            Cost::Infinite => Err(de::Error::custom("expected a finite value")),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CostVisitor;

        impl Visitor<'_> for CostVisitor {
            type Value = Cost;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative integer, a \"p/q\" string, or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cost, E> {
                Ok(Cost::int(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cost, E> {
                u64::try_from(v)
                    .map(Cost::int)
                    .map_err(|_| E::custom("costs must be non-negative"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cost, E> {
                Err(E::custom(format!(
                    "real-valued cost {v} rejected; use an integer or a \"p/q\" string"
                )))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cost, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(CostVisitor)
    }
}
