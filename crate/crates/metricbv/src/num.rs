//! Scalar arithmetic: exact rationals with an `f64` fallback.
//!
//! Every quantity in this crate (edge lengths, arc-length parameters,
//! function values, radii) is a [`Num`].  A `Num` is either an arbitrary
//! precision rational ([`Num::Rat`]) or a float ([`Num::F`]).  Arithmetic is
//! contagious: combining two rationals stays exact, anything touching a float
//! degrades to `f64`.  This lets dyadic test fixtures assert equality with
//! zero tolerance while irrational geometry (Euclidean distances) still
//! works.
//!
//! Invariant: a `Num::F` is never NaN.  Operations that could produce NaN
//! (0/0, sqrt of a negative) panic instead, so `Ord` is total.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Relative tolerance used by float code paths when exactness is lost.
pub const TOL_REL: f64 = 1e-9;

/// Exact rational or `f64` scalar.  See the module docs for the promotion
/// rules.
#[derive(Clone, Debug)]
pub enum Num {
    Rat(BigRational),
    F(f64),
}

impl Num {
    pub fn int(n: i64) -> Self {
        Num::Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `p/q` as an exact rational.  Panics if `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "rational with zero denominator");
        Num::Rat(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// `p / 2^k`, exact.
    pub fn dyadic(p: i64, k: u32) -> Self {
        Num::Rat(BigRational::new(BigInt::from(p), BigInt::from(1u8) << k))
    }

    pub fn float(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN scalar");
        Num::F(x)
    }

    /// Lifts a float to the rational it represents exactly in binary.
    /// Panics on NaN or infinity.
    pub fn from_f64_exact(x: f64) -> Self {
        let r = BigRational::from_float(x).expect("non-finite scalar");
        Num::Rat(r)
    }

    pub fn zero() -> Self {
        Num::Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Num::Rat(BigRational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Rat(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_zero(),
            Num::F(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_negative(),
            Num::F(x) => *x < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Num::Rat(r) => r.is_positive(),
            Num::F(x) => *x > 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Rat(r) => rational_to_f64(r),
            Num::F(x) => *x,
        }
    }

    pub fn abs(&self) -> Num {
        match self {
            Num::Rat(r) => Num::Rat(r.abs()),
            Num::F(x) => Num::F(x.abs()),
        }
    }

    pub fn min(self, other: Num) -> Num {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Num) -> Num {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Clamps into `[lo, hi]`.  Requires `lo <= hi`.
    pub fn clamp(self, lo: &Num, hi: &Num) -> Num {
        debug_assert!(lo <= hi);
        if &self < lo {
            lo.clone()
        } else if &self > hi {
            hi.clone()
        } else {
            self
        }
    }

    /// Square root.  Stays exact when both numerator and denominator are
    /// perfect squares, otherwise drops to `f64`.  Panics on negatives.
    pub fn sqrt(&self) -> Num {
        match self {
            Num::Rat(r) => {
                assert!(!r.is_negative(), "sqrt of negative scalar");
                let (pn, pd) = (perfect_sqrt(r.numer()), perfect_sqrt(r.denom()));
                match (pn, pd) {
                    (Some(n), Some(d)) => Num::Rat(BigRational::new(n, d)),
                    _ => Num::F(rational_to_f64(r).sqrt()),
                }
            }
            Num::F(x) => {
                assert!(*x >= 0.0, "sqrt of negative scalar");
                Num::F(x.sqrt())
            }
        }
    }

    /// `self^p` for a float exponent; exact only for `p == 1`.
    pub fn powf(&self, p: f64) -> Num {
        if p == 1.0 {
            return self.clone();
        }
        let v = self.to_f64();
        let out = v.powf(p);
        assert!(!out.is_nan(), "NaN from power");
        Num::F(out)
    }

    /// Signed difference magnitude `|self - other|`.
    pub fn abs_diff(&self, other: &Num) -> Num {
        (self - other).abs()
    }

    /// True when `|self - other| <= TOL_REL * max(1, |self|, |other|)`.
    /// Exact pairs compare exactly.
    pub fn approx_eq(&self, other: &Num) -> bool {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => a == b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                (a - b).abs() <= TOL_REL * 1.0f64.max(a.abs()).max(b.abs())
            }
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Num::Rat(r) => Some(r),
            Num::F(_) => None,
        }
    }
}

/// Converts without overflow for large numerators: `BigRational::to_f64`.
fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

fn perfect_sqrt(n: &BigInt) -> Option<BigInt> {
    let m: BigUint = n.magnitude().clone();
    let s = m.sqrt();
    if &s * &s == m {
        Some(BigInt::from(s))
    } else {
        None
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Num {
            type Output = Num;
            fn $method(self, rhs: &Num) -> Num {
                match (self, rhs) {
                    (Num::Rat(a), Num::Rat(b)) => Num::Rat(a $op b),
                    _ => {
                        let out = self.to_f64() $op rhs.to_f64();
                        assert!(!out.is_nan(), "NaN scalar from arithmetic");
                        Num::F(out)
                    }
                }
            }
        }
        impl $trait for Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Num> for Num {
            type Output = Num;
            fn $method(self, rhs: &Num) -> Num {
                (&self).$method(rhs)
            }
        }
        impl $trait<Num> for &Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div for &Num {
    type Output = Num;
    fn div(self, rhs: &Num) -> Num {
        assert!(!rhs.is_zero(), "division by zero scalar");
        match (self, rhs) {
            (Num::Rat(a), Num::Rat(b)) => Num::Rat(a / b),
            _ => Num::F(self.to_f64() / rhs.to_f64()),
        }
    }
}
impl Div for Num {
    type Output = Num;
    fn div(self, rhs: Num) -> Num {
        &self / &rhs
    }
}
impl Div<&Num> for Num {
    type Output = Num;
    fn div(self, rhs: &Num) -> Num {
        &self / rhs
    }
}
impl Div<Num> for &Num {
    type Output = Num;
    fn div(self, rhs: Num) -> Num {
        self / &rhs
    }
}

impl Neg for &Num {
    type Output = Num;
    fn neg(self) -> Num {
        match self {
            Num::Rat(r) => Num::Rat(-r),
            Num::F(x) => Num::F(-x),
        }
    }
}
impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        -&self
    }
}

impl AddAssign<&Num> for Num {
    fn add_assign(&mut self, rhs: &Num) {
        *self = &*self + rhs;
    }
}
impl AddAssign for Num {
    fn add_assign(&mut self, rhs: Num) {
        *self = &*self + &rhs;
    }
}
impl SubAssign<&Num> for Num {
    fn sub_assign(&mut self, rhs: &Num) {
        *self = &*self - rhs;
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Num::Rat(a), Num::Rat(b)) => a.cmp(b),
            // Mixed comparisons go through f64 and are only as sharp as f64.
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .expect("NaN scalar"),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Num::F(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Num {
    type Err = String;

    /// Accepts `"p/q"`, decimal strings (kept exact, e.g. `"0.25"` is 1/4),
    /// plain integers, and float syntax such as `"1e-3"` (becomes `f64`).
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad(s))?;
            let q: BigInt = q.trim().parse().map_err(|_| bad(s))?;
            if q.is_zero() {
                return Err(format!("zero denominator in '{s}'"));
            }
            return Ok(Num::Rat(BigRational::new(p, q)));
        }
        if let Ok(i) = s.parse::<BigInt>() {
            return Ok(Num::Rat(BigRational::from_integer(i)));
        }
        if !s.contains(['e', 'E']) {
            if let Some((whole, frac)) = s.split_once('.') {
                let digits = format!("{whole}{frac}");
                if let Ok(m) = digits.parse::<BigInt>() {
                    let den = BigInt::from(10u8).pow(frac.len() as u32);
                    return Ok(Num::Rat(BigRational::new(m, den)));
                }
            }
        }
        match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Num::F(x)),
            _ => Err(bad(s)),
        }
    }
}

fn bad(s: &str) -> String {
    format!("cannot parse scalar '{s}'")
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Num::Rat(r) => {
                if r.denom().is_one() {
                    if let Some(i) = r.numer().to_i64() {
                        return ser.serialize_i64(i);
                    }
                }
                ser.serialize_str(&self.to_string())
            }
            Num::F(x) => ser.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl<'de> Visitor<'de> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a rational string like \"3/4\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num::int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num::Rat(BigRational::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                if v.is_nan() {
                    return Err(E::custom("NaN is not a valid scalar"));
                }
                Ok(Num::F(v))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                v.parse().map_err(E::custom)
            }
        }
        de.deserialize_any(NumVisitor)
    }
}

/// Sums an iterator of scalars, staying exact when every term is.
pub fn sum<'a, I: IntoIterator<Item = &'a Num>>(items: I) -> Num {
    let mut acc = Num::zero();
    for x in items {
        acc += x;
    }
    acc
}
