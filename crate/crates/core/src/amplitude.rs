//! Exact real amplitudes of the form `sign · √(p/q)`.
//!
//! Every number produced by the measurement cascades is a product of square
//! roots of rationals, so this form is closed under everything the engine
//! needs (multiplication, reciprocals, integer powers). Sums only ever occur
//! on squared magnitudes, which are plain rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, Neg};

use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Sign of an exact amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Sign::Negative),
            0 => Ok(Sign::Zero),
            1 => Ok(Sign::Positive),
            _ => Err(Error::domain(format!("sign must be -1, 0 or 1, got {v}"))),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        match (self, rhs) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

/// A real number `sign · √mag_sq` with `mag_sq` an exact nonnegative rational.
///
/// `mag_sq` is kept in lowest terms with a positive denominator, and
/// `sign == Zero` exactly when `mag_sq == 0`, so structural equality is value
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactAmplitude {
    sign: Sign,
    mag_sq: Rational,
}

impl ExactAmplitude {
    pub fn from_sq(sign: Sign, mag_sq: Rational) -> Result<Self> {
        if mag_sq.is_negative() {
            return Err(Error::domain(format!("squared magnitude {mag_sq} is negative")));
        }
        if (sign == Sign::Zero) != mag_sq.is_zero() {
            return Err(Error::domain(format!(
                "sign {} is inconsistent with squared magnitude {mag_sq}",
                sign.as_i8()
            )));
        }
        // Ratio arithmetic already reduces, but values built with new_raw may not be.
        let mag_sq = Rational::new(mag_sq.numer().clone(), mag_sq.denom().clone());
        Ok(ExactAmplitude { sign, mag_sq })
    }

    /// `+√mag_sq`, or zero when `mag_sq == 0`.
    pub fn sqrt_of(mag_sq: Rational) -> Result<Self> {
        let sign = if mag_sq.is_zero() { Sign::Zero } else { Sign::Positive };
        Self::from_sq(sign, mag_sq)
    }

    pub fn zero() -> Self {
        ExactAmplitude { sign: Sign::Zero, mag_sq: Rational::zero() }
    }

    pub fn one() -> Self {
        ExactAmplitude { sign: Sign::Positive, mag_sq: Rational::one() }
    }

    /// `1/√2`, the GHZ normalization.
    pub fn inv_sqrt2() -> Self {
        ExactAmplitude {
            sign: Sign::Positive,
            mag_sq: Rational::new(1.into(), 2.into()),
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// The squared magnitude, i.e. the Born weight of this amplitude.
    pub fn sq(&self) -> &Rational {
        &self.mag_sq
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn cmp_abs(&self, other: &ExactAmplitude) -> Ordering {
        self.mag_sq.cmp(&other.mag_sq)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::domain("reciprocal of a zero amplitude"));
        }
        Ok(ExactAmplitude { sign: self.sign, mag_sq: self.mag_sq.recip() })
    }

    pub fn checked_div(&self, rhs: &ExactAmplitude) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn pow(&self, exp: u32) -> Self {
        if exp == 0 {
            return Self::one();
        }
        let sign = if self.sign == Sign::Negative && exp % 2 == 0 {
            Sign::Positive
        } else {
            self.sign
        };
        ExactAmplitude { sign, mag_sq: pow_rational(&self.mag_sq, exp as u64) }
    }

    /// Nearest `f64`, for reporting only.
    pub fn to_f64(&self) -> f64 {
        let mag = sqrt_to_f64(&self.mag_sq);
        match self.sign {
            Sign::Negative => -mag,
            Sign::Zero => 0.0,
            Sign::Positive => mag,
        }
    }
}

impl<'a> Mul<&'a ExactAmplitude> for &ExactAmplitude {
    type Output = ExactAmplitude;

    fn mul(self, rhs: &'a ExactAmplitude) -> ExactAmplitude {
        let sign = self.sign * rhs.sign;
        if sign == Sign::Zero {
            return ExactAmplitude::zero();
        }
        ExactAmplitude { sign, mag_sq: &self.mag_sq * &rhs.mag_sq }
    }
}

impl Mul for ExactAmplitude {
    type Output = ExactAmplitude;

    fn mul(self, rhs: ExactAmplitude) -> ExactAmplitude {
        &self * &rhs
    }
}

impl Neg for ExactAmplitude {
    type Output = ExactAmplitude;

    fn neg(self) -> ExactAmplitude {
        ExactAmplitude { sign: -self.sign, mag_sq: self.mag_sq }
    }
}

impl Neg for &ExactAmplitude {
    type Output = ExactAmplitude;

    fn neg(self) -> ExactAmplitude {
        -self.clone()
    }
}

impl fmt::Display for ExactAmplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "√({})", self.mag_sq),
            Sign::Negative => write!(f, "-√({})", self.mag_sq),
        }
    }
}

/// Integer power of a rational by repeated squaring.
pub fn pow_rational(base: &Rational, exp: u64) -> Rational {
    let mut result = Rational::one();
    let mut acc = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result *= &acc;
        }
        e >>= 1;
        if e > 0 {
            acc = &acc * &acc;
        }
    }
    result
}

/// Rational to nearest `f64`; saturates to 0 or ±inf outside the double range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match r.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            let v = scaled_log2(r);
            let s = if r.is_negative() { -1.0 } else { 1.0 };
            s * v.exp2()
        }
    }
}

/// `√r` as an `f64` without first squashing `r` into the double range, so
/// magnitudes like 3^-300 (whose root is representable) do not underflow.
pub fn sqrt_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let r = r.abs();
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = (db - nb) / 2;
    if shift.abs() < 400 {
        return rational_to_f64(&r).sqrt();
    }
    // r = s · 4^shift with s near 1
    let scaled = if shift > 0 {
        Rational::new(r.numer() << (2 * shift as u64), r.denom().clone())
    } else {
        Rational::new(r.numer().clone(), r.denom() << (2 * (-shift) as u64))
    };
    let root = rational_to_f64(&scaled).sqrt();
    root * (-(shift as f64)).exp2()
}

fn scaled_log2(r: &Rational) -> f64 {
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift > 0 {
        Rational::new(r.numer().abs(), r.denom() << (shift as u64))
    } else {
        Rational::new(r.numer().abs() << ((-shift) as u64), r.denom().clone())
    };
    scaled.to_f64().unwrap_or(1.0).log2() + shift as f64
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.125` into an exact
/// rational.
pub fn parse_rational(input: &str) -> Result<Rational> {
    let s = input.trim();
    if s.is_empty() {
        return Err(Error::parse("empty rational"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_int(num.trim())?;
        let den = parse_int(den.trim())?;
        if den.is_zero() {
            return Err(Error::parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let int_digits = int_part.strip_prefix(['-', '+']).unwrap_or(int_part);
        if (int_digits.is_empty() && frac_part.is_empty())
            || !int_digits.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(Error::parse(format!("invalid decimal {s:?}")));
        }
        if frac_part.len() > 4096 {
            return Err(Error::parse("decimal has too many fractional digits"));
        }
        let digits = format!("{int_digits}{frac_part}");
        let mantissa: BigInt = digits
            .parse()
            .map_err(|_| Error::parse(format!("invalid decimal {s:?}")))?;
        let scale = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = Rational::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    Ok(Rational::from_integer(parse_int(s)?))
}

fn parse_int(s: &str) -> Result<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(format!("invalid integer {s:?}")));
    }
    s.parse().map_err(|_| Error::parse(format!("invalid integer {s:?}")))
}

/// Wire form of an exact rational: decimal numerator and denominator strings
/// plus a convenience float. The string fields are authoritative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float: Option<f64>,
}

impl From<&Rational> for RationalJson {
    fn from(r: &Rational) -> Self {
        RationalJson {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            float: Some(rational_to_f64(r)),
        }
    }
}

impl TryFrom<&RationalJson> for Rational {
    type Error = Error;

    fn try_from(j: &RationalJson) -> Result<Rational> {
        let num = parse_int(&j.num)?;
        let den = parse_int(&j.den)?;
        if den.sign() != BigSign::Plus {
            return Err(Error::parse("denominator must be positive"));
        }
        Ok(Rational::new(num, den))
    }
}

/// Wire form of an exact amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeJson {
    pub sign: i8,
    pub mag_sq: RationalJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float: Option<f64>,
}

impl From<&ExactAmplitude> for AmplitudeJson {
    fn from(a: &ExactAmplitude) -> Self {
        AmplitudeJson {
            sign: a.sign.as_i8(),
            mag_sq: RationalJson::from(&a.mag_sq),
            float: Some(a.to_f64()),
        }
    }
}

impl TryFrom<&AmplitudeJson> for ExactAmplitude {
    type Error = Error;

    fn try_from(j: &AmplitudeJson) -> Result<ExactAmplitude> {
        ExactAmplitude::from_sq(Sign::from_i8(j.sign)?, Rational::try_from(&j.mag_sq)?)
    }
}

impl Serialize for ExactAmplitude {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        AmplitudeJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactAmplitude {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let j = AmplitudeJson::deserialize(deserializer)?;
        ExactAmplitude::try_from(&j).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for building small rationals in code and tests.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn x() -> ExactAmplitude {
        ExactAmplitude::sqrt_of(ratio(2, 3)).unwrap()
    }

    fn y() -> ExactAmplitude {
        ExactAmplitude::sqrt_of(ratio(1, 3)).unwrap()
    }

    #[test]
    fn from_sq_examples() {
        let x = ExactAmplitude::from_sq(Sign::Positive, ratio(2, 3)).unwrap();
        assert_eq!(x.sq(), &ratio(2, 3));
        assert!((x.to_f64() - 6f64.sqrt() / 3.0).abs() < 1e-15);

        let z = ExactAmplitude::from_sq(Sign::Zero, ratio(0, 1)).unwrap();
        assert_eq!(z, ExactAmplitude::zero());

        let h = ExactAmplitude::from_sq(Sign::Positive, ratio(1, 2)).unwrap();
        assert_eq!(h, ExactAmplitude::inv_sqrt2());
    }

    #[test]
    fn from_sq_rejects_bad_input() {
        assert!(matches!(
            ExactAmplitude::from_sq(Sign::Positive, ratio(-1, 2)),
            Err(Error::Domain(_))
        ));
        assert!(ExactAmplitude::from_sq(Sign::Zero, ratio(1, 2)).is_err());
        assert!(ExactAmplitude::from_sq(Sign::Negative, ratio(0, 1)).is_err());
    }

    #[test]
    fn from_sq_reduces_raw_ratios() {
        let raw = Rational::new_raw(BigInt::from(4), BigInt::from(6));
        let a = ExactAmplitude::from_sq(Sign::Positive, raw).unwrap();
        assert_eq!(a, x());
        let neg_den = Rational::new_raw(BigInt::from(-2), BigInt::from(-3));
        assert_eq!(ExactAmplitude::from_sq(Sign::Positive, neg_den).unwrap(), x());
    }

    #[test]
    fn mul_examples() {
        assert_eq!((&x() * &y()).sq(), &ratio(2, 9));
        assert_eq!((&x() * &y()).sign(), Sign::Positive);
        assert_eq!(&x() * &ExactAmplitude::zero(), ExactAmplitude::zero());
        let h = ExactAmplitude::inv_sqrt2();
        assert_eq!(&h * &h, ExactAmplitude::sqrt_of(ratio(1, 4)).unwrap());
        assert_eq!((-x() * y()).sign(), Sign::Negative);
        assert_eq!((-x() * -y()).sign(), Sign::Positive);
    }

    #[test]
    fn sq_examples() {
        assert_eq!(x().sq(), &ratio(2, 3));
        // 1/(8√2) squared
        let a = ExactAmplitude::sqrt_of(ratio(1, 128)).unwrap();
        assert_eq!(a.sq(), &ratio(1, 128));
        assert_eq!(ExactAmplitude::zero().sq(), &ratio(0, 1));
    }

    #[test]
    fn cmp_abs_examples() {
        assert_eq!(x().cmp_abs(&y()), Ordering::Greater);
        assert_eq!(x().cmp_abs(&x()), Ordering::Equal);
        assert_eq!((-x()).cmp_abs(&x()), Ordering::Equal);
        assert_eq!(x().pow(127).cmp_abs(&y().pow(127)), Ordering::Greater);
    }

    #[test]
    fn two_hundred_factors_stay_exact() {
        let third = ExactAmplitude::sqrt_of(ratio(1, 3)).unwrap();
        let prod = (0..200).fold(ExactAmplitude::one(), |acc, _| &acc * &third);
        assert_eq!(prod.sq().numer(), &BigInt::from(1));
        let expected: BigUint = num_traits::pow(BigUint::from(3u32), 200);
        assert_eq!(prod.sq().denom(), &BigInt::from(expected));
        assert_eq!(third.pow(200), prod);
        // 3^-100 is representable even though 3^-200 is far below f64's range
        let f = prod.to_f64();
        assert!((f / 3f64.powi(-100) - 1.0).abs() < 1e-12, "{f}");
    }

    #[test]
    fn pow_and_recip() {
        assert_eq!((-x()).pow(2).sign(), Sign::Positive);
        assert_eq!((-x()).pow(3).sign(), Sign::Negative);
        assert_eq!(x().pow(0), ExactAmplitude::one());
        assert_eq!(x().recip().unwrap().sq(), &ratio(3, 2));
        assert!(ExactAmplitude::zero().recip().is_err());
        assert_eq!(x().checked_div(&y()).unwrap().sq(), &ratio(2, 1));
    }

    #[test]
    fn float_of_huge_and_tiny() {
        let big = pow_rational(&ratio(2, 1), 2000);
        assert_eq!(rational_to_f64(&big), f64::INFINITY);
        let tiny = pow_rational(&ratio(1, 2), 254);
        assert!((rational_to_f64(&tiny) / 2f64.powi(-254) - 1.0).abs() < 1e-15);
        let u = pow_rational(&ratio(2, 1), 127);
        assert!((rational_to_f64(&u) - 1.7014118346046923e38).abs() < 1e24);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("2/3").unwrap(), ratio(2, 3));
        assert_eq!(parse_rational(" 4/6 ").unwrap(), ratio(2, 3));
        assert_eq!(parse_rational("0.5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-1.25").unwrap(), ratio(-5, 4));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("7").unwrap(), ratio(7, 1));
        for bad in ["", "1/0", "a/b", "1.2.3", "--1", ".", "1/", "/2", "1e3", "+"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = -(&x() * &y().pow(5));
        let s = serde_json::to_string(&a).unwrap();
        let back: ExactAmplitude = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);

        let bad = r#"{"sign":1,"mag_sq":{"num":"-1","den":"2"}}"#;
        assert!(serde_json::from_str::<ExactAmplitude>(bad).is_err());
        let bad = r#"{"sign":0,"mag_sq":{"num":"1","den":"2"}}"#;
        assert!(serde_json::from_str::<ExactAmplitude>(bad).is_err());
        let bad = r#"{"sign":1,"mag_sq":{"num":"1","den":"0"}}"#;
        assert!(serde_json::from_str::<ExactAmplitude>(bad).is_err());
        let ok = r#"{"sign":1,"mag_sq":{"num":"2","den":"4"}}"#;
        assert_eq!(
            serde_json::from_str::<ExactAmplitude>(ok).unwrap(),
            ExactAmplitude::inv_sqrt2()
        );
    }
}
