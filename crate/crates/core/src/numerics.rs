//! Scalar kernel shared by every module.
//!
//! Two tracks coexist: [`Rational`] gives exact arithmetic for the algebraic
//! identities, while `f64`/`f32` carry the iterative and quadrature work under
//! a [`TolerancePolicy`]. Everything downstream is written against [`Scalar`].

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact arbitrary-precision rational, always stored in lowest terms.
pub type Rational = BigRational;

/// Builds a canonical rational `num/den`; the sign ends up on the numerator.
pub fn rational(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
    let den = den.into();
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(BigRational::new(num.into(), den))
}

/// Numeric type the library is generic over.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` for the exact (rational) track.
    const EXACT: bool;

    /// `num/den` in this scalar type. Panics on a zero denominator.
    fn ratio(num: i64, den: i64) -> Self;

    /// Canonical text form: `num/den` on the exact track, shortest round-trip decimal otherwise.
    fn to_repr(&self) -> String;

    /// Parses `num/den`, integers and decimals (with optional exponent).
    fn parse_repr(s: &str) -> Result<Self>;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Zero on the exact track; within `abs_tol` of zero otherwise.
    fn negligible(&self, policy: &TolerancePolicy) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.to_f64_lossy().abs() <= policy.abs_tol
        }
    }

    /// `self >= 0`, relaxed by `abs_tol` on the float track.
    fn nonnegative(&self, policy: &TolerancePolicy) -> bool {
        if Self::EXACT {
            !self.is_negative()
        } else {
            self.to_f64_lossy() >= -policy.abs_tol
        }
    }

    /// JSON form: strings on the exact track, numbers otherwise.
    fn to_json(&self) -> serde_json::Value {
        if Self::EXACT {
            serde_json::Value::String(self.to_repr())
        } else {
            serde_json::Number::from_f64(self.to_f64_lossy())
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null)
        }
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::String(s) => Self::parse_repr(s),
            serde_json::Value::Number(n) => Self::parse_repr(&n.to_string()),
            other => Err(Error::Parse(format!("expected a number or string, found {other}"))),
        }
    }
}

/// Total order helper for scalars known not to be NaN.
pub fn cmp_scalar<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_repr(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn parse_repr(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational number: {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n = parse_decimal(n).ok_or_else(bad)?;
                let d = parse_decimal(d).ok_or_else(bad)?;
                if d.is_zero() {
                    return Err(Error::ZeroDenominator);
                }
                Ok(n / d)
            }
            None => parse_decimal(s).ok_or_else(bad),
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn ratio(num: i64, den: i64) -> Self {
                assert!(den != 0, "zero denominator");
                num as $t / den as $t
            }

            fn to_repr(&self) -> String {
                format!("{:?}", self)
            }

            fn parse_repr(s: &str) -> Result<Self> {
                let s = s.trim();
                let bad = || Error::Parse(format!("not a number: {s:?}"));
                let v = match s.split_once('/') {
                    Some((n, d)) => {
                        let n: $t = n.trim().parse().map_err(|_| bad())?;
                        let d: $t = d.trim().parse().map_err(|_| bad())?;
                        if d == 0.0 {
                            return Err(Error::ZeroDenominator);
                        }
                        n / d
                    }
                    None => s.parse().map_err(|_| bad())?,
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite)
                }
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Exact value of a decimal literal such as `-12.5e-3`.
fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str_radix(if joined.is_empty() { "0" } else { &joined }, 10).ok()?;
    if neg {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Tolerances for the float track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TolerancePolicy {
    pub abs_tol: f64,
    pub ipf_margin_tol: f64,
    pub quadrature_rel_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { abs_tol: 1e-12, ipf_margin_tol: 1e-10, quadrature_rel_tol: 1e-8 }
    }
}

impl TolerancePolicy {
    pub fn new(abs_tol: f64, ipf_margin_tol: f64, quadrature_rel_tol: f64) -> Result<Self> {
        for (name, v) in [
            ("abs_tol", abs_tol),
            ("ipf_margin_tol", ipf_margin_tol),
            ("quadrature_rel_tol", quadrature_rel_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidTolerance { name, value: v });
            }
        }
        Ok(Self { abs_tol, ipf_margin_tol, quadrature_rel_tol })
    }
}

/// `|a - b| <= abs_tol`.
pub fn approx_eq(a: f64, b: f64, policy: &TolerancePolicy) -> Result<bool> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok((a - b).abs() <= policy.abs_tol)
}

/// A point of the extended real line `[-inf, +inf]`.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub enum ExtReal<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> ExtReal<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_repr(&self) -> String {
        match self {
            ExtReal::NegInf => "-inf".to_string(),
            ExtReal::PosInf => "+inf".to_string(),
            ExtReal::Finite(v) => v.to_repr(),
        }
    }

    pub fn parse_repr(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "-inf" | "-infinity" => Ok(ExtReal::NegInf),
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtReal::PosInf),
            _ => T::parse_repr(s).map(ExtReal::Finite),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ExtReal::Finite(v) => v.to_json(),
            other => serde_json::Value::String(other.to_repr()),
        }
    }
}

impl<T> From<T> for ExtReal<T> {
    fn from(v: T) -> Self {
        ExtReal::Finite(v)
    }
}

/// Converts between scalar tracks through `f64`.
pub fn convert<A: Scalar, B: Scalar>(a: &A) -> B {
    if A::EXACT && B::EXACT {
        B::parse_repr(&a.to_repr()).expect("exact repr round-trips")
    } else {
        B::from_f64(a.to_f64_lossy()).expect("finite value")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d).unwrap()
    }

    #[test]
    fn rational_construction_is_canonical() {
        assert_eq!(q(2, 4).to_repr(), "1/2");
        assert_eq!(q(0, 7).to_repr(), "0/1");
        assert_eq!(q(-3, -6).to_repr(), "1/2");
        assert_eq!(q(3, -6).to_repr(), "-1/2");
        assert!(matches!(rational(1, 0), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn approx_eq_examples() {
        let p = TolerancePolicy::default();
        assert!(approx_eq(0.1 + 0.2, 0.3, &p).unwrap());
        assert!(!approx_eq(0.0, 1e-11, &p).unwrap());
        assert!(approx_eq(1.0, 1.0, &p).unwrap());
        assert!(approx_eq(f64::NAN, 1.0, &p).is_err());
        assert!(approx_eq(1.0, f64::INFINITY, &p).is_err());
    }

    #[test]
    fn tolerance_policy_rejects_nonpositive() {
        assert!(TolerancePolicy::new(0.0, 1e-10, 1e-8).is_err());
        assert!(TolerancePolicy::new(1e-12, -1.0, 1e-8).is_err());
        assert!(TolerancePolicy::new(1e-12, 1e-10, 1e-8).is_ok());
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(Rational::parse_repr("0.7").unwrap(), q(7, 10));
        assert_eq!(Rational::parse_repr("-1.25e-1").unwrap(), q(-1, 8));
        assert_eq!(Rational::parse_repr("2/5").unwrap(), q(2, 5));
        assert_eq!(Rational::parse_repr("3").unwrap(), q(3, 1));
        assert_eq!(Rational::parse_repr("1E2").unwrap(), q(100, 1));
        assert_eq!(Rational::parse_repr(".5").unwrap(), q(1, 2));
        assert!(Rational::parse_repr("1/0").is_err());
        assert!(Rational::parse_repr("abc").is_err());
        assert!(Rational::parse_repr("").is_err());
        assert_eq!(f64::parse_repr("1/4").unwrap(), 0.25);
        assert!(f64::parse_repr("inf").is_err());
    }

    #[test]
    fn ext_real_order() {
        let a: ExtReal<Rational> = ExtReal::NegInf;
        let b = ExtReal::Finite(q(-100, 1));
        let c = ExtReal::Finite(q(5, 1));
        assert!(a < b && b < c && c < ExtReal::PosInf);
        assert_eq!(ExtReal::<Rational>::parse_repr("-inf").unwrap(), ExtReal::NegInf);
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..30).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #[test]
        fn field_laws_hold_exactly(a in small_rational(), b in small_rational(), c in small_rational()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
        }

        #[test]
        fn float_conversion_brackets_within_one_ulp(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let r = q(n, d);
            let f = r.to_f64_lossy();
            let back = Rational::from_f64(f).unwrap();
            let ulp = Rational::from_f64(f64::from_bits(f.abs().to_bits() + 1) - f.abs()).unwrap();
            prop_assert!((back - &r).abs() <= ulp);
        }

        #[test]
        fn repr_round_trips(r in small_rational()) {
            prop_assert_eq!(Rational::parse_repr(&r.to_repr()).unwrap(), r);
        }
    }
}
