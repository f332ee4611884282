//! Exact rational probabilities.
//!
//! Probabilities are stored as arbitrary-precision rationals. Values entered
//! as `f64` convert exactly (every finite double is a dyadic rational), and
//! decimal or fractional text such as `"0.1"` or `"3/8"` parses without
//! rounding.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Prob(BigRational::new(num.into(), den.into()))
    }

    /// Exact conversion. Fails on NaN and infinities.
    pub fn from_f64(v: f64) -> Result<Self> {
        BigRational::from_float(v)
            .map(Prob)
            .ok_or_else(|| Error::Validation(format!("non-finite value {v}")))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Prob(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_rational(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Parse `"3/8"`, `"-1/2"`, `"0.375"`, `"1e-3"` or `"1"` exactly.
    pub fn parse(text: &str) -> Result<Self> {
        let s = text.trim();
        let bad = || Error::Validation(format!("cannot parse probability {text:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Prob(BigRational::new(num, den)));
        }
        parse_decimal(s).map(Prob).ok_or_else(bad)
    }

    /// Denominator fits the given bound (used to decide how to print).
    pub fn has_small_denominator(&self, bound: u64) -> bool {
        self.0.denom().to_u64().is_some_and(|d| d <= bound)
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
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
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Prob {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Prob::parse(s)
    }
}

impl From<BigRational> for Prob {
    fn from(r: BigRational) -> Self {
        Prob(r)
    }
}
