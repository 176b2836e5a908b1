//! Ordered-field backends.
//!
//! Every algorithm in this crate is generic over [`Scalar`]. Two backends
//! exist: [`BigRational`] for exact arithmetic and `f64` for speed. Exact
//! mode never rounds; float mode compares with a relative tolerance of
//! [`FLOAT_TOLERANCE`] wherever two quantities are supposed to coincide.

use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Relative tolerance used by the float backend for coincidence tests.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

pub trait Scalar:
    Clone
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True for backends with exact arithmetic.
    const EXACT: bool;
    const MODE: NumMode;

    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    /// Equality for exact backends, relative closeness for floats.
    fn coincides(&self, other: &Self) -> bool;

    /// Fraction string (`num/den`) or a 17-significant-digit decimal.
    fn render(&self) -> String;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn from_usize(n: usize) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    /// `self <= other`, widened by the backend tolerance.
    fn le_tol(&self, other: &Self) -> bool {
        self <= other || self.coincides(other)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const MODE: NumMode = NumMode::Rational;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn coincides(&self, other: &Self) -> bool {
        self == other
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: NumMode = NumMode::Float;

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn coincides(&self, other: &Self) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= FLOAT_TOLERANCE * scale
    }

    fn render(&self) -> String {
        render_f64_significant(*self, 17)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }
}

/// Plain decimal rendering with `digits` significant digits.
pub fn render_f64_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Run-time selection of the numeric backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumMode {
    Rational,
    Float,
}

impl NumMode {
    pub const ENV_VAR: &'static str = "GPG_NUM_MODE";

    pub fn as_str(self) -> &'static str {
        match self {
            NumMode::Rational => "rational",
            NumMode::Float => "float",
        }
    }

    /// Mode named by `GPG_NUM_MODE`, if set and valid.
    pub fn from_env() -> Option<NumMode> {
        std::env::var(Self::ENV_VAR).ok()?.parse().ok()
    }
}

impl fmt::Display for NumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown numeric mode `{0}` (expected `rational` or `float`)")]
pub struct UnknownMode(pub String);

impl FromStr for NumMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Ok(NumMode::Rational),
            "float" | "f64" => Ok(NumMode::Float),
            other => Err(UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a probability (expected a decimal or `num/den`)")]
pub struct ParseProbabilityError(pub String);

/// Parses `"1/6"`, `"0.25"`, `"1e-3"` or `"3"` into an exact rational.
///
/// Decimal literals are read digit by digit, so `"0.1"` is exactly `1/10`.
pub fn parse_rational(text: &str) -> Result<BigRational, ParseProbabilityError> {
    let err = || ParseProbabilityError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal(num.trim()).ok_or_else(err)?;
        let den = parse_decimal(den.trim()).ok_or_else(err)?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(num / den);
    }
    parse_decimal(s).ok_or_else(err)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(idx) => (&s[..idx], s[idx + 1..].parse::<i32>().ok()?),
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
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if all_digits.is_empty() { BigInt::zero() } else { all_digits.parse().ok()? };
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer);
    if shift >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    if negative {
        value = -value;
    }
    Some(value)
}

/// Exact rational for a finite f64 via its shortest round-trip decimal form.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    parse_decimal(&format!("{x}"))
}

pub(crate) fn is_negative<F: Scalar>(x: &F) -> bool {
    *x < F::zero()
}
