//! Exact rational scalars and their canonical string form.
//!
//! Every coefficient in this crate is a [`Rational`] (arbitrary precision, always in
//! lowest terms with a positive denominator). The textual form is `"p/q"`, with the
//! denominator omitted when it is 1.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Small-integer constructor used all over the formulas and tests.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `(-1)^k` as a rational.
pub fn sign_power(k: i64) -> Rational {
    if k.rem_euclid(2) == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let valid = |part: &str| {
        let digits = part.strip_prefix(['-', '+']).unwrap_or(part);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num) || !valid(den) {
        return Err(ParseRationalError::Malformed(text.to_string()));
    }
    let n: BigInt = num
        .parse()
        .map_err(|_| ParseRationalError::Malformed(text.to_string()))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| ParseRationalError::Malformed(text.to_string()))?;
    if d.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(n, d))
}

pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Largest of |numerator| and denominator; the usual height of a rational.
pub fn height(value: &Rational) -> BigInt {
    let n = value.numer().abs();
    let d = value.denom().clone();
    if n > d {
        n
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes() {
        assert_eq!(parse_rational("-2/4").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational(" 6/-4 ").unwrap(), rat(-3, 2));
    }

    #[test]
    fn rejects_bad_literals() {
        assert_eq!(parse_rational(""), Err(ParseRationalError::Empty));
        assert!(matches!(
            parse_rational("1/0"),
            Err(ParseRationalError::ZeroDenominator(_))
        ));
        assert!(matches!(
            parse_rational("1.5"),
            Err(ParseRationalError::Malformed(_))
        ));
        assert!(matches!(
            parse_rational("1/2/3"),
            Err(ParseRationalError::Malformed(_))
        ));
    }

    #[test]
    fn formats_without_unit_denominator() {
        assert_eq!(format_rational(&int(-7)), "-7");
        assert_eq!(format_rational(&rat(10, -4)), "-5/2");
        assert_eq!(format_rational(&Rational::zero()), "0");
    }

    #[test]
    fn height_of_fraction() {
        assert_eq!(height(&rat(-9, 4)), BigInt::from(9));
        assert_eq!(height(&rat(2, 7)), BigInt::from(7));
    }
}
