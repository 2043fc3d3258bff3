//! Exact rational scalars.
//!
//! Every polyhedral computation in this crate runs on arbitrary precision
//! rationals so that certificates are free of rounding artifacts. The
//! representation is `num_rational::BigRational`, which keeps fractions in
//! lowest terms with a positive denominator after every operation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

/// Integer-valued scalar.
pub fn int(v: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(v))
}

/// Fraction `num/den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Scalar {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_zero(v: &Scalar) -> bool {
    v.is_zero()
}

pub fn abs(v: &Scalar) -> Scalar {
    v.abs()
}

pub fn to_f64(v: &Scalar) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for extreme magnitudes.
        let n = v.numer().to_f64().unwrap_or(f64::NAN);
        let d = v.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `"3"`, `"-3/4"`, or a plain integer literal.
pub fn parse(text: &str) -> Result<Scalar> {
    let text = text.trim();
    let mk_err = || Error::Schema(format!("malformed rational literal: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let num: BigInt = n.trim().parse().map_err(|_| mk_err())?;
        let den: BigInt = d.trim().parse().map_err(|_| mk_err())?;
        if den.is_zero() {
            return Err(Error::Schema(format!("zero denominator in {text:?}")));
        }
        Ok(BigRational::new(num, den))
    } else {
        let num: BigInt = text.parse().map_err(|_| mk_err())?;
        Ok(BigRational::from_integer(num))
    }
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn render(v: &Scalar) -> String {
    if v.denom() == &BigInt::from(1) {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}
