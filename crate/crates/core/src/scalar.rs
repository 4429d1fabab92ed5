//! Coefficient rings shared by the exact and floating code paths.
//!
//! Every recursion in the crate (tree numerators and denominators, spin-chain
//! tables, matrix presentations) only needs ring operations, so it is written
//! once against [`Ring`]. Code that compares or divides values asks for
//! [`Field`], and purely analytic code (logarithms, square roots) asks for
//! [`Real`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, One, Signed, ToPrimitive, Zero};

/// A commutative ring with unit.
pub trait Ring:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// Whether arithmetic is exact (rationals, integers, polynomials).
    const EXACT: bool;

    fn from_i64(n: i64) -> Self;

    /// Nearest `f64`; polynomials in `ρ` are evaluated at `rho`.
    fn approx(&self, rho: f64) -> f64;

    /// `self^e` by repeated squaring.
    fn pow_u(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

/// An ordered field: exact rationals or IEEE floats.
pub trait Field: Ring + Div<Output = Self> + PartialOrd {
    fn to_f64(&self) -> f64;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn powi(&self, e: i32) -> Self {
        if e >= 0 {
            self.pow_u(e as u32)
        } else {
            Self::one() / self.pow_u(e.unsigned_abs())
        }
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

/// Floating scalars (`f32`, `f64`) used by the analytic parts of the crate.
pub trait Real: Field + Float + FloatConst + Copy {
    fn from_f64(x: f64) -> Self;
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Ring for $t {
            const EXACT: bool = false;

            fn from_i64(n: i64) -> Self {
                n as $t
            }

            fn approx(&self, _rho: f64) -> f64 {
                *self as f64
            }
        }

        impl Field for $t {
            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn powi(&self, e: i32) -> Self {
                <$t>::powi(*self, e)
            }

            fn abs_val(&self) -> Self {
                <$t>::abs(*self)
            }
        }

        impl Real for $t {
            fn from_f64(x: f64) -> Self {
                x as $t
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Ring for BigInt {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        BigInt::from(n)
    }

    fn approx(&self, _rho: f64) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Ring for BigRational {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn approx(&self, _rho: f64) -> f64 {
        Field::to_f64(self)
    }
}

impl Field for BigRational {
    fn to_f64(&self) -> f64 {
        // Scale down huge numerators/denominators before dividing.
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                let shift = self.numer().bits().max(self.denom().bits()).saturating_sub(1000);
                let n = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let d = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }
}

/// Parses `"3/4"`, `"-2"` or a finite decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(n, d);
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn pow_by_squaring_matches_repeated_product() {
        let x = q(3, 7);
        let mut expect = BigRational::one();
        for e in 0..12u32 {
            assert_eq!(x.pow_u(e), expect);
            expect = expect * x.clone();
        }
        assert_eq!(<f64 as Field>::powi(&2.0, -3), 0.125);
        assert_eq!(Field::powi(&q(2, 3), -2), q(9, 4));
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/4"), Some(q(3, 4)));
        assert_eq!(parse_rational("0.25"), Some(q(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(q(-3, 2)));
        assert_eq!(parse_rational("2"), Some(q(2, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn rational_to_f64_survives_huge_parts() {
        let three = num_traits::pow(BigInt::from(3), 699);
        let y = BigRational::new(three.clone() * 3 + 1, three * 2);
        assert!((Field::to_f64(&y) - 1.5).abs() < 1e-12);
    }
}
