//! Integer polynomials in the variable `ρ = 2 − r`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::Ring;

/// A polynomial `Σ c_i ρ^i` with arbitrary-precision integer coefficients.
///
/// Coefficients are stored lowest degree first with trailing zeros stripped,
/// so the zero polynomial has no coefficients and equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RhoPoly {
    coeffs: Vec<BigInt>,
}

impl RhoPoly {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = RhoPoly { coeffs };
        p.normalize();
        p
    }

    pub fn from_coeffs(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn constant(c: i64) -> Self {
        Self::from_coeffs(&[c])
    }

    /// The indeterminate `ρ`.
    pub fn rho() -> Self {
        Self::from_coeffs(&[0, 1])
    }

    /// `ρ^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = BigInt::one();
        RhoPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn has_nonnegative_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }

    /// Horner evaluation at an exact rational `ρ`.
    pub fn eval_rational(&self, rho: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| {
            acc * rho + BigRational::from_integer(c.clone())
        })
    }

    pub fn eval_f64(&self, rho: f64) -> f64 {
        use num_traits::ToPrimitive;
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * rho + c.to_f64().unwrap_or(f64::NAN))
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }
}

impl Zero for RhoPoly {
    fn zero() -> Self {
        RhoPoly { coeffs: Vec::new() }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl One for RhoPoly {
    fn one() -> Self {
        Self::constant(1)
    }
}

impl Add for RhoPoly {
    type Output = RhoPoly;

    fn add(self, rhs: RhoPoly) -> RhoPoly {
        let (mut long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self.coeffs, rhs.coeffs)
        } else {
            (rhs.coeffs, self.coeffs)
        };
        for (a, b) in long.iter_mut().zip(short) {
            *a += b;
        }
        RhoPoly::new(long)
    }
}

impl Neg for RhoPoly {
    type Output = RhoPoly;

    fn neg(self) -> RhoPoly {
        RhoPoly {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl Sub for RhoPoly {
    type Output = RhoPoly;

    fn sub(self, rhs: RhoPoly) -> RhoPoly {
        self + (-rhs)
    }
}

impl Mul for RhoPoly {
    type Output = RhoPoly;

    fn mul(self, rhs: RhoPoly) -> RhoPoly {
        if self.is_zero() || rhs.is_zero() {
            return RhoPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RhoPoly::new(out)
    }
}

impl Ring for RhoPoly {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        Self::constant(n)
    }

    fn approx(&self, rho: f64) -> f64 {
        self.eval_f64(rho)
    }
}

impl fmt::Display for RhoPoly {
    /// Writes `1+2*rho+rho^2` style output, lowest degree first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if c.is_negative() {
                write!(f, "-")?;
            } else if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "rho")?,
                (1, false) => write!(f, "{mag}*rho")?,
                (_, true) => write!(f, "rho^{i}")?,
                (_, false) => write!(f, "{mag}*rho^{i}")?,
            }
        }
        Ok(())
    }
}
