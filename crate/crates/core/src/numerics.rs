//! The interval maps `F_r`, their inverse branches and the involution `Ŝ_r`.
//!
//! Everything here is generic over the coefficient field, so the same code
//! runs on `f32`, `f64` and exact rationals. The map is
//!
//! ```text
//! F_r(x) = ρx / (1 − rx)            for 0 ≤ x ≤ 1/2
//!        = ρ(1 − x) / (1 − r + rx)  for 1/2 < x ≤ 1,      ρ = 2 − r,
//! ```
//!
//! interpolating between the tent map (`r = 0`) and the Farey map (`r = 1`).

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::RhoPoly;
use crate::scalar::{Field, Real, Ring};

/// Arithmetic backend selected for a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact rationals; requires a rational `r`.
    Exact,
    /// Integer polynomials in `ρ`, valid for every `r` at once.
    Symbolic,
    /// IEEE double precision.
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Symbolic => "symbolic",
            Mode::Float => "float",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" | "rational" => Ok(Mode::Exact),
            "symbolic" | "rho" => Ok(Mode::Symbolic),
            "float" | "f64" => Ok(Mode::Float),
            other => Err(format!("unknown mode `{other}` (expected exact, symbolic or float)")),
        }
    }
}

/// The parameter pair `(r, ρ = 2 − r)` in some coefficient ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    r: T,
    rho: T,
}

impl<T: Ring> Params<T> {
    pub fn r(&self) -> &T {
        &self.r
    }

    pub fn rho(&self) -> &T {
        &self.rho
    }

    /// `ρ^k`.
    pub fn rho_pow(&self, k: u32) -> T {
        self.rho.pow_u(k)
    }
}

impl<T: Field> Params<T> {
    /// Builds the parameters for `r ∈ [0, 2)`.
    pub fn new(r: T) -> Result<Self> {
        if r < T::zero() || r >= T::from_i64(2) {
            return Err(Error::ParameterRange {
                operation: "Params::new",
                r: r.to_f64(),
                allowed: "[0, 2)",
            });
        }
        let rho = T::from_i64(2) - r.clone();
        Ok(Params { r, rho })
    }

    /// Rejects `r` outside `[0, bound)` (or `[0, bound]` when `inclusive`).
    pub fn require_r_below(&self, operation: &'static str, bound: T, inclusive: bool) -> Result<()> {
        let ok = if inclusive { self.r <= bound } else { self.r < bound };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterRange {
                operation,
                r: self.r.to_f64(),
                allowed: if inclusive { "[0, 1]" } else { "[0, 1)" },
            })
        }
    }

    pub fn to_f64(&self) -> Params<f64> {
        Params {
            r: self.r.to_f64(),
            rho: self.rho.to_f64(),
        }
    }
}

impl Params<RhoPoly> {
    /// Symbolic parameters: `ρ` is the indeterminate and `r = 2 − ρ`.
    pub fn symbolic() -> Self {
        Params {
            r: RhoPoly::constant(2) - RhoPoly::rho(),
            rho: RhoPoly::rho(),
        }
    }
}

impl Params<BigRational> {
    pub fn exact(num: i64, den: i64) -> Result<Self> {
        Params::new(BigRational::new(num.into(), den.into()))
    }
}

fn check_unit<T: Field>(what: &'static str, x: &T) -> Result<()> {
    if *x < T::zero() || *x > T::one() {
        Err(Error::Domain {
            what,
            value: x.to_f64(),
            domain: "[0, 1]",
        })
    } else {
        Ok(())
    }
}

/// `F_r(x)`; the point `x = 1/2` belongs to the left branch.
pub fn forward_map<T: Field>(x: &T, p: &Params<T>) -> Result<T> {
    check_unit("x", x)?;
    let half = T::from_ratio(1, 2);
    let (y, one) = (x.clone(), T::one());
    Ok(if *x <= half {
        p.rho.clone() * y.clone() / (one - p.r.clone() * y)
    } else {
        p.rho.clone() * (one.clone() - y.clone()) / (one - p.r.clone() + p.r.clone() * y)
    })
}

/// `|F_r'(x)|`, taken from the left branch at `x = 1/2`.
pub fn forward_derivative<T: Field>(x: &T, p: &Params<T>) -> Result<T> {
    check_unit("x", x)?;
    let half = T::from_ratio(1, 2);
    let one = T::one();
    let den = if *x <= half {
        one - p.r.clone() * x.clone()
    } else {
        one - p.r.clone() + p.r.clone() * x.clone()
    };
    Ok(p.rho.clone() / (den.clone() * den))
}

/// The inverse branches `Φ_0(x) = x/(ρ + rx)` and `Φ_1(x) = 1 − Φ_0(x)`.
pub fn inverse_branch<T: Field>(x: &T, p: &Params<T>, j: u8) -> Result<T> {
    check_unit("x", x)?;
    Ok(inverse_branch_unchecked(x, p, j))
}

/// Inverse branch without the domain check, used on `R_+` by the transfer code.
pub fn inverse_branch_unchecked<T: Field>(x: &T, p: &Params<T>, j: u8) -> T {
    let left = x.clone() / (p.rho.clone() + p.r.clone() * x.clone());
    if j == 0 {
        left
    } else {
        T::one() - left
    }
}

/// `|Φ_j'(x)| = ρ / (ρ + rx)^2`, the same for both branches.
pub fn inverse_branch_slope<T: Field>(x: &T, p: &Params<T>) -> T {
    let den = p.rho.clone() + p.r.clone() * x.clone();
    p.rho.clone() / (den.clone() * den)
}

/// Closed form of the `n`-fold left branch, `(ρ^n / x + r Σ_{k<n} ρ^k)^{-1}`.
///
/// `x = 0` is the fixed point and returns `0`.
pub fn left_branch_power<T: Field>(x: &T, p: &Params<T>, n: u32) -> Result<T> {
    check_unit("x", x)?;
    if x.is_zero() {
        return Ok(T::zero());
    }
    let mut geometric = T::zero();
    let mut power = T::one();
    for _ in 0..n {
        geometric = geometric + power.clone();
        power = power * p.rho.clone();
    }
    Ok(T::one() / (power / x.clone() + p.r.clone() * geometric))
}

/// Density of the absolutely continuous invariant probability, `K_r / (1 − r + rx)`.
pub fn invariant_density<T: Real>(x: T, p: &Params<T>) -> Result<T> {
    p.require_r_below("invariant_density", T::one(), false)?;
    check_unit("x", &x)?;
    Ok(density_normalization(p) / (T::one() - p.r + p.r * x))
}

/// `K_r = −r / log(1 − r)`, with `K_0 = 1`.
pub fn density_normalization<T: Real>(p: &Params<T>) -> T {
    if p.r == T::zero() {
        T::one()
    } else {
        -p.r / (-p.r).ln_1p()
    }
}

/// Invariant mass of `[1/2, 1]`: `log(1 − r/2) / log(1 − r)`, `1/2` at `r = 0`.
pub fn invariant_mass_right_half<T: Real>(p: &Params<T>) -> Result<T> {
    p.require_r_below("invariant_mass_right_half", T::one(), false)?;
    let half = T::from_f64(0.5);
    Ok(if p.r == T::zero() {
        half
    } else {
        (-p.r * half).ln_1p() / (-p.r).ln_1p()
    })
}

/// The Möbius involution `Ŝ_r(x) = ((r − 1)x + 2 − r) / (rx + 1 − r)`.
pub fn involution_s<T: Field>(x: &T, p: &Params<T>) -> Result<T> {
    let one = T::one();
    let den = p.r.clone() * x.clone() + one.clone() - p.r.clone();
    if den.is_zero() {
        return Err(Error::Pole(x.to_f64()));
    }
    Ok(((p.r.clone() - one) * x.clone() + p.rho.clone()) / den)
}

/// One step of the generalized transfer operator at real weight `s`:
/// `ρ^s (ρ + rx)^{-2s} [f(Φ_0 x) + f(Φ_1 x)]`.
pub fn transfer_step<T: Real>(f: impl Fn(T) -> T, x: T, s: T, p: &Params<T>) -> T {
    let slope = inverse_branch_slope(&x, p);
    let y0 = inverse_branch_unchecked(&x, p, 0);
    slope.powf(s) * (f(y0) + f(T::one() - y0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn pf(r: f64) -> Params<f64> {
        Params::new(r).unwrap()
    }

    #[test]
    fn forward_map_examples() {
        assert_eq!(forward_map(&0.25, &pf(0.0)).unwrap(), 0.5);
        let farey = Params::exact(1, 1).unwrap();
        assert_eq!(forward_map(&q(2, 3), &farey).unwrap(), q(1, 2));
        for r in [q(0, 1), q(1, 3), q(1, 1), q(7, 4)] {
            let p = Params::new(r).unwrap();
            assert_eq!(forward_map(&q(1, 2), &p).unwrap(), q(1, 1));
        }
        assert!(forward_map(&1.5, &pf(0.3)).is_err());
        assert!(forward_map(&-0.1, &pf(0.3)).is_err());
    }

    #[test]
    fn params_reject_out_of_range() {
        assert!(Params::new(2.0).is_err());
        assert!(Params::new(-0.1).is_err());
        let p = Params::exact(3, 2).unwrap();
        assert_eq!(p.rho(), &q(1, 2));
        let s = Params::symbolic();
        assert_eq!(s.r().clone() + s.rho().clone(), RhoPoly::constant(2));
    }

    #[test]
    fn inverse_branch_examples() {
        for r in [0.0, 0.4, 1.0, 1.6] {
            assert_eq!(inverse_branch(&1.0, &pf(r), 0).unwrap(), 0.5);
            assert_eq!(inverse_branch(&0.0, &pf(r), 1).unwrap(), 1.0);
        }
        let p = pf(0.6);
        let y = inverse_branch(&0.37, &p, 0).unwrap();
        assert!((forward_map(&y, &p).unwrap() - 0.37).abs() <= 1e-14);
    }

    #[test]
    fn round_trip_is_exact_on_rational_grid() {
        for (rn, rd) in [(0, 1), (1, 4), (1, 2), (1, 1), (3, 2)] {
            let p = Params::exact(rn, rd).unwrap();
            for i in 0..=24 {
                let x = q(i, 24);
                for j in 0..2 {
                    let y = inverse_branch(&x, &p, j).unwrap();
                    if j == 0 {
                        assert!(y <= q(1, 2));
                    } else {
                        assert!(y >= q(1, 2));
                    }
                    assert_eq!(forward_map(&y, &p).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn minimal_slope_is_rho_at_the_endpoints() {
        for r in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5] {
            let p = pf(r);
            let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
            // Central differences away from the kink at 1/2.
            let h = 1e-7;
            let mut min = f64::INFINITY;
            let mut argmin = 0.0;
            for &x in &grid {
                if (x - 0.5).abs() < 2.0 * h {
                    continue;
                }
                let (a, b) = ((x - h).max(0.0), (x + h).min(1.0));
                let d = ((forward_map(&b, &p).unwrap() - forward_map(&a, &p).unwrap()) / (b - a)).abs();
                if d < min {
                    min = d;
                    argmin = x;
                }
            }
            assert!((min - (2.0 - r)).abs() < 1e-5, "r={r}: min slope {min}");
            assert!(argmin == 0.0 || argmin == 1.0, "r={r}: argmin {argmin}");
            let d0 = forward_derivative(&0.0, &p).unwrap();
            let d1 = forward_derivative(&1.0, &p).unwrap();
            assert!((d0 - (2.0 - r)).abs() < 1e-15 && (d1 - (2.0 - r)).abs() < 1e-15);
        }
    }

    #[test]
    fn left_branch_power_examples() {
        let tent = pf(0.0);
        for n in 1..8 {
            let x = 0.8;
            assert!((left_branch_power(&x, &tent, n).unwrap() - x / 2f64.powi(n as i32)).abs() < 1e-16);
        }
        let farey = Params::exact(1, 1).unwrap();
        for i in 1..=10 {
            let x = q(i, 10);
            let expect = x.clone() / (q(1, 1) + q(2, 1) * x.clone());
            assert_eq!(left_branch_power(&x, &farey, 2).unwrap(), expect);
        }
        let p = pf(0.7);
        let mut y = 0.5;
        for _ in 0..6 {
            y = inverse_branch(&y, &p, 0).unwrap();
        }
        assert!((left_branch_power(&0.5, &p, 6).unwrap() - y).abs() <= 1e-14);
        assert_eq!(left_branch_power(&0.0, &p, 3).unwrap(), 0.0);
    }

    #[test]
    fn left_branch_power_is_exact_composition() {
        for (rn, rd) in [(1, 3), (5, 7), (1, 1)] {
            let p = Params::exact(rn, rd).unwrap();
            for i in 1..=6 {
                let x = q(i, 6);
                let mut y = x.clone();
                for n in 1..=9 {
                    y = inverse_branch(&y, &p, 0).unwrap();
                    assert_eq!(left_branch_power(&x, &p, n).unwrap(), y);
                }
            }
        }
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn invariant_density_examples() {
        assert_eq!(invariant_density(0.3, &pf(0.0)).unwrap(), 1.0);
        // The density decreases, so the left half carries the larger mass.
        let p = pf(0.5);
        let ratio = 0.75f64.ln() / 0.5f64.ln();
        let left = simpson(|x| invariant_density(x, &p).unwrap(), 0.0, 0.5, 2000);
        let right = simpson(|x| invariant_density(x, &p).unwrap(), 0.5, 1.0, 2000);
        assert!((right - ratio).abs() < 1e-12);
        assert!((left - (1.0 - ratio)).abs() < 1e-12);
        assert!((invariant_mass_right_half(&p).unwrap() - ratio).abs() < 1e-15);
        assert_eq!(invariant_mass_right_half(&pf(0.0)).unwrap(), 0.5);
        let p = pf(0.9);
        let total = simpson(|x| invariant_density(x, &p).unwrap(), 0.0, 1.0, 4000);
        assert!((total - 1.0).abs() < 1e-10, "{total}");
        assert!(invariant_density(0.5, &pf(1.0)).is_err());
    }

    #[test]
    fn density_is_fixed_by_the_transfer_operator() {
        for r in [0.0, 0.2, 0.5, 0.8, 0.95] {
            let p = pf(r);
            for i in 0..=50 {
                let x = i as f64 / 50.0;
                let d = |y: f64| invariant_density(y, &p).unwrap();
                let pd = transfer_step(d, x, 1.0, &p);
                assert!((pd - d(x)).abs() <= 1e-10 * d(x), "r={r} x={x}");
            }
        }
    }

    #[test]
    fn involution_examples() {
        for r in [0.0, 0.3, 1.0, 1.7] {
            assert!((involution_s(&1.0, &pf(r)).unwrap() - 1.0).abs() < 1e-15);
        }
        let farey = Params::exact(1, 1).unwrap();
        for i in 1..20 {
            let x = q(i, 7);
            assert_eq!(involution_s(&x, &farey).unwrap(), q(7, i));
        }
        let p = pf(0.4);
        let back = involution_s(&involution_s(&0.3, &p).unwrap(), &p).unwrap();
        assert!((back - 0.3).abs() <= 1e-14);
        // pole at x = (r - 1)/r
        let p = Params::exact(1, 2).unwrap();
        assert!(matches!(involution_s(&q(-1, 1), &p), Err(Error::Pole(_))));
    }

    #[test]
    fn involution_is_exact_on_rational_grid() {
        for (rn, rd) in [(0, 1), (1, 4), (2, 3), (1, 1), (5, 4)] {
            let p = Params::exact(rn, rd).unwrap();
            for i in 0..=30 {
                let x = q(i, 10);
                if let Ok(y) = involution_s(&x, &p) {
                    assert_eq!(involution_s(&y, &p).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let p: Params<f32> = Params::new(0.5f32).unwrap();
        let y = inverse_branch(&0.3f32, &p, 1).unwrap();
        assert!((forward_map(&y, &p).unwrap() - 0.3).abs() < 1e-6);
        assert!(invariant_density(0.2f32, &p).unwrap() > 0.0);
        assert!(!Params::<f32>::new(0.5).unwrap().r().is_zero());
    }

    proptest! {
        #[test]
        fn branches_invert_the_map(x in 0.0f64..=1.0, r in 0.0f64..1.99, j in 0u8..2) {
            let p = pf(r);
            let y = inverse_branch(&x, &p, j).unwrap();
            prop_assert!((forward_map(&y, &p).unwrap() - x).abs() <= 1e-13);
        }
    }
}
