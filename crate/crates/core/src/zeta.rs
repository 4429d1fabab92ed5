//! Twisted partition sums, the twisted Möbius function
//! `μ^{(m)}(q) = Σ_{p ∈ (Z/qZ)^×} e^{2πimp/q}` and partial sums of the Dirichlet
//! series `ζ^{(m)}(s) = Σ μ^{(m)}(q) q^{-s}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::Params;
use crate::sum::{ComplexSum, Neumaier};
use crate::transfer::{iterate_character, TransferQuery, STREAM_CAP};
use crate::tree::spin_levels;

/// Size of the shared sieve.
pub const SIEVE_LIMIT: usize = 1_000_000;

/// Euler's totient and the Möbius function up to a limit, by a linear sieve.
#[derive(Clone, Debug)]
pub struct Sieve {
    phi: Vec<u64>,
    mu: Vec<i8>,
    primes: Vec<u64>,
}

impl Sieve {
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(1);
        let mut phi = vec![0u64; limit + 1];
        let mut mu = vec![0i8; limit + 1];
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::new();
        phi[1] = 1;
        mu[1] = 1;
        for i in 2..=limit {
            if !composite[i] {
                primes.push(i as u64);
                phi[i] = i as u64 - 1;
                mu[i] = -1;
            }
            for &p in &primes {
                let j = i * p as usize;
                if j > limit {
                    break;
                }
                composite[j] = true;
                if i % p as usize == 0 {
                    phi[j] = phi[i] * p;
                    mu[j] = 0;
                    break;
                }
                phi[j] = phi[i] * (p - 1);
                mu[j] = -mu[i];
            }
        }
        Sieve { phi, mu, primes }
    }

    /// The sieve up to [`SIEVE_LIMIT`], built on first use.
    pub fn shared() -> &'static Sieve {
        static SIEVE: OnceLock<Sieve> = OnceLock::new();
        SIEVE.get_or_init(|| Sieve::new(SIEVE_LIMIT))
    }

    pub fn limit(&self) -> u64 {
        (self.phi.len() - 1) as u64
    }

    /// Prime factorization `[(p, a)]` of `n ≥ 1`.
    pub fn factor(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut push = |p: u64, n: &mut u64| {
            let mut a = 0;
            while *n % p == 0 {
                *n /= p;
                a += 1;
            }
            if a > 0 {
                out.push((p, a));
            }
        };
        for &p in &self.primes {
            if p * p > n {
                break;
            }
            push(p, &mut n);
        }
        let mut p = self.primes.last().map_or(2, |p| p + 1);
        while p * p <= n {
            push(p, &mut n);
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    pub fn phi(&self, n: u64) -> u64 {
        if n <= self.limit() {
            return self.phi[n as usize];
        }
        self.factor(n).iter().map(|&(p, a)| (p - 1) * p.pow(a - 1)).product()
    }

    pub fn mobius(&self, n: u64) -> i64 {
        if n <= self.limit() {
            return self.mu[n as usize] as i64;
        }
        let f = self.factor(n);
        if f.iter().any(|&(_, a)| a > 1) {
            0
        } else if f.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Evaluation of `μ^{(m)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMethod {
    /// `φ(q)/φ(q') μ(q')` with `q' = q / gcd(m, q)`.
    Closed,
    /// The exponential sum over units, rounded to an integer.
    Direct,
}

/// Largest residual accepted when rounding a direct exponential sum.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// `μ^{(m)}(q)`.
pub fn mu_twisted(m: i64, q: u64, method: MuMethod) -> Result<i64> {
    if q == 0 {
        return Err(Error::Domain {
            what: "q",
            value: 0.0,
            domain: "q >= 1",
        });
    }
    match method {
        MuMethod::Closed => Ok(mu_closed(m, q, Sieve::shared())),
        MuMethod::Direct => mu_direct(m, q),
    }
}

fn mu_closed(m: i64, q: u64, sieve: &Sieve) -> i64 {
    let g = m.unsigned_abs().gcd(&q);
    let reduced = q / g;
    let mu = sieve.mobius(reduced);
    if mu == 0 {
        return 0;
    }
    (sieve.phi(q) / sieve.phi(reduced)) as i64 * mu
}

fn mu_direct(m: i64, q: u64) -> Result<i64> {
    let modulus = q as i128;
    let step = (m as i128).rem_euclid(modulus);
    let mut acc = ComplexSum::default();
    for p in 1..=q {
        if p.gcd(&q) == 1 {
            let residue = (step * p as i128) % modulus;
            acc.add(Complex64::from_polar(1.0, 2.0 * PI * residue as f64 / q as f64));
        }
    }
    let z = acc.value();
    let rounded = z.re.round();
    let residual = (z.re - rounded).abs().max(z.im.abs());
    if residual > INTEGRALITY_TOL {
        return Err(Error::NotIntegral { q, m, residual });
    }
    Ok(rounded as i64)
}

/// Partial sum `Σ_{q ≤ Q} μ^{(m)}(q) q^{-s}` with a bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirichletPartial {
    pub m: i64,
    pub s: f64,
    pub terms: u64,
    pub value: f64,
    /// Bound on `|Σ_{q > Q} μ^{(m)}(q) q^{-s}|`; infinite where the series is not known to converge.
    pub tail_bound: f64,
}

pub fn dirichlet_partial(m: i64, s: f64, terms: u64) -> Result<DirichletPartial> {
    if terms == 0 {
        return Err(Error::Domain {
            what: "Q",
            value: 0.0,
            domain: "Q >= 1",
        });
    }
    let sieve = Sieve::shared();
    let value = (1..=terms)
        .map(|q| mu_closed(m, q, sieve) as f64 * (q as f64).powf(-s))
        .collect::<Neumaier>()
        .value();
    // |μ^{(m)}(q)| ≤ |m| for m ≠ 0 and ≤ q always; Σ_{q>Q} q^{-a} ≤ Q^{1-a}/(a-1).
    let big_q = terms as f64;
    let tail = |a: f64| if a > 1.0 { big_q.powf(1.0 - a) / (a - 1.0) } else { f64::INFINITY };
    let by_size = tail(s - 1.0);
    let tail_bound = if m == 0 { by_size } else { by_size.min(m.unsigned_abs() as f64 * tail(s)) };
    Ok(DirichletPartial {
        m,
        s,
        terms,
        value,
        tail_bound,
    })
}

/// Route for [`twisted_z`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TwistedRoute {
    /// Direct sum over tree rows.
    Rows,
    /// `2 Z^{(m)}_n(2s) = 1 + Σ_{k ≤ n} ρ^{-ks} (P^k_{s} e_m)(1)`.
    Transfer,
}

/// `Z^{(m)}_n(s) = Σ_{p/q ∈ T_n \ {0}} q^{-s} e^{2πimp/q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwistedSum {
    pub m: i64,
    pub n: u32,
    pub s: f64,
    pub value: Complex64,
}

/// Largest `n` of the rows route.
pub const TWISTED_ROW_CAP: u32 = 27;

pub fn twisted_z(n: u32, s: f64, m: i64, params: &Params<f64>, route: TwistedRoute) -> Result<TwistedSum> {
    let value = match route {
        TwistedRoute::Rows => {
            if n > TWISTED_ROW_CAP {
                return Err(Error::CapExceeded {
                    what: "twisted rows n",
                    requested: n as usize,
                    cap: TWISTED_ROW_CAP as usize,
                });
            }
            let mut acc = ComplexSum::default();
            acc.add(Complex64::new(1.0, 0.0));
            if n > 0 {
                spin_levels(n - 1, params, 1.0, 2.0, |_, p, q| {
                    for (p, q) in p.iter().zip(q) {
                        let phase = 2.0 * PI * (m as f64 * p / q).rem_euclid(1.0);
                        acc.add(Complex64::from_polar(q.powf(-s), phase));
                    }
                });
            }
            acc.value()
        }
        TwistedRoute::Transfer => {
            if n > STREAM_CAP {
                return Err(Error::CapExceeded {
                    what: "twisted transfer n",
                    requested: n as usize,
                    cap: STREAM_CAP as usize,
                });
            }
            let half = 0.5 * s;
            let log_rho = params.rho().ln();
            let mut acc = ComplexSum::default();
            acc.add(Complex64::new(2.0, 0.0));
            for k in 1..=n {
                let q = TransferQuery::new(half, *params.r(), k)?;
                acc.add(iterate_character(1.0, &q, m)? * (-(k as f64) * half * log_rho).exp());
            }
            0.5 * acc.value()
        }
    };
    Ok(TwistedSum { m, n, s, value })
}

/// `Z^C_n(s)` beside `Z^{(1)}_n(s) / Z^{(1)}_n(s − 1)`, the candidate ratio `ζ_r(s−1)/ζ_r(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZetaRatioProbe {
    pub canonical: f64,
    pub ratio: Complex64,
}

pub fn zeta_ratio_probe(n: u32, s: f64, params: &Params<f64>) -> Result<ZetaRatioProbe> {
    let z = |s| twisted_z(n, s, 1, params, TwistedRoute::Rows).map(|t| t.value);
    Ok(ZetaRatioProbe {
        canonical: twisted_z(n, s, 0, params, TwistedRoute::Rows)?.value.re,
        ratio: z(s)? / z(s - 1.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::canonical_z;

    const ZETA2: f64 = 1.644_934_066_848_226_4;
    const ZETA3: f64 = 1.202_056_903_159_594_3;

    #[test]
    fn sieve_values() {
        let s = Sieve::new(100);
        let phi: Vec<u64> = (1..=12).map(|n| s.phi(n)).collect();
        assert_eq!(phi, [1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]);
        let mu: Vec<i64> = (1..=12).map(|n| s.mobius(n)).collect();
        assert_eq!(mu, [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]);
        // beyond the limit
        assert_eq!(s.phi(1_000_003), 1_000_002);
        assert_eq!(s.phi(101 * 103), 100 * 102);
        assert_eq!(s.mobius(101 * 103), 1);
        assert_eq!(s.mobius(4 * 101), 0);
        let shared = Sieve::shared();
        for n in 1..=3000 {
            assert_eq!(shared.phi(n), (1..=n).filter(|p| p.gcd(&n) == 1).count() as u64);
        }
    }

    #[test]
    fn special_cases() {
        let sieve = Sieve::shared();
        for q in 1..=100 {
            assert_eq!(mu_twisted(1, q, MuMethod::Direct).unwrap(), sieve.mobius(q));
            assert_eq!(mu_twisted(0, q, MuMethod::Direct).unwrap(), sieve.phi(q) as i64);
        }
        assert_eq!(mu_twisted(2, 4, MuMethod::Direct).unwrap(), -2);
        assert_eq!(mu_twisted(2, 4, MuMethod::Closed).unwrap(), -2);
        assert!(mu_twisted(1, 0, MuMethod::Closed).is_err());
    }

    #[test]
    fn closed_equals_direct() {
        for m in -20..=20 {
            for q in (1..=2000).step_by(7) {
                assert_eq!(
                    mu_twisted(m, q, MuMethod::Closed).unwrap(),
                    mu_twisted(m, q, MuMethod::Direct).unwrap(),
                    "m={m} q={q}"
                );
            }
        }
    }

    #[test]
    fn symmetry_and_multiplicativity() {
        for m in 0..=50 {
            for q in 1..=1000 {
                assert_eq!(mu_twisted(m, q, MuMethod::Closed), mu_twisted(-m, q, MuMethod::Closed));
            }
        }
        for m in [1i64, 2, 6, 12] {
            for a in 1..=100u64 {
                for b in 1..=100u64 {
                    if a.gcd(&b) == 1 {
                        let ab = mu_twisted(m, a * b, MuMethod::Closed).unwrap();
                        let prod = mu_twisted(m, a, MuMethod::Closed).unwrap() * mu_twisted(m, b, MuMethod::Closed).unwrap();
                        assert_eq!(ab, prod);
                    }
                }
            }
        }
    }

    #[test]
    fn totient_ratio_bound() {
        let sieve = Sieve::shared();
        for m in 1..=20u64 {
            for q in 1..=10_000 {
                let reduced = q / m.gcd(&q);
                assert!(sieve.phi(q) / sieve.phi(reduced) <= m);
            }
        }
    }

    #[test]
    fn dirichlet_constants() {
        let d = dirichlet_partial(1, 2.0, 100_000).unwrap();
        assert!((d.value - 1.0 / ZETA2).abs() < 1e-4);
        assert!(d.tail_bound <= 1e-4);
        let d = dirichlet_partial(0, 3.0, 100_000).unwrap();
        assert!((d.value - ZETA2 / ZETA3).abs() < 1e-4);
        assert!(dirichlet_partial(0, 1.5, 100).unwrap().tail_bound.is_infinite());
    }

    #[test]
    fn twisted_sum_routes() {
        for r in [0.0, 0.5, 1.0, 1.4] {
            let p = Params::new(r).unwrap();
            for m in [-2, 0, 1, 3] {
                for n in [1, 5, 12] {
                    let a = twisted_z(n, 1.7, m, &p, TwistedRoute::Rows).unwrap().value;
                    let b = twisted_z(n, 1.7, m, &p, TwistedRoute::Transfer).unwrap().value;
                    assert!((a - b).norm() < 1e-11 * a.norm().max(1.0), "r={r} m={m} n={n}");
                    if m == 0 {
                        assert!((a.re - canonical_z(n, 1.7, &p).unwrap()).abs() < 1e-12 * a.re);
                        assert!(a.im.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn farey_inverse_zeta() {
        let p = Params::new(1.0).unwrap();
        let z = twisted_z(24, 6.0, 1, &p, TwistedRoute::Rows).unwrap();
        let expect = 945.0 / PI.powi(6);
        assert!((z.value.re - expect).abs() < 1e-3);
        assert!(z.value.im.abs() < 1e-3);
    }

    #[test]
    fn ratio_probe_at_the_farey_point() {
        let probe = zeta_ratio_probe(24, 4.0, &Params::new(1.0).unwrap()).unwrap();
        assert!((probe.canonical - probe.ratio.re).abs() < 1e-2);
    }
}
