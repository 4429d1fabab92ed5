//! Canonical and grand-canonical partition functions of the spin chain with
//! energy `Q_k = log q_k`, free energy, magnetization and the critical line.
//!
//! ```text
//! Z^G_k(s) = Σ_{σ ∈ G_k} q_k(σ)^{-s},      Z^C_n(s) = 1 + Σ_{k<n} Z^G_k(s).
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::Params;
use crate::scalar::Field;
use crate::spinchain::{pc_qc_tables, FLOAT_TABLE_CAP};
use crate::sum::Neumaier;
use crate::transfer::{iterate_one, log_weighted_iterates, spectral_radius, TransferQuery, STREAM_CAP};
use crate::tree::spin_levels;

/// Largest `n` for which the rows route is used by default.
pub const ROW_ROUTE_CAP: u32 = FLOAT_TABLE_CAP + 1;
/// Largest `n` for the direct magnetization sum over `G_n`.
pub const MAGNETIZATION_DIRECT_CAP: u32 = 22;
/// Largest `r` for which [`critical_line`] bisects.
pub const CRITICAL_R_MAX: f64 = 0.97;

/// How a partition function is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZRoute {
    /// Sums of `q_k^{-s}` over tree rows.
    Rows,
    /// Iterates `(P^k 1)(1)` of the transfer operator at weight `s/2` from leaf sums.
    Transfer,
    /// Sum of `(q^c_n)^{-s}` over `G_n`.
    Complement,
    /// Iterates of the transfer operator from Chebyshev collocation.
    Spectral,
}

impl ZRoute {
    fn auto(n: u32) -> ZRoute {
        if n <= ROW_ROUTE_CAP {
            ZRoute::Rows
        } else {
            ZRoute::Spectral
        }
    }
}

/// `log Σ exp(l_i)` with `l = -∞` allowed.
fn log_sum_exp(logs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = logs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.into_iter().map(|l| (l - max).exp()).collect::<Neumaier>().value().ln()
}

/// `log Z^G_k(s)` for `k = 0..n`.
pub fn log_grand_z_sequence(n: u32, s: f64, params: &Params<f64>, route: ZRoute) -> Result<Vec<f64>> {
    let (rho, half) = (*params.rho(), 0.5 * s);
    match route {
        ZRoute::Rows => {
            if n > ROW_ROUTE_CAP {
                return Err(Error::CapExceeded {
                    what: "rows route n",
                    requested: n as usize,
                    cap: ROW_ROUTE_CAP as usize,
                });
            }
            let mut out = Vec::with_capacity(n as usize);
            if n > 0 {
                spin_levels(n - 1, params, 1.0, 2.0, |_, _, q| {
                    out.push(log_sum_exp(q.iter().map(|q| -s * q.ln())));
                });
            }
            Ok(out)
        }
        ZRoute::Transfer => (0..n)
            .map(|k| {
                let q = TransferQuery::new(half, *params.r(), k + 1)?;
                let v = iterate_one(1.0, &q)?.re;
                Ok(v.ln() - (k + 1) as f64 * half * rho.ln() - std::f64::consts::LN_2)
            })
            .collect(),
        ZRoute::Spectral => {
            let logs = log_weighted_iterates(half, params, n)?;
            Ok(logs[1..].iter().map(|l| l - std::f64::consts::LN_2).collect())
        }
        ZRoute::Complement => Err(Error::Domain {
            what: "route",
            value: 0.0,
            domain: "rows, transfer or spectral for single rows",
        }),
    }
}

/// `log Z^C_n(s)`.
pub fn log_canonical_z(n: u32, s: f64, params: &Params<f64>, route: ZRoute) -> Result<f64> {
    require_n(n)?;
    if route == ZRoute::Complement {
        let table = pc_qc_tables(n, params)?;
        return Ok(log_sum_exp(table.q.iter().map(|q| -s * q.ln())));
    }
    let logs = log_grand_z_sequence(n, s, params, route)?;
    Ok(log_sum_exp(std::iter::once(0.0).chain(logs)))
}

/// `Z^C_n(s)`, by rows for `n ≤` [`ROW_ROUTE_CAP`] and by collocation beyond.
pub fn canonical_z(n: u32, s: f64, params: &Params<f64>) -> Result<f64> {
    Ok(log_canonical_z(n, s, params, ZRoute::auto(n))?.exp())
}

/// `Z^C_n(s)` by the given route.
pub fn canonical_z_route(n: u32, s: f64, params: &Params<f64>, route: ZRoute) -> Result<f64> {
    Ok(log_canonical_z(n, s, params, route)?.exp())
}

/// `Z^G_k(s)`.
pub fn grand_z(k: u32, s: f64, params: &Params<f64>) -> Result<f64> {
    Ok(log_grand_z_sequence(k + 1, s, params, ZRoute::auto(k + 1))?[k as usize].exp())
}

fn require_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::Domain {
            what: "n",
            value: 0.0,
            domain: "n >= 1",
        })
    } else {
        Ok(())
    }
}

fn exact_cap(n: u32) -> Result<()> {
    let cap = crate::spinchain::EXACT_TABLE_CAP;
    if n > cap {
        return Err(Error::CapExceeded {
            what: "exact partition function n",
            requested: n as usize,
            cap: cap as usize,
        });
    }
    Ok(())
}

/// `Z^G_k(s)` for a nonnegative integer `s` in exact arithmetic.
pub fn grand_z_exact<T: Field>(k: u32, s: u32, params: &Params<T>) -> Result<T> {
    exact_cap(k)?;
    let (_, q) = spin_levels(k, params, T::one(), T::from_i64(2), |_, _, _| {});
    Ok(q.iter().fold(T::zero(), |acc, q| acc + T::one() / q.pow_u(s)))
}

/// `Z^C_n(s)` for a nonnegative integer `s` in exact arithmetic, summed over tree rows.
pub fn canonical_z_exact<T: Field>(n: u32, s: u32, params: &Params<T>) -> Result<T> {
    require_n(n)?;
    exact_cap(n)?;
    let mut total = T::one();
    spin_levels(n - 1, params, T::one(), T::from_i64(2), |_, _, q| {
        for q in q {
            total = total.clone() + T::one() / q.pow_u(s);
        }
    });
    Ok(total)
}

/// `Σ_{σ ∈ G_n} q^c_n(σ)^{-s}` in exact arithmetic.
pub fn canonical_z_complement_exact<T: Field>(n: u32, s: u32, params: &Params<T>) -> Result<T> {
    require_n(n)?;
    let table = pc_qc_tables(n, params)?;
    Ok(table.q.iter().fold(T::zero(), |acc, q| acc + T::one() / q.pow_u(s)))
}

/// `(2^s − 1 − 2^{n(1−s)}) / (2^s − 2)`, the canonical partition function at `r = 0`.
pub fn tent_canonical_z(n: u32, s: f64) -> f64 {
    let a = 2f64.powf(s);
    if (a - 2.0).abs() < 1e-300 {
        return 1.0 + 0.5 * n as f64;
    }
    (a - 1.0 - 2f64.powf(n as f64 * (1.0 - s))) / (a - 2.0)
}

/// Finite-size free energy `F_n = (1/n) log Z^C_n(s)` and its extrapolation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FreeEnergy {
    pub n: u32,
    pub value: f64,
    /// Richardson extrapolation in `1/n`, `log Z^C_n − log Z^C_{n−1}`.
    pub extrapolated: f64,
    /// Change of the extrapolated value from `n − 1` to `n`.
    pub error: f64,
}

pub fn free_energy(n: u32, s: f64, params: &Params<f64>) -> Result<FreeEnergy> {
    if n < 3 {
        return Err(Error::Domain {
            what: "n",
            value: n as f64,
            domain: "n >= 3",
        });
    }
    let logs = log_grand_z_sequence(n, s, params, ZRoute::auto(n))?;
    let log_zc = |m: usize| log_sum_exp(std::iter::once(0.0).chain(logs[..m].iter().copied()));
    let (l1, l2, l3) = (log_zc(n as usize), log_zc(n as usize - 1), log_zc(n as usize - 2));
    let extrapolated = l1 - l2;
    Ok(FreeEnergy {
        n,
        value: l1 / n as f64,
        extrapolated,
        error: (extrapolated - (l2 - l3)).abs(),
    })
}

fn magnetization_ratio(n: u32, logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(0.0f64, f64::max);
    let mut num = Neumaier::new();
    let mut den = Neumaier::new();
    num.add((-max).exp());
    den.add((-max).exp());
    for (m, l) in logs.iter().enumerate() {
        let w = (l - max).exp();
        num.add((n as f64 - m as f64 - 2.0) / n as f64 * w);
        den.add(w);
    }
    num.value() / den.value()
}

/// `M_n(s)` from `Z^C_n M_n = 1 + Σ_{m<n} (n − m − 2)/n · Z^G_m`.
pub fn magnetization(n: u32, s: f64, params: &Params<f64>) -> Result<f64> {
    require_n(n)?;
    let logs = log_grand_z_sequence(n, s, params, ZRoute::auto(n))?;
    Ok(magnetization_ratio(n, &logs))
}

/// `M_n(s)` as the canonical mean of `(1/n) Σ_k (−1)^{σ_k}` with weights `q^c_n(σ)^{-s}`.
pub fn magnetization_direct(n: u32, s: f64, params: &Params<f64>) -> Result<f64> {
    require_n(n)?;
    if n > MAGNETIZATION_DIRECT_CAP {
        return Err(Error::CapExceeded {
            what: "direct magnetization n",
            requested: n as usize,
            cap: MAGNETIZATION_DIRECT_CAP as usize,
        });
    }
    let table = pc_qc_tables(n, params)?;
    let mut num = Neumaier::new();
    let mut den = Neumaier::new();
    for (sigma, q) in table.q.iter().enumerate() {
        let w = q.powf(-s);
        let spin = n as f64 - 2.0 * (sigma as u64).count_ones() as f64;
        num.add(spin / n as f64 * w);
        den.add(w);
    }
    Ok(num.value() / den.value())
}

/// `log λ_{s/2,r} − (s/2) log ρ`, whose smallest positive zero is `s_cr(r)`.
pub fn critical_function(s: f64, params: &Params<f64>, tol: f64) -> Result<f64> {
    let lambda = spectral_radius(0.5 * s, params, tol)?;
    Ok(lambda.value.ln() - 0.5 * s * params.rho().ln())
}

/// `s_cr(r)` by bisection to within `tol`.
///
/// `r = 1` returns the endpoint value 2; `r ∈ (0.97, 1)` and `r > 1` are refused.
pub fn critical_line(params: &Params<f64>, tol: f64) -> Result<f64> {
    let r = *params.r();
    if r == 1.0 {
        return Ok(2.0);
    }
    if r > CRITICAL_R_MAX {
        return Err(Error::ParameterRange {
            operation: "critical_line",
            r,
            allowed: "[0, 0.97] or r = 1",
        });
    }
    let inner = (tol * 1e-3).max(1e-13);
    let g = |s: f64| critical_function(s, params, 1e-9);
    let (mut lo, mut hi) = (0.5, 3.0);
    let (g_lo, g_hi) = (g(lo)?, g(hi)?);
    if g_lo <= 0.0 || g_hi >= 0.0 {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > inner {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Samples of `r ↦ s_cr(r)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalCurve {
    pub samples: Vec<(f64, f64)>,
    pub tol: f64,
}

impl CriticalCurve {
    pub fn second_differences(&self) -> Vec<f64> {
        self.samples.windows(3).map(|w| w[2].1 - 2.0 * w[1].1 + w[0].1).collect()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 >= w[0].1 - self.tol)
    }

    pub fn is_convex(&self, slack: f64) -> bool {
        self.second_differences().iter().all(|d| *d >= -slack)
    }
}

/// `s_cr` on each `r` of `grid`, evaluated in parallel.
pub fn critical_curve(grid: &[f64], tol: f64) -> Result<CriticalCurve> {
    let samples = grid
        .par_iter()
        .map(|&r| Ok((r, critical_line(&Params::new(r)?, tol)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalCurve { samples, tol })
}

/// Constants `μ_± = (1 ± ε) λ_{s/2}/ρ^{s/2}` of the grand-canonical sandwich.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichConstants {
    pub lambda: f64,
    pub eps: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

/// Requires `s < s_cr(r)`; `ε = 0.4 (1 − ρ^{s/2}/λ_{s/2})`.
pub fn sandwich_constants(s: f64, params: &Params<f64>) -> Result<SandwichConstants> {
    let lambda = spectral_radius(0.5 * s, params, 1e-9)?.value;
    let ratio = lambda / params.rho().powf(0.5 * s);
    if ratio <= 1.0 {
        return Err(Error::Domain {
            what: "s",
            value: s,
            domain: "s < s_cr(r)",
        });
    }
    let eps = 0.4 * (1.0 - 1.0 / ratio);
    Ok(SandwichConstants {
        lambda,
        eps,
        mu_plus: (1.0 + eps) * ratio,
        mu_minus: (1.0 - eps) * ratio,
    })
}

/// Outcome of checking `μ_+^{l−n} Z^G_n ≤ Z^G_l ≤ μ_-^{l−n} Z^G_n` and
/// `Z^C_n ≥ (1 − μ_+^{-n})/(1 − μ_+^{-1}) Z^G_{n−1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub constants: SandwichConstants,
    pub pairs_checked: usize,
    pub violations: usize,
    pub canonical_violations: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.canonical_violations == 0
    }
}

/// Checks the sandwich for all `l ≤ n` with `n_min ≤ n ≤ n_max`.
pub fn sandwich_report(s: f64, params: &Params<f64>, n_min: u32, n_max: u32) -> Result<SandwichReport> {
    let constants = sandwich_constants(s, params)?;
    let logs = log_grand_z_sequence(n_max + 1, s, params, ZRoute::auto(n_max + 1))?;
    let (lp, lm) = (constants.mu_plus.ln(), constants.mu_minus.ln());
    let slack = 1e-12;
    let mut pairs = 0;
    let mut violations = 0;
    let mut canonical_violations = 0;
    for n in n_min..=n_max {
        for l in 0..=n {
            let d = l as f64 - n as f64;
            let (zl, zn) = (logs[l as usize], logs[n as usize]);
            pairs += 1;
            if d * lp + zn > zl + slack || zl > d * lm + zn + slack {
                violations += 1;
            }
        }
        let zc = log_sum_exp(std::iter::once(0.0).chain(logs[..n as usize].iter().copied()));
        let mp = constants.mu_plus;
        let factor = (1.0 - mp.powi(-(n as i32))) / (1.0 - 1.0 / mp);
        if zc + slack < factor.ln() + logs[n as usize - 1] {
            canonical_violations += 1;
        }
    }
    Ok(SandwichReport {
        constants,
        pairs_checked: pairs,
        violations,
        canonical_violations,
    })
}

/// Observables of the chain at one `(r, s, n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermoPoint {
    pub r: f64,
    pub s: f64,
    pub n: u32,
    /// `Z^C_n(s)`.
    pub zc: f64,
    /// `Z^G_{n−1}(s)`.
    pub zg: f64,
    /// `(1/n) log Z^C_n(s)`.
    pub free_energy: f64,
    /// Richardson estimate of the limiting free energy.
    pub free_energy_limit: f64,
    pub magnetization: f64,
    /// `λ_{s/2,r}` when `r < 1`.
    pub lambda: Option<f64>,
}

pub fn thermo_point(n: u32, s: f64, params: &Params<f64>) -> Result<ThermoPoint> {
    require_n(n)?;
    let logs = log_grand_z_sequence(n, s, params, ZRoute::auto(n))?;
    let log_zc = |m: usize| log_sum_exp(std::iter::once(0.0).chain(logs[..m].iter().copied()));
    let l = log_zc(n as usize);
    let limit = if n >= 2 { l - log_zc(n as usize - 1) } else { l };
    let lambda = if *params.r() < 1.0 {
        Some(spectral_radius(0.5 * s, params, 1e-8)?.value)
    } else {
        None
    };
    Ok(ThermoPoint {
        r: *params.r(),
        s,
        n,
        zc: l.exp(),
        zg: logs[n as usize - 1].exp(),
        free_energy: l / n as f64,
        free_energy_limit: limit,
        magnetization: magnetization_ratio(n, &logs),
        lambda,
    })
}

/// `Z^C_n(s)` against `2 Z^C_{n−1}(2s) = 1 + Σ_{k<n} ρ^{−ks} (P^k_{s} 1)(1)` evaluated by leaf sums.
pub fn transfer_identity_gap(n: u32, s: f64, params: &Params<f64>) -> Result<f64> {
    if n > STREAM_CAP {
        return Err(Error::CapExceeded {
            what: "transfer identity n",
            requested: n as usize,
            cap: STREAM_CAP as usize,
        });
    }
    let rows = canonical_z_route(n, s, params, ZRoute::Rows)?;
    let transfer = canonical_z_route(n, s, params, ZRoute::Transfer)?;
    Ok((rows - transfer).abs() / rows)
}
