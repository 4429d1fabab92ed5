//! Iterates, traces and spectral data of the generalized transfer operator
//!
//! ```text
//! (P_{s,r} f)(x) = ρ^s (ρ + rx)^{-2s} [f(Φ_0 x) + f(Φ_1 x)].
//! ```
//!
//! Each closed leaf-sum formula has an independent brute-force counterpart
//! (summation over branch words, or fixed points found by bisection) so the
//! two can be compared.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::coding::SpinWord;
use crate::error::{Error, Result};
use crate::numerics::{inverse_branch_unchecked, involution_s, Params};
use crate::sum::{par_index_sum, par_leaf_sum, par_word_fold, ComplexSum};
use crate::tree::{spin_recursion, Mat2};

/// Largest `n` for direct summation over the `2^n` branch words.
pub const BRUTE_FORCE_CAP: u32 = 20;
/// Largest `n` for streamed leaf sums.
pub const STREAM_CAP: u32 = 32;
/// Largest `k` for the tabulated formula of [`iterate_general`].
pub const GENERAL_CAP: u32 = 22;

/// Weight `s`, parameter `r` and iterate count `n` of a transfer-operator evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferQuery {
    pub s: Complex64,
    pub n: u32,
    params: Params<f64>,
}

impl TransferQuery {
    pub fn new(s: impl Into<Complex64>, r: f64, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                domain: "n >= 1",
            });
        }
        Ok(TransferQuery {
            s: s.into(),
            n,
            params: Params::new(r)?,
        })
    }

    pub fn params(&self) -> &Params<f64> {
        &self.params
    }

    pub fn r(&self) -> f64 {
        *self.params.r()
    }

    pub fn rho(&self) -> f64 {
        *self.params.rho()
    }

    pub fn with_n(&self, n: u32) -> TransferQuery {
        TransferQuery { n, ..self.clone() }
    }

    pub fn with_s(&self, s: Complex64) -> TransferQuery {
        TransferQuery { s, ..self.clone() }
    }
}

/// `b^e` for `b > 0` on the principal branch.
fn cpow(base: f64, e: Complex64) -> Complex64 {
    (e * base.ln()).exp()
}

/// The character `e_m(x) = exp(2πimx)`.
pub fn character(m: i64, x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * m as f64 * x)
}

fn cap(what: &'static str, requested: u32, cap: u32) -> Result<()> {
    if requested > cap {
        Err(Error::CapExceeded {
            what,
            requested: requested as usize,
            cap: cap as usize,
        })
    } else {
        Ok(())
    }
}

fn require_trace_class(q: &TransferQuery, operation: &'static str) -> Result<()> {
    q.params.require_r_below(operation, 1.0, false)
}

/// `(P^n f)(x)` by summing over all `2^n` compositions of inverse branches.
pub fn apply_bruteforce<F>(f: F, x: f64, q: &TransferQuery) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    cap("brute-force iterate n", q.n, BRUTE_FORCE_CAP)?;
    let (r, rho) = (q.r(), q.rho());
    let sum: ComplexSum = par_word_fold(
        q.n,
        (x, 0.0f64),
        |&(y, log_w), b| {
            let den = rho + r * y;
            (inverse_branch_unchecked(&y, &q.params, b), log_w + (rho / (den * den)).ln())
        },
        |_, &(y, log_w)| (q.s * log_w).exp() * f(y),
    );
    Ok(sum.value())
}

/// `(P^n 1)(x) = 2ρ^{ns} Σ |prx + ρq|^{-2s}` over the Stern–Brocot row `R_n`.
///
/// `R_1 = {1/1}` and, for `n ≥ 2`, `R_n` is row `n - 1` of the tree together
/// with its image under `Ŝ_r`. The sum streams over matrix presentations.
pub fn iterate_one(x: f64, q: &TransferQuery) -> Result<Complex64> {
    cap("iterate n", q.n, STREAM_CAP)?;
    let (r, rho, s) = (q.r(), q.rho(), q.s);
    let weight = |p: f64, qq: f64| cpow((p * r * x + rho * qq).abs(), -2.0 * s);
    let prefactor = 2.0 * cpow(rho, s * q.n as f64);
    if q.n == 1 {
        return Ok(prefactor * weight(1.0, 1.0));
    }
    // Ŝ X_σ̄ (1,1) = R M_σ (1,1), so the reflected half is walked from R
    // with nonnegative entries for every r.
    let (l, rm) = (Mat2::l(&q.params), Mat2::r(&q.params));
    let sum: ComplexSum = par_word_fold(
        q.n - 2,
        (l.clone(), rm.clone()),
        |(x, y): &(Mat2<f64>, Mat2<f64>), b| {
            let m = if b == 0 { &l } else { &rm };
            (x.mul(m), y.mul(m))
        },
        |_, (x, y)| {
            let ((p, qq), (pr, qr)) = (x.at_one(), y.at_one());
            weight(p, qq) + weight(pr, qr)
        },
    );
    Ok(prefactor * sum.value())
}

/// `(P^n e_m)(x)` with `e_m(x) = exp(2πimx)`.
///
/// Each leaf carries `(p, q, μ, ν)`; its two terms have denominator
/// `prx + ρq` and numerators `n_0 = μx + ρν`, `n_1 = prx + ρq − n_0`.
/// Starting from `(1, 1, 1, 0)`, a step through `Φ_0` maps
/// `(p, q, μ, ν) ↦ (p + ρq, ρq, μ + rρν, ρν)` and a step through `Φ_1` maps it to
/// `((r-1)p + ρq, rp + ρq, (r-1)μ + rρν, μ + ρν)`.
pub fn iterate_character(x: f64, q: &TransferQuery, m: i64) -> Result<Complex64> {
    cap("iterate n", q.n, STREAM_CAP)?;
    let (r, rho, s) = (q.r(), q.rho(), q.s);
    let sum: ComplexSum = par_word_fold(
        q.n - 1,
        [1.0f64, 1.0, 1.0, 0.0],
        |&[p, qq, mu, nu], b| {
            if b == 0 {
                [p + rho * qq, rho * qq, mu + r * rho * nu, rho * nu]
            } else {
                [(r - 1.0) * p + rho * qq, r * p + rho * qq, (r - 1.0) * mu + r * rho * nu, mu + rho * nu]
            }
        },
        |_, &[p, qq, mu, nu]| {
            let den = p * r * x + rho * qq;
            let n0 = mu * x + rho * nu;
            let n1 = den - n0;
            cpow(den.abs(), -2.0 * s) * (character(m, n0 / den) + character(m, n1 / den))
        },
    );
    Ok(cpow(rho, s * q.n as f64) * sum.value())
}

/// `(P^{k+1} f)(x)` for `x ∈ [0, 1]` from the `G_k`-indexed formula
///
/// ```text
/// ½ρ^{-(k+1)s} (P^{k+1} f)(x)
///   = Σ_σ ½ Σ_i (q_k(σ) − (1−x) t(σ,i))^{-2s} f((p_k(σ) − (1−x) s(σ,i)) / (q_k(σ) − (1−x) t(σ,i))),
/// ```
///
/// where `s = s_{k+1}`, `t = t_{k+1}` follow the recursion of `p`, `q`
/// started from `s_0 = 1`, `t_0 = 0`. For `r > 1`, where `q − (1−x)t`
/// cancels near `x = 0`, the sum runs over branch-matrix products instead.
pub fn iterate_general<F>(f: F, x: f64, s: Complex64, params: &Params<f64>, k: u32) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    cap("iterate_general k", k, GENERAL_CAP)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    if *params.r() > 1.0 {
        return Ok(iterate_branch_products(&f, x, s, params, k + 1));
    }
    let (p, q) = spin_recursion(k, params, 1.0, 2.0);
    let (sk, tk) = spin_recursion(k + 1, params, 1.0, 0.0);
    let y = 1.0 - x;
    let sum: ComplexSum = par_index_sum(p.len(), |sigma| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            let idx = (sigma << 1) | i;
            let den = q[sigma] - y * tk[idx];
            let num = p[sigma] - y * sk[idx];
            acc += cpow(den.abs(), -2.0 * s) * f(num / den);
        }
        acc
    });
    Ok(cpow(*params.rho(), s * (k + 1) as f64) * sum.value())
}

/// `ρ^{ns} Σ_σ (cx + d)^{-2s} f((ax + b)/(cx + d))` over products of the
/// branch matrices. For `r > 1` every entry is nonnegative.
fn iterate_branch_products<F>(f: &F, x: f64, s: Complex64, params: &Params<f64>, n: u32) -> Complex64
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let branches = [Mat2::branch(params, 0), Mat2::branch(params, 1)];
    let sum: ComplexSum = par_word_fold(
        n,
        Mat2::new(1.0, 0.0, 0.0, 1.0),
        |m: &Mat2<f64>, b| m.mul(&branches[b as usize]),
        |_, m| {
            let den = m.c * x + m.d;
            cpow(den, -2.0 * s) * f((m.a * x + m.b) / den)
        },
    );
    cpow(*params.rho(), s * n as f64) * sum.value()
}

/// Leaf data of the trace formula: `T_j` and `D_j = T_j^2 − (−1)^j 4ρ^n`.
fn trace_data(x: &Mat2<f64>, params: &Params<f64>) -> [(f64, f64); 2] {
    let y = x.mul(&Mat2::s(params));
    let det = x.det();
    // (a − d)^2 + 4bc avoids cancellation for the positive matrix X; XS has
    // negative determinant, so T_1^2 + 4ρ^n is already a sum of positives.
    let d0 = (x.a - x.d).powi(2) + 4.0 * x.b * x.c;
    let t1 = y.trace();
    [(x.trace(), d0), (t1, t1 * t1 + 4.0 * det)]
}

/// `trace(P^n_{s,r})`, or `trace(P̃^n_{s,r})` for the signed operator
/// `P̃ = P^{(0)} − P^{(1)}` when `signed` is set. Requires `r < 1`.
pub fn trace_power(q: &TransferQuery, signed: bool) -> Result<Complex64> {
    require_trace_class(q, "trace_power")?;
    cap("trace n", q.n, STREAM_CAP)?;
    let (s, n) = (q.s, q.n);
    let rho_ns = cpow(q.rho(), s * n as f64);
    let sum: ComplexSum = par_leaf_sum(n - 1, &q.params, |_, x| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, (t, d)) in trace_data(x, &q.params).into_iter().enumerate() {
            let root = d.sqrt();
            let term = cpow(2.0 / (t + root), 2.0 * s - 1.0) / root;
            acc += if signed && j == 1 { -term } else { term };
        }
        acc
    });
    Ok(rho_ns * sum.value())
}

/// `Ξ_n(s) = Σ_{F^n x = x} |(F^n)'(x)|^{-s}` from the leaf formula
/// `Σ_j 4^s ρ^{ns} / (T_j + √D_j)^{2s}`. Defined for every `r ∈ [0, 2)`.
pub fn periodic_sum_xi(q: &TransferQuery) -> Result<Complex64> {
    cap("xi n", q.n, STREAM_CAP)?;
    let (s, n) = (q.s, q.n);
    let scale = cpow(4.0, s) * cpow(q.rho(), s * n as f64);
    let sum: ComplexSum = par_leaf_sum(n - 1, &q.params, |_, x| {
        trace_data(x, &q.params)
            .into_iter()
            .map(|(t, d)| cpow(t + d.sqrt(), -2.0 * s))
            .sum()
    });
    Ok(scale * sum.value())
}

/// The composition `ψ_σ = Φ_{σ_1} ∘ … ∘ Φ_{σ_n}` and its signed derivative at `x`.
fn branch_composition(sigma: SpinWord, x: f64, params: &Params<f64>) -> (f64, f64) {
    let (r, rho) = (*params.r(), *params.rho());
    let mut y = x;
    let mut slope = 1.0;
    for i in (1..=sigma.len()).rev() {
        let b = sigma.get(i);
        let den = rho + r * y;
        let d = rho / (den * den);
        slope *= if b == 0 { d } else { -d };
        y = inverse_branch_unchecked(&y, params, b);
    }
    (y, slope)
}

/// Fixed point of `ψ_σ` in `[0, 1]` by bisection on `ψ_σ(x) − x`.
fn branch_fixed_point(sigma: SpinWord, params: &Params<f64>) -> f64 {
    let g = |x: f64| branch_composition(sigma, x, params).0 - x;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if g(lo) == 0.0 {
        return lo;
    }
    if g(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fixed-point data `(|ψ'(x̄)|, ψ'(x̄))` of every branch word of length `n`.
fn periodic_orbit_slopes(q: &TransferQuery) -> Result<Vec<f64>> {
    cap("fixed-point oracle n", q.n, BRUTE_FORCE_CAP)?;
    Ok(SpinWord::all(q.n)
        .map(|sigma| {
            let x = branch_fixed_point(sigma, &q.params);
            branch_composition(sigma, x, &q.params).1
        })
        .collect())
}

/// `Σ_σ (±1)^{|σ|} |ψ_σ'(x̄)|^s / (1 − ψ_σ'(x̄))` with fixed points found by bisection.
pub fn trace_bruteforce(q: &TransferQuery, signed: bool) -> Result<Complex64> {
    require_trace_class(q, "trace_bruteforce")?;
    let slopes = periodic_orbit_slopes(q)?;
    let mut acc = ComplexSum::default();
    for (i, d) in slopes.iter().enumerate() {
        let sign = if signed && SpinWord::new(i as u64, q.n).weight() % 2 == 1 { -1.0 } else { 1.0 };
        acc.add(sign * cpow(d.abs(), q.s) / (1.0 - d));
    }
    Ok(acc.value())
}

/// `Σ_σ |ψ_σ'(x̄)|^s`, the periodic-point sum by root finding.
pub fn xi_bruteforce(q: &TransferQuery) -> Result<Complex64> {
    let slopes = periodic_orbit_slopes(q)?;
    Ok(slopes.iter().map(|d| cpow(d.abs(), q.s)).collect::<ComplexSum>().value())
}

/// `trace(P_{s,r})` in closed form: `ρ^{1-s}/(ρ-1) + ρ^s/√(1+4ρ) · (2/(1+√(1+4ρ)))^{2s-1}`.
pub fn trace_closed_form(s: Complex64, params: &Params<f64>) -> Result<Complex64> {
    params.require_r_below("trace_closed_form", 1.0, false)?;
    let rho = *params.rho();
    let u = (1.0 + 4.0 * rho).sqrt();
    Ok(cpow(rho, 1.0 - s) / (rho - 1.0) + cpow(rho, s) / u * cpow(2.0 / (1.0 + u), 2.0 * s - 1.0))
}

/// Leading eigenvalues `μ_k = ρ^{-(s+k)}` and `ν_k = (−1)^k θ^{s+k}`,
/// `θ = 4ρ/(1 + √(1+4ρ))^2`, of the two operators whose sum is `P_{s,r}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MnSpectra {
    pub mu: Vec<Complex64>,
    pub nu: Vec<Complex64>,
    /// `Σ_k μ_k = ρ^{1-s}/(ρ-1)`.
    pub mu_sum: Complex64,
    /// `Σ_k ν_k = θ^s/(1+θ)`.
    pub nu_sum: Complex64,
}

pub fn mn_spectra(s: Complex64, params: &Params<f64>, count: usize) -> Result<MnSpectra> {
    params.require_r_below("mn_spectra", 1.0, false)?;
    let rho = *params.rho();
    let theta = 4.0 * rho / (1.0 + (1.0 + 4.0 * rho).sqrt()).powi(2);
    let mu = (0..count).map(|k| cpow(rho, -(s + k as f64))).collect();
    let nu = (0..count)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * cpow(theta, s + k as f64)
        })
        .collect();
    Ok(MnSpectra {
        mu,
        nu,
        mu_sum: cpow(rho, 1.0 - s) / (rho - 1.0),
        nu_sum: cpow(theta, s) / (1.0 + theta),
    })
}

/// Taylor coefficients `c_0 = 1, …, c_N` of `det(1 − zP)` from the traces
/// `τ_n = trace(P^n)` by Newton's identities `c_n = −(1/n) Σ_k c_{n−k} τ_k`.
pub fn determinant_coefficients(traces: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for n in 1..=traces.len() {
        let acc: Complex64 = (1..=n).map(|k| c[n - k] * traces[k - 1]).sum();
        c.push(-acc / n as f64);
    }
    c
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &ci| acc * z + ci)
}

/// Truncated Fredholm determinant and dynamical zeta function at one `(z, s)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FredholmZeta {
    /// `det(1 − zP_s)`.
    pub det: Complex64,
    /// `exp(Σ_{n≤N} z^n Ξ_n/n)`.
    pub zeta_exp: Complex64,
    /// `det(1 − zP̃_{s+1}) / det(1 − zP_s)`.
    pub zeta_ratio: Complex64,
    /// Geometric estimate of the omitted terms of the exponential form.
    pub tail_estimate: f64,
    pub truncation: u32,
}

impl FredholmZeta {
    pub fn truncation_ok(&self, tol: f64) -> bool {
        self.tail_estimate <= tol
    }
}

/// Traces `trace(P^n)` (or of the signed operator) for `n = 1..=n_max`.
pub fn trace_sequence(s: Complex64, params: &Params<f64>, n_max: u32, signed: bool) -> Result<Vec<Complex64>> {
    (1..=n_max)
        .map(|n| trace_power(&TransferQuery::new(s, *params.r(), n)?, signed))
        .collect()
}

pub fn fredholm_and_zeta(z: Complex64, s: Complex64, params: &Params<f64>, n_max: u32) -> Result<FredholmZeta> {
    params.require_r_below("fredholm_and_zeta", 1.0, false)?;
    let plain = trace_sequence(s, params, n_max, false)?;
    let signed = trace_sequence(s + 1.0, params, n_max, true)?;
    let det = horner(&determinant_coefficients(&plain), z);
    let det_signed = horner(&determinant_coefficients(&signed), z);
    let xi: Vec<Complex64> = (1..=n_max)
        .map(|n| periodic_sum_xi(&TransferQuery::new(s, *params.r(), n)?))
        .collect::<Result<_>>()?;
    let mut exponent = ComplexSum::default();
    let mut zn = Complex64::new(1.0, 0.0);
    for (i, x) in xi.iter().enumerate() {
        zn *= z;
        exponent.add(zn * x / (i + 1) as f64);
    }
    let tail_estimate = match xi.len() {
        0 => f64::INFINITY,
        1 => f64::INFINITY,
        len => {
            let ratio = (xi[len - 1].norm() / xi[len - 2].norm()) * z.norm();
            let next = (zn * z).norm() * xi[len - 1].norm() / (len + 1) as f64;
            if ratio < 1.0 {
                next / (1.0 - ratio)
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(FredholmZeta {
        det,
        zeta_exp: exponent.value().exp(),
        zeta_ratio: det_signed / det,
        tail_estimate,
        truncation: n_max,
    })
}

/// A zero of the truncated `det(1 − zP_s)` by Newton's method from `z0`.
pub fn determinant_zero(s: Complex64, params: &Params<f64>, n_max: u32, z0: Complex64) -> Result<Complex64> {
    let c = determinant_coefficients(&trace_sequence(s, params, n_max, false)?);
    let dc: Vec<Complex64> = c.iter().enumerate().skip(1).map(|(i, ci)| ci * i as f64).collect();
    let mut z = z0;
    for _ in 0..100 {
        let step = horner(&c, z) / horner(&dc, z);
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence {
        operation: "determinant_zero",
        estimate: z.re,
        error: horner(&c, z).norm(),
    })
}

/// Estimate of the spectral radius `λ_{s,r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub error: f64,
    pub method: &'static str,
}

/// Chebyshev collocation of `P_{s,r}` on `[0, 1]`.
struct Collocation {
    size: usize,
    matrix: Vec<f64>,
}

impl Collocation {
    fn nodes(size: usize) -> Vec<f64> {
        let deg = (size - 1) as f64;
        (0..size).map(|j| 0.5 * (1.0 - (PI * j as f64 / deg).cos())).collect()
    }

    fn new(s: f64, params: &Params<f64>, size: usize) -> Self {
        let (r, rho) = (*params.r(), *params.rho());
        let nodes = Self::nodes(size);
        let weights: Vec<f64> = (0..size)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == size - 1 {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        let mut matrix = vec![0.0; size * size];
        for (i, &x) in nodes.iter().enumerate() {
            let den = rho + r * x;
            let c = (rho / (den * den)).powf(s);
            for b in 0..2 {
                let y = inverse_branch_unchecked(&x, params, b);
                let row = &mut matrix[i * size..(i + 1) * size];
                if let Some(j) = nodes.iter().position(|&xj| xj == y) {
                    row[j] += c;
                    continue;
                }
                let terms: Vec<f64> = nodes.iter().zip(&weights).map(|(&xj, &wj)| wj / (y - xj)).collect();
                let total: f64 = terms.iter().sum();
                for (j, t) in terms.iter().enumerate() {
                    row[j] += c * t / total;
                }
            }
        }
        Collocation { size, matrix }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks(self.size)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Power iteration from the constant function; returns the eigenvalue and
    /// the eigenvector normalized to 1 at `x = 1`.
    fn leading(&self) -> (f64, Vec<f64>) {
        let mut v = vec![1.0; self.size];
        let mut lambda = f64::NAN;
        for _ in 0..50_000 {
            let w = self.apply(&v);
            let next = w.iter().sum::<f64>() / v.iter().sum::<f64>();
            let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            v = w.into_iter().map(|x| x / norm).collect();
            if (next - lambda).abs() <= 4.0 * f64::EPSILON * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        let end = v[self.size - 1];
        (lambda, v.into_iter().map(|x| x / end).collect())
    }
}

const COLLOCATION_SIZES: [usize; 2] = [72, 104];

/// `λ_{s,r}` for real `s` and `r < 1` by Chebyshev collocation and power
/// iteration; the error bar is the change between two resolutions.
pub fn spectral_radius(s: f64, params: &Params<f64>, tol: f64) -> Result<SpectralEstimate> {
    params.require_r_below("spectral_radius", 1.0, false)?;
    if *params.r() == 0.0 {
        return Ok(SpectralEstimate {
            value: 2f64.powf(1.0 - s),
            error: 0.0,
            method: "exact",
        });
    }
    let [coarse, fine] = COLLOCATION_SIZES.map(|n| Collocation::new(s, params, n).leading().0);
    let error = (fine - coarse).abs();
    if error > tol {
        return Err(Error::NoConvergence {
            operation: "spectral_radius",
            estimate: fine,
            error,
        });
    }
    Ok(SpectralEstimate {
        value: fine,
        error,
        method: "chebyshev",
    })
}

/// The leading eigenfunction of `P_{s,r}` at the collocation nodes, normalized to 1 at `x = 1`.
pub fn leading_eigenfunction(s: f64, params: &Params<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    params.require_r_below("leading_eigenfunction", 1.0, false)?;
    let size = COLLOCATION_SIZES[1];
    let (_, v) = Collocation::new(s, params, size).leading();
    Ok((Collocation::nodes(size), v))
}

/// Largest iterate count for [`log_weighted_iterates`].
pub const COLLOCATION_ITERATE_CAP: u32 = 4096;

/// `log(ρ^{-ks} (P^k_{s,r} 1)(1))` for `k = 0..=n`, iterating the collocation
/// matrix on the constant function. Real `s`, `r ∈ [0, 1]`.
pub fn log_weighted_iterates(s: f64, params: &Params<f64>, n: u32) -> Result<Vec<f64>> {
    params.require_r_below("log_weighted_iterates", 1.0, true)?;
    cap("collocation iterate n", n, COLLOCATION_ITERATE_CAP)?;
    let size = COLLOCATION_SIZES[1];
    let op = Collocation::new(s, params, size);
    let log_rho_s = s * params.rho().ln();
    let mut v = vec![1.0f64; size];
    let mut log_scale = 0.0f64;
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        out.push(log_scale + v[size - 1].ln() - k as f64 * log_rho_s);
        if k < n {
            let w = op.apply(&v);
            let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            log_scale += norm.ln();
            v = w.into_iter().map(|x| x / norm).collect();
        }
    }
    Ok(out)
}

/// `λ_{s,r}` from the ratios `a_{n+1}/a_n`, `a_n = (P^n 1)(1)`, with Aitken's Δ².
///
/// Stops once two consecutive extrapolated values differ by less than `tol`.
pub fn spectral_radius_ratio(s: f64, params: &Params<f64>, tol: f64, n_cap: u32) -> Result<SpectralEstimate> {
    params.require_r_below("spectral_radius_ratio", 1.0, false)?;
    let a = |n: u32| -> Result<f64> { Ok(iterate_one(1.0, &TransferQuery::new(s, *params.r(), n)?)?.re) };
    let mut ratios = Vec::new();
    let mut prev_a = a(1)?;
    let mut last = f64::NAN;
    let mut last_err = f64::INFINITY;
    for n in 2..=n_cap.min(STREAM_CAP) {
        let cur = a(n)?;
        ratios.push(cur / prev_a);
        prev_a = cur;
        let m = ratios.len();
        if m >= 3 {
            let (x0, x1, x2) = (ratios[m - 3], ratios[m - 2], ratios[m - 1]);
            let denom = x2 - 2.0 * x1 + x0;
            let acc = if denom.abs() > f64::MIN_POSITIVE { x2 - (x2 - x1).powi(2) / denom } else { x2 };
            last_err = (acc - last).abs();
            last = acc;
            if last_err < tol {
                return Ok(SpectralEstimate {
                    value: acc,
                    error: last_err,
                    method: "power-ratio",
                });
            }
        } else {
            last = ratios[m - 1];
        }
    }
    Err(Error::NoConvergence {
        operation: "spectral_radius_ratio",
        estimate: last,
        error: last_err,
    })
}

/// `max |I h − h| / |h|` over `grid`, where `(I f)(x) = f(Ŝ_r x) / (rx + 1 − r)^{2s}`.
pub fn involution_defect<F: Fn(f64) -> f64>(h: F, s: f64, params: &Params<f64>, grid: &[f64]) -> Result<f64> {
    let r = *params.r();
    let mut worst = 0.0f64;
    for &x in grid {
        let image = involution_s(&x, params)?;
        let ih = h(image) / (r * x + 1.0 - r).powf(2.0 * s);
        let hx = h(x);
        worst = worst.max((ih - hx).abs() / hx.abs());
    }
    Ok(worst)
}

/// Involution defect of `h_n = P^n 1 / (P^n 1)(1)`, the `n`-th power iterate.
pub fn involution_residual(s: f64, params: &Params<f64>, grid: &[f64], n: u32) -> Result<f64> {
    params.require_r_below("involution_residual", 1.0, false)?;
    let q = TransferQuery::new(s, *params.r(), n)?;
    let norm = iterate_one(1.0, &q)?.re;
    let h = |x: f64| iterate_one(x, &q).map(|v| v.re / norm).unwrap_or(f64::NAN);
    involution_defect(h, s, params, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::invariant_density;
    use crate::tree::extended_row;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn brute_force_examples() {
        for n in 1..8 {
            let q = TransferQuery::new(0.7, 0.0, n).unwrap();
            let v = apply_bruteforce(|_| c(1.0), 0.3, &q).unwrap();
            assert!(rel(v, c(2f64.powf(n as f64 * 0.3))) < 1e-14);
        }
        let q = TransferQuery::new(1.3, 0.4, 1).unwrap();
        let x = 0.8;
        let v = apply_bruteforce(|_| c(1.0), x, &q).unwrap();
        let expect = 2.0 * 1.6f64.powf(1.3) / (0.4 * x + 1.6f64).powf(2.6);
        assert!(rel(v, c(expect)) < 1e-14);
        assert!(apply_bruteforce(|_| c(1.0), x, &TransferQuery::new(1.0, 0.4, 21).unwrap()).is_err());
    }

    #[test]
    fn iterate_one_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let n = rng.gen_range(1..=12);
            let r = rng.gen_range(0.0..1.9);
            let s = Complex64::new(rng.gen_range(-0.5..2.5), rng.gen_range(-1.0..1.0));
            let x = rng.gen_range(0.0..1.5);
            let q = TransferQuery::new(s, r, n).unwrap();
            let closed = iterate_one(x, &q).unwrap();
            let brute = apply_bruteforce(|_| c(1.0), x, &q).unwrap();
            assert!(rel(closed, brute) < 1e-11, "n={n} r={r} s={s} x={x}");
        }
    }

    #[test]
    fn iterate_one_uses_the_extended_rows() {
        let p = Params::new(0.6).unwrap();
        let (r, rho, s, x) = (0.6f64, 1.4f64, 0.9f64, 0.35f64);
        for n in 2..8 {
            let row = extended_row(n - 1, &p).unwrap();
            let sum: f64 = row.nodes.iter().map(|v| (v.p * r * x + rho * v.q).powf(-2.0 * s)).sum();
            let expect = 2.0 * rho.powf(n as f64 * s) * sum;
            let got = iterate_one(x, &TransferQuery::new(s, r, n).unwrap()).unwrap();
            assert!(rel(got, c(expect)) < 1e-13);
        }
    }

    #[test]
    fn character_iterates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let n = rng.gen_range(1..=10);
            let r = rng.gen_range(0.0..1.9);
            let s = Complex64::new(rng.gen_range(0.2..2.0), rng.gen_range(-0.5..0.5));
            let x = rng.gen_range(0.0..1.0);
            let m = rng.gen_range(-4..=4);
            let q = TransferQuery::new(s, r, n).unwrap();
            let closed = iterate_character(x, &q, m).unwrap();
            let brute = apply_bruteforce(|y| character(m, y), x, &q).unwrap();
            assert!((closed - brute).norm() <= 1e-11 * brute.norm().max(1.0), "n={n} r={r} m={m}");
            if m == 0 {
                assert!(rel(closed, iterate_one(x, &q).unwrap()) < 1e-12);
            }
        }
        // n = 1 in closed form
        let (r, s, x, m) = (0.3f64, 1.2f64, 0.45f64, 3);
        let rho = 2.0 - r;
        let den = r * x + rho;
        let expect = rho.powf(s) * (character(m, x / den) + character(m, ((r - 1.0) * x + rho) / den)) / den.powf(2.0 * s);
        let got = iterate_character(x, &TransferQuery::new(s, r, 1).unwrap(), m).unwrap();
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn general_iterates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Params::new(0.45).unwrap();
        for k in 0..=8 {
            let coef: [f64; 4] = rng.gen();
            let f = |y: f64| c(coef[0] + y * (coef[1] + y * (coef[2] - y * coef[3])));
            let s = Complex64::new(rng.gen_range(0.3..2.0), rng.gen_range(-0.3..0.3));
            let x: f64 = rng.gen();
            let closed = iterate_general(f, x, s, &p, k).unwrap();
            let brute = apply_bruteforce(f, x, &TransferQuery::new(s, 0.45, k + 1).unwrap()).unwrap();
            assert!(rel(closed, brute) < 1e-12, "k={k}");
        }
        // At x = 1 the weights are q_k(σ)^{-2s}.
        let (pk, qk) = spin_recursion(5, &p, 1.0, 2.0);
        let s = 0.8;
        let expect: f64 = qk.iter().zip(&pk).map(|(q, p)| q.powf(-2.0 * s) * (p / q).powi(2)).sum();
        let got = iterate_general(|y| c(y * y), 1.0, c(s), &p, 5).unwrap();
        assert!(rel(got * 0.5 * 1.55f64.powf(-6.0 * s), c(expect)) < 1e-13);
    }

    #[test]
    fn general_iterate_first_step() {
        let p = Params::new(0.7).unwrap();
        let (x, s) = (0.2f64, 1.1f64);
        let f = |y: f64| c(y.exp());
        let den = 1.3 + 0.7 * x;
        let expect = 1.3f64.powf(s) / den.powf(2.0 * s) * (f(x / den).re + f(1.0 - x / den).re);
        let got = iterate_general(f, x, c(s), &p, 0).unwrap();
        assert!(rel(got, c(expect)) < 1e-14);
    }

    #[test]
    fn trace_examples() {
        let q = TransferQuery::new(1.0, 0.0, 1).unwrap();
        assert!(rel(trace_power(&q, false).unwrap(), c(4.0 / 3.0)) < 1e-15);
        for r in [0.0, 0.2, 0.5, 0.9] {
            let p = Params::new(r).unwrap();
            for s in [0.5, 1.0, 2.0, 3.7] {
                let s = c(s);
                let closed = trace_closed_form(s, &p).unwrap();
                let t = trace_power(&TransferQuery::new(s, r, 1).unwrap(), false).unwrap();
                assert!(rel(t, closed) < 1e-12);
                let mn = mn_spectra(s, &p, 0).unwrap();
                assert!(rel(mn.mu_sum + mn.nu_sum, closed) < 1e-12);
            }
        }
        assert!(trace_power(&TransferQuery::new(1.0, 1.0, 2).unwrap(), false).is_err());
    }

    #[test]
    fn traces_match_fixed_points() {
        for r in [0.0, 0.5, 0.9] {
            for s in [0.5, 1.0, 2.0] {
                for n in 1..=8 {
                    let q = TransferQuery::new(s, r, n).unwrap();
                    for signed in [false, true] {
                        let closed = trace_power(&q, signed).unwrap();
                        let brute = trace_bruteforce(&q, signed).unwrap();
                        assert!(rel(closed, brute) < 1e-10, "r={r} s={s} n={n} signed={signed}");
                    }
                }
            }
        }
    }

    #[test]
    fn xi_identities() {
        let q = TransferQuery::new(0.8, 0.0, 1).unwrap();
        assert!(rel(periodic_sum_xi(&q).unwrap(), c(2.0 * 2f64.powf(-0.8))) < 1e-15);
        for n in 1..=8 {
            let q = TransferQuery::new(1.3, 0.5, n).unwrap();
            let xi = periodic_sum_xi(&q).unwrap();
            let diff = trace_power(&q, false).unwrap() - trace_power(&q.with_s(q.s + 1.0), true).unwrap();
            assert!(rel(xi, diff) < 1e-11);
            let farey = TransferQuery::new(1.3, 1.0, n).unwrap();
            assert!(rel(periodic_sum_xi(&farey).unwrap(), xi_bruteforce(&farey).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn trace_diverges_but_xi_does_not() {
        let mut last_trace = 0.0;
        let xi_farey = periodic_sum_xi(&TransferQuery::new(1.0, 1.0, 3).unwrap()).unwrap();
        for j in 2..=20 {
            let r = 1.0 - 2f64.powi(-j);
            let q = TransferQuery::new(1.0, r, 3).unwrap();
            let t = trace_power(&q, false).unwrap().re;
            assert!(t > last_trace);
            last_trace = t;
            let xi = periodic_sum_xi(&q).unwrap();
            assert!((xi - xi_farey).norm() < 10.0 * 2f64.powi(-j));
        }
        assert!(last_trace > 1e5);
    }

    #[test]
    fn mn_examples() {
        let p = Params::new(0.4).unwrap();
        let s = c(1.3);
        let mn = mn_spectra(s, &p, 60).unwrap();
        let rho = 1.6f64;
        assert!(rel(mn.mu[0], c(rho.powf(-1.3))) < 1e-15);
        let theta = 4.0 * rho / (1.0 + (1.0 + 4.0 * rho).sqrt()).powi(2);
        assert!(rel(mn.nu[0], c(theta.powf(1.3))) < 1e-15);
        let nu_sum: Complex64 = mn.nu.iter().sum();
        assert!(rel(nu_sum, mn.nu_sum) < 1e-12);
        let mn = mn_spectra(s, &p, 400).unwrap();
        let mu_sum: Complex64 = mn.mu.iter().sum();
        assert!(rel(mu_sum, mn.mu_sum) < 1e-12);
    }

    #[test]
    fn determinant_and_zeta() {
        let p = Params::new(0.5).unwrap();
        let at_zero = fredholm_and_zeta(c(0.0), c(1.0), &p, 14).unwrap();
        assert_eq!(at_zero.det, c(1.0));
        assert_eq!(at_zero.zeta_exp, c(1.0));
        assert!((at_zero.zeta_ratio - 1.0).norm() < 1e-15);
        for z in [c(0.1), c(-0.25), Complex64::new(0.15, 0.18), c(0.25)] {
            let fz = fredholm_and_zeta(z, c(1.0), &p, 14).unwrap();
            assert!((fz.zeta_exp - fz.zeta_ratio).norm() < 1e-9, "z={z}");
            assert!(fz.truncation_ok(1e-9));
        }
        for z in [c(0.5), c(-0.5), Complex64::new(0.0, 0.5)] {
            let fz = fredholm_and_zeta(z, c(1.0), &p, 14).unwrap();
            let gap = (fz.zeta_exp - fz.zeta_ratio).norm() / fz.zeta_ratio.norm();
            assert!(gap <= fz.tail_estimate, "z={z}: {gap} > {}", fz.tail_estimate);
            assert!(!fz.truncation_ok(1e-9));
        }
        let zero = determinant_zero(c(1.0), &p, 14, c(0.9)).unwrap();
        assert!((zero - 1.0).norm() < 1e-8, "{zero}");
    }

    #[test]
    fn zeta_series_coefficients_agree() {
        // log ζ = Σ z^n Ξ_n / n and log det ratio have the same Taylor coefficients.
        let p = Params::new(0.5).unwrap();
        let s = c(1.0);
        let plain = trace_sequence(s, &p, 10, false).unwrap();
        let signed = trace_sequence(s + 1.0, &p, 10, true).unwrap();
        for n in 1..=10u32 {
            let xi = periodic_sum_xi(&TransferQuery::new(s, 0.5, n).unwrap()).unwrap();
            let idx = (n - 1) as usize;
            assert!(rel(xi, plain[idx] - signed[idx]) < 1e-11);
        }
    }

    #[test]
    fn spectral_radius_examples() {
        for s in [0.3, 1.0, 1.7] {
            let est = spectral_radius(s, &Params::new(0.0).unwrap(), 1e-12).unwrap();
            assert!((est.value - 2f64.powf(1.0 - s)).abs() < 1e-12);
        }
        for r in [0.3, 0.6, 0.9] {
            let est = spectral_radius(1.0, &Params::new(r).unwrap(), 1e-10).unwrap();
            assert!((est.value - 1.0).abs() < 1e-10, "r={r}: {}", est.value);
        }
        let p = Params::new(0.5).unwrap();
        let values: Vec<f64> = (0..12).map(|i| spectral_radius(0.2 * i as f64, &p, 1e-10).unwrap().value).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(spectral_radius(1.0, &Params::new(1.0).unwrap(), 1e-8).is_err());
    }

    #[test]
    fn collocation_iterates_match_leaf_sums() {
        for r in [0.0f64, 0.4, 0.9, 1.0] {
            let p = Params::new(r).unwrap();
            let s = 0.7;
            let logs = log_weighted_iterates(s, &p, 16).unwrap();
            assert!(logs[0].abs() < 1e-15);
            for k in 1..=16u32 {
                let exact = iterate_one(1.0, &TransferQuery::new(s, r, k).unwrap()).unwrap().re;
                let expect = exact.ln() - k as f64 * s * (2.0 - r).ln();
                assert!((logs[k as usize] - expect).abs() < 1e-11, "r={r} k={k}");
            }
        }
    }

    #[test]
    fn ratio_method_agrees() {
        let p = Params::new(0.3).unwrap();
        let cheb = spectral_radius(0.8, &p, 1e-10).unwrap().value;
        let ratio = spectral_radius_ratio(0.8, &p, 1e-9, 24).unwrap();
        assert!((ratio.value - cheb).abs() < 1e-8, "{} vs {cheb}", ratio.value);
        let tent = spectral_radius_ratio(1.5, &Params::new(0.0).unwrap(), 1e-12, 10).unwrap();
        assert!((tent.value - 2f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn eigenfunction_at_s_one_is_the_density() {
        let p = Params::new(0.7).unwrap();
        let (nodes, v) = leading_eigenfunction(1.0, &p).unwrap();
        let d1 = invariant_density(1.0, &p).unwrap();
        for (x, h) in nodes.iter().zip(v) {
            assert!((h - invariant_density(*x, &p).unwrap() / d1).abs() < 1e-10);
        }
    }

    #[test]
    fn involution_examples() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let p = Params::new(0.5).unwrap();
        let dens = involution_defect(|x| 1.0 / (0.5 + 0.5 * x), 1.0, &p, &grid).unwrap();
        assert!(dens <= 1e-12);
        let tent = Params::new(0.0).unwrap();
        assert!(involution_residual(1.0, &tent, &grid, 6).unwrap() <= 1e-14);
        assert!(involution_residual(0.8, &p, &grid, 18).unwrap() <= 1e-5);
    }
}
