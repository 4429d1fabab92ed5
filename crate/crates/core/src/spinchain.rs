//! The spin chain with energy `Q_k = log q_k` on `G_k`: denominator tables,
//! hypercube Fourier analysis, the polymer expansion of the Fourier
//! coefficients and the interaction coefficients.

use serde::Serialize;

use crate::coding::{mask, psi, SpinWord};
use crate::error::{Error, Result};
use crate::numerics::Params;
use crate::scalar::{Field, Ring};
use crate::tree::pq_recursion;

pub const FLOAT_TABLE_CAP: u32 = 26;
pub const EXACT_TABLE_CAP: u32 = 16;
pub const FOURIER_CAP: u32 = 24;

/// `p_k`, `q_k` (or `p^c_k`, `q^c_k`) over `G_k`, indexed by `σ.bits()`.
#[derive(Clone, Debug, PartialEq)]
pub struct PQTable<T> {
    pub k: u32,
    pub p: Vec<T>,
    pub q: Vec<T>,
}

impl<T> PQTable<T> {
    pub fn p_at(&self, sigma: SpinWord) -> &T {
        &self.p[sigma.bits() as usize]
    }

    pub fn q_at(&self, sigma: SpinWord) -> &T {
        &self.q[sigma.bits() as usize]
    }
}

fn check_table_cap<T: Ring>(k: u32) -> Result<()> {
    let cap = if T::EXACT { EXACT_TABLE_CAP } else { FLOAT_TABLE_CAP };
    if k > cap {
        return Err(Error::CapExceeded {
            what: "spin-chain length k",
            requested: k as usize,
            cap: cap as usize,
        });
    }
    Ok(())
}

/// Full tables of `p_k` and `q_k`.
pub fn pq_tables<T: Ring>(k: u32, params: &Params<T>) -> Result<PQTable<T>> {
    check_table_cap::<T>(k)?;
    let (p, q) = pq_recursion(k, params);
    Ok(PQTable { k, p, q })
}

/// Tables of `p^c_k`, `q^c_k` for `k ≥ 1`.
///
/// The last spin is appended: `(σ, 0)` copies the values of `σ`, and
/// `(σ, 1)` combines `σ` and `σ̄` with weights `ρ^{k - r(σ)}`, where `r(σ)` is
/// the position of the last up spin (0 for `σ = 0`).
pub fn pc_qc_tables<T: Ring>(k: u32, params: &Params<T>) -> Result<PQTable<T>> {
    if k == 0 {
        return Err(Error::Domain {
            what: "k",
            value: 0.0,
            domain: "k >= 1",
        });
    }
    check_table_cap::<T>(k)?;
    let mut p = vec![T::zero(), T::one()];
    let mut q = vec![T::one(), T::from_i64(2)];
    let rho_pows: Vec<T> = (0..=k).map(|j| params.rho_pow(j)).collect();
    for j in 1..k {
        let size = 1usize << j;
        let flip = size - 1;
        let weight = |sigma: usize| -> &T { &rho_pows[(sigma.trailing_zeros()).min(j) as usize] };
        let mut np = Vec::with_capacity(2 * size);
        let mut nq = Vec::with_capacity(2 * size);
        for sigma in 0..size {
            let bar = sigma ^ flip;
            let (w, wb) = (weight(sigma).clone(), weight(bar).clone());
            np.push(p[sigma].clone());
            nq.push(q[sigma].clone());
            np.push(w.clone() * p[sigma].clone() + wb.clone() * (q[bar].clone() - p[bar].clone()));
            nq.push(w * q[sigma].clone() + wb * q[bar].clone());
        }
        p = np;
        q = nq;
    }
    Ok(PQTable { k, p, q })
}

/// Coefficients `f̂(t) = 2^{-k} Σ_σ f(σ)(-1)^{σ·t}` over `G_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierTable<T> {
    pub k: u32,
    pub values: Vec<T>,
}

impl<T: Field> FourierTable<T> {
    pub fn at(&self, t: SpinWord) -> &T {
        &self.values[t.bits() as usize]
    }

    /// `f(σ) = Σ_t f̂(t)(-1)^{σ·t}`.
    pub fn inverse(&self) -> Vec<T> {
        let mut v = self.values.clone();
        walsh_hadamard(&mut v);
        v
    }
}

fn walsh_hadamard<T: Ring>(v: &mut [T]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (x, y) = (v[i].clone(), v[i + h].clone());
                v[i] = x.clone() + y.clone();
                v[i + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// Fast Walsh–Hadamard transform with the `2^{-k}` normalization.
pub fn fourier_transform<T: Field>(f: &[T]) -> Result<FourierTable<T>> {
    let n = f.len();
    if !n.is_power_of_two() {
        return Err(Error::Domain {
            what: "table length",
            value: n as f64,
            domain: "a power of two",
        });
    }
    let k = n.trailing_zeros();
    if k > FOURIER_CAP {
        return Err(Error::CapExceeded {
            what: "Fourier transform size k",
            requested: k as usize,
            cap: FOURIER_CAP as usize,
        });
    }
    let mut values = f.to_vec();
    walsh_hadamard(&mut values);
    let scale = T::one() / T::from_i64(2).pow_u(k);
    for v in &mut values {
        *v = v.clone() * scale.clone();
    }
    Ok(FourierTable { k, values })
}

/// A polymer: one up spin (odd) or two (even) with its support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Polymer {
    /// `p_ℓ`, support `{1, …, ℓ}`.
    Odd { l: u32 },
    /// `p_{a,b}`, support `{a, …, b}`.
    Even { a: u32, b: u32 },
}

impl Polymer {
    pub fn support_size(self) -> u32 {
        match self {
            Polymer::Odd { l } => l,
            Polymer::Even { a, b } => b - a + 1,
        }
    }

    /// Activity `z(γ)`.
    pub fn activity<T: Field>(self, params: &Params<T>) -> T {
        let r = params.r().clone();
        let ratio = params.rho().clone() / (T::from_i64(4) - r.clone());
        let base = ratio.pow_u(self.support_size());
        match self {
            Polymer::Odd { .. } => -base,
            Polymer::Even { .. } => -(r / params.rho().clone()) * base,
        }
    }
}

/// Decomposition of `t` into polymers with pairwise disjoint supports.
///
/// For odd `|t|` the leftmost up spin is the odd polymer; the remaining up
/// spins are paired left to right.
pub fn polymer_decompose(t: SpinWord) -> Vec<Polymer> {
    let ones: Vec<u32> = (1..=t.len()).filter(|&i| t.get(i) == 1).collect();
    let mut out = Vec::with_capacity(ones.len() / 2 + 1);
    let rest = if ones.len() % 2 == 1 {
        out.push(Polymer::Odd { l: ones[0] });
        &ones[1..]
    } else {
        &ones[..]
    };
    out.extend(rest.chunks(2).map(|pair| Polymer::Even { a: pair[0], b: pair[1] }));
    out
}

/// Closed forms `p̂_k(t) = ((4-r)/2)^k ∏ z(γ_i)` and `q̂_k(t) = (1 + (-1)^{|t|}) p̂_k(t)`.
pub fn hat_pq_closed<T: Field>(t: SpinWord, params: &Params<T>) -> (T, T) {
    let prefactor = ((T::from_i64(4) - params.r().clone()) / T::from_i64(2)).pow_u(t.len());
    let p_hat = polymer_decompose(t)
        .into_iter()
        .fold(prefactor, |acc, g| acc * g.activity(params));
    let q_hat = if t.weight() % 2 == 0 {
        T::from_i64(2) * p_hat.clone()
    } else {
        T::zero()
    };
    (p_hat, q_hat)
}

/// `q̂_k(t)` in exponential and Ising form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsingForm {
    /// `(1 + (-1)^{|t|})(-1)^{⟨t,ψ(t)⟩} exp(c_0 k + c_1|ψ(t)| + c_2⟨t,ψ(t)⟩)`.
    pub value: f64,
    /// `|q̂_k(t)|` from the nearest-neighbour Ising Hamiltonian in `σ_i = (-1)^{ψ(t)_i}`.
    pub magnitude: f64,
    /// `⟨t, ψ(t)⟩`, the number of polymers for even `|t|`.
    pub n: u32,
}

/// Constants of the Ising rewriting of `q̂_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsingConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Nearest-neighbour coupling, `-c_2/4 = ¼ ln((4-r)/r)`.
    pub coupling: f64,
    /// Field on every spin, `-c_1/2`.
    pub bulk_field: f64,
    /// Extra field on `σ_1` and `σ_k`, `-c_2/4`.
    pub boundary_field: f64,
}

impl IsingConstants {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 2.0) {
            return Err(Error::ParameterRange {
                operation: "Ising form",
                r,
                allowed: "(0, 2)",
            });
        }
        let c0 = ((4.0 - r) / 2.0).ln();
        let c1 = ((2.0 - r) / (4.0 - r)).ln();
        let c2 = (r / (4.0 - r)).ln();
        Ok(IsingConstants {
            c0,
            c1,
            c2,
            coupling: -c2 / 4.0,
            bulk_field: -c1 / 2.0,
            boundary_field: -c2 / 4.0,
        })
    }

    /// Spin-independent part of the exponent for a chain of length `k`.
    pub fn offset(&self, k: u32) -> f64 {
        let k = k as f64;
        k * self.c0 + k * self.c1 / 2.0 + (k + 1.0) * self.c2 / 4.0
    }
}

/// `q̂_k(t)` through the exponential form and the Ising Boltzmann factor.
pub fn hat_q_ising(t: SpinWord, params: &Params<f64>) -> Result<IsingForm> {
    let c = IsingConstants::new(*params.r())?;
    let k = t.len();
    let s = psi(t);
    let n = (t.bits() & s.bits()).count_ones();
    if t.weight() % 2 == 1 {
        return Ok(IsingForm {
            value: 0.0,
            magnitude: 0.0,
            n,
        });
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let value = 2.0 * sign * (c.c0 * k as f64 + c.c1 * s.weight() as f64 + c.c2 * n as f64).exp();
    let spin = |i: u32| 1.0 - 2.0 * s.get(i) as f64;
    let mut energy = c.offset(k);
    if k > 0 {
        energy += c.boundary_field * (spin(1) + spin(k));
    } else {
        // Empty chain: the boundary terms reduce to a single `+1` bond.
        energy += c.boundary_field;
    }
    for i in 1..=k {
        energy += c.bulk_field * spin(i);
    }
    for i in 1..k {
        energy += c.coupling * spin(i) * spin(i + 1);
    }
    Ok(IsingForm {
        value,
        magnitude: 2.0 * energy.exp(),
        n,
    })
}

/// `Q̂_k`, the Fourier coefficients of `Q_k = log q_k`.
pub fn interaction_coefficients(k: u32, params: &Params<f64>) -> Result<FourierTable<f64>> {
    if k > 20 {
        return Err(Error::CapExceeded {
            what: "interaction table k",
            requested: k as usize,
            cap: 20,
        });
    }
    let table = pq_tables(k, params)?;
    let logs: Vec<f64> = table.q.iter().map(|q| q.ln()).collect();
    fourier_transform(&logs)
}

/// Result of scanning `-Q̂_k(t) ≥ -ε` over `t ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    pub k: u32,
    pub r: f64,
    /// Smallest `-Q̂_k(t)` over `t ≠ 0`.
    pub min_coupling: f64,
    pub argmin: u64,
    pub holds: bool,
}

pub fn ferromagnetic_report(k: u32, params: &Params<f64>, eps: f64) -> Result<PositivityReport> {
    let table = interaction_coefficients(k, params)?;
    let (argmin, min_coupling) = table
        .values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(t, v)| (t as u64, -v))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(PositivityReport {
        k,
        r: *params.r(),
        min_coupling,
        argmin,
        holds: min_coupling >= -eps,
    })
}

/// `log 2 + k log((4 - r)/2)`: Jensen's upper bound for `Q̂_k(0)`, attained at `r = 0`.
pub fn mean_energy_bound(k: u32, r: f64) -> f64 {
    2f64.ln() + k as f64 * ((4.0 - r) / 2.0).ln()
}

/// Index of `(σ_k, …, σ_1)` for the word `σ` of length `k`.
pub fn reversed_index(sigma: u64, k: u32) -> u64 {
    SpinWord::new(sigma & mask(k), k).reverse().bits()
}
