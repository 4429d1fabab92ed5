//! The generalized Farey tree `T(r)`, its matrix presentation and the
//! extended (Stern–Brocot) rows.
//!
//! Row `n ≥ 1` holds the `2^{n-1}` vertices of rank `n`, indexed by paths
//! `σ ∈ G_{n-1}`; the vertex of `σ` is `p_{n-1}(σ)/q_{n-1}(σ)`. Lexicographic
//! order of paths is spatial order in `[0, 1]`.

use std::io::Write;

use serde::Serialize;

use crate::coding::SpinWord;
use crate::error::{Error, Result};
use crate::numerics::Params;
use crate::scalar::{Field, Ring};

/// Largest row materialized with exact coefficients.
pub const EXACT_ROW_CAP: u32 = 22;
/// Largest row materialized in floating point; larger sums stream over leaves.
pub const FLOAT_ROW_CAP: u32 = 28;

/// A vertex `p/q` with its rank and path.
#[derive(Clone, Debug, PartialEq)]
pub struct FareyNode<T> {
    pub p: T,
    pub q: T,
    pub rank: u32,
    pub path: SpinWord,
    /// Set on vertices of an extended row that come from `Ŝ_r`.
    pub reflected: bool,
}

impl<T: Ring> FareyNode<T> {
    pub fn new(p: T, q: T, rank: u32, path: SpinWord) -> Self {
        FareyNode {
            p,
            q,
            rank,
            path,
            reflected: false,
        }
    }

    /// The endpoint `0/1` (rank 0).
    pub fn zero() -> Self {
        FareyNode::new(T::zero(), T::one(), 0, SpinWord::EMPTY)
    }

    /// The endpoint `1/1` (rank 0).
    pub fn one() -> Self {
        FareyNode::new(T::one(), T::one(), 0, SpinWord::EMPTY)
    }

    pub fn approx(&self, rho: f64) -> f64 {
        self.p.approx(rho) / self.q.approx(rho)
    }

    /// Image under `Ŝ_r`: `((r-1)p + ρq) / (rp + (1-r)q)`.
    pub fn reflect(&self, params: &Params<T>) -> Self {
        let r = params.r().clone();
        let one_minus_r = T::one() - r.clone();
        FareyNode {
            p: (r.clone() - T::one()) * self.p.clone() + params.rho().clone() * self.q.clone(),
            q: r * self.p.clone() + one_minus_r * self.q.clone(),
            rank: self.rank,
            path: self.path,
            reflected: !self.reflected,
        }
    }
}

impl<T: Field> FareyNode<T> {
    pub fn value(&self) -> T {
        self.p.clone() / self.q.clone()
    }
}

/// A row-major 2×2 matrix acting by Möbius transformations.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Ring> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    /// `L = [[1, 0], [r, ρ]]`, the left branch `Φ_0`.
    pub fn l(p: &Params<T>) -> Self {
        Mat2::new(T::one(), T::zero(), p.r().clone(), p.rho().clone())
    }

    /// `R = [[1, ρ], [0, ρ]]`.
    pub fn r(p: &Params<T>) -> Self {
        Mat2::new(T::one(), p.rho().clone(), T::zero(), p.rho().clone())
    }

    /// `S = [[r-1, 2-r], [r, 1-r]]`, the involution `Ŝ_r`.
    pub fn s(p: &Params<T>) -> Self {
        let r = p.r().clone();
        Mat2::new(r.clone() - T::one(), p.rho().clone(), r.clone(), T::one() - r)
    }

    /// `I_j`, the matrix of the inverse branch `Φ_j`.
    pub fn branch(p: &Params<T>, j: u8) -> Self {
        if j == 0 {
            Mat2::l(p)
        } else {
            Mat2::new(
                p.r().clone() - T::one(),
                p.rho().clone(),
                p.r().clone(),
                p.rho().clone(),
            )
        }
    }

    pub fn mul(&self, o: &Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.a.clone() * o.a.clone() + self.b.clone() * o.c.clone(),
            self.a.clone() * o.b.clone() + self.b.clone() * o.d.clone(),
            self.c.clone() * o.a.clone() + self.d.clone() * o.c.clone(),
            self.c.clone() * o.b.clone() + self.d.clone() * o.d.clone(),
        )
    }

    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> T {
        self.a.clone() + self.d.clone()
    }

    /// `(x, y) ↦ (ax + by, cx + dy)`.
    pub fn apply_vec(&self, x: &T, y: &T) -> (T, T) {
        (
            self.a.clone() * x.clone() + self.b.clone() * y.clone(),
            self.c.clone() * x.clone() + self.d.clone() * y.clone(),
        )
    }

    /// `X̂(1)` as the unreduced pair `(a + b, c + d)`.
    pub fn at_one(&self) -> (T, T) {
        (self.a.clone() + self.b.clone(), self.c.clone() + self.d.clone())
    }
}

/// One row of the tree, left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeRow<T> {
    pub level: u32,
    pub nodes: Vec<FareyNode<T>>,
}

fn row_cap<T: Ring>() -> u32 {
    if T::EXACT {
        EXACT_ROW_CAP
    } else {
        FLOAT_ROW_CAP
    }
}

/// Tables `p_k(σ)`, `q_k(σ)` for all `σ ∈ G_k`, indexed by `σ.bits()`.
///
/// A new spin is prepended at each step:
/// `p_{k+1}(0σ) = p_k(σ)`, `q_{k+1}(0σ) = ρq_k(σ) + rp_k(σ)`,
/// `p_{k+1}(1σ) = ρq_k(σ̄) + (r-1)p_k(σ̄)`, `q_{k+1}(1σ) = ρq_k(σ̄) + rp_k(σ̄)`.
pub fn pq_recursion<T: Ring>(k: u32, params: &Params<T>) -> (Vec<T>, Vec<T>) {
    spin_recursion(k, params, T::one(), T::from_i64(2))
}

/// The recursion of [`pq_recursion`] started from an arbitrary `(p_0, q_0)`.
pub fn spin_recursion<T: Ring>(k: u32, params: &Params<T>, p0: T, q0: T) -> (Vec<T>, Vec<T>) {
    spin_levels(k, params, p0, q0, |_, _, _| {})
}

/// Runs the recursion of [`spin_recursion`], handing every level `j = 0..=k` to `visit`.
pub fn spin_levels<T: Ring, V: FnMut(u32, &[T], &[T])>(
    k: u32,
    params: &Params<T>,
    p0: T,
    q0: T,
    mut visit: V,
) -> (Vec<T>, Vec<T>) {
    let (r, rho) = (params.r().clone(), params.rho().clone());
    let r_minus_one = r.clone() - T::one();
    let mut p = vec![p0];
    let mut q = vec![q0];
    for j in 0..k {
        visit(j, &p, &q);
        let size = 1usize << j;
        let flip = size - 1;
        let mut np = Vec::with_capacity(2 * size);
        let mut nq = Vec::with_capacity(2 * size);
        for sigma in 0..size {
            np.push(p[sigma].clone());
            nq.push(rho.clone() * q[sigma].clone() + r.clone() * p[sigma].clone());
        }
        for sigma in 0..size {
            let bar = sigma ^ flip;
            let common = rho.clone() * q[bar].clone();
            np.push(common.clone() + r_minus_one.clone() * p[bar].clone());
            nq.push(common + r.clone() * p[bar].clone());
        }
        p = np;
        q = nq;
    }
    visit(k, &p, &q);
    (p, q)
}

/// Row `n` of `T(r)`: the `2^{n-1}` vertices of rank `n`, increasing.
pub fn build_row<T: Ring>(n: u32, params: &Params<T>) -> Result<TreeRow<T>> {
    if n == 0 {
        return Err(Error::Domain {
            what: "row",
            value: 0.0,
            domain: "n >= 1",
        });
    }
    let cap = row_cap::<T>();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "tree row",
            requested: n as usize,
            cap: cap as usize,
        });
    }
    let k = n - 1;
    let (p, q) = pq_recursion(k, params);
    let nodes = p
        .into_iter()
        .zip(q)
        .enumerate()
        .map(|(i, (p, q))| FareyNode::new(p, q, n, SpinWord::new(i as u64, k)))
        .collect();
    Ok(TreeRow { level: n, nodes })
}

/// All vertices of `T_n`, including `0/1` and `1/1`, increasing.
pub fn vertices_up_to<T: Ring>(n: u32, params: &Params<T>) -> Result<Vec<FareyNode<T>>> {
    let mut out = vec![FareyNode::zero(), FareyNode::one()];
    for level in 1..=n {
        // Row `level` interleaves with the current list: one new vertex per gap.
        let row = build_row(level, params)?;
        let mut merged = Vec::with_capacity(out.len() + row.nodes.len());
        let mut it = row.nodes.into_iter();
        for (i, v) in out.into_iter().enumerate() {
            if i > 0 {
                merged.push(it.next().expect("one vertex per gap"));
            }
            merged.push(v);
        }
        out = merged;
    }
    Ok(out)
}

/// The vertex of rank `n + 1` between neighbours `a` (rank `n - k`) and `b` (rank `n`):
/// `(p_b + ρ^k p_a) / (q_b + ρ^k q_a)`.
///
/// Either spatial order is accepted. The pair must satisfy
/// `p_right q_left - p_left q_right = ρ^{n-k}`.
pub fn child_of_neighbours<T: Ring>(
    a: &FareyNode<T>,
    b: &FareyNode<T>,
    params: &Params<T>,
) -> Result<FareyNode<T>> {
    let not_neighbours = || Error::NotNeighbours {
        left: format!("{:?}/{:?} (rank {})", a.p, a.q, a.rank),
        right: format!("{:?}/{:?} (rank {})", b.p, b.q, b.rank),
    };
    if a.rank >= b.rank {
        return Err(not_neighbours());
    }
    let k = b.rank - a.rank;
    let cross = b.p.clone() * a.q.clone() - a.p.clone() * b.q.clone();
    let unit = params.rho_pow(a.rank);
    let b_is_right = if cross == unit {
        true
    } else if cross == -unit {
        false
    } else {
        return Err(not_neighbours());
    };
    let w = params.rho_pow(k);
    let p = b.p.clone() + w.clone() * a.p.clone();
    let q = b.q.clone() + w * a.q.clone();
    let bit = if b_is_right { 0 } else { 1 };
    Ok(FareyNode::new(p, q, b.rank + 1, b.path.push(bit)))
}

/// `X_σ = L · M_{σ_1} ⋯ M_{σ_k}`, with `M = L` for a 0 and `M = R` for a 1.
pub fn matrix_presentation<T: Ring>(sigma: SpinWord, params: &Params<T>) -> Mat2<T> {
    let (l, r) = (Mat2::l(params), Mat2::r(params));
    (1..=sigma.len()).fold(l.clone(), |x, i| x.mul(if sigma.get(i) == 0 { &l } else { &r }))
}

/// `(T_0, T_1) = (tr X, tr XS)`.
pub fn trace_pair<T: Ring>(x: &Mat2<T>, params: &Params<T>) -> (T, T) {
    (x.trace(), x.mul(&Mat2::s(params)).trace())
}

/// Row `n` of `T(r)` together with its image under `Ŝ_r`.
///
/// The reflected vertices follow in reverse order, which is increasing for
/// `r ≤ 1` (where `Ŝ_r` is decreasing on `[0, ∞)`). At `r = 1` these are the
/// rows of the Stern–Brocot tree below `1/1`.
pub fn extended_row<T: Ring>(n: u32, params: &Params<T>) -> Result<TreeRow<T>> {
    let row = build_row(n, params)?;
    let mirrored: Vec<_> = row.nodes.iter().rev().map(|v| v.reflect(params)).collect();
    let mut nodes = row.nodes;
    nodes.extend(mirrored);
    Ok(TreeRow { level: n, nodes })
}

/// Depth-first walk over the presentations `X_σ`, `σ ∈ G_k`, in lexicographic order.
pub fn for_each_presentation<T: Ring>(
    k: u32,
    prefix: SpinWord,
    start: Mat2<T>,
    params: &Params<T>,
    visit: &mut impl FnMut(SpinWord, &Mat2<T>),
) {
    let (l, r) = (Mat2::l(params), Mat2::r(params));
    walk(k, prefix, start, &l, &r, visit);
}

fn walk<T: Ring>(
    remaining: u32,
    sigma: SpinWord,
    x: Mat2<T>,
    l: &Mat2<T>,
    r: &Mat2<T>,
    visit: &mut impl FnMut(SpinWord, &Mat2<T>),
) {
    if remaining == 0 {
        visit(sigma, &x);
        return;
    }
    walk(remaining - 1, sigma.push(0), x.mul(l), l, r, visit);
    walk(remaining - 1, sigma.push(1), x.mul(r), l, r, visit);
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    level: u32,
    sigma: String,
    p: &'a str,
    q: &'a str,
    value: f64,
}

/// Writes `level,sigma,p,q,value` rows. Symbolic entries are evaluated at `rho`.
pub fn write_csv<T: Ring + std::fmt::Display, W: Write>(
    rows: &[TreeRow<T>],
    rho: f64,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        for v in &row.nodes {
            let (p, q) = (v.p.to_string(), v.q.to_string());
            w.serialize(CsvRecord {
                level: row.level,
                sigma: v.path.to_string(),
                p: &p,
                q: &q,
                value: v.approx(rho),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The rooted tree as `{ "root": id, "nodes": [{id, p, q, value, children}] }`.
/// Ids are path strings prefixed with `v` (`"v"` for the root `1/2`).
pub fn adjacency_json<T: Ring + std::fmt::Display>(rows: &[TreeRow<T>], rho: f64) -> serde_json::Value {
    let deepest = rows.iter().map(|r| r.level).max().unwrap_or(0);
    let nodes: Vec<_> = rows
        .iter()
        .flat_map(|row| row.nodes.iter().map(move |v| (row.level, v)))
        .map(|(level, v)| {
            let id = format!("v{}", v.path);
            let children: Vec<String> = if level < deepest {
                vec![format!("{id}0"), format!("{id}1")]
            } else {
                Vec::new()
            };
            serde_json::json!({
                "id": id,
                "level": level,
                "p": v.p.to_string(),
                "q": v.q.to_string(),
                "value": v.approx(rho),
                "children": children,
            })
        })
        .collect();
    serde_json::json!({ "root": "v", "nodes": nodes })
}
