//! Spin words, the partial-sum automorphism `Ψ_k`, tree paths and the
//! conjugacy `h_r` onto the tent map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numerics::Params;
use crate::scalar::{Field, Ring};
use crate::tree::{FareyNode, Mat2};

/// Longest word a [`SpinWord`] can hold.
pub const MAX_LEN: u32 = 63;

/// An element `σ = (σ_1, …, σ_k)` of `G_k = (Z/2Z)^k`.
///
/// `σ_1` is the most significant bit, so comparing `bits` as integers is the
/// lexicographic order on words of equal length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinWord {
    bits: u64,
    len: u32,
}

impl SpinWord {
    pub const EMPTY: SpinWord = SpinWord { bits: 0, len: 0 };

    /// Builds a word of length `len` from its integer index; higher bits are dropped.
    pub fn new(bits: u64, len: u32) -> Self {
        assert!(len <= MAX_LEN, "spin words hold at most {MAX_LEN} bits");
        SpinWord {
            bits: bits & mask(len),
            len,
        }
    }

    /// From `[σ_1, …, σ_k]`, each entry 0 or 1.
    pub fn from_slice(sigma: &[u8]) -> Self {
        assert!(sigma.len() as u32 <= MAX_LEN);
        let bits = sigma.iter().fold(0u64, |acc, &b| (acc << 1) | (b & 1) as u64);
        SpinWord {
            bits,
            len: sigma.len() as u32,
        }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn len(self) -> u32 {
        self.len
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    /// `σ_i`, 1-based.
    pub fn get(self, i: u32) -> u8 {
        assert!(i >= 1 && i <= self.len, "index {i} outside 1..={}", self.len);
        ((self.bits >> (self.len - i)) & 1) as u8
    }

    pub fn to_vec(self) -> Vec<u8> {
        (1..=self.len).map(|i| self.get(i)).collect()
    }

    /// `(σ_1, …, σ_k, b)`: the child of `σ` in the tree.
    pub fn push(self, b: u8) -> Self {
        SpinWord::new((self.bits << 1) | (b & 1) as u64, self.len + 1)
    }

    /// `(b, σ_1, …, σ_k)`.
    pub fn prepend(self, b: u8) -> Self {
        SpinWord::new(self.bits | (((b & 1) as u64) << self.len), self.len + 1)
    }

    /// `σ̄`, every spin flipped.
    pub fn complement(self) -> Self {
        SpinWord::new(!self.bits, self.len)
    }

    /// `(σ_k, …, σ_1)`.
    pub fn reverse(self) -> Self {
        if self.len == 0 {
            return self;
        }
        SpinWord::new(self.bits.reverse_bits() >> (64 - self.len), self.len)
    }

    /// Number of ones, `|σ|`.
    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    /// `⟨σ, t⟩` in `Z/2Z`.
    pub fn dot(self, other: SpinWord) -> u8 {
        ((self.bits & other.bits).count_ones() & 1) as u8
    }

    /// Group operation of `G_k`.
    pub fn add(self, other: SpinWord) -> Self {
        assert_eq!(self.len, other.len);
        SpinWord::new(self.bits ^ other.bits, self.len)
    }

    /// All words of length `k` in lexicographic order.
    pub fn all(k: u32) -> impl Iterator<Item = SpinWord> {
        (0..1u64 << k).map(move |b| SpinWord::new(b, k))
    }
}

impl fmt::Display for SpinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.len {
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

pub(crate) fn mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// `Ψ_k(t) = (t_1, t_1 + t_2, …, t_1 + … + t_k)`.
pub fn psi(t: SpinWord) -> SpinWord {
    let mut b = t.bits;
    let mut shift = 1;
    while shift < 64 {
        b ^= b >> shift;
        shift <<= 1;
    }
    SpinWord::new(b, t.len)
}

/// `Ψ_k^{-1}(s) = (s_1, s_1 + s_2, s_2 + s_3, …)`.
pub fn psi_inv(s: SpinWord) -> SpinWord {
    SpinWord::new(s.bits ^ (s.bits >> 1), s.len)
}

/// The leaf `p_k(σ)/q_k(σ)` as `Φ_{t_1} ∘ … ∘ Φ_{t_k}(1/2)` with `t = Ψ_k^{-1}(σ)`.
///
/// The vector `(1, 2)` is pushed through the branch matrices, so numerator and
/// denominator come out unreduced and agree with the tree recursion.
pub fn leaf_from_path<T: Ring>(sigma: SpinWord, p: &Params<T>) -> FareyNode<T> {
    let t = psi_inv(sigma);
    let (mut num, mut den) = (T::one(), T::from_i64(2));
    for i in (1..=t.len()).rev() {
        let m = Mat2::branch(p, t.get(i));
        (num, den) = m.apply_vec(&num, &den);
    }
    FareyNode::new(num, den, sigma.len() + 1, sigma)
}

/// A finite prefix of the tree path leading to a point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeStream {
    bits: Vec<u8>,
}

impl CodeStream {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        CodeStream { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    /// `Σ b_i 2^{-i}`.
    pub fn dyadic_value(&self) -> f64 {
        self.bits
            .iter()
            .rev()
            .fold(0.0, |acc, &b| (acc + b as f64) * 0.5)
    }

    /// Drops the first symbol.
    pub fn shift(&self) -> CodeStream {
        CodeStream {
            bits: self.bits.iter().skip(1).copied().collect(),
        }
    }
}

impl fmt::Display for CodeStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// First `depth` edges of the path from the root `1/2` down to `x`.
///
/// A vertex of the tree is coded by its finite path followed by `10^∞`.
pub fn encode_point<T: Field>(x: &T, p: &Params<T>, depth: usize) -> CodeStream {
    let mut bits = Vec::with_capacity(depth);
    // Running product of branch matrices along Ψ^{-1}(σ); the current vertex
    // is this product applied to 1/2.
    let mut prefix = Mat2::identity();
    let mut last = 0u8;
    let mut on_vertex = false;
    while bits.len() < depth {
        if on_vertex {
            bits.push(0);
            continue;
        }
        let (num, den) = prefix.apply_vec(&T::one(), &T::from_i64(2));
        let lhs = x.clone() * den.clone();
        let b = if lhs < num {
            0
        } else if lhs > num {
            1
        } else {
            on_vertex = true;
            1
        };
        bits.push(b);
        let step = Mat2::branch(p, b ^ last);
        prefix = renormalize(prefix.mul(&step));
        last = b;
    }
    CodeStream { bits }
}

fn renormalize<T: Field>(m: Mat2<T>) -> Mat2<T> {
    if T::EXACT {
        return m;
    }
    let scale = m.c.clone() + m.d.clone();
    if scale > T::zero() {
        Mat2::new(
            m.a / scale.clone(),
            m.b / scale.clone(),
            m.c / scale.clone(),
            m.d / scale,
        )
    } else {
        m
    }
}

/// `h_r(x)`: the tent-map point with the same tree path, truncated at `depth` bits.
pub fn conjugacy_h<T: Field>(x: &T, p: &Params<T>, depth: usize) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.is_one() {
        return 1.0;
    }
    encode_point(x, p, depth).dyadic_value()
}
