//! Compensated summation and deterministic parallel folds.
//!
//! Parallel sums split their index space into fixed chunks, reduce each chunk
//! with Neumaier's algorithm and then combine the partial sums in chunk order,
//! so the result does not depend on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coding::SpinWord;
use crate::numerics::Params;
use crate::tree::Mat2;

/// An accumulator that can absorb values and be merged with another one.
pub trait Accumulator: Default + Send {
    type Item;
    fn push(&mut self, x: Self::Item);
    fn merge(&mut self, other: Self);
}

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Accumulator for Neumaier {
    type Item = f64;

    fn push(&mut self, x: f64) {
        self.add(x);
    }

    fn merge(&mut self, other: Self) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// Componentwise compensated sum of complex numbers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexSum {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl Accumulator for ComplexSum {
    type Item = Complex64;

    fn push(&mut self, z: Complex64) {
        self.add(z);
    }

    fn merge(&mut self, other: Self) {
        self.re.merge(other.re);
        self.im.merge(other.im);
    }
}

impl FromIterator<Complex64> for ComplexSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = ComplexSum::default();
        iter.into_iter().for_each(|z| acc.add(z));
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<Neumaier>().value()
}

const CHUNK: usize = 1 << 12;

/// `Σ_{i < n} f(i)` in fixed chunks, merged in order.
pub fn par_index_sum<A, F>(n: usize, f: F) -> A
where
    A: Accumulator,
    F: Fn(usize) -> A::Item + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = A::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.push(f(i));
            }
            acc
        })
        .collect();
    merge_in_order(partials)
}

fn merge_in_order<A: Accumulator>(partials: Vec<A>) -> A {
    let mut total = A::default();
    for p in partials {
        total.merge(p);
    }
    total
}

/// Folds `leaf(σ, state_σ)` over all `σ ∈ G_k`, where `state_σ` is obtained
/// from `root` by applying `step` once per spin of `σ`, left to right.
///
/// The leading spins are split into fixed chunks walked in parallel; each
/// chunk is walked depth first and the chunk results are merged in order.
pub fn par_word_fold<S, A, Step, Leaf>(k: u32, root: S, step: Step, leaf: Leaf) -> A
where
    S: Clone + Send + Sync,
    A: Accumulator,
    Step: Fn(&S, u8) -> S + Sync,
    Leaf: Fn(SpinWord, &S) -> A::Item + Sync,
{
    let split = k.min(10);
    let partials: Vec<A> = (0..1u64 << split)
        .into_par_iter()
        .map(|prefix| {
            let prefix = SpinWord::new(prefix, split);
            let start = (1..=split).fold(root.clone(), |st, i| step(&st, prefix.get(i)));
            let mut acc = A::default();
            depth_first(k - split, prefix, start, &step, &leaf, &mut acc);
            acc
        })
        .collect();
    merge_in_order(partials)
}

fn depth_first<S, A, Step, Leaf>(remaining: u32, word: SpinWord, state: S, step: &Step, leaf: &Leaf, acc: &mut A)
where
    A: Accumulator,
    Step: Fn(&S, u8) -> S,
    Leaf: Fn(SpinWord, &S) -> A::Item,
{
    if remaining == 0 {
        acc.push(leaf(word, &state));
        return;
    }
    let left = step(&state, 0);
    depth_first(remaining - 1, word.push(0), left, step, leaf, acc);
    let right = step(&state, 1);
    depth_first(remaining - 1, word.push(1), right, step, leaf, acc);
}

/// Sums `f(σ, X_σ)` over the matrix presentations of all `σ ∈ G_k`.
pub fn par_leaf_sum<A, F>(k: u32, params: &Params<f64>, f: F) -> A
where
    A: Accumulator,
    F: Fn(SpinWord, &Mat2<f64>) -> A::Item + Sync,
{
    let (l, r) = (Mat2::l(params), Mat2::r(params));
    par_word_fold(k, l.clone(), |x: &Mat2<f64>, b| x.mul(if b == 0 { &l } else { &r }), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_cancelled_digits() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(&xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn harmonic_partial_sums() {
        let n = 1_000_000;
        let s: Neumaier = par_index_sum(n, |i| 1.0 / (i + 1) as f64);
        // H_n = ln n + γ + 1/(2n) − 1/(12 n^2) + …
        let expect = (n as f64).ln() + 0.577_215_664_901_532_9 + 0.5 / n as f64 - 1.0 / (12.0 * (n as f64).powi(2));
        assert!((s.value() - expect).abs() < 1e-13);
    }

    #[test]
    fn parallel_sums_do_not_depend_on_threads() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a: Neumaier = par_index_sum(300_000, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b: Neumaier = pool.install(|| par_index_sum(300_000, f));
        assert_eq!(a.value().to_bits(), b.value().to_bits());
        let z: ComplexSum = par_index_sum(1000, |i| Complex64::new(i as f64, -(i as f64)));
        assert_eq!(z.value(), Complex64::new(499_500.0, -499_500.0));
    }

    #[test]
    fn leaf_sum_counts_leaves_and_matches_rows() {
        let p = Params::new(0.6).unwrap();
        let count: Neumaier = par_leaf_sum(13, &p, |_, _| 1.0);
        assert_eq!(count.value(), 8192.0);
        let row = crate::tree::build_row(13, &p).unwrap();
        let direct = sum(&row.nodes.iter().map(|v| 1.0 / v.q).collect::<Vec<_>>());
        let walked: Neumaier = par_leaf_sum(12, &p, |_, x| 1.0 / (x.c + x.d));
        assert!((direct - walked.value()).abs() <= 1e-14 * direct);
        // The state reached along σ is σ itself.
        let hits: Neumaier = par_word_fold(
            14,
            SpinWord::EMPTY,
            |w: &SpinWord, b| w.push(b),
            |w, st| if *st == w { 1.0 } else { 0.0 },
        );
        assert_eq!(hits.value(), 16384.0);
    }
}
