//! Oracle-equivalence suites: every check reports a measured residual
//! against its tolerance. Exact checks count mismatches with tolerance 0.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::coding::{leaf_from_path, SpinWord};
use crate::error::{Error, Result};
use crate::numerics::{invariant_density, Params};
use crate::poly::RhoPoly;
use crate::spinchain::{
    fourier_transform, hat_pq_closed, hat_q_ising, ferromagnetic_report, pc_qc_tables, pq_tables, reversed_index,
};
use crate::thermo::{
    canonical_z_complement_exact, canonical_z_exact, canonical_z_route, critical_line, magnetization,
    magnetization_direct, sandwich_report, ZRoute,
};
use crate::transfer::{
    apply_bruteforce, character, fredholm_and_zeta, involution_defect, iterate_character, iterate_general,
    iterate_one, mn_spectra, periodic_sum_xi, spectral_radius, trace_bruteforce, trace_closed_form, trace_power,
    TransferQuery,
};
use crate::tree::{build_row, child_of_neighbours, matrix_presentation, vertices_up_to};
use crate::zeta::{dirichlet_partial, mu_twisted, twisted_z, MuMethod, TwistedRoute};
use crate::Rational;

/// A named group of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Tree,
    Spin,
    Transfer,
    Thermo,
    Zeta,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Tree, Suite::Spin, Suite::Transfer, Suite::Thermo, Suite::Zeta];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tree => "tree",
            Suite::Spin => "spin",
            Suite::Transfer => "transfer",
            Suite::Thermo => "thermo",
            Suite::Zeta => "zeta",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tree" => Ok(Suite::Tree),
            "spin" => Ok(Suite::Spin),
            "transfer" => Ok(Suite::Transfer),
            "thermo" => Ok(Suite::Thermo),
            "zeta" => Ok(Suite::Zeta),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite `{other}` (expected tree, spin, transfer, thermo, zeta or all)")),
        }
    }
}

/// One invariant with its measured residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<8} {:<58} residual {:.3e} (tol {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Recorder { suite, checks: Vec::new() }
    }

    fn record(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    }

    fn exact(&mut self, name: impl Into<String>, mismatches: usize) {
        self.record(name, mismatches as f64, 0.0);
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Deterministic points of `[0, 1)` from the golden-ratio sequence.
fn golden(i: usize) -> f64 {
    (0.5 + i as f64 * 0.618_033_988_749_894_8).fract()
}

pub fn run(suite: Suite) -> Result<Report> {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::ALL.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    for s in suites {
        let mut rec = Recorder::new(s);
        match s {
            Suite::Tree => tree_suite(&mut rec)?,
            Suite::Spin => spin_suite(&mut rec)?,
            Suite::Transfer => transfer_suite(&mut rec)?,
            Suite::Thermo => thermo_suite(&mut rec)?,
            Suite::Zeta => zeta_suite(&mut rec)?,
            Suite::All => unreachable!(),
        }
        checks.extend(rec.checks);
    }
    Ok(Report { checks })
}

fn tree_suite(rec: &mut Recorder) -> Result<()> {
    let p = Params::<RhoPoly>::symbolic();
    let (mut child, mut det) = (0, 0);
    for n in 1..=10 {
        let verts = vertices_up_to(n, &p)?;
        let row = build_row(n + 1, &p)?;
        for (w, v) in verts.windows(2).zip(&row.nodes) {
            let (left, right) = (&w[0], &w[1]);
            if right.p.clone() * left.q.clone() - left.p.clone() * right.q.clone() != p.rho_pow(left.rank.min(right.rank)) {
                det += 1;
            }
            let (a, b) = if left.rank < right.rank { (left, right) } else { (right, left) };
            match child_of_neighbours(a, b, &p) {
                Ok(c) if c.p == v.p && c.q == v.q && c.path == v.path => {}
                _ => child += 1,
            }
        }
    }
    rec.exact("mediant child rule regenerates rows n <= 10", child);
    rec.exact("neighbour determinant p'q - pq' = rho^rank, n <= 10", det);

    let mut sym = 0;
    for k in 0..=14 {
        let t = pq_tables(k, &p)?;
        let m = (1u64 << k) - 1;
        for s in 0..1u64 << k {
            let (i, bar, rev) = (s as usize, (s ^ m) as usize, reversed_index(s, k) as usize);
            if t.p[i].clone() + t.p[bar].clone() != t.q[i] || t.q[i] != t.q[bar] || t.q[i] != t.q[rev] {
                sym += 1;
            }
        }
    }
    rec.exact("symmetry p(s)+p(s~)=q, q(s)=q(s~)=q(reverse s), k <= 14", sym);

    let mut pres = 0;
    for k in 0..=12 {
        let t = pq_tables(k, &p)?;
        for sigma in SpinWord::all(k) {
            let x = matrix_presentation(sigma, &p);
            let (num, den) = x.at_one();
            let i = sigma.bits() as usize;
            if x.det() != p.rho_pow(k + 1) || num != t.p[i] || den != t.q[i] {
                pres += 1;
            }
        }
    }
    rec.exact("presentation det X = rho^(k+1), X(1) = p_k/q_k, k <= 12", pres);

    let mut leaves = 0;
    for k in 0..=10 {
        let t = pq_tables(k, &p)?;
        for sigma in SpinWord::all(k) {
            let leaf = leaf_from_path(sigma, &p);
            if &leaf.p != t.p_at(sigma) || &leaf.q != t.q_at(sigma) {
                leaves += 1;
            }
        }
    }
    rec.exact("leaf from branch path equals table entry, k <= 10", leaves);
    Ok(())
}

fn spin_suite(rec: &mut Recorder) -> Result<()> {
    let mut closed = 0;
    for (a, b) in [(1, 4), (1, 2), (3, 4), (1, 1)] {
        let p = Params::<Rational>::exact(a, b)?;
        for k in 0..=10 {
            let t = pq_tables(k, &p)?;
            let (hp, hq) = (fourier_transform(&t.p)?, fourier_transform(&t.q)?);
            for w in SpinWord::all(k) {
                let (cp, cq) = hat_pq_closed(w, &p);
                if &cp != hp.at(w) || &cq != hq.at(w) {
                    closed += 1;
                }
            }
        }
    }
    rec.exact("polymer closed form equals Fourier transform, k <= 10", closed);

    let mut ising = 0.0f64;
    for r in [0.25, 0.5, 0.75, 1.0] {
        let p = Params::new(r)?;
        for k in 0..=12 {
            for t in SpinWord::all(k) {
                let (_, qh) = hat_pq_closed(t, &p);
                let form = hat_q_ising(t, &p)?;
                let scale = qh.abs().max(1e-300);
                ising = ising.max((form.value - qh).abs() / scale).max((form.magnitude - qh.abs()).abs() / scale);
            }
        }
    }
    rec.record("Ising rewriting of q-hat, k <= 12", ising, 1e-12);

    let mut worst = 0.0f64;
    for i in 1..=10 {
        for k in 1..=14 {
            let report = ferromagnetic_report(k, &Params::new(0.1 * i as f64)?, 1e-12)?;
            worst = worst.max(-report.min_coupling);
        }
    }
    rec.record("ferromagnetic -Q-hat(t) >= 0, k <= 14, r = 0.1..1", worst.max(0.0), 1e-12);

    let p = Params::<RhoPoly>::symbolic();
    let mut ext = 0;
    for k in 0..=10 {
        let c = pc_qc_tables(k + 1, &p)?;
        let t = pq_tables(k, &p)?;
        for sigma in SpinWord::all(k) {
            if c.p_at(sigma.push(1)) != t.p_at(sigma) || c.q_at(sigma.push(1)) != t.q_at(sigma) {
                ext += 1;
            }
        }
    }
    rec.exact("complemented tables extend p_k, q_k, k <= 10", ext);
    Ok(())
}

fn transfer_suite(rec: &mut Recorder) -> Result<()> {
    let (mut one, mut chr, mut gen) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..24 {
        let n = 1 + (i % 12) as u32;
        let r = 1.9 * golden(i);
        let s = Complex64::new(0.2 + 2.0 * golden(i + 100), golden(i + 200) - 0.5);
        let x = golden(i + 300);
        let m = (i % 7) as i64 - 3;
        let q = TransferQuery::new(s, r, n)?;
        one = one.max(rel(iterate_one(x, &q)?, apply_bruteforce(|_| Complex64::new(1.0, 0.0), x, &q)?));
        let brute = apply_bruteforce(|y| character(m, y), x, &q)?;
        chr = chr.max((iterate_character(x, &q, m)? - brute).norm() / brute.norm().max(1.0));
        let f = |y: f64| Complex64::new(1.0 - y + 2.0 * y * y * y, y * y);
        gen = gen.max(rel(iterate_general(f, x, s, q.params(), n - 1)?, apply_bruteforce(f, x, &q)?));
    }
    rec.record("iterate of 1 equals branch sum, n <= 12", one, 1e-11);
    rec.record("iterate of e_m equals branch sum, n <= 12", chr, 1e-11);
    rec.record("general iterate equals branch sum, n <= 12", gen, 1e-11);

    let mut three = 0.0f64;
    let mut fixed = 0.0f64;
    for r in [0.0, 0.5, 0.9] {
        let p = Params::new(r)?;
        for s in [0.5, 1.0, 2.0] {
            let s = Complex64::new(s, 0.0);
            let closed = trace_closed_form(s, &p)?;
            let mn = mn_spectra(s, &p, 0)?;
            let t1 = trace_power(&TransferQuery::new(s, r, 1)?, false)?;
            three = three.max(rel(t1, closed)).max(rel(mn.mu_sum + mn.nu_sum, closed));
            for n in 1..=10 {
                let q = TransferQuery::new(s, r, n)?;
                fixed = fixed.max(rel(trace_power(&q, false)?, trace_bruteforce(&q, false)?));
            }
        }
    }
    rec.record("trace n=1: leaf sum = closed form = eigenvalue sums", three, 1e-12);
    rec.record("trace equals fixed-point sum, n <= 10", fixed, 1e-10);

    let mut xi = 0.0f64;
    for n in 1..=8 {
        let q = TransferQuery::new(1.3, 0.5, n)?;
        let diff = trace_power(&q, false)? - trace_power(&q.with_s(q.s + 1.0), true)?;
        xi = xi.max(rel(periodic_sum_xi(&q)?, diff));
    }
    rec.record("Xi_n = tr P_s^n - tr signed P_(s+1)^n, n <= 8", xi, 1e-11);

    let p = Params::new(0.5)?;
    let mut zeta = 0.0f64;
    for i in 0..8 {
        let z = Complex64::from_polar(0.25, 0.8 * i as f64);
        let fz = fredholm_and_zeta(z, Complex64::new(1.0, 0.0), &p, 14)?;
        zeta = zeta.max((fz.zeta_exp - fz.zeta_ratio).norm());
    }
    rec.record("zeta: exponential form = determinant ratio, |z| = 1/4", zeta, 1e-9);

    let mut lambda = 0.0f64;
    for r in [0.3, 0.6, 0.9] {
        lambda = lambda.max((spectral_radius(1.0, &Params::new(r)?, 1e-10)?.value - 1.0).abs());
    }
    rec.record("spectral radius at s = 1 is 1", lambda, 1e-8);

    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let dens = involution_defect(|x| invariant_density(x, &p).unwrap_or(f64::NAN), 1.0, &p, &grid)?;
    rec.record("invariant density is fixed by the involution", dens, 1e-8);
    Ok(())
}

fn thermo_suite(rec: &mut Recorder) -> Result<()> {
    let mut exact = 0;
    for (a, b) in [(0, 1), (1, 4), (1, 2), (1, 1)] {
        let p = Params::<Rational>::exact(a, b)?;
        for n in 1..=10 {
            for s in 0..=3 {
                if canonical_z_exact(n, s, &p)? != canonical_z_complement_exact(n, s, &p)? {
                    exact += 1;
                }
            }
        }
    }
    rec.exact("canonical Z: row sum = complemented sum (exact), n <= 10", exact);

    let mut routes = 0.0f64;
    for r in [0.0, 0.4, 0.8, 1.0] {
        let p = Params::new(r)?;
        for s in [0.5, 1.3, 2.2] {
            for n in [1, 6, 12] {
                let rows = canonical_z_route(n, s, &p, ZRoute::Rows)?;
                for route in [ZRoute::Transfer, ZRoute::Complement] {
                    routes = routes.max((canonical_z_route(n, s, &p, route)? - rows).abs() / rows);
                }
            }
        }
    }
    rec.record("canonical Z: rows = transfer identity = complemented sum", routes, 1e-12);

    let (mut dual, mut negative) = (0.0f64, 0.0f64);
    for r in [0.0, 0.5, 1.0] {
        let p = Params::new(r)?;
        for s in [0.5, 1.5, 3.0] {
            for n in 1..=14 {
                let d = magnetization_direct(n, s, &p)?;
                dual = dual.max((d - magnetization(n, s, &p)?).abs());
                negative = negative.max(-d);
            }
        }
    }
    rec.record("magnetization: direct = grand-canonical identity, n <= 14", dual, 1e-12);
    rec.record("magnetization is nonnegative for r in [0, 1]", negative.max(0.0), 1e-15);

    let s0 = critical_line(&Params::new(0.0)?, 1e-8)?;
    rec.record("critical point at r = 0 is 1", (s0 - 1.0).abs(), 1e-3);

    let report = sandwich_report(0.8, &Params::new(0.5)?, 14, 28)?;
    rec.exact("grand-canonical sandwich bounds, s = 0.8, r = 0.5", report.violations + report.canonical_violations);
    Ok(())
}

fn zeta_suite(rec: &mut Recorder) -> Result<()> {
    let mut mismatch = 0;
    for m in -20..=20 {
        for q in 1..=2000 {
            if mu_twisted(m, q, MuMethod::Closed)? != mu_twisted(m, q, MuMethod::Direct)? {
                mismatch += 1;
            }
        }
    }
    rec.exact("twisted Moebius: closed form = exponential sum, q <= 2000", mismatch);

    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let zeta3 = 1.202_056_903_159_594_3;
    let d = dirichlet_partial(1, 2.0, 100_000)?;
    rec.record("Dirichlet partial sum m = 1, s = 2 -> 1/zeta(2)", (d.value - 1.0 / zeta2).abs(), 1e-4);
    let d = dirichlet_partial(0, 3.0, 100_000)?;
    rec.record("Dirichlet partial sum m = 0, s = 3 -> zeta(2)/zeta(3)", (d.value - zeta2 / zeta3).abs(), 1e-4);

    let mut twisted = 0.0f64;
    for r in [0.0, 0.5, 1.0] {
        let p = Params::new(r)?;
        for m in [-1, 1, 2] {
            for n in [4, 8, 12] {
                let a = twisted_z(n, 1.5, m, &p, TwistedRoute::Rows)?.value;
                let b = twisted_z(n, 1.5, m, &p, TwistedRoute::Transfer)?.value;
                twisted = twisted.max((a - b).norm() / a.norm().max(1.0));
            }
        }
    }
    rec.record("twisted sums: rows = transfer identity, n <= 12", twisted, 1e-11);
    Ok(())
}

/// Error for an unknown suite name.
pub fn parse_suite(name: &str) -> Result<Suite> {
    name.parse().map_err(|_| Error::Domain {
        what: "suite",
        value: f64::NAN,
        domain: "tree, spin, transfer, thermo, zeta, all",
    })
}
